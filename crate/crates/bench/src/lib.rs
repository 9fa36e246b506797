//! Shared fixtures for the benchmarks.

use dldp_core::{
    compute_correlation_model, generate_synthetic_population, CorrelationModel, GenotypeMatrix, MafProfile,
    SyntheticSpec,
};

/// A correlated synthetic population and its pairwise model.
pub fn fixture(n: usize, l: usize, seed: u64) -> (GenotypeMatrix, CorrelationModel) {
    let spec = SyntheticSpec::with_profile(n, l, MafProfile::Blocks { common: 0.3, rare: 0.05, block: 5 }, 0.7, seed);
    let m = generate_synthetic_population(&spec).expect("valid fixture spec");
    let corr = compute_correlation_model(&m, 0.0).expect("non-empty fixture");
    (m, corr)
}
