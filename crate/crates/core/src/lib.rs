//! Correlation-aware local differential privacy for sharing SNP sequences.
//!
//! The toolkit covers the data model ([`genotype`]), plain randomized
//! response ([`rr`]), the correlation-aware sharing mechanism
//! ([`mechanism`]), a correlation attacker ([`attack`]), beacon utility
//! ([`beacon`]), processing-order selection ([`ordering`]), kinship budgets
//! ([`kinship`]), the leakage bound ([`leakage`]) and a seeded experiment
//! harness ([`experiment`]).

pub mod attack;
pub mod beacon;
pub mod error;
pub mod experiment;
pub mod genotype;
pub mod kinship;
pub mod leakage;
pub mod mechanism;
pub mod ordering;
pub mod rr;
pub mod seed;

pub use beacon::{
    beacon_accuracy, beacon_response, per_snp_expected_utility, AccuracyReport, BeaconAnswer, DecisionRule,
};
pub use error::{DldpError, Result};
pub use genotype::{
    compute_correlation_model, generate_synthetic_population, CorrelationModel, GenotypeMatrix, MafProfile, SnpValue,
    StateSet, SyntheticSpec,
};
pub use mechanism::{
    eliminate_states, perturb_sequence, sharing_distribution, Branch, EliminationOutcome, Mechanism, MechanismConfig,
    Mode, PerturbedSequence, SharingDistribution,
};
pub use ordering::{OrderStrategy, ProcessingOrder};
pub use rr::{rr_estimate_frequencies, rr_params, rr_perturb, PerturbParams};
