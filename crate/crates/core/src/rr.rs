//! Generalized randomized response over `{0, 1, 2}` and the collector's
//! frequency estimator.

use crate::error::{DldpError, Result};
use crate::genotype::{sample_triple, GenotypeMatrix, SnpValue};
use crate::seed::{self, tags};

/// Truthful-report probability `p` and per-lie probability `q` with
/// `p / q = e^epsilon` and `p + 2q = 1`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PerturbParams {
    pub epsilon: f64,
    pub p: f64,
    pub q: f64,
}

impl PerturbParams {
    /// `p' = p / (p + q)`, the truthful share when one state is eliminated.
    pub fn p_prime(&self) -> f64 {
        self.p / (self.p + self.q)
    }

    pub fn q_prime(&self) -> f64 {
        self.q / (self.p + self.q)
    }

    /// RR output distribution for true value `x`.
    pub fn triple(&self, x: SnpValue) -> [f64; 3] {
        let mut t = [self.q; 3];
        t[x.index()] = self.p;
        t
    }
}

pub fn validate_epsilon(epsilon: f64) -> Result<()> {
    if epsilon.is_finite() && epsilon >= 0.0 {
        Ok(())
    } else {
        Err(DldpError::InvalidParameter(format!("epsilon must be finite and nonnegative, got {epsilon}")))
    }
}

pub fn rr_params(epsilon: f64) -> Result<PerturbParams> {
    validate_epsilon(epsilon)?;
    let t = (-epsilon).exp();
    let p = 1.0 / (1.0 + 2.0 * t);
    let q = t / (1.0 + 2.0 * t);
    Ok(PerturbParams { epsilon, p, q })
}

/// Perturbs every cell independently. Row `j` draws from its own stream keyed
/// by `(seed, j)`, indexed by SNP, so the result does not depend on traversal
/// order.
pub fn rr_perturb(m: &GenotypeMatrix, epsilon: f64, seed: u64) -> Result<GenotypeMatrix> {
    let params = rr_params(epsilon)?;
    let rows = (0..m.n())
        .map(|j| {
            let u = seed::snp_uniforms(seed::derive_seed(seed, &[tags::RR, j as u64]), m.l());
            m.row(j).iter().zip(&u).map(|(&x, &u)| sample_triple(&params.triple(x), u)).collect()
        })
        .collect();
    GenotypeMatrix::from_rows(rows).and_then(|out| out.with_labels(m.snp_ids().to_vec(), m.individual_ids().to_vec()))
}

/// Estimated counts per state, before and after clamping to `[0, n]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrequencyEstimate {
    pub raw: [f64; 3],
    pub clamped: [f64; 3],
}

pub fn rr_estimate_frequencies(column: &[SnpValue], epsilon: f64) -> Result<FrequencyEstimate> {
    if column.is_empty() {
        return Err(DldpError::Structure("cannot estimate frequencies of an empty column".into()));
    }
    let params = rr_params(epsilon)?;
    if epsilon == 0.0 {
        return Err(DldpError::EstimatorUndefined);
    }
    let n = column.len() as f64;
    let mut counts = [0usize; 3];
    for v in column {
        counts[v.index()] += 1;
    }
    let raw = counts.map(|c| (c as f64 - n * params.q) / (params.p - params.q));
    let clamped = raw.map(|r| r.clamp(0.0, n));
    Ok(FrequencyEstimate { raw, clamped })
}
