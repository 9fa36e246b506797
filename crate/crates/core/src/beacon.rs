//! Beacon queries over a shared cohort and their accuracy.

use serde::Serialize;

use crate::error::{DldpError, Result};
use crate::genotype::{GenotypeMatrix, SnpValue};
use crate::mechanism::SharingDistribution;
use crate::rr::rr_params;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum BeaconAnswer {
    Yes,
    No,
}

/// `Yes` iff somebody in the column carries at least one minor allele.
pub fn beacon_response(column: &[SnpValue]) -> BeaconAnswer {
    if column.iter().any(|v| v.carries_minor_allele()) {
        BeaconAnswer::Yes
    } else {
        BeaconAnswer::No
    }
}

/// Decision for an RR-perturbed column: `No` once at least `n * p` people
/// report 0.
pub fn rr_beacon_decision(perturbed_column: &[SnpValue], epsilon: f64) -> Result<BeaconAnswer> {
    if epsilon.is_nan() || epsilon <= 0.0 {
        return Err(DldpError::InvalidParameter(format!("the RR beacon decision needs epsilon > 0, got {epsilon}")));
    }
    let params = rr_params(epsilon)?;
    let zeros = perturbed_column.iter().filter(|v| **v == SnpValue::Zero).count();
    let threshold = perturbed_column.len() as f64 * params.p;
    Ok(if zeros as f64 >= threshold { BeaconAnswer::No } else { BeaconAnswer::Yes })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum DecisionRule {
    /// Answer from the perturbed column as if it were real data.
    Direct,
    /// RR collector's estimate, see [`rr_beacon_decision`].
    RrEstimated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AccuracyReport {
    pub overall: f64,
    /// Fraction of originally-Yes queries answered Yes. 1 when there are none.
    pub yes_accuracy: f64,
    /// Fraction of originally-No queries answered No. 1 when there are none.
    pub no_accuracy: f64,
    pub n_s: usize,
    pub yes_queries: usize,
    pub no_queries: usize,
}

pub fn beacon_accuracy(
    original: &GenotypeMatrix,
    perturbed: &GenotypeMatrix,
    rule: DecisionRule,
    epsilon: f64,
) -> Result<AccuracyReport> {
    if original.n() != perturbed.n() || original.l() != perturbed.l() {
        return Err(DldpError::Structure(format!(
            "original is {}x{} but perturbed is {}x{}",
            original.n(),
            original.l(),
            perturbed.n(),
            perturbed.l()
        )));
    }
    let l = original.l();
    let (mut yes_total, mut yes_hit, mut no_total, mut no_hit) = (0, 0, 0, 0);
    for i in 0..l {
        let truth = beacon_response(&original.column(i));
        let column = perturbed.column(i);
        let answer = match rule {
            DecisionRule::Direct => beacon_response(&column),
            DecisionRule::RrEstimated => rr_beacon_decision(&column, epsilon)?,
        };
        match truth {
            BeaconAnswer::Yes => {
                yes_total += 1;
                yes_hit += usize::from(answer == truth);
            }
            BeaconAnswer::No => {
                no_total += 1;
                no_hit += usize::from(answer == truth);
            }
        }
    }
    let ratio = |hit: usize, total: usize| if total == 0 { 1.0 } else { hit as f64 / total as f64 };
    let n_s = yes_hit + no_hit;
    Ok(AccuracyReport {
        overall: ratio(n_s, l),
        yes_accuracy: ratio(yes_hit, yes_total),
        no_accuracy: ratio(no_hit, no_total),
        n_s,
        yes_queries: yes_total,
        no_queries: no_total,
    })
}

/// Probability that the shared value lands in the same beacon class as `x`.
pub fn per_snp_expected_utility(x: SnpValue, dist: &SharingDistribution) -> f64 {
    utility_of_probs(x, &dist.probs)
}

#[inline]
pub fn utility_of_probs(x: SnpValue, probs: &[f64; 3]) -> f64 {
    if x.carries_minor_allele() {
        probs[1] + probs[2]
    } else {
        probs[0]
    }
}
