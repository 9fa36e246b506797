//! Upper bound on an attacker's posterior for a single SNP.

use serde::{Deserialize, Serialize};

use crate::attack::AttackerBelief;
use crate::error::{DldpError, Result};
use crate::rr::validate_epsilon;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LeakageQuery {
    /// Prior ratio between the two candidate values.
    pub zeta: f64,
    pub epsilon: f64,
}

impl LeakageQuery {
    pub fn new(zeta: f64, epsilon: f64) -> Result<Self> {
        if !(zeta > 0.0 && zeta.is_finite()) {
            return Err(DldpError::InvalidParameter(format!("zeta must be positive and finite, got {zeta}")));
        }
        validate_epsilon(epsilon)?;
        Ok(Self { zeta, epsilon })
    }
}

/// `max{1 / (zeta e^eps + 1), zeta e^eps / (zeta e^eps + 1)}`.
pub fn leakage_upper_bound(q: &LeakageQuery) -> f64 {
    let s = q.zeta * q.epsilon.exp();
    (1.0 / (s + 1.0)).max(s / (s + 1.0))
}

/// Largest posterior the attacker assigns to any state, over SNPs where the
/// belief still spreads over at least two states. `None` if there are no
/// such SNPs.
pub fn empirical_max_posterior(belief: &AttackerBelief) -> Option<f64> {
    belief
        .probs
        .iter()
        .filter(|p| p.iter().filter(|v| **v > 0.0).count() >= 2)
        .map(|p| p.iter().copied().fold(0.0, f64::max))
        .reduce(f64::max)
}
