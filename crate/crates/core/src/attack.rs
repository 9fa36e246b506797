//! The correlation attacker: eliminates states inconsistent with the rest of
//! a received sequence and scores the resulting belief.

use serde::{Deserialize, Serialize};

use crate::error::{DldpError, Result};
use crate::genotype::{CorrelationModel, SnpValue, StateSet};
use crate::mechanism::{distribution_table, Mode, PrefixCounters};
use crate::ordering::ProcessingOrder;
use crate::rr::{rr_params, validate_epsilon};

/// Design parameters of the mechanism, when the attacker knows them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KnownMechanism {
    pub tau_hat: f64,
    pub gamma_hat: f64,
    pub mode: Mode,
    /// Order the attacker assumes the owner used. Identity when absent.
    pub order: Option<ProcessingOrder>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AttackConfig {
    pub tau: f64,
    pub gamma: f64,
    pub epsilon_known: f64,
    pub mechanism_params_known: Option<KnownMechanism>,
}

impl AttackConfig {
    pub fn new(tau: f64, gamma: f64, epsilon_known: f64) -> Result<Self> {
        let cfg = Self { tau, gamma, epsilon_known, mechanism_params_known: None };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_known_mechanism(mut self, known: KnownMechanism) -> Result<Self> {
        self.mechanism_params_known = Some(known);
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.tau > 0.0 && self.tau < 1.0) {
            return Err(DldpError::InvalidParameter(format!("tau must lie in (0, 1), got {}", self.tau)));
        }
        if !(0.0..=1.0).contains(&self.gamma) {
            return Err(DldpError::InvalidParameter(format!("gamma must lie in [0, 1], got {}", self.gamma)));
        }
        validate_epsilon(self.epsilon_known)?;
        if let Some(k) = &self.mechanism_params_known {
            if !(k.tau_hat > 0.0 && k.tau_hat < 1.0 && k.gamma_hat > 0.0 && k.gamma_hat.is_finite()) {
                return Err(DldpError::InvalidParameter(format!(
                    "known mechanism thresholds out of range: tau_hat {}, gamma_hat {}",
                    k.tau_hat, k.gamma_hat
                )));
            }
        }
        Ok(())
    }
}

/// Per-SNP probability the attacker assigns to each state.
#[derive(Debug, Clone, PartialEq)]
pub struct AttackerBelief {
    pub probs: Vec<[f64; 3]>,
    pub eliminated: Vec<StateSet>,
}

impl AttackerBelief {
    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }
}

/// Belief of an attacker that only knows the RR budget: `p` on the received
/// value, `q` on each other value.
pub fn rr_profile(y: &[SnpValue], epsilon_known: f64) -> Result<AttackerBelief> {
    let params = rr_params(epsilon_known)?;
    Ok(AttackerBelief {
        probs: y.iter().map(|&v| params.triple(v)).collect(),
        eliminated: vec![StateSet::EMPTY; y.len()],
    })
}

fn check_len(y: &[SnpValue], corr: &CorrelationModel) -> Result<()> {
    if y.len() != corr.l() {
        return Err(DldpError::Structure(format!("sequence has {} SNPs, correlation model has {}", y.len(), corr.l())));
    }
    Ok(())
}

/// Low-correlation counts of every SNP against all other received values.
fn inconsistency_counts(y: &[SnpValue], corr: &CorrelationModel, tau: f64) -> Vec<[u32; 3]> {
    let low = corr.low_index(tau);
    let l = y.len();
    let mut counts = vec![[0u32; 3]; l];
    for (k, &yk) in y.iter().enumerate() {
        for (i, &bits) in low.row_for(k, yk).iter().enumerate() {
            if i != k && bits != 0 {
                for (v, c) in counts[i].iter_mut().enumerate() {
                    *c += u32::from((bits >> v) & 1);
                }
            }
        }
    }
    counts
}

fn eliminated_by_fraction(counts: [u32; 3], gamma: f64, l: usize) -> StateSet {
    let threshold = gamma * l as f64;
    let mut bits = 0u8;
    for (v, &c) in counts.iter().enumerate() {
        if c as f64 >= threshold {
            bits |= 1 << v;
        }
    }
    StateSet::from_bits(bits)
}

/// Correlation attack on a received sequence. Without known mechanism
/// parameters, the RR profile is zeroed on states eliminated by the
/// attacker's own `(tau, gamma)` check and renormalized; when every state is
/// eliminated the RR profile is kept. With known parameters, see
/// [`posterior_given_mechanism`].
pub fn attack(y: &[SnpValue], corr: &CorrelationModel, cfg: &AttackConfig) -> Result<AttackerBelief> {
    check_len(y, corr)?;
    cfg.validate()?;
    if let Some(known) = &cfg.mechanism_params_known {
        return posterior_given_mechanism(y, corr, known, cfg.epsilon_known);
    }
    let mut belief = rr_profile(y, cfg.epsilon_known)?;
    let counts = inconsistency_counts(y, corr, cfg.tau);
    for (i, c) in counts.into_iter().enumerate() {
        let elim = eliminated_by_fraction(c, cfg.gamma, y.len());
        belief.eliminated[i] = elim;
        if elim.is_empty() || elim == StateSet::FULL {
            continue;
        }
        let probs = &mut belief.probs[i];
        for v in elim.iter() {
            probs[v.index()] = 0.0;
        }
        let total: f64 = probs.iter().sum();
        if total > 0.0 {
            probs.iter_mut().for_each(|p| *p /= total);
        } else {
            // survivors had no RR mass; only possible at epsilon_known = inf
            let n = elim.complement().len() as f64;
            for v in elim.complement().iter() {
                probs[v.index()] = 1.0 / n;
            }
        }
    }
    Ok(belief)
}

fn assumed_order(known: &KnownMechanism, l: usize) -> Result<ProcessingOrder> {
    match &known.order {
        Some(o) if o.len() == l => Ok(o.clone()),
        Some(o) => Err(DldpError::Structure(format!("assumed order covers {} SNPs, sequence has {l}", o.len()))),
        None => Ok(ProcessingOrder::identity(l)),
    }
}

fn replay_eliminations(
    y: &[SnpValue],
    corr: &CorrelationModel,
    tau_hat: f64,
    gamma_hat: f64,
    order: &ProcessingOrder,
) -> Vec<StateSet> {
    let low = corr.low_index(tau_hat);
    let mut counters = PrefixCounters::new(y.len());
    let mut eliminated = vec![StateSet::EMPTY; y.len()];
    for &i in order.as_slice() {
        eliminated[i] = counters.outcome(i, gamma_hat).eliminated;
        counters.share(i, y[i], &low);
    }
    eliminated
}

/// Non-eliminated input values per SNP, replaying the mechanism's own
/// elimination rule along the identity order.
pub fn recover_possible_inputs(
    y: &[SnpValue],
    corr: &CorrelationModel,
    tau_hat: f64,
    gamma_hat: f64,
) -> Result<Vec<StateSet>> {
    recover_possible_inputs_along(y, corr, tau_hat, gamma_hat, &ProcessingOrder::identity(y.len()))
}

pub fn recover_possible_inputs_along(
    y: &[SnpValue],
    corr: &CorrelationModel,
    tau_hat: f64,
    gamma_hat: f64,
    order: &ProcessingOrder,
) -> Result<Vec<StateSet>> {
    check_len(y, corr)?;
    if order.len() != y.len() {
        return Err(DldpError::Structure(format!("order covers {} SNPs, sequence has {}", order.len(), y.len())));
    }
    Ok(replay_eliminations(y, corr, tau_hat, gamma_hat, order).into_iter().map(StateSet::complement).collect())
}

/// Posterior of an attacker that knows the mechanism: a uniform prior over
/// the recovered possible inputs (all three when none survive), updated with
/// the mechanism's output probabilities.
pub fn posterior_given_mechanism(
    y: &[SnpValue],
    corr: &CorrelationModel,
    known: &KnownMechanism,
    epsilon_known: f64,
) -> Result<AttackerBelief> {
    check_len(y, corr)?;
    let params = rr_params(epsilon_known)?;
    let order = assumed_order(known, y.len())?;
    let eliminated = replay_eliminations(y, corr, known.tau_hat, known.gamma_hat, &order);
    let probs = y
        .iter()
        .zip(&eliminated)
        .map(|(&yi, &elim)| {
            let candidates = if elim == StateSet::FULL { StateSet::FULL } else { elim.complement() };
            let mut post = [0.0; 3];
            for d in candidates.iter() {
                let (table, _) = distribution_table(d, elim, known.mode, params.p, params.q);
                post[d.index()] = table[yi.index()];
            }
            let total: f64 = post.iter().sum();
            if total > 0.0 {
                post.map(|p| p / total)
            } else {
                let w = 1.0 / candidates.len() as f64;
                let mut uniform = [0.0; 3];
                for d in candidates.iter() {
                    uniform[d.index()] = w;
                }
                uniform
            }
        })
        .collect();
    Ok(AttackerBelief { probs, eliminated })
}

/// Mean over SNPs of the belief-weighted distance `|x - v|`, in `[0, 2]`.
pub fn estimation_error(belief: &AttackerBelief, truth: &[SnpValue]) -> Result<f64> {
    if belief.len() != truth.len() || truth.is_empty() {
        return Err(DldpError::Structure(format!("belief covers {} SNPs, truth has {}", belief.len(), truth.len())));
    }
    let total: f64 = belief
        .probs
        .iter()
        .zip(truth)
        .map(|(probs, &x)| probs.iter().enumerate().map(|(v, p)| p * (x.index() as f64 - v as f64).abs()).sum::<f64>())
        .sum();
    Ok(total / truth.len() as f64)
}

pub const POSTPROCESS_MAX_SWEEPS: usize = 3;

/// Repairs an RR-perturbed sequence: a reported value that the attack-style
/// check eliminates is replaced by the surviving state with the highest
/// average conditional given the other reports. SNPs are revisited in index
/// order, each seeing earlier replacements, until a sweep changes nothing or
/// [`POSTPROCESS_MAX_SWEEPS`] sweeps have run.
pub fn rr_postprocess(y_rr: &[SnpValue], corr: &CorrelationModel, tau: f64, gamma: f64) -> Result<Vec<SnpValue>> {
    check_len(y_rr, corr)?;
    let l = y_rr.len();
    let mut y = y_rr.to_vec();
    for _ in 0..POSTPROCESS_MAX_SWEEPS {
        let mut changed = false;
        for i in 0..l {
            let mut counts = [0u32; 3];
            let mut sums = [0.0f64; 3];
            let mut defined = [0u32; 3];
            for (k, &yk) in y.iter().enumerate() {
                if k == i {
                    continue;
                }
                for v in SnpValue::ALL {
                    if let Some(c) = corr.cond(i, k, v, yk) {
                        sums[v.index()] += c;
                        defined[v.index()] += 1;
                        counts[v.index()] += u32::from(c < tau);
                    }
                }
            }
            let elim = eliminated_by_fraction(counts, gamma, l);
            if !elim.contains(y[i]) || elim == StateSet::FULL {
                continue;
            }
            let avg = |v: SnpValue| {
                let d = defined[v.index()];
                if d == 0 {
                    0.0
                } else {
                    sums[v.index()] / d as f64
                }
            };
            let mut best = None::<(SnpValue, f64)>;
            for s in elim.complement().iter() {
                if best.is_none_or(|(_, b)| avg(s) > b) {
                    best = Some((s, avg(s)));
                }
            }
            let (s, _) = best.expect("at least one survivor");
            y[i] = s;
            changed = true;
        }
        if !changed {
            break;
        }
    }
    Ok(y)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genotype::{compute_correlation_model, generate_synthetic_population, MafProfile, SyntheticSpec};
    use crate::mechanism::{perturb_sequence, MechanismConfig};
    use crate::rr::rr_perturb;

    fn vals(v: &[u8]) -> Vec<SnpValue> {
        v.iter().map(|&x| SnpValue::try_from(x).unwrap()).collect()
    }

    fn population(seed: u64) -> (crate::genotype::GenotypeMatrix, CorrelationModel) {
        let spec = SyntheticSpec::with_profile(60, 12, MafProfile::Uniform { min: 0.05, max: 0.4 }, 0.8, seed);
        let m = generate_synthetic_population(&spec).unwrap();
        let corr = compute_correlation_model(&m, 0.0).unwrap();
        (m, corr)
    }

    /// SNP 1 never takes value 2 when SNP 0 is 0.
    fn toy() -> CorrelationModel {
        let none = [[None; 3]; 3];
        let flat = [[Some(1.0 / 3.0); 3]; 3];
        let mut low = flat;
        low[2][0] = Some(0.0);
        CorrelationModel::from_tables(vec![vec![none, flat], vec![low, none]], vec![[1.0 / 3.0; 3]; 2]).unwrap()
    }

    #[test]
    fn single_elimination_renormalizes() {
        let corr = toy();
        let cfg = AttackConfig::new(0.05, 0.5, 2f64.ln()).unwrap();
        let b = attack(&vals(&[0, 0]), &corr, &cfg).unwrap();
        assert_eq!(b.eliminated[1], StateSet::from_bits(0b100));
        assert!((b.probs[1][0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((b.probs[1][1] - 1.0 / 3.0).abs() < 1e-12);
        assert_eq!(b.probs[1][2], 0.0);
        assert_eq!(b.probs[0], [0.5, 0.25, 0.25]);
    }

    #[test]
    fn gamma_endpoints_reduce_to_rr_profile() {
        let (m, corr) = population(3);
        let y = rr_perturb(&m, 1.0, 8).unwrap();
        for gamma in [0.0, 1.0] {
            let cfg = AttackConfig::new(0.05, gamma, 1.0).unwrap();
            for j in 0..m.n() {
                let b = attack(y.row(j), &corr, &cfg).unwrap();
                assert_eq!(b.probs, rr_profile(y.row(j), 1.0).unwrap().probs);
            }
        }
    }

    #[test]
    fn estimation_error_examples() {
        let certain = AttackerBelief { probs: vec![[0.0, 1.0, 0.0]], eliminated: vec![StateSet::EMPTY] };
        assert_eq!(estimation_error(&certain, &vals(&[1])).unwrap(), 0.0);
        let uniform = AttackerBelief { probs: vec![[1.0 / 3.0; 3]], eliminated: vec![StateSet::EMPTY] };
        assert!((estimation_error(&uniform, &vals(&[1])).unwrap() - 2.0 / 3.0).abs() < 1e-12);
        assert!((estimation_error(&uniform, &vals(&[0])).unwrap() - 1.0).abs() < 1e-12);
        assert!(estimation_error(&uniform, &vals(&[0, 1])).is_err());
    }

    #[test]
    fn error_shrinks_as_known_budget_grows() {
        let y = vals(&[0, 1, 2, 1]);
        let truth = vals(&[0, 1, 2, 0]);
        let mut last = f64::INFINITY;
        for eps in [0.0, 0.5, 1.0, 2.0, 4.0] {
            let e = estimation_error(&rr_profile(&y, eps).unwrap(), &truth).unwrap();
            assert!(e < last);
            last = e;
        }
    }

    #[test]
    fn replay_matches_mechanism() {
        let (m, corr) = population(5);
        let cfg = MechanismConfig::new(1.0, 0.1, 0.2, Mode::Beacon).unwrap();
        let order = crate::ordering::random_order(12, 4);
        for j in 0..10 {
            let out = perturb_sequence(m.row(j), &order, &corr, &cfg, j as u64).unwrap();
            let sets = recover_possible_inputs_along(&out.values, &corr, 0.1, 0.2, &order).unwrap();
            for (set, (outcome, _)) in sets.iter().zip(&out.per_snp) {
                assert_eq!(*set, outcome.possible());
            }
        }
        let y = m.row(0).to_vec();
        assert!(recover_possible_inputs(&y, &corr, 0.1, 1.5).unwrap().iter().all(|s| *s == StateSet::FULL));
    }

    #[test]
    fn known_mechanism_posterior_is_normalized() {
        let (m, corr) = population(6);
        let known = KnownMechanism { tau_hat: 0.1, gamma_hat: 0.2, mode: Mode::Plain, order: None };
        let cfg = AttackConfig::new(0.1, 0.2, 1.0).unwrap().with_known_mechanism(known).unwrap();
        let b = attack(m.row(1), &corr, &cfg).unwrap();
        for (probs, elim) in b.probs.iter().zip(&b.eliminated) {
            assert!((probs.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            if *elim != StateSet::FULL {
                assert!(elim.iter().all(|v| probs[v.index()] == 0.0));
            }
        }
    }

    #[test]
    fn postprocess_identity_without_eliminations() {
        let (m, corr) = population(2);
        let y = rr_perturb(&m, 1.0, 3).unwrap();
        assert_eq!(rr_postprocess(y.row(0), &corr, 0.05, 1.0).unwrap(), y.row(0));
    }

    #[test]
    fn postprocess_replaces_with_survivor() {
        let corr = toy();
        let out = rr_postprocess(&vals(&[0, 2]), &corr, 0.05, 0.5).unwrap();
        assert_eq!(out[0], SnpValue::Zero);
        assert_ne!(out[1], SnpValue::Two);
    }
}
