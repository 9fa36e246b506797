//! Correlation-aware sharing of one individual's SNP sequence.
//!
//! SNPs are processed one at a time in a given order. Before sharing SNP `i`
//! at position `a`, every previously shared SNP `k` votes against each state
//! `v` of `i` whose conditional `Pr(SNP_i = v | SNP_k = y_k)` is below
//! `tau_hat`; a state with at least `gamma_hat * a` votes is eliminated. The
//! value is then drawn from an adjusted distribution over the surviving
//! states that keeps every pair of possible inputs within a factor `e^eps`.

use std::ops::{Add, Div};

use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::error::{DldpError, Result};
use crate::genotype::{sample_triple, CorrelationModel, LowCorrelationIndex, SnpValue, StateSet};
use crate::ordering::ProcessingOrder;
use crate::rr::{rr_params, validate_epsilon, PerturbParams};
use crate::seed::{self, tags};

/// Which family of adjusted distributions to use.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    /// Equal treatment of all incorrect values.
    Plain,
    /// Favours outputs in the same beacon class ({0} vs {1, 2}) as the truth.
    Beacon,
}

impl std::str::FromStr for Mode {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "plain" => Ok(Mode::Plain),
            "beacon" => Ok(Mode::Beacon),
            other => Err(format!("unknown mode `{other}` (expected plain or beacon)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MechanismConfig {
    pub epsilon: f64,
    /// Correlation threshold; conditionals strictly below it count as low.
    pub tau_hat: f64,
    /// Inconsistency threshold. Values above 1 disable elimination.
    pub gamma_hat: f64,
    pub mode: Mode,
}

impl MechanismConfig {
    pub fn new(epsilon: f64, tau_hat: f64, gamma_hat: f64, mode: Mode) -> Result<Self> {
        let cfg = Self { epsilon, tau_hat, gamma_hat, mode };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        validate_epsilon(self.epsilon)?;
        if !(self.tau_hat > 0.0 && self.tau_hat < 1.0) {
            return Err(DldpError::InvalidParameter(format!("tau_hat must lie in (0, 1), got {}", self.tau_hat)));
        }
        if !(self.gamma_hat > 0.0 && self.gamma_hat.is_finite()) {
            return Err(DldpError::InvalidParameter(format!(
                "gamma_hat must be positive and finite, got {}",
                self.gamma_hat
            )));
        }
        Ok(())
    }

    pub fn params(&self) -> PerturbParams {
        rr_params(self.epsilon).expect("validated epsilon")
    }
}

/// Result of the elimination check for one SNP.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EliminationOutcome {
    pub snp: usize,
    /// Low-correlation votes per state.
    pub counters: [u32; 3],
    pub eliminated: StateSet,
    /// 1-based position in the processing order.
    pub position: usize,
}

impl EliminationOutcome {
    pub fn possible(&self) -> StateSet {
        self.eliminated.complement()
    }
}

/// States whose vote count reaches `gamma * position`.
#[inline]
pub fn eliminated_from_counters(counters: [u32; 3], gamma: f64, position: usize) -> StateSet {
    let threshold = gamma * position as f64;
    let mut bits = 0u8;
    for (v, &c) in counters.iter().enumerate() {
        if c as f64 >= threshold {
            bits |= 1 << v;
        }
    }
    StateSet::from_bits(bits)
}

/// Runs the elimination check for SNP `i` against an already-shared prefix,
/// reading conditionals straight from the model.
pub fn eliminate_states(
    i: usize,
    shared_prefix: &[(usize, SnpValue)],
    corr: &CorrelationModel,
    config: &MechanismConfig,
) -> EliminationOutcome {
    let mut counters = [0u32; 3];
    for &(k, y) in shared_prefix {
        debug_assert_ne!(k, i, "SNP cannot appear in its own prefix");
        for v in SnpValue::ALL {
            if corr.cond(i, k, v, y).is_some_and(|c| c < config.tau_hat) {
                counters[v.index()] += 1;
            }
        }
    }
    let position = shared_prefix.len() + 1;
    EliminationOutcome {
        snp: i,
        counters,
        eliminated: eliminated_from_counters(counters, config.gamma_hat, position),
        position,
    }
}

/// Which case of the distribution table produced a distribution.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Branch {
    /// No state eliminated: plain RR.
    Unrestricted,
    /// One state eliminated, the true value survives.
    OneEliminatedKept,
    /// One state eliminated and it is the true value.
    OneEliminatedDropped,
    SoleSurvivor,
    /// Everything eliminated: RR centred on the true value.
    AllEliminatedFallback,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SharingDistribution {
    pub probs: [f64; 3],
    pub branch: Branch,
}

impl SharingDistribution {
    pub fn sample(&self, u: f64) -> SnpValue {
        sample_triple(&self.probs, u)
    }
}

/// The distribution table over any field-like number type, so the same case
/// analysis can be evaluated in `f64` or in exact rationals.
pub fn distribution_table<T>(x: SnpValue, eliminated: StateSet, mode: Mode, p: T, q: T) -> ([T; 3], Branch)
where
    T: Clone + Zero + One + Add<Output = T> + Div<Output = T>,
{
    let rr = |x: SnpValue| {
        let mut t = [q.clone(), q.clone(), q.clone()];
        t[x.index()] = p.clone();
        t
    };
    let p_prime = || p.clone() / (p.clone() + q.clone());
    let q_prime = || q.clone() / (p.clone() + q.clone());

    match eliminated.len() {
        0 => (rr(x), Branch::Unrestricted),
        1 if !eliminated.contains(x) => {
            let mut t = [T::zero(), T::zero(), T::zero()];
            let other = eliminated.complement().iter().find(|&s| s != x).expect("two survivors");
            t[x.index()] = p_prime();
            t[other.index()] = q_prime();
            (t, Branch::OneEliminatedKept)
        }
        1 => {
            let mut t = [T::zero(), T::zero(), T::zero()];
            match (mode, x) {
                (Mode::Beacon, SnpValue::One) => {
                    t[0] = q_prime();
                    t[2] = p_prime();
                }
                (Mode::Beacon, SnpValue::Two) => {
                    t[0] = q_prime();
                    t[1] = p_prime();
                }
                _ => {
                    let half = T::one() / (T::one() + T::one());
                    for s in eliminated.complement().iter() {
                        t[s.index()] = half.clone();
                    }
                }
            }
            (t, Branch::OneEliminatedDropped)
        }
        2 => {
            let mut t = [T::zero(), T::zero(), T::zero()];
            let sole = eliminated.complement().iter().next().expect("one survivor");
            t[sole.index()] = T::one();
            (t, Branch::SoleSurvivor)
        }
        _ => (rr(x), Branch::AllEliminatedFallback),
    }
}

pub fn sharing_distribution(x: SnpValue, eliminated: StateSet, config: &MechanismConfig) -> SharingDistribution {
    let params = config.params();
    sharing_distribution_with(x, eliminated, config.mode, &params)
}

#[inline]
pub(crate) fn sharing_distribution_with(
    x: SnpValue,
    eliminated: StateSet,
    mode: Mode,
    params: &PerturbParams,
) -> SharingDistribution {
    let (probs, branch) = distribution_table(x, eliminated, mode, params.p, params.q);
    SharingDistribution { probs, branch }
}

/// Vote counters for every SNP against a growing shared prefix.
///
/// Sharing SNP `k` as `y` adds `k`'s low-correlation votes to every SNP not
/// yet shared, so each elimination check afterwards is O(1).
#[derive(Debug, Clone)]
pub struct PrefixCounters {
    counters: Vec<[u32; 3]>,
    shared: Vec<bool>,
    shared_count: usize,
}

impl PrefixCounters {
    pub fn new(l: usize) -> Self {
        Self { counters: vec![[0; 3]; l], shared: vec![false; l], shared_count: 0 }
    }

    pub fn shared_count(&self) -> usize {
        self.shared_count
    }

    pub fn is_shared(&self, i: usize) -> bool {
        self.shared[i]
    }

    pub fn share(&mut self, k: usize, y: SnpValue, low: &LowCorrelationIndex) {
        debug_assert!(!self.shared[k]);
        self.shared[k] = true;
        self.shared_count += 1;
        for ((c, &bits), &done) in self.counters.iter_mut().zip(low.row_for(k, y)).zip(&self.shared) {
            if bits == 0 || done {
                continue;
            }
            c[0] += (bits & 1) as u32;
            c[1] += ((bits >> 1) & 1) as u32;
            c[2] += ((bits >> 2) & 1) as u32;
        }
    }

    /// Reverses the most recent `share(k, y)`.
    pub fn unshare(&mut self, k: usize, y: SnpValue, low: &LowCorrelationIndex) {
        debug_assert!(self.shared[k]);
        for ((c, &bits), &done) in self.counters.iter_mut().zip(low.row_for(k, y)).zip(&self.shared) {
            if bits == 0 || done {
                continue;
            }
            c[0] -= (bits & 1) as u32;
            c[1] -= ((bits >> 1) & 1) as u32;
            c[2] -= ((bits >> 2) & 1) as u32;
        }
        self.shared[k] = false;
        self.shared_count -= 1;
    }

    /// Elimination outcome for unshared SNP `i` if it were shared next.
    #[inline]
    pub fn outcome(&self, i: usize, gamma: f64) -> EliminationOutcome {
        let position = self.shared_count + 1;
        let counters = self.counters[i];
        EliminationOutcome {
            snp: i,
            counters,
            eliminated: eliminated_from_counters(counters, gamma, position),
            position,
        }
    }
}

/// Per-SNP dependence bookkeeping for a shared sequence.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DependenceInfo {
    /// Maximum number of other elements a release can depend on (`l - 1`).
    pub t: usize,
    /// Position of each SNP (by index) in the processing order, 0-based.
    pub positions: Vec<usize>,
    pub ineliminable: Vec<bool>,
}

/// Output of the mechanism for one individual. All per-SNP vectors are
/// indexed by original SNP index, not by processing position.
#[derive(Debug, Clone, PartialEq)]
pub struct PerturbedSequence {
    pub values: Vec<SnpValue>,
    pub per_snp: Vec<(EliminationOutcome, SharingDistribution)>,
    pub order_used: ProcessingOrder,
    pub dependence: DependenceInfo,
}

impl PerturbedSequence {
    /// SNPs already shared when SNP `i` was processed.
    pub fn consulted(&self, i: usize) -> &[usize] {
        &self.order_used.as_slice()[..self.dependence.positions[i]]
    }

    /// Realized beacon-class agreement summed over SNPs.
    pub fn realized_utility(&self, row: &[SnpValue]) -> usize {
        self.values.iter().zip(row).filter(|(y, x)| y.carries_minor_allele() == x.carries_minor_allele()).count()
    }
}

/// Flags SNPs left with exactly one possible value that equals the truth.
pub fn classify_ineliminable(outcomes: &[EliminationOutcome], row: &[SnpValue]) -> Vec<bool> {
    outcomes.iter().map(|o| o.eliminated.len() == 2 && o.possible().contains(row[o.snp])).collect()
}

/// A mechanism bound to one correlation model and configuration.
#[derive(Debug, Clone)]
pub struct Mechanism<'a> {
    corr: &'a CorrelationModel,
    config: MechanismConfig,
    params: PerturbParams,
    low: LowCorrelationIndex,
}

impl<'a> Mechanism<'a> {
    pub fn new(corr: &'a CorrelationModel, config: MechanismConfig) -> Result<Self> {
        config.validate()?;
        Ok(Self { corr, config, params: config.params(), low: corr.low_index(config.tau_hat) })
    }

    pub fn config(&self) -> &MechanismConfig {
        &self.config
    }

    pub fn params(&self) -> &PerturbParams {
        &self.params
    }

    pub fn correlations(&self) -> &CorrelationModel {
        self.corr
    }

    pub fn low_index(&self) -> &LowCorrelationIndex {
        &self.low
    }

    #[inline]
    pub fn distribution(&self, x: SnpValue, eliminated: StateSet) -> SharingDistribution {
        sharing_distribution_with(x, eliminated, self.config.mode, &self.params)
    }

    fn check_row(&self, row: &[SnpValue]) -> Result<()> {
        if row.len() != self.corr.l() {
            return Err(DldpError::Structure(format!(
                "row has {} SNPs, correlation model has {}",
                row.len(),
                self.corr.l()
            )));
        }
        Ok(())
    }

    /// Shares `row` in `order`, using `uniforms[i]` to sample SNP `i`.
    pub fn perturb_with_uniforms(
        &self,
        row: &[SnpValue],
        order: &ProcessingOrder,
        uniforms: &[f64],
    ) -> Result<PerturbedSequence> {
        self.check_row(row)?;
        let l = row.len();
        if order.len() != l || uniforms.len() != l {
            return Err(DldpError::Structure(format!(
                "order ({}) and uniforms ({}) must both cover {l} SNPs",
                order.len(),
                uniforms.len()
            )));
        }
        let mut counters = PrefixCounters::new(l);
        let mut values = vec![SnpValue::Zero; l];
        let mut per_snp = vec![None; l];
        let mut positions = vec![0; l];
        for (pos, &i) in order.as_slice().iter().enumerate() {
            let outcome = counters.outcome(i, self.config.gamma_hat);
            let dist = self.distribution(row[i], outcome.eliminated);
            let y = dist.sample(uniforms[i]);
            values[i] = y;
            per_snp[i] = Some((outcome, dist));
            positions[i] = pos;
            counters.share(i, y, &self.low);
        }
        let per_snp: Vec<_> = per_snp.into_iter().map(|o| o.expect("permutation covers every SNP")).collect();
        let outcomes: Vec<_> = per_snp.iter().map(|(o, _)| *o).collect();
        let ineliminable = classify_ineliminable(&outcomes, row);
        Ok(PerturbedSequence {
            values,
            per_snp,
            order_used: order.clone(),
            dependence: DependenceInfo { t: l.saturating_sub(1), positions, ineliminable },
        })
    }

    pub fn perturb_sequence(&self, row: &[SnpValue], order: &ProcessingOrder, seed: u64) -> Result<PerturbedSequence> {
        let u = sequence_uniforms(seed, row.len());
        self.perturb_with_uniforms(row, order, &u)
    }
}

/// Per-SNP uniforms used by the mechanism for a given sequence seed.
pub fn sequence_uniforms(seed: u64, l: usize) -> Vec<f64> {
    seed::snp_uniforms(seed::derive_seed(seed, &[tags::MECHANISM]), l)
}

/// Shares one individual's sequence; see [`Mechanism::perturb_sequence`].
pub fn perturb_sequence(
    row: &[SnpValue],
    order: &ProcessingOrder,
    corr: &CorrelationModel,
    config: &MechanismConfig,
    seed: u64,
) -> Result<PerturbedSequence> {
    Mechanism::new(corr, *config)?.perturb_sequence(row, order, seed)
}
