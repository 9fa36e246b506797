//! Choosing the order in which an individual's SNPs are shared.
//!
//! Eliminations only depend on which `(snp, value)` pairs have been shared,
//! not on the order they were shared in, so an MDP state is a partial
//! assignment. States are packed base 4: digit `i` is 0 while SNP `i` is
//! unshared and `y + 1` once it was shared as `y`.

use std::fmt;

use rand::seq::SliceRandom;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::beacon::per_snp_expected_utility;
use crate::error::{DldpError, Result};
use crate::genotype::{CorrelationModel, GenotypeMatrix, SnpValue};
use crate::mechanism::{
    eliminate_states, sequence_uniforms, Mechanism, MechanismConfig, PerturbedSequence, PrefixCounters,
};
use crate::seed::{self, tags};

/// Largest sequence the exact solvers accept.
pub const EXACT_MAX_SNPS: usize = 12;
pub const BRUTE_FORCE_MAX_SNPS: usize = 6;

/// A permutation of SNP indices `0..l`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(try_from = "Vec<usize>", into = "Vec<usize>")]
pub struct ProcessingOrder(Vec<usize>);

impl ProcessingOrder {
    pub fn new(perm: Vec<usize>) -> Result<Self> {
        let mut seen = vec![false; perm.len()];
        for &i in &perm {
            if i >= perm.len() || std::mem::replace(&mut seen[i], true) {
                return Err(DldpError::Structure(format!("{perm:?} is not a permutation of 0..{}", perm.len())));
            }
        }
        Ok(Self(perm))
    }

    pub fn identity(l: usize) -> Self {
        Self((0..l).collect())
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[usize] {
        &self.0
    }
}

impl TryFrom<Vec<usize>> for ProcessingOrder {
    type Error = DldpError;

    fn try_from(v: Vec<usize>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProcessingOrder> for Vec<usize> {
    fn from(o: ProcessingOrder) -> Vec<usize> {
        o.0
    }
}

impl fmt::Display for ProcessingOrder {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|i| i.to_string()).collect();
        f.write_str(&parts.join(" "))
    }
}

/// Uniformly random permutation.
pub fn random_order(l: usize, seed: u64) -> ProcessingOrder {
    let mut perm: Vec<usize> = (0..l).collect();
    perm.shuffle(&mut seed::rng_for(seed, &[tags::ORDER]));
    ProcessingOrder(perm)
}

/// Greedy sharing: at every step share the remaining SNP with the highest
/// expected beacon utility given what has been shared so far. Values are
/// drawn with the same per-SNP uniforms as [`Mechanism::perturb_sequence`],
/// so re-running the mechanism along the returned order reproduces them.
pub fn greedy_share(mech: &Mechanism<'_>, row: &[SnpValue], seed: u64) -> Result<PerturbedSequence> {
    let l = row.len();
    let uniforms = sequence_uniforms(seed, l);
    let mut ties_rng = seed::rng_for(seed, &[tags::GREEDY_TIES]);
    let gamma = mech.config().gamma_hat;
    let mut counters = PrefixCounters::new(l);
    let mut remaining: Vec<usize> = (0..l).collect();
    let mut order = Vec::with_capacity(l);
    let mut best = Vec::with_capacity(l);
    while !remaining.is_empty() {
        best.clear();
        let mut best_u = f64::NEG_INFINITY;
        for (slot, &i) in remaining.iter().enumerate() {
            let outcome = counters.outcome(i, gamma);
            let u = per_snp_expected_utility(row[i], &mech.distribution(row[i], outcome.eliminated));
            if u > best_u + 1e-12 {
                best_u = u;
                best.clear();
                best.push(slot);
            } else if (u - best_u).abs() <= 1e-12 {
                best.push(slot);
            }
        }
        let slot = *best.choose(&mut ties_rng).expect("at least one candidate");
        let i = remaining.remove(slot);
        let outcome = counters.outcome(i, gamma);
        let y = mech.distribution(row[i], outcome.eliminated).sample(uniforms[i]);
        counters.share(i, y, mech.low_index());
        order.push(i);
    }
    mech.perturb_with_uniforms(row, &ProcessingOrder(order), &uniforms)
}

pub fn greedy_order(
    row: &[SnpValue],
    corr: &CorrelationModel,
    config: &MechanismConfig,
    seed: u64,
) -> Result<ProcessingOrder> {
    let mech = Mechanism::new(corr, *config)?;
    Ok(greedy_share(&mech, row, seed)?.order_used)
}

/// Sharing state for the MDP: which SNPs have been shared and as what.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MdpState(usize);

impl MdpState {
    pub const EMPTY: MdpState = MdpState(0);

    pub fn from_shares(shares: &[Option<SnpValue>]) -> Self {
        let mut code = 0;
        for s in shares.iter().rev() {
            code = code * 4 + s.map_or(0, |v| v.index() + 1);
        }
        MdpState(code)
    }

    pub fn code(self) -> usize {
        self.0
    }

    pub fn get(self, i: usize) -> Option<SnpValue> {
        match (self.0 >> (2 * i)) & 3 {
            0 => None,
            d => Some(SnpValue::from_index(d - 1)),
        }
    }

    pub fn with(self, i: usize, y: SnpValue) -> Self {
        debug_assert!(self.get(i).is_none());
        MdpState(self.0 + ((y.index() + 1) << (2 * i)))
    }

    pub fn shares(self, l: usize) -> Vec<Option<SnpValue>> {
        (0..l).map(|i| self.get(i)).collect()
    }

    pub fn depth(self, l: usize) -> usize {
        (0..l).filter(|&i| self.get(i).is_some()).count()
    }
}

/// One outgoing edge of an MDP `(state, action)` pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Transition {
    pub shared: SnpValue,
    pub probability: f64,
    /// 1 if the shared value is in the true value's beacon class.
    pub reward: f64,
    pub next: MdpState,
}

/// The per-individual sharing MDP, evaluated directly from the correlation
/// model without incremental bookkeeping.
#[derive(Debug, Clone)]
pub struct OrderingMdp<'a> {
    mech: &'a Mechanism<'a>,
    row: &'a [SnpValue],
}

impl<'a> OrderingMdp<'a> {
    pub fn new(mech: &'a Mechanism<'a>, row: &'a [SnpValue]) -> Result<Self> {
        if row.len() != mech.correlations().l() {
            return Err(DldpError::Structure(format!(
                "row has {} SNPs, correlation model has {}",
                row.len(),
                mech.correlations().l()
            )));
        }
        if row.len() > EXACT_MAX_SNPS {
            return Err(capacity(row.len(), EXACT_MAX_SNPS));
        }
        Ok(Self { mech, row })
    }

    pub fn horizon(&self) -> usize {
        self.row.len()
    }

    pub fn actions(&self, state: MdpState) -> Vec<usize> {
        (0..self.row.len()).filter(|&i| state.get(i).is_none()).collect()
    }

    pub fn transitions(&self, state: MdpState, action: usize) -> Vec<Transition> {
        let prefix: Vec<_> = (0..self.row.len()).filter_map(|k| state.get(k).map(|y| (k, y))).collect();
        let outcome = eliminate_states(action, &prefix, self.mech.correlations(), self.mech.config());
        let x = self.row[action];
        let dist = self.mech.distribution(x, outcome.eliminated);
        SnpValue::ALL
            .into_iter()
            .filter(|y| dist.probs[y.index()] > 0.0)
            .map(|y| Transition {
                shared: y,
                probability: dist.probs[y.index()],
                reward: f64::from(u8::from(y.carries_minor_allele() == x.carries_minor_allele())),
                next: state.with(action, y),
            })
            .collect()
    }
}

fn capacity(l: usize, cap: usize) -> DldpError {
    DldpError::Capacity(format!("exact ordering supports at most {cap} SNPs, got {l}; use the greedy order instead"))
}

/// Optimal adaptive policy from backward induction.
#[derive(Debug, Clone)]
pub struct Policy {
    l: usize,
    actions: Vec<u8>,
}

const UNVISITED: u8 = u8::MAX;

impl Policy {
    /// Action chosen in `state`, if the state is reachable and non-terminal.
    pub fn action(&self, state: MdpState) -> Option<usize> {
        self.actions.get(state.code()).copied().filter(|&a| a != UNVISITED).map(usize::from)
    }

    /// Follows the policy, sampling each SNP with its uniform.
    pub fn rollout(&self, mech: &Mechanism<'_>, row: &[SnpValue], uniforms: &[f64]) -> Result<PerturbedSequence> {
        let mut counters = PrefixCounters::new(self.l);
        let mut state = MdpState::EMPTY;
        let mut order = Vec::with_capacity(self.l);
        for _ in 0..self.l {
            let i = self
                .action(state)
                .ok_or_else(|| DldpError::Structure("policy does not cover a reachable state".into()))?;
            let outcome = counters.outcome(i, mech.config().gamma_hat);
            let y = mech.distribution(row[i], outcome.eliminated).sample(uniforms[i]);
            counters.share(i, y, mech.low_index());
            state = state.with(i, y);
            order.push(i);
        }
        mech.perturb_with_uniforms(row, &ProcessingOrder(order), uniforms)
    }
}

struct Solver<'m, 'a> {
    mech: &'m Mechanism<'a>,
    row: &'m [SnpValue],
    counters: PrefixCounters,
    values: Vec<f64>,
    actions: Vec<u8>,
}

impl Solver<'_, '_> {
    fn value(&mut self, state: MdpState) -> f64 {
        let l = self.row.len();
        if self.counters.shared_count() == l {
            return 0.0;
        }
        let cached = self.values[state.code()];
        if !cached.is_nan() {
            return cached;
        }
        let gamma = self.mech.config().gamma_hat;
        let mut best = f64::NEG_INFINITY;
        let mut best_action = 0;
        for i in 0..l {
            if self.counters.is_shared(i) {
                continue;
            }
            let x = self.row[i];
            let dist = self.mech.distribution(x, self.counters.outcome(i, gamma).eliminated);
            let mut v = per_snp_expected_utility(x, &dist);
            for y in SnpValue::ALL {
                let p = dist.probs[y.index()];
                if p > 0.0 {
                    self.counters.share(i, y, self.mech.low_index());
                    v += p * self.value(state.with(i, y));
                    self.counters.unshare(i, y, self.mech.low_index());
                }
            }
            if v > best + 1e-12 {
                best = v;
                best_action = i;
            }
        }
        self.values[state.code()] = best;
        self.actions[state.code()] = best_action as u8;
        best
    }
}

/// Exact finite-horizon backward induction over every reachable sharing
/// state. Returns the optimal policy and its expected total utility. Ties go
/// to the lowest SNP index.
pub fn solve_optimal(mech: &Mechanism<'_>, row: &[SnpValue]) -> Result<(Policy, f64)> {
    let l = row.len();
    if l != mech.correlations().l() {
        return Err(DldpError::Structure(format!(
            "row has {l} SNPs, correlation model has {}",
            mech.correlations().l()
        )));
    }
    if l > EXACT_MAX_SNPS {
        return Err(capacity(l, EXACT_MAX_SNPS));
    }
    let size = 1usize << (2 * l);
    let mut solver = Solver {
        mech,
        row,
        counters: PrefixCounters::new(l),
        values: vec![f64::NAN; size],
        actions: vec![UNVISITED; size],
    };
    let value = solver.value(MdpState::EMPTY);
    Ok((Policy { l, actions: solver.actions }, value))
}

pub fn optimal_order_value_iteration(
    row: &[SnpValue],
    corr: &CorrelationModel,
    config: &MechanismConfig,
) -> Result<(Policy, f64)> {
    solve_optimal(&Mechanism::new(corr, *config)?, row)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum UtilityMethod {
    Exact,
    MonteCarlo { trials: usize, seed: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct UtilityEstimate {
    pub mean: f64,
    /// Zero for exact evaluation.
    pub std_error: f64,
}

fn exact_static(mech: &Mechanism<'_>, row: &[SnpValue], order: &[usize], prefix: &mut Vec<(usize, SnpValue)>) -> f64 {
    let depth = prefix.len();
    let Some(&i) = order.get(depth) else {
        return 0.0;
    };
    let outcome = eliminate_states(i, prefix, mech.correlations(), mech.config());
    let dist = mech.distribution(row[i], outcome.eliminated);
    let mut v = per_snp_expected_utility(row[i], &dist);
    for y in SnpValue::ALL {
        let p = dist.probs[y.index()];
        if p > 0.0 {
            prefix.push((i, y));
            v += p * exact_static(mech, row, order, prefix);
            prefix.pop();
        }
    }
    v
}

/// Expected total beacon utility when sharing along a fixed order.
pub fn expected_utility_of_order(
    row: &[SnpValue],
    order: &ProcessingOrder,
    corr: &CorrelationModel,
    config: &MechanismConfig,
    method: UtilityMethod,
) -> Result<UtilityEstimate> {
    let mech = Mechanism::new(corr, *config)?;
    if row.len() != corr.l() || order.len() != row.len() {
        return Err(DldpError::Structure(format!(
            "row ({}), order ({}) and correlation model ({}) disagree on l",
            row.len(),
            order.len(),
            corr.l()
        )));
    }
    match method {
        UtilityMethod::Exact => {
            if row.len() > EXACT_MAX_SNPS {
                return Err(capacity(row.len(), EXACT_MAX_SNPS));
            }
            let mean = exact_static(&mech, row, order.as_slice(), &mut Vec::with_capacity(row.len()));
            Ok(UtilityEstimate { mean, std_error: 0.0 })
        }
        UtilityMethod::MonteCarlo { trials, seed } => {
            if trials < 2 {
                return Err(DldpError::InvalidParameter("Monte Carlo needs at least 2 trials".into()));
            }
            let samples = (0..trials)
                .map(|t| {
                    let u = sequence_uniforms(seed::derive_seed(seed, &[tags::MONTE_CARLO, t as u64]), row.len());
                    mech.perturb_with_uniforms(row, order, &u).map(|s| s.realized_utility(row) as f64)
                })
                .collect::<Result<Vec<f64>>>()?;
            let n = trials as f64;
            let mean = samples.iter().sum::<f64>() / n;
            let var = samples.iter().map(|s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0);
            Ok(UtilityEstimate { mean, std_error: (var / n).sqrt() })
        }
    }
}

fn permutations(l: usize) -> Vec<Vec<usize>> {
    fn go(current: &mut Vec<usize>, used: &mut [bool], out: &mut Vec<Vec<usize>>) {
        if current.len() == used.len() {
            out.push(current.clone());
            return;
        }
        for i in 0..used.len() {
            if !used[i] {
                used[i] = true;
                current.push(i);
                go(current, used, out);
                current.pop();
                used[i] = false;
            }
        }
    }
    let mut out = Vec::new();
    go(&mut Vec::with_capacity(l), &mut vec![false; l], &mut out);
    out
}

/// Best static order by exhaustive search. The first order (lexicographic)
/// wins ties.
pub fn brute_force_order(
    row: &[SnpValue],
    corr: &CorrelationModel,
    config: &MechanismConfig,
) -> Result<(ProcessingOrder, f64)> {
    let l = row.len();
    if l > BRUTE_FORCE_MAX_SNPS {
        return Err(DldpError::Capacity(format!("brute force supports at most {BRUTE_FORCE_MAX_SNPS} SNPs, got {l}")));
    }
    if l != corr.l() {
        return Err(DldpError::Structure(format!("row has {l} SNPs, correlation model has {}", corr.l())));
    }
    let mech = Mechanism::new(corr, *config)?;
    let mut best: Option<(Vec<usize>, f64)> = None;
    for perm in permutations(l) {
        let v = exact_static(&mech, row, &perm, &mut Vec::with_capacity(l));
        if best.as_ref().is_none_or(|(_, b)| v > *b + 1e-12) {
            best = Some((perm, v));
        }
    }
    let (perm, v) = best.expect("at least one permutation");
    Ok((ProcessingOrder(perm), v))
}

/// How each individual's processing order is picked.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OrderStrategy {
    Random,
    Greedy,
    Optimal,
}

impl OrderStrategy {
    pub fn name(self) -> &'static str {
        match self {
            OrderStrategy::Random => "random",
            OrderStrategy::Greedy => "greedy",
            OrderStrategy::Optimal => "optimal",
        }
    }
}

impl std::str::FromStr for OrderStrategy {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "random" => Ok(OrderStrategy::Random),
            "greedy" => Ok(OrderStrategy::Greedy),
            "optimal" => Ok(OrderStrategy::Optimal),
            other => Err(format!("unknown order `{other}` (expected random, greedy or optimal)")),
        }
    }
}

/// Shares one individual's sequence with the given ordering strategy.
/// `seed` is the individual's sequence seed.
pub fn share_individual(
    mech: &Mechanism<'_>,
    row: &[SnpValue],
    strategy: OrderStrategy,
    seed: u64,
) -> Result<PerturbedSequence> {
    match strategy {
        OrderStrategy::Random => mech.perturb_sequence(row, &random_order(row.len(), seed), seed),
        OrderStrategy::Greedy => greedy_share(mech, row, seed),
        OrderStrategy::Optimal => {
            let (policy, _) = solve_optimal(mech, row)?;
            policy.rollout(mech, row, &sequence_uniforms(seed, row.len()))
        }
    }
}

/// Seed for individual `j` under a population-level seed.
pub fn individual_seed(seed: u64, j: usize) -> u64 {
    seed::derive_seed(seed, &[tags::MECHANISM, j as u64])
}

/// Shares every row of `m`. Rows are processed in parallel on the current
/// rayon pool; results do not depend on the pool size.
pub fn share_population(
    m: &GenotypeMatrix,
    corr: &CorrelationModel,
    config: &MechanismConfig,
    strategy: OrderStrategy,
    seed: u64,
) -> Result<(GenotypeMatrix, Vec<PerturbedSequence>)> {
    let mech = Mechanism::new(corr, *config)?;
    if m.l() != corr.l() {
        return Err(DldpError::Structure(format!("matrix has {} SNPs, correlation model has {}", m.l(), corr.l())));
    }
    let sequences = (0..m.n())
        .into_par_iter()
        .map(|j| share_individual(&mech, m.row(j), strategy, individual_seed(seed, j)))
        .collect::<Result<Vec<_>>>()?;
    let shared = GenotypeMatrix::from_rows(sequences.iter().map(|s| s.values.clone()).collect())?
        .with_labels(m.snp_ids().to_vec(), m.individual_ids().to_vec())?;
    Ok((shared, sequences))
}
