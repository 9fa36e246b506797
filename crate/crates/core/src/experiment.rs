//! Seeded comparison of plain RR against the correlation-aware mechanism.
//!
//! For every `(epsilon, trial)` pair the harness loads or generates a
//! population, derives its correlation model, shares it with RR and with the
//! mechanism, attacks both, and measures beacon accuracy. Trial `t` uses the
//! same population for every epsilon; all randomness is keyed by
//! `(seed, tag, epsilon bits, trial)`, so adding trials or grid points never
//! changes existing rows.

use std::io::Write;
use std::path::PathBuf;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::attack::{
    attack, estimation_error, posterior_given_mechanism, rr_postprocess, rr_profile, AttackConfig, KnownMechanism,
};
use crate::beacon::{beacon_accuracy, DecisionRule};
use crate::error::{DldpError, Result};
use crate::genotype::{
    compute_correlation_model, generate_synthetic_population, GenotypeMatrix, MafProfile, SyntheticSpec,
};
use crate::mechanism::{MechanismConfig, Mode};
use crate::ordering::{share_population, OrderStrategy};
use crate::rr::rr_perturb;
use crate::seed::{derive_seed, tags};

/// Synthetic population parameters; the seed comes from the trial.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n: usize,
    pub l: usize,
    pub profile: MafProfile,
    pub chain_strength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataSource {
    File(PathBuf),
    Synthetic(SyntheticConfig),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentConfig {
    pub data: DataSource,
    pub epsilon_grid: Vec<f64>,
    pub tau_hat: f64,
    pub gamma_hat: f64,
    pub mode: Mode,
    pub tau: f64,
    pub gamma: f64,
    /// Attack the mechanism's output with knowledge of `tau_hat`, `gamma_hat`
    /// and the mode.
    pub attacker_knows_mechanism: bool,
    pub order: OrderStrategy,
    pub trials: usize,
    pub seed: u64,
    /// Pseudo-count added to every joint cell of the correlation model.
    pub pseudo_count: f64,
}

impl ExperimentConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epsilon_grid.is_empty() {
            return Err(DldpError::InvalidParameter("epsilon grid is empty".into()));
        }
        if let Some(e) = self.epsilon_grid.iter().find(|e| !(**e > 0.0 && e.is_finite())) {
            return Err(DldpError::InvalidParameter(format!(
                "experiment budgets must be positive and finite (the RR beacon estimate needs epsilon > 0), got {e}"
            )));
        }
        if self.trials == 0 {
            return Err(DldpError::InvalidParameter("trial count must be at least 1".into()));
        }
        if !(self.pseudo_count >= 0.0 && self.pseudo_count.is_finite()) {
            return Err(DldpError::InvalidParameter(format!("pseudo-count {} is invalid", self.pseudo_count)));
        }
        for &eps in &self.epsilon_grid {
            self.mechanism(eps)?;
            self.attacker(eps)?;
        }
        if let DataSource::Synthetic(s) = &self.data {
            self.synthetic_spec(s, 0).validate()?;
        }
        Ok(())
    }

    fn mechanism(&self, epsilon: f64) -> Result<MechanismConfig> {
        MechanismConfig::new(epsilon, self.tau_hat, self.gamma_hat, self.mode)
    }

    fn attacker(&self, epsilon: f64) -> Result<AttackConfig> {
        AttackConfig::new(self.tau, self.gamma, epsilon)
    }

    fn synthetic_spec(&self, s: &SyntheticConfig, trial: usize) -> SyntheticSpec {
        let seed = derive_seed(self.seed, &[tags::TRIAL, trial as u64, tags::SYNTHETIC]);
        SyntheticSpec::with_profile(s.n, s.l, s.profile, s.chain_strength, seed)
    }

    fn population(&self, trial: usize) -> Result<GenotypeMatrix> {
        match &self.data {
            DataSource::File(path) => GenotypeMatrix::read_file(path),
            DataSource::Synthetic(s) => generate_synthetic_population(&self.synthetic_spec(s, trial)),
        }
    }
}

/// Metrics of one `(epsilon, trial)` run. Errors are means over all cells.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TrialRecord {
    pub epsilon: f64,
    pub trial: usize,
    /// RR shares scored with the RR profile alone.
    pub e_rr_no_attack: f64,
    pub e_rr_attack: f64,
    pub e_proposed_attack: f64,
    pub a_rr: f64,
    pub a_rr_yes: f64,
    pub a_rr_no: f64,
    pub a_proposed: f64,
    pub a_proposed_yes: f64,
    pub a_proposed_no: f64,
    pub a_rr_post: f64,
    /// Mean number of eliminated states per shared SNP.
    pub eliminated_per_snp: f64,
    pub ineliminable_fraction: f64,
}

fn mean_error<F>(m: &GenotypeMatrix, belief_for_row: F) -> Result<f64>
where
    F: Fn(usize) -> Result<crate::attack::AttackerBelief> + Sync,
{
    let per_row = (0..m.n())
        .into_par_iter()
        .map(|j| estimation_error(&belief_for_row(j)?, m.row(j)))
        .collect::<Result<Vec<f64>>>()?;
    Ok(per_row.iter().sum::<f64>() / m.n() as f64)
}

pub fn run_trial(
    config: &ExperimentConfig,
    original: &GenotypeMatrix,
    epsilon: f64,
    trial: usize,
) -> Result<TrialRecord> {
    let corr = compute_correlation_model(original, config.pseudo_count)?;
    let mech_cfg = config.mechanism(epsilon)?;
    let atk = config.attacker(epsilon)?;
    let key = |tag: u64| derive_seed(config.seed, &[tag, epsilon.to_bits(), trial as u64]);

    let rr = rr_perturb(original, epsilon, key(tags::RR))?;
    let (proposed, sequences) = share_population(original, &corr, &mech_cfg, config.order, key(tags::MECHANISM))?;

    let e_rr_no_attack = mean_error(original, |j| rr_profile(rr.row(j), epsilon))?;
    let e_rr_attack = mean_error(original, |j| attack(rr.row(j), &corr, &atk))?;
    let known = KnownMechanism { tau_hat: config.tau_hat, gamma_hat: config.gamma_hat, mode: config.mode, order: None };
    let e_proposed_attack = mean_error(original, |j| {
        if config.attacker_knows_mechanism {
            posterior_given_mechanism(proposed.row(j), &corr, &known, epsilon)
        } else {
            attack(proposed.row(j), &corr, &atk)
        }
    })?;

    let post_rows = (0..rr.n())
        .into_par_iter()
        .map(|j| rr_postprocess(rr.row(j), &corr, config.tau, config.gamma))
        .collect::<Result<Vec<_>>>()?;
    let post = GenotypeMatrix::from_rows(post_rows)?;

    let a_rr = beacon_accuracy(original, &rr, DecisionRule::RrEstimated, epsilon)?;
    let a_proposed = beacon_accuracy(original, &proposed, DecisionRule::Direct, epsilon)?;
    let a_rr_post = beacon_accuracy(original, &post, DecisionRule::RrEstimated, epsilon)?;

    let cells = (original.n() * original.l()) as f64;
    let eliminated: usize = sequences.iter().flat_map(|s| s.per_snp.iter().map(|(o, _)| o.eliminated.len())).sum();
    let ineliminable: usize = sequences.iter().map(|s| s.dependence.ineliminable.iter().filter(|b| **b).count()).sum();

    Ok(TrialRecord {
        epsilon,
        trial,
        e_rr_no_attack,
        e_rr_attack,
        e_proposed_attack,
        a_rr: a_rr.overall,
        a_rr_yes: a_rr.yes_accuracy,
        a_rr_no: a_rr.no_accuracy,
        a_proposed: a_proposed.overall,
        a_proposed_yes: a_proposed.yes_accuracy,
        a_proposed_no: a_proposed.no_accuracy,
        a_rr_post: a_rr_post.overall,
        eliminated_per_snp: eliminated as f64 / cells,
        ineliminable_fraction: ineliminable as f64 / cells,
    })
}

/// Runs every `(epsilon, trial)` pair on the current rayon pool. Records are
/// returned in grid order, then trial order.
pub fn run_experiment(config: &ExperimentConfig) -> Result<Vec<TrialRecord>> {
    config.validate()?;
    let populations = (0..config.trials).into_par_iter().map(|t| config.population(t)).collect::<Result<Vec<_>>>()?;
    let jobs: Vec<(f64, usize)> =
        config.epsilon_grid.iter().flat_map(|&e| (0..config.trials).map(move |t| (e, t))).collect();
    jobs.into_par_iter().map(|(e, t)| run_trial(config, &populations[t], e, t)).collect()
}

/// Names of the per-trial metrics, in CSV column order.
pub const METRICS: [&str; 12] = [
    "e_rr_no_attack",
    "e_rr_attack",
    "e_proposed_attack",
    "a_rr",
    "a_rr_yes",
    "a_rr_no",
    "a_proposed",
    "a_proposed_yes",
    "a_proposed_no",
    "a_rr_post",
    "eliminated_per_snp",
    "ineliminable_fraction",
];

impl TrialRecord {
    pub fn metrics(&self) -> [f64; 12] {
        [
            self.e_rr_no_attack,
            self.e_rr_attack,
            self.e_proposed_attack,
            self.a_rr,
            self.a_rr_yes,
            self.a_rr_no,
            self.a_proposed,
            self.a_proposed_yes,
            self.a_proposed_no,
            self.a_rr_post,
            self.eliminated_per_snp,
            self.ineliminable_fraction,
        ]
    }
}

/// Mean and standard error of each metric at one epsilon.
#[derive(Debug, Clone, PartialEq)]
pub struct SummaryRow {
    pub epsilon: f64,
    pub trials: usize,
    pub mean: [f64; 12],
    /// Zero when there is a single trial.
    pub std_error: [f64; 12],
}

impl SummaryRow {
    pub fn metric(&self, name: &str) -> Option<(f64, f64)> {
        METRICS.iter().position(|m| *m == name).map(|i| (self.mean[i], self.std_error[i]))
    }
}

/// One summary row per distinct epsilon, in first-appearance order.
pub fn summarize(records: &[TrialRecord]) -> Vec<SummaryRow> {
    let mut grid: Vec<f64> = Vec::new();
    for r in records {
        if !grid.iter().any(|e| e.to_bits() == r.epsilon.to_bits()) {
            grid.push(r.epsilon);
        }
    }
    grid.into_iter()
        .map(|eps| {
            let rows: Vec<[f64; 12]> =
                records.iter().filter(|r| r.epsilon.to_bits() == eps.to_bits()).map(TrialRecord::metrics).collect();
            let n = rows.len() as f64;
            let mut mean = [0.0; 12];
            let mut std_error = [0.0; 12];
            for i in 0..12 {
                mean[i] = rows.iter().map(|r| r[i]).sum::<f64>() / n;
                if rows.len() > 1 {
                    let var = rows.iter().map(|r| (r[i] - mean[i]).powi(2)).sum::<f64>() / (n - 1.0);
                    std_error[i] = (var / n).sqrt();
                }
            }
            SummaryRow { epsilon: eps, trials: rows.len(), mean, std_error }
        })
        .collect()
}

pub fn write_detail_csv<W: Write>(records: &[TrialRecord], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}

pub fn write_summary_csv<W: Write>(rows: &[SummaryRow], out: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["epsilon".to_string(), "trials".to_string()];
    for m in METRICS {
        header.push(format!("{m}_mean"));
        header.push(format!("{m}_se"));
    }
    w.write_record(&header)?;
    for row in rows {
        let mut record = vec![row.epsilon.to_string(), row.trials.to_string()];
        for i in 0..METRICS.len() {
            record.push(row.mean[i].to_string());
            record.push(row.std_error[i].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush().map_err(csv::Error::from)?;
    Ok(())
}
