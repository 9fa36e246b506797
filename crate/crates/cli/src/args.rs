use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use dldp_core::{MafProfile, Mode, OrderStrategy};

#[derive(Debug, Parser)]
#[command(name = "dldp", version, about = "Dependent local differential privacy for genotype sequences")]
pub struct Cli {
    /// Worker threads (default: one per core). Results do not depend on it.
    #[arg(long, global = true)]
    pub jobs: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic genotype matrix.
    Gen(GenArgs),
    /// Compute pairwise conditional probabilities of a genotype matrix.
    Corr(CorrArgs),
    /// Share every individual with plain RR or the correlation-aware mechanism.
    Perturb(PerturbArgs),
    /// Run the correlation attack on shared sequences.
    Attack(AttackArgs),
    /// Beacon accuracy of shared data against the original.
    Eval(EvalArgs),
    /// Processing order chosen for one individual.
    Order(OrderArgs),
    /// Privacy budgets for relatives.
    #[command(subcommand)]
    Kinship(KinshipCommand),
    /// Upper bound on an attacker's single-SNP posterior.
    Leakage(LeakageArgs),
    /// Seeded comparison of RR and the mechanism over an epsilon grid.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ProfileKind {
    Constant,
    Uniform,
    Blocks,
}

#[derive(Debug, Clone, Args)]
pub struct SyntheticArgs {
    /// Individuals.
    #[arg(long, default_value_t = 150)]
    pub n: usize,
    /// SNPs.
    #[arg(long, default_value_t = 200)]
    pub l: usize,
    #[arg(long, value_enum, default_value_t = ProfileKind::Blocks)]
    pub profile: ProfileKind,
    /// MAF of every SNP (constant profile).
    #[arg(long, default_value_t = 0.2)]
    pub maf: f64,
    /// Lower MAF bound (uniform profile).
    #[arg(long, default_value_t = 0.01)]
    pub min_maf: f64,
    /// Upper MAF bound (uniform profile).
    #[arg(long, default_value_t = 0.5)]
    pub max_maf: f64,
    /// MAF of common blocks (blocks profile).
    #[arg(long, default_value_t = 0.3)]
    pub common: f64,
    /// MAF of rare blocks (blocks profile).
    #[arg(long, default_value_t = 0.0005)]
    pub rare: f64,
    /// SNPs per block (blocks profile).
    #[arg(long, default_value_t = 5)]
    pub block: usize,
    /// Probability that a haplotype's latent value carries over to the next SNP.
    #[arg(long, default_value_t = 0.8)]
    pub rho: f64,
}

impl SyntheticArgs {
    pub fn profile(&self) -> MafProfile {
        match self.profile {
            ProfileKind::Constant => MafProfile::Constant { maf: self.maf },
            ProfileKind::Uniform => MafProfile::Uniform { min: self.min_maf, max: self.max_maf },
            ProfileKind::Blocks => MafProfile::Blocks { common: self.common, rare: self.rare, block: self.block },
        }
    }
}

#[derive(Debug, Clone, Args)]
pub struct MechanismArgs {
    /// Correlation threshold of the mechanism.
    #[arg(long, default_value_t = 0.02)]
    pub tau_hat: f64,
    /// Inconsistency threshold of the mechanism; above 1 disables elimination.
    #[arg(long, default_value_t = 0.03)]
    pub gamma_hat: f64,
    /// plain or beacon.
    #[arg(long, default_value = "beacon")]
    pub mode: Mode,
}

#[derive(Debug, Clone, Args)]
pub struct AttackerArgs {
    /// Attacker's correlation threshold.
    #[arg(long, default_value_t = 0.02)]
    pub tau: f64,
    /// Attacker's inconsistency threshold.
    #[arg(long, default_value_t = 0.03)]
    pub gamma: f64,
}

#[derive(Debug, Args)]
pub struct GenArgs {
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Genotype file to write (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CorrArgs {
    /// Genotype file.
    #[arg(long)]
    pub input: PathBuf,
    /// Added to every joint count.
    #[arg(long, default_value_t = 0.0)]
    pub pseudo_count: f64,
    /// Correlation JSON to write (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    Rr,
    Dldp,
}

#[derive(Debug, Args)]
pub struct PerturbArgs {
    /// Genotype file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long)]
    pub epsilon: f64,
    #[arg(long, value_enum, default_value_t = Method::Dldp)]
    pub method: Method,
    /// Correlation JSON (default: computed from the input).
    #[arg(long)]
    pub corr: Option<PathBuf>,
    #[command(flatten)]
    pub mechanism: MechanismArgs,
    /// random, greedy or optimal.
    #[arg(long, default_value = "greedy")]
    pub order: OrderStrategy,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Shared genotype file to write (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Also write each individual's realized processing order, one per line.
    #[arg(long)]
    pub orders_out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct AttackArgs {
    /// Shared genotype file.
    #[arg(long)]
    pub input: PathBuf,
    /// Correlation JSON.
    #[arg(long)]
    pub corr: PathBuf,
    /// Budget the shares were produced with.
    #[arg(long)]
    pub epsilon: f64,
    #[command(flatten)]
    pub attacker: AttackerArgs,
    /// Attack with knowledge of the mechanism's thresholds and mode.
    #[arg(long)]
    pub known_mechanism: bool,
    #[command(flatten)]
    pub mechanism: MechanismArgs,
    /// Original genotypes; adds per-cell estimation errors.
    #[arg(long)]
    pub truth: Option<PathBuf>,
    /// Belief CSV to write (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Direct,
    RrEstimated,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Original genotype file.
    #[arg(long)]
    pub truth: PathBuf,
    /// Shared genotype file.
    #[arg(long)]
    pub input: PathBuf,
    #[arg(long, value_enum, default_value_t = RuleArg::Direct)]
    pub rule: RuleArg,
    /// Budget of the shares; needed by rr-estimated.
    #[arg(long, default_value_t = 1.0)]
    pub epsilon: f64,
    /// Accuracy CSV to write (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct OrderArgs {
    /// Genotype file.
    #[arg(long)]
    pub input: PathBuf,
    /// Correlation JSON (default: computed from the input).
    #[arg(long)]
    pub corr: Option<PathBuf>,
    /// Row of the individual, 0-based.
    #[arg(long, default_value_t = 0)]
    pub individual: usize,
    #[arg(long)]
    pub epsilon: f64,
    #[command(flatten)]
    pub mechanism: MechanismArgs,
    /// random, greedy or optimal.
    #[arg(long, default_value = "greedy")]
    pub order: OrderStrategy,
    /// Report the exact expected utility of the realized order.
    #[arg(long)]
    pub exact: bool,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Report to write (default: stdout).
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SolverArg {
    ClosedForm,
    Literal,
}

#[derive(Debug, Subcommand)]
pub enum KinshipCommand {
    /// Largest budget a child may use given the parent's budget.
    OneChild {
        #[arg(long)]
        parent_budget: f64,
    },
    /// Largest budget of a second child after a first child shared at the same budget.
    SecondChild {
        #[arg(long)]
        epsilon: f64,
    },
    /// Budget imposed on a parent by one child's share.
    IndirectOneChild {
        #[arg(long)]
        epsilon: f64,
        /// Shared value, 0, 1 or 2.
        #[arg(long, value_parser = clap::value_parser!(u8).range(0..=2))]
        value: u8,
    },
    /// Budget imposed on a parent by two children sharing at the same budget.
    IndirectTwoChildren {
        #[arg(long)]
        epsilon: f64,
    },
    /// Largest budget for the next sharer of one SNP in a described family.
    General {
        /// Family JSON.
        #[arg(long)]
        family: PathBuf,
        #[arg(long)]
        snp: usize,
        /// Id of the member about to share.
        #[arg(long)]
        sharer: String,
        /// Sharer's own budget; the smaller of it and the family maximum is printed.
        #[arg(long)]
        own_budget: Option<f64>,
        #[arg(long, value_enum, default_value_t = SolverArg::ClosedForm)]
        rule: SolverArg,
    },
}

#[derive(Debug, Args)]
pub struct LeakageArgs {
    /// Prior ratio between the two candidate values.
    #[arg(long)]
    pub zeta: f64,
    #[arg(long)]
    pub epsilon: f64,
}

#[derive(Debug, Args)]
pub struct ExperimentArgs {
    /// Genotype file; synthetic data is generated per trial when absent.
    #[arg(long)]
    pub data: Option<PathBuf>,
    #[command(flatten)]
    pub synthetic: SyntheticArgs,
    /// Comma-separated budgets.
    #[arg(long, value_delimiter = ',', default_value = "0.4,0.8,1.2,1.6,2.0")]
    pub epsilon_grid: Vec<f64>,
    #[command(flatten)]
    pub mechanism: MechanismArgs,
    #[command(flatten)]
    pub attacker: AttackerArgs,
    /// Attack the mechanism's output with knowledge of its thresholds and mode.
    #[arg(long)]
    pub known_mechanism: bool,
    /// random, greedy or optimal.
    #[arg(long, default_value = "greedy")]
    pub order: OrderStrategy,
    #[arg(long, default_value_t = 10)]
    pub trials: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Added to every joint count of the correlation model.
    #[arg(long, default_value_t = 0.0)]
    pub pseudo_count: f64,
    /// Directory for detail.csv and summary.csv.
    #[arg(long)]
    pub out: PathBuf,
}
