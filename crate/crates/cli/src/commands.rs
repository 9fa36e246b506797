use std::fmt::Write as _;
use std::path::Path;

use dldp_core::attack::{attack, estimation_error, AttackConfig, KnownMechanism};
use dldp_core::experiment::{
    run_experiment, summarize, write_detail_csv, write_summary_csv, DataSource, ExperimentConfig, SyntheticConfig,
};
use dldp_core::kinship::{
    indirect_budget_one_child, indirect_budget_two_children, max_budget_general_with, max_budget_one_child,
    max_budget_second_child, select_donor_budget, FamilyState, SolverRule,
};
use dldp_core::leakage::{leakage_upper_bound, LeakageQuery};
use dldp_core::mechanism::Mechanism;
use dldp_core::ordering::{
    expected_utility_of_order, individual_seed, share_individual, share_population, solve_optimal, UtilityMethod,
};
use dldp_core::{
    beacon_accuracy, compute_correlation_model, generate_synthetic_population, rr_perturb, CorrelationModel,
    DecisionRule, DldpError, GenotypeMatrix, MechanismConfig, OrderStrategy, Result, SnpValue, SyntheticSpec,
};

use crate::args::*;
use crate::output::{csv_bytes, emit};

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Gen(a) => gen(a),
        Command::Corr(a) => corr(a),
        Command::Perturb(a) => perturb(a),
        Command::Attack(a) => attack_cmd(a),
        Command::Eval(a) => eval(a),
        Command::Order(a) => order(a),
        Command::Kinship(k) => kinship(k),
        Command::Leakage(a) => leakage(a),
        Command::Experiment(a) => experiment(a),
    }
}

fn matrix_bytes(m: &GenotypeMatrix) -> Vec<u8> {
    let mut buf = Vec::new();
    m.write_text(&mut buf).expect("writing to memory cannot fail");
    buf
}

fn load_corr(path: Option<&Path>, data: &GenotypeMatrix) -> Result<CorrelationModel> {
    match path {
        Some(p) => {
            let corr = CorrelationModel::read_file(p)?;
            if corr.l() != data.l() {
                return Err(DldpError::Structure(format!(
                    "{} covers {} SNPs, genotype data has {}",
                    p.display(),
                    corr.l(),
                    data.l()
                )));
            }
            Ok(corr)
        }
        None => compute_correlation_model(data, 0.0),
    }
}

fn mechanism_config(epsilon: f64, m: &MechanismArgs) -> Result<MechanismConfig> {
    MechanismConfig::new(epsilon, m.tau_hat, m.gamma_hat, m.mode)
}

fn gen(a: GenArgs) -> Result<()> {
    let s = &a.synthetic;
    let spec = SyntheticSpec::with_profile(s.n, s.l, s.profile(), s.rho, a.seed);
    let m = generate_synthetic_population(&spec)?;
    emit(a.out.as_deref(), &matrix_bytes(&m))
}

fn corr(a: CorrArgs) -> Result<()> {
    let m = GenotypeMatrix::read_file(&a.input)?;
    let corr = compute_correlation_model(&m, a.pseudo_count)?;
    let mut json = corr.to_json()?;
    json.push('\n');
    emit(a.out.as_deref(), json.as_bytes())
}

fn perturb(a: PerturbArgs) -> Result<()> {
    let m = GenotypeMatrix::read_file(&a.input)?;
    let (shared, orders) = match a.method {
        Method::Rr => (rr_perturb(&m, a.epsilon, a.seed)?, None),
        Method::Dldp => {
            let corr = load_corr(a.corr.as_deref(), &m)?;
            let cfg = mechanism_config(a.epsilon, &a.mechanism)?;
            let (shared, sequences) = share_population(&m, &corr, &cfg, a.order, a.seed)?;
            let mut text = String::new();
            for s in &sequences {
                writeln!(text, "{}", s.order_used).expect("writing to a string cannot fail");
            }
            (shared, Some(text))
        }
    };
    emit(a.out.as_deref(), &matrix_bytes(&shared))?;
    if let Some(path) = &a.orders_out {
        let text = orders.ok_or_else(|| {
            DldpError::InvalidParameter("--orders-out needs --method dldp (RR has no processing order)".into())
        })?;
        emit(Some(path), text.as_bytes())?;
    }
    Ok(())
}

fn attack_cmd(a: AttackArgs) -> Result<()> {
    let shared = GenotypeMatrix::read_file(&a.input)?;
    let corr = load_corr(Some(&a.corr), &shared)?;
    let mut cfg = AttackConfig::new(a.attacker.tau, a.attacker.gamma, a.epsilon)?;
    if a.known_mechanism {
        cfg = cfg.with_known_mechanism(KnownMechanism {
            tau_hat: a.mechanism.tau_hat,
            gamma_hat: a.mechanism.gamma_hat,
            mode: a.mechanism.mode,
            order: None,
        })?;
    }
    let truth = match &a.truth {
        Some(p) => {
            let t = GenotypeMatrix::read_file(p)?;
            if (t.n(), t.l()) != (shared.n(), shared.l()) {
                return Err(DldpError::Structure(format!(
                    "{} is {}x{}, shared data is {}x{}",
                    p.display(),
                    t.n(),
                    t.l(),
                    shared.n(),
                    shared.l()
                )));
            }
            Some(t)
        }
        None => None,
    };
    let beliefs = (0..shared.n()).map(|j| attack(shared.row(j), &corr, &cfg)).collect::<Result<Vec<_>>>()?;

    let bytes = csv_bytes(|w| {
        let mut header = vec!["individual", "snp", "reported", "p0", "p1", "p2", "eliminated"];
        if truth.is_some() {
            header.extend(["truth", "error"]);
        }
        w.write_record(&header)?;
        for (j, belief) in beliefs.iter().enumerate() {
            for (i, probs) in belief.probs.iter().enumerate() {
                let mut record = vec![
                    j.to_string(),
                    i.to_string(),
                    shared.get(j, i).to_string(),
                    probs[0].to_string(),
                    probs[1].to_string(),
                    probs[2].to_string(),
                    belief.eliminated[i].to_string(),
                ];
                if let Some(t) = &truth {
                    let x = t.get(j, i);
                    let err: f64 = probs.iter().enumerate().map(|(v, p)| p * (x.index() as f64 - v as f64).abs()).sum();
                    record.push(x.to_string());
                    record.push(err.to_string());
                }
                w.write_record(&record)?;
            }
        }
        Ok(())
    })?;
    emit(a.out.as_deref(), &bytes)?;

    if let Some(t) = &truth {
        let total = beliefs.iter().enumerate().map(|(j, b)| estimation_error(b, t.row(j))).sum::<Result<f64>>()?;
        eprintln!("mean estimation error: {}", total / shared.n() as f64);
    }
    Ok(())
}

fn eval(a: EvalArgs) -> Result<()> {
    let truth = GenotypeMatrix::read_file(&a.truth)?;
    let shared = GenotypeMatrix::read_file(&a.input)?;
    let rule = match a.rule {
        RuleArg::Direct => DecisionRule::Direct,
        RuleArg::RrEstimated => DecisionRule::RrEstimated,
    };
    let report = beacon_accuracy(&truth, &shared, rule, a.epsilon)?;
    let bytes = csv_bytes(|w| {
        w.serialize(report)?;
        Ok(())
    })?;
    emit(a.out.as_deref(), &bytes)
}

fn order(a: OrderArgs) -> Result<()> {
    let m = GenotypeMatrix::read_file(&a.input)?;
    if a.individual >= m.n() {
        return Err(DldpError::InvalidParameter(format!(
            "individual {} out of range (data has {} rows)",
            a.individual,
            m.n()
        )));
    }
    let corr = load_corr(a.corr.as_deref(), &m)?;
    let cfg = mechanism_config(a.epsilon, &a.mechanism)?;
    let mech = Mechanism::new(&corr, cfg)?;
    let row = m.row(a.individual);
    let seq = share_individual(&mech, row, a.order, individual_seed(a.seed, a.individual))?;

    let values: Vec<String> = seq.values.iter().map(SnpValue::to_string).collect();
    let mut text = String::new();
    let mut line = |s: String| {
        text.push_str(&s);
        text.push('\n');
    };
    line(format!("strategy {}", a.order.name()));
    line(format!("order {}", seq.order_used));
    line(format!("shared {}", values.join(" ")));
    line(format!("realized_utility {}", seq.realized_utility(row)));
    if a.order == OrderStrategy::Optimal {
        let (_, value) = solve_optimal(&mech, row)?;
        line(format!("expected_utility {value}"));
    } else if a.exact {
        let est = expected_utility_of_order(row, &seq.order_used, &corr, &cfg, UtilityMethod::Exact)?;
        line(format!("expected_utility {}", est.mean));
    }
    emit(a.out.as_deref(), text.as_bytes())
}

fn kinship(k: KinshipCommand) -> Result<()> {
    let value = match k {
        KinshipCommand::OneChild { parent_budget } => max_budget_one_child(parent_budget)?,
        KinshipCommand::SecondChild { epsilon } => max_budget_second_child(epsilon)?,
        KinshipCommand::IndirectOneChild { epsilon, value } => {
            indirect_budget_one_child(epsilon, SnpValue::from_index(value as usize))?
        }
        KinshipCommand::IndirectTwoChildren { epsilon } => indirect_budget_two_children(epsilon)?,
        KinshipCommand::General { family, snp, sharer, own_budget, rule } => {
            let state = FamilyState::read_file(&family)?;
            let rule = match rule {
                SolverArg::ClosedForm => SolverRule::CLOSED_FORM,
                SolverArg::Literal => SolverRule::LITERAL,
            };
            let max = max_budget_general_with(&state, snp, &sharer, rule)?;
            match own_budget {
                Some(own) => select_donor_budget(&[max], own),
                None => max,
            }
        }
    };
    emit(None, format!("{value}\n").as_bytes())
}

fn leakage(a: LeakageArgs) -> Result<()> {
    let bound = leakage_upper_bound(&LeakageQuery::new(a.zeta, a.epsilon)?);
    emit(None, format!("{bound}\n").as_bytes())
}

fn experiment(a: ExperimentArgs) -> Result<()> {
    let data = match a.data {
        Some(path) => DataSource::File(path),
        None => DataSource::Synthetic(SyntheticConfig {
            n: a.synthetic.n,
            l: a.synthetic.l,
            profile: a.synthetic.profile(),
            chain_strength: a.synthetic.rho,
        }),
    };
    let config = ExperimentConfig {
        data,
        epsilon_grid: a.epsilon_grid,
        tau_hat: a.mechanism.tau_hat,
        gamma_hat: a.mechanism.gamma_hat,
        mode: a.mechanism.mode,
        tau: a.attacker.tau,
        gamma: a.attacker.gamma,
        attacker_knows_mechanism: a.known_mechanism,
        order: a.order,
        trials: a.trials,
        seed: a.seed,
        pseudo_count: a.pseudo_count,
    };
    let records = run_experiment(&config)?;
    std::fs::create_dir_all(&a.out).map_err(|e| DldpError::io(&a.out, e))?;
    let mut detail = Vec::new();
    write_detail_csv(&records, &mut detail)?;
    let mut summary = Vec::new();
    write_summary_csv(&summarize(&records), &mut summary)?;
    let detail_path = a.out.join("detail.csv");
    let summary_path = a.out.join("summary.csv");
    emit(Some(&detail_path), &detail)?;
    emit(Some(&summary_path), &summary)?;
    println!("{}\n{}", detail_path.display(), summary_path.display());
    Ok(())
}
