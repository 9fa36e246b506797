use dldp_core::mechanism::perturb_sequence;
use dldp_core::ordering::{expected_utility_of_order, random_order, UtilityMethod};
use dldp_core::{
    compute_correlation_model, generate_synthetic_population, rr_estimate_frequencies, rr_params, rr_perturb,
    CorrelationModel, GenotypeMatrix, MafProfile, MechanismConfig, Mode, ProcessingOrder, SnpValue, SyntheticSpec,
};

fn within(observed: f64, expected: f64, n: f64, k: f64) -> bool {
    let se = (expected * (1.0 - expected) / n).sqrt();
    (observed - expected).abs() <= k * se
}

fn constant_matrix(n: usize, l: usize, v: SnpValue) -> GenotypeMatrix {
    GenotypeMatrix::from_rows(vec![vec![v; l]; n]).unwrap()
}

fn instance(n: usize, l: usize, seed: u64) -> (GenotypeMatrix, CorrelationModel) {
    let spec = SyntheticSpec::with_profile(n, l, MafProfile::Uniform { min: 0.05, max: 0.5 }, 0.8, seed);
    let m = generate_synthetic_population(&spec).unwrap();
    let corr = compute_correlation_model(&m, 0.0).unwrap();
    (m, corr)
}

#[test]
fn rr_at_zero_budget_is_uniform() {
    let out = rr_perturb(&constant_matrix(1000, 100, SnpValue::Zero), 0.0, 17).unwrap();
    let mut counts = [0usize; 3];
    for row in out.rows() {
        for v in row {
            counts[v.index()] += 1;
        }
    }
    for c in counts {
        assert!(within(c as f64 / 1e5, 1.0 / 3.0, 1e5, 3.0), "{counts:?}");
    }
}

#[test]
fn rr_at_huge_budget_keeps_the_input() {
    let m = constant_matrix(1000, 100, SnpValue::Two);
    let out = rr_perturb(&m, 30.0, 3).unwrap();
    let changed = m.rows().zip(out.rows()).flat_map(|(a, b)| a.iter().zip(b)).filter(|(a, b)| a != b).count();
    assert!((changed as f64) < 1e-3 * 1e5);
}

#[test]
fn rr_matches_its_parameters() {
    let eps = 1.0;
    let params = rr_params(eps).unwrap();
    let out = rr_perturb(&constant_matrix(500, 200, SnpValue::One), eps, 8).unwrap();
    let mut counts = [0usize; 3];
    for row in out.rows() {
        for v in row {
            counts[v.index()] += 1;
        }
    }
    assert!(within(counts[1] as f64 / 1e5, params.p, 1e5, 3.0));
    assert!(within(counts[0] as f64 / 1e5, params.q, 1e5, 3.0));
    assert!(within(counts[2] as f64 / 1e5, params.q, 1e5, 3.0));
}

#[test]
fn frequency_estimator_is_unbiased() {
    let eps = 0.8;
    let truth = [600.0, 300.0, 100.0];
    let rows: Vec<Vec<SnpValue>> = (0..1000)
        .map(|j| {
            vec![if j < 600 {
                SnpValue::Zero
            } else if j < 900 {
                SnpValue::One
            } else {
                SnpValue::Two
            }]
        })
        .collect();
    let m = GenotypeMatrix::from_rows(rows).unwrap();
    let trials = 400;
    let estimates: Vec<[f64; 3]> = (0..trials)
        .map(|t| {
            let out = rr_perturb(&m, eps, 1000 + t).unwrap();
            rr_estimate_frequencies(&out.column(0), eps).unwrap().raw
        })
        .collect();
    for s in 0..3 {
        let mean = estimates.iter().map(|e| e[s]).sum::<f64>() / trials as f64;
        let var = estimates.iter().map(|e| (e[s] - mean).powi(2)).sum::<f64>() / (trials as f64 - 1.0);
        let se = (var / trials as f64).sqrt();
        assert!((mean - truth[s]).abs() <= 3.0 * se, "state {s}: {mean} vs {} (se {se})", truth[s]);
    }
}

#[test]
fn disabled_elimination_matches_rr() {
    let (m, corr) = instance(40, 5, 21);
    let cfg = MechanismConfig::new(1.0, 0.3, 2.0, Mode::Beacon).unwrap();
    let params = cfg.params();
    let row = m.row(0);
    let order = ProcessingOrder::identity(5);
    let trials = 100_000u64;
    let mut counts = [[0usize; 3]; 5];
    for s in 0..trials {
        let seq = perturb_sequence(row, &order, &corr, &cfg, s).unwrap();
        assert!(seq.per_snp.iter().all(|(o, _)| o.eliminated.is_empty()));
        for (i, v) in seq.values.iter().enumerate() {
            counts[i][v.index()] += 1;
        }
    }
    for (i, c) in counts.iter().enumerate() {
        let expected = params.triple(row[i]);
        for v in 0..3 {
            assert!(
                within(c[v] as f64 / trials as f64, expected[v], trials as f64, 3.0),
                "SNP {i}: {c:?} vs {expected:?}"
            );
        }
    }
}

#[test]
fn single_snp_sequence_is_plain_rr() {
    let m = GenotypeMatrix::from_rows(vec![vec![SnpValue::Zero], vec![SnpValue::Two], vec![SnpValue::One]]).unwrap();
    let corr = compute_correlation_model(&m, 0.0).unwrap();
    let cfg = MechanismConfig::new(0.7, 0.5, 0.01, Mode::Plain).unwrap();
    let params = cfg.params();
    let trials = 60_000u64;
    let mut counts = [0usize; 3];
    for s in 0..trials {
        let seq = perturb_sequence(m.row(1), &ProcessingOrder::identity(1), &corr, &cfg, s).unwrap();
        counts[seq.values[0].index()] += 1;
    }
    let expected = params.triple(SnpValue::Two);
    for v in 0..3 {
        assert!(within(counts[v] as f64 / trials as f64, expected[v], trials as f64, 3.0));
    }
}

#[test]
fn random_orders_are_uniform() {
    let trials = 60_000u64;
    let mut counts = std::collections::BTreeMap::<Vec<usize>, usize>::new();
    for s in 0..trials {
        *counts.entry(random_order(3, s).as_slice().to_vec()).or_default() += 1;
    }
    assert_eq!(counts.len(), 6);
    for (perm, c) in counts {
        assert!(within(c as f64 / trials as f64, 1.0 / 6.0, trials as f64, 3.0), "{perm:?}: {c}");
    }
}

#[test]
fn monte_carlo_utility_agrees_with_exact() {
    let (m, corr) = instance(30, 5, 4);
    let cfg = MechanismConfig::new(1.0, 0.1, 0.3, Mode::Beacon).unwrap();
    for j in 0..3 {
        let order = random_order(5, j as u64);
        let exact = expected_utility_of_order(m.row(j), &order, &corr, &cfg, UtilityMethod::Exact).unwrap();
        let mc = expected_utility_of_order(
            m.row(j),
            &order,
            &corr,
            &cfg,
            UtilityMethod::MonteCarlo { trials: 100_000, seed: 77 },
        )
        .unwrap();
        assert!(
            (mc.mean - exact.mean).abs() <= 3.0 * mc.std_error,
            "row {j}: exact {} vs {} ± {}",
            exact.mean,
            mc.mean,
            mc.std_error
        );
    }
}
