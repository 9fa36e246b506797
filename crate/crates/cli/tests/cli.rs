use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn dldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dldp")).args(args).output().expect("binary runs")
}

fn ok(args: &[&str]) -> String {
    let out = dldp(args);
    assert!(out.status.success(), "{args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn path(dir: &TempDir, name: &str) -> PathBuf {
    dir.path().join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn generated(dir: &TempDir, n: &str, l: &str) -> PathBuf {
    let g = path(dir, "g.txt");
    ok(&["gen", "--n", n, "--l", l, "--seed", "11", "--out", s(&g)]);
    g
}

#[test]
fn leakage_prints_hand_values() {
    assert_eq!(ok(&["leakage", "--zeta", "1", "--epsilon", "0"]).trim(), "0.5");
    let v: f64 = ok(&["leakage", "--zeta", "1", "--epsilon", &2f64.ln().to_string()]).trim().parse().unwrap();
    assert!((v - 2.0 / 3.0).abs() < 1e-12);
}

#[test]
fn kinship_subcommands() {
    let v: f64 = ok(&["kinship", "one-child", "--parent-budget", "1"]).trim().parse().unwrap();
    assert!((v - ((3.0 * 1f64.exp() - 1.0) / 2.0).ln()).abs() < 1e-9);
    let v: f64 = ok(&["kinship", "second-child", "--epsilon", "0.5"]).trim().parse().unwrap();
    assert!((v - 0.259).abs() < 1e-3);
    let v: f64 = ok(&["kinship", "indirect-one-child", "--epsilon", "1", "--value", "0"]).trim().parse().unwrap();
    assert!((v - ((2.0 * 1f64.exp() + 1.0) / 3.0).ln()).abs() < 1e-9);
    ok(&["kinship", "indirect-two-children", "--epsilon", "1"]);
    assert_eq!(dldp(&["kinship", "indirect-one-child", "--epsilon", "1", "--value", "3"]).status.code(), Some(2));
}

#[test]
fn kinship_general_from_family_file() {
    let dir = TempDir::new().unwrap();
    let family = path(&dir, "family.json");
    std::fs::write(
        &family,
        r#"{"shape":"one_child_to_parent",
            "members":[{"id":"p","role":"parent","budget":1.0},{"id":"c","role":"child","budget":null}],
            "shares":[]}"#,
    )
    .unwrap();
    let v: f64 =
        ok(&["kinship", "general", "--family", s(&family), "--snp", "0", "--sharer", "c"]).trim().parse().unwrap();
    assert!((v - ((3.0 * 1f64.exp() - 1.0) / 2.0).ln()).abs() < 1e-6);
    let capped: f64 =
        ok(&["kinship", "general", "--family", s(&family), "--snp", "0", "--sharer", "c", "--own-budget", "0.5"])
            .trim()
            .parse()
            .unwrap();
    assert_eq!(capped, 0.5);
    let out = dldp(&["kinship", "general", "--family", s(&family), "--snp", "0", "--sharer", "p"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(dldp(&["perturb"]).status.code(), Some(2));
    assert_eq!(dldp(&["leakage", "--zeta", "x", "--epsilon", "1"]).status.code(), Some(2));
    assert_eq!(dldp(&["leakage", "--zeta", "-1", "--epsilon", "1"]).status.code(), Some(2));
    assert_eq!(dldp(&["gen", "--n", "5", "--l", "5", "--order", "greedy"]).status.code(), Some(2));
    assert_eq!(dldp(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn io_errors_exit_one_and_name_the_path() {
    let out = dldp(&["corr", "--input", "/definitely/missing/genotypes.txt"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/missing/genotypes.txt"));

    let dir = TempDir::new().unwrap();
    let g = generated(&dir, "4", "5");
    let out = dldp(&["corr", "--input", s(&g), "--out", "/definitely/missing/dir/c.json"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("/definitely/missing/dir/c.json"));
}

#[test]
fn malformed_genotype_cell_is_reported() {
    let dir = TempDir::new().unwrap();
    let bad = path(&dir, "bad.txt");
    std::fs::write(&bad, "2 2\n0 1\n3 0\n").unwrap();
    let out = dldp(&["corr", "--input", s(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("line 3") && err.contains("`3`"), "{err}");
}

#[test]
fn gen_writes_declared_shape() {
    let text = ok(&["gen", "--n", "7", "--l", "9", "--profile", "uniform", "--seed", "2"]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("7 9"));
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 7);
    assert!(rows.iter().all(|r| r.split(' ').count() == 9));
}

#[test]
fn perturb_is_reproducible_and_pool_independent() {
    let dir = TempDir::new().unwrap();
    let g = generated(&dir, "12", "20");
    let c = path(&dir, "c.json");
    ok(&["corr", "--input", s(&g), "--out", s(&c)]);
    let run = |name: &str, jobs: &str| {
        let out = path(&dir, name);
        ok(&[
            "--jobs",
            jobs,
            "perturb",
            "--input",
            s(&g),
            "--corr",
            s(&c),
            "--epsilon",
            "1",
            "--seed",
            "9",
            "--out",
            s(&out),
        ]);
        std::fs::read(out).unwrap()
    };
    let a = run("a.txt", "1");
    assert_eq!(a, run("b.txt", "1"));
    assert_eq!(a, run("c.txt", "3"));
    let other = path(&dir, "other.txt");
    ok(&["perturb", "--input", s(&g), "--corr", s(&c), "--epsilon", "1", "--seed", "10", "--out", s(&other)]);
    assert_ne!(a, std::fs::read(other).unwrap());
}

#[test]
fn orders_out_lists_permutations() {
    let dir = TempDir::new().unwrap();
    let g = generated(&dir, "5", "8");
    let orders = path(&dir, "orders.txt");
    ok(&["perturb", "--input", s(&g), "--epsilon", "1", "--order", "random", "--orders-out", s(&orders)]);
    let text = std::fs::read_to_string(orders).unwrap();
    assert_eq!(text.lines().count(), 5);
    for line in text.lines() {
        let mut idx: Vec<usize> = line.split(' ').map(|t| t.parse().unwrap()).collect();
        idx.sort_unstable();
        assert_eq!(idx, (0..8).collect::<Vec<_>>());
    }
    let out =
        dldp(&["perturb", "--input", s(&g), "--epsilon", "1", "--method", "rr", "--orders-out", s(&path(&dir, "x"))]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn attack_and_eval_csv_are_complete() {
    let dir = TempDir::new().unwrap();
    let g = generated(&dir, "10", "15");
    let c = path(&dir, "c.json");
    let shared = path(&dir, "s.txt");
    ok(&["corr", "--input", s(&g), "--out", s(&c)]);
    ok(&["perturb", "--input", s(&g), "--corr", s(&c), "--epsilon", "1", "--out", s(&shared)]);

    let beliefs = ok(&["attack", "--input", s(&shared), "--corr", s(&c), "--epsilon", "1", "--truth", s(&g)]);
    let lines: Vec<&str> = beliefs.lines().collect();
    assert_eq!(lines[0], "individual,snp,reported,p0,p1,p2,eliminated,truth,error");
    assert_eq!(lines.len(), 1 + 10 * 15);
    for line in &lines[1..] {
        assert!(!line.contains(",,") && !line.ends_with(','));
    }

    let report = ok(&["eval", "--truth", s(&g), "--input", s(&shared)]);
    let lines: Vec<&str> = report.lines().collect();
    assert_eq!(lines[0], "overall,yes_accuracy,no_accuracy,n_s,yes_queries,no_queries");
    assert_eq!(lines.len(), 2);
}

#[test]
fn order_reports_optimal_value() {
    let dir = TempDir::new().unwrap();
    let g = generated(&dir, "3", "6");
    let text = ok(&["order", "--input", s(&g), "--epsilon", "1", "--order", "optimal", "--individual", "1"]);
    let fields: Vec<(&str, &str)> = text.lines().map(|l| l.split_once(' ').unwrap()).collect();
    assert_eq!(fields[0], ("strategy", "optimal"));
    assert_eq!(fields[1].1.split(' ').count(), 6);
    let value: f64 = fields[4].1.parse().unwrap();
    assert!((0.0..=6.0).contains(&value));

    let big = generated(&dir, "2", "13");
    let out = dldp(&["order", "--input", s(&big), "--epsilon", "1", "--order", "optimal"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("greedy"));
}

#[test]
fn experiment_single_cell_shape() {
    let dir = TempDir::new().unwrap();
    let out = path(&dir, "results");
    ok(&[
        "experiment",
        "--n",
        "10",
        "--l",
        "12",
        "--epsilon-grid",
        "1.0",
        "--trials",
        "1",
        "--seed",
        "4",
        "--out",
        s(&out),
    ]);
    let detail = std::fs::read_to_string(out.join("detail.csv")).unwrap();
    let summary = std::fs::read_to_string(out.join("summary.csv")).unwrap();
    assert_eq!(detail.lines().count(), 2);
    assert_eq!(summary.lines().count(), 2);
    assert!(detail.lines().next().unwrap().starts_with("epsilon,trial,"));
    let out = dldp(&["experiment", "--trials", "0", "--out", s(&path(&dir, "r2"))]);
    assert_eq!(out.status.code(), Some(2));
}
