use std::path::Path;
use std::process::{Command, Output};

use rqmcis::config::{format_n_grid, parse_n_grid, FamilyKind, Problem, RunConfig};
use rqmcis::estimators::{RmseTable, CSV_HEADER};
use rqmcis::models::RowSlice;
use rqmcis::{Method, Sampler};

fn rqmcis(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rqmcis"))
        .args(args)
        .env("RQMCIS_THREADS", "2")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn n_grid_forms() {
    assert_eq!(
        parse_n_grid("2^7..2^13").unwrap(),
        (7..=13).collect::<Vec<_>>()
    );
    assert_eq!(parse_n_grid("128..1024").unwrap(), vec![7, 8, 9, 10]);
    assert_eq!(parse_n_grid("64,256").unwrap(), vec![6, 8]);
    assert!(parse_n_grid("256,64").is_err());
    assert!(parse_n_grid("100").is_err());
    assert!(parse_n_grid("2^30").is_err());
    assert_eq!(
        parse_n_grid(&format_n_grid(&[3, 4, 5])).unwrap(),
        vec![3, 4, 5]
    );
}

#[test]
fn config_round_trip() {
    let cfg = RunConfig {
        problem: Problem::Bond,
        methods: vec![Method::Odis, Method::LapIs],
        family: FamilyKind::StudentT,
        nu: 6.5,
        samplers: vec![Sampler::Rqmc],
        n_grid: vec![5, 6, 9],
        rows: RowSlice::All,
        mode_init: Some(vec![-0.5]),
        ref_log2_n: Some(12),
        ..RunConfig::default()
    };
    let text = cfg.to_toml_string().unwrap();
    assert_eq!(RunConfig::from_toml_str(&text).unwrap(), cfg);
    assert_eq!(
        RunConfig::from_toml_str(&RunConfig::default().to_toml_string().unwrap()).unwrap(),
        RunConfig::default()
    );
    assert!(RunConfig::from_toml_str("colour = \"red\"").is_err());
}

#[test]
fn show_config_merges_file_and_flags() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "problem = \"bond\"\nreplicates = 12\nseed = 3\n").unwrap();
    let o = rqmcis(&[
        "show-config",
        "--config",
        path.to_str().unwrap(),
        "--seed",
        "9",
        "--N",
        "2^4..2^6",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let cfg = RunConfig::from_toml_str(&stdout(&o)).unwrap();
    assert_eq!(cfg.problem, Problem::Bond);
    assert_eq!(cfg.replicates, 12);
    assert_eq!(cfg.seed, 9);
    assert_eq!(cfg.n_grid, vec![4, 5, 6]);
}

#[test]
fn bad_config_exits_with_two() {
    let o = rqmcis(&["run", "--problem", "bond", "--R", "0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = rqmcis(&["run", "--problem", "nonsense"]);
    assert_eq!(o.status.code(), Some(2));
}

fn run_bond(out: &Path) -> (String, String) {
    let o = rqmcis(&[
        "run",
        "--problem",
        "bond",
        "--methods",
        "prioris,odis,lapis",
        "--sampler",
        "mc,rqmc",
        "--N",
        "2^4..2^7",
        "--R",
        "6",
        "--seed",
        "7",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let csv = std::fs::read_to_string(out.join("bond_gaussian.csv")).unwrap();
    let report = std::fs::read_to_string(out.join("bond_gaussian_diagnostics.txt")).unwrap();
    (csv, report)
}

#[test]
fn run_writes_deterministic_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let (a, report) = run_bond(&dir.path().join("a"));
    let (b, _) = run_bond(&dir.path().join("b"));
    assert_eq!(a, b);
    assert!(a.starts_with(CSV_HEADER));
    let table = RmseTable::parse_csv(a.as_bytes()).unwrap();
    assert_eq!(table.rows.len(), 3 * 2 * 4);
    assert!(table
        .rows
        .iter()
        .all(|r| r.c_ref_provenance == "quadrature" && r.r == 6));
    assert!(report.contains("[lapis]") && report.contains("boundary growth check: FAIL"));
    assert!(report.contains("[odis]") && report.contains("boundary growth check: PASS"));
}

#[test]
fn diagnose_reports_theorem_failures() {
    let o = rqmcis(&["diagnose", "--problem", "logistic", "--rows", "30"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let s = stdout(&o);
    let lapis = &s[s.find("[lapis]").unwrap()..];
    assert!(lapis.contains("FAIL"));
    let odis = &s[s.find("[odis]").unwrap()..s.find("[lapis]").unwrap()];
    assert!(odis.contains("PASS"));
}

#[test]
fn failed_method_sets_exit_status() {
    // the signed demo has |G| = 0 at the origin, so the default mode search fails
    let dir = tempfile::tempdir().unwrap();
    let o = rqmcis(&[
        "run",
        "--problem",
        "positivization-demo",
        "--methods",
        "prioris,odis",
        "--N",
        "2^4..2^5",
        "--R",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stderr(&o).contains("odis"));
    let csv = std::fs::read_to_string(dir.path().join("positivization_demo_gaussian.csv")).unwrap();
    let table = RmseTable::parse_csv(csv.as_bytes()).unwrap();
    assert!(table.rows.iter().all(|r| r.method.starts_with("prioris")));

    let o = rqmcis(&[
        "run",
        "--problem",
        "positivization-demo",
        "--methods",
        "odis",
        "--mode-init",
        "1.5",
        "--N",
        "2^4..2^5",
        "--R",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
}
