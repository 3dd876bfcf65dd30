use std::path::PathBuf;

use mutind::classical::{ClassicalMindep, HashSimReport, RedundantDecomposition};
use mutind::cli::{self, ClassicalRates, Conj4Report, MeasuresReport, RunConfig, SelftestReport};
use mutind::compression::RateRegionReport;
use mutind::conjectures::Conj5Summary;
use mutind::entropy::EntropicReport;
use mutind::mindep::IndependenceReport;
use serde::de::DeserializeOwned;
use serde_json::Value;

fn data(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
        .display()
        .to_string()
}

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut full = vec!["mutind"];
    full.extend_from_slice(args);
    let code = cli::run(full, &mut out, &mut err);
    (code, String::from_utf8(out).unwrap(), String::from_utf8(err).unwrap())
}

/// Run with `--format json` and parse the report into `T`.
fn report<T: DeserializeOwned>(args: &[&str]) -> (i32, T, RunConfig) {
    let mut a = args.to_vec();
    a.extend(["--format", "json"]);
    let (code, out, err) = run(&a);
    let doc: Value = serde_json::from_str(&out).unwrap_or_else(|e| panic!("{e}: {out}{err}"));
    let config = serde_json::from_value(doc["config"].clone()).unwrap();
    (code, serde_json::from_value(doc["report"].clone()).unwrap(), config)
}

#[test]
fn info_on_phi_plus() {
    let (code, r, config): (_, EntropicReport, _) = report(&["info", &data("phi_plus.json")]);
    assert_eq!(code, 0);
    assert!((r.get("S(A)").unwrap() - 1.0).abs() < 1e-12);
    assert!((r.get("I(A:B)").unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(config.command, "info");
    assert!(config.tolerances.contains_key("rank_cutoff"));
    let (_, table, _) = run(&["info", &data("phi_plus.json")]);
    assert!(table.starts_with("# mutind info\n"));
    assert!(table.lines().any(|l| l.starts_with("I(A:B) ")));
}

#[test]
fn conj5_json_is_deterministic() {
    let args = ["conj5", "--trials", "100", "--seed", "7", "--format", "json"];
    let (c1, a, _) = run(&args);
    let (c2, b, _) = run(&args);
    assert_eq!((c1, c2), (0, 0));
    assert_eq!(a, b);
    let (_, s, _): (_, Conj5Summary, _) = report(&["conj5", "--trials", "100", "--seed", "7", "--jobs", "2"]);
    let doc: Value = serde_json::from_str(&a).unwrap();
    let s1: Conj5Summary = serde_json::from_value(doc["report"].clone()).unwrap();
    assert_eq!(s, s1, "worker count must not change results");
    assert!(s.violations.is_empty());
}

#[test]
fn conj5_control_reports_violation_with_replay() {
    let (code, s, _): (_, Conj5Summary, _) =
        report(&["conj5", "--dims", "2,4,4", "--control", "--trials", "3"]);
    assert_eq!(code, cli::EXIT_VIOLATION);
    assert_eq!(s.violations.len(), 3);
    let v = &s.violations[0];
    let replay: Vec<&str> = v.reproduce.split_whitespace().skip(1).collect();
    let (code, single, _): (_, cli::Conj5TrialReport, _) = report(&replay);
    assert_eq!(code, cli::EXIT_VIOLATION);
    assert!((single.record.e_n - v.record.e_n).abs() < 1e-12);
}

#[test]
fn conj5_writes_certificates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().display().to_string();
    let (code, _, _) = run(&["conj5", "--dims", "2,4,4", "--control", "--trials", "2", "--out-dir", &out]);
    assert_eq!(code, cli::EXIT_VIOLATION);
    let hist = std::fs::read_to_string(dir.path().join("histogram.csv")).unwrap();
    assert!(hist.starts_with("lo,hi,count\n") && !hist.contains('\r'));
    let cert = dir.path().join("violation_0.json");
    let (s, _) = mutind::tensor::io::read_state_file(&cert).unwrap();
    assert_eq!(s.labels(), vec!["X", "A", "B"]);
}

#[test]
fn rates_on_pbit_with_split() {
    let (code, r, config): (_, RateRegionReport, _) = report(&[
        "rates",
        &data("pbit_d2.json"),
        "--split-file",
        &data("pbit_d2.split.json"),
    ]);
    assert_eq!(code, 0);
    assert!(r.identity_check.unwrap().gap <= 1e-8);
    assert_eq!(config.inputs.len(), 2);
    let (_, csv, _) = run(&["rates", &data("pbit_d2.json"), "--split-file", &data("pbit_d2.split.json"), "--format", "csv"]);
    assert!(csv.starts_with("R_A,R_B,formula,assumptions\n"));
}

#[test]
fn measures_and_mindep_round_trip() {
    let (code, m, _): (_, MeasuresReport, _) =
        report(&["measures", &data("iso_F09_d2.json"), "--trials", "8", "--restarts", "2"]);
    assert_eq!(code, 0);
    assert!((m.log_negativity.value - 1.8f64.log2()).abs() < 1e-9);
    let (code, r, _): (_, IndependenceReport, _) =
        report(&["mindep", &data("pbit_d2.json"), "--keys", "A|B", "--trials", "8"]);
    assert_eq!(code, 0);
    assert!((r.lower_bound - 0.5).abs() < 1e-9);
    assert!(r.lower_bound <= r.upper_esq + 1e-6);
}

#[test]
fn conj4_finds_pair_on_maximally_correlated() {
    let (code, r, _): (_, Conj4Report, _) = report(&["conj4", &data("maxcorr_eps025.json")]);
    assert_eq!(code, 0);
    assert!(r.pair.unwrap().residual <= 1e-8);
    assert!(!r.candidate_violation);
}

#[test]
fn classical_commands() {
    let f = data("corr_anticorr_p075.json");
    let (_, d, _): (_, RedundantDecomposition, _) = report(&["classical", "decompose", &f]);
    assert!(d.reconstruction_error <= 1e-9);
    let (_, r, _): (_, ClassicalRates, _) = report(&["classical", "rates", &f]);
    assert!(r.optimal_rate_hlj < r.slepian_wolf_sum);
    let (_, m, _): (_, ClassicalMindep, _) = report(&["classical", "mindep", &f]);
    assert!(m.mi_fg <= 1.0);
    let (code, h, _): (_, HashSimReport, _) =
        report(&["classical", "hashsim", &f, "--n", "6", "--out-bits", "0", "--trials", "10"]);
    assert_eq!(code, 0);
    assert_eq!(h.empirical_tv_from_product_with_z, 0.0);
    let (code, _, err) = run(&["classical", "hashsim", &f, "--n", "4", "--out-bits", "5"]);
    assert_eq!(code, cli::EXIT_VALIDATION);
    assert!(err.contains("out_bits"));
    let (_, tau, _) = run(&["classical", "decompose", &f, "--format", "csv"]);
    assert!(tau.starts_with("x,y,block,j,k\n"));
}

#[test]
fn selftest_passes() {
    let (code, r, _): (_, SelftestReport, _) = report(&["selftest"]);
    assert_eq!(code, 0);
    assert!(r.passed);
    for name in cli::corpus_names().iter().filter(|n| !n.contains(".split.")) {
        assert!(r.checks.iter().any(|c| &c.file == name), "{name} has no checks");
    }
    let dir = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("data");
    let (code, _, _): (_, SelftestReport, _) = report(&["selftest", "--data-dir", dir.to_str().unwrap()]);
    assert_eq!(code, 0);
}

#[test]
fn malformed_input_names_field_and_invariant() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"dims":[{"label":"A","dim":2}],"kind":"density","matrix":[[1.0,0.0],[0.0,0.0],[0.0,0.0],[1.0,0.0]]}"#,
    )
    .unwrap();
    let (code, out, err) = run(&["info", bad.to_str().unwrap()]);
    assert_eq!(code, cli::EXIT_VALIDATION);
    assert!(out.is_empty());
    assert!(err.contains("unit trace"), "{err}");
    let dist = dir.path().join("dist.json");
    std::fs::write(&dist, r#"{"alphabets":[{"label":"X","size":2}],"probs":[0.5,-0.5]}"#).unwrap();
    let (code, _, err) = run(&["classical", "rates", dist.to_str().unwrap()]);
    assert_eq!(code, cli::EXIT_VALIDATION);
    assert!(err.contains("probs") && err.contains("nonnegative"), "{err}");
    let (code, _, err) = run(&["info", "/nonexistent/state.json"]);
    assert_eq!(code, cli::EXIT_VALIDATION);
    assert!(!err.is_empty());
    let (code, _, _) = run(&["measures", &data("phi_plus.json"), "--cut", "A|C"]);
    assert_eq!(code, cli::EXIT_VALIDATION);
}

#[test]
fn non_convergence_exit_code() {
    let (code, m, _): (_, MeasuresReport, _) =
        report(&["measures", &data("maxcorr_eps025.json"), "--max-iters", "1", "--restarts", "0", "--trials", "2"]);
    assert_eq!(code, cli::EXIT_NONCONVERGENCE);
    assert!(!m.rel_ent_ppt.certificate.unwrap().converged);
}
