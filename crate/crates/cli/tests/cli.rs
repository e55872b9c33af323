use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use drbsde_cli::output::{
    parse_csv, read_json, ComparisonRecord, ConvergeSummary, PriceRecord, SolveSummary, CONVERGENCE_HEADER,
    SERIES_HEADER,
};
use drbsde_cli::{run, Command as Cmd, RunConfig};

fn config(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

fn drbsde(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drbsde")).args(args).output().unwrap()
}

fn run_cli(command: &str, cfg: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![command, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    drbsde(&args)
}

#[test]
fn constant_solution_summary() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli("solve", &config("constant.json"), dir.path(), &[]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let s: SolveSummary = read_json(&dir.path().join("summary.json")).unwrap();
    assert_eq!(s.y0, 1.0);
    assert_eq!((s.residuals.lower, s.residuals.upper), (0.0, 0.0));
    let series = std::fs::read_to_string(dir.path().join("series.csv")).unwrap();
    assert_eq!(series.lines().next(), Some(SERIES_HEADER));
    let rows = parse_csv(&series).unwrap();
    assert_eq!(rows.len(), 51);
    assert!(rows.iter().all(|r| r[1] == 1.0 && r[2] == 0.0));
}

#[test]
fn summaries_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::load(&config("american_put.json")).unwrap();
    run(Cmd::Solve, &cfg, dir.path()).unwrap();
    let s: SolveSummary = read_json(&dir.path().join("summary.json")).unwrap();
    let again = serde_json::to_string_pretty(&s).unwrap() + "\n";
    assert_eq!(again, std::fs::read_to_string(dir.path().join("summary.json")).unwrap());
    assert!(s.violations.lower == 0.0 && s.residuals.lower.abs() <= 1e-12);

    let dir = tempfile::tempdir().unwrap();
    let cfg = RunConfig::load(&config("game_option.json")).unwrap();
    run(Cmd::Price, &cfg, dir.path()).unwrap();
    let p: PriceRecord = read_json(&dir.path().join("price.json")).unwrap();
    let again = serde_json::to_string_pretty(&p).unwrap() + "\n";
    assert_eq!(again, std::fs::read_to_string(dir.path().join("price.json")).unwrap());
}

#[test]
fn converge_distance_column_nonincreasing() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli("converge", &config("american_put.json"), dir.path(), &[]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(dir.path().join("convergence.csv")).unwrap();
    assert_eq!(text.lines().next(), Some(CONVERGENCE_HEADER));
    let rows = parse_csv(&text).unwrap();
    assert_eq!(rows.iter().map(|r| r[0]).collect::<Vec<_>>(), vec![16.0, 32.0, 64.0, 128.0, 256.0]);
    assert!(rows.windows(2).all(|w| w[1][5] <= w[0][5]));
    let s: ConvergeSummary = read_json(&dir.path().join("summary.json")).unwrap();
    assert!(s.report.distance_nonincreasing && s.report.y_nondecreasing);
}

#[test]
fn price_matches_oracle_on_lattice() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli("price", &config("game_option.json"), dir.path(), &[]);
    assert!(o.status.success());
    let p: PriceRecord = read_json(&dir.path().join("price.json")).unwrap();
    assert!(p.relative_gap <= 1e-10, "{}", p.relative_gap);
    let masks = p.region_masks.unwrap();
    assert_eq!(masks.len(), 101);
    assert!(masks.iter().enumerate().all(|(i, m)| m.len() == i + 1));
}

#[test]
fn compare_shifted_terminal_is_ordered() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_cli("compare", &config("compare.json"), dir.path(), &[]);
    assert!(o.status.success());
    let c: ComparisonRecord = read_json(&dir.path().join("comparison.json")).unwrap();
    assert!(c.report.ordered && c.first_y0 < c.second_y0);
}

#[test]
fn invalid_config_exit_code_and_location() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        "{\n  \"problem\": {\n    \"terminal\": { \"kind\": \"put\", \"strik\": 1.0 }\n  },\n  \"grid\": { \"horizon\": 1.0, \"steps\": 4 }\n}\n",
    )
    .unwrap();
    let o = run_cli("solve", &bad, &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("strik") && err.contains("line ") && err.contains("problem.terminal"), "{err}");

    let o = run_cli("solve", &dir.path().join("missing.json"), &dir.path().join("o"), &[]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn numeric_failure_exit_code_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("stiff.json");
    let text = std::fs::read_to_string(config("american_put.json"))
        .unwrap()
        .replace("\"solver\": \"clamped\"", "\"solver\": \"penalized\", \"penalty\": 1000");
    std::fs::write(&cfg, text).unwrap();
    let out = dir.path().join("o");
    let o = run_cli("solve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(3));
    let record: serde_json::Value = read_json(&out.join("error.json")).unwrap();
    assert_eq!(record["error"]["kind"], "step_size_too_large");
    assert_eq!(record["error"]["exit_code"], 3);
}

#[test]
fn reruns_are_byte_identical() {
    for (command, name) in [("solve", "game_option_regression.json"), ("price", "game_option_regression.json")] {
        let a = tempfile::tempdir().unwrap();
        let b = tempfile::tempdir().unwrap();
        assert!(run_cli(command, &config(name), a.path(), &["--threads", "1"]).status.success());
        assert!(run_cli(command, &config(name), b.path(), &["--threads", "3"]).status.success());
        for entry in std::fs::read_dir(a.path()).unwrap() {
            let entry = entry.unwrap();
            let other = std::fs::read(b.path().join(entry.file_name())).unwrap();
            assert_eq!(std::fs::read(entry.path()).unwrap(), other, "{command}: {:?}", entry.file_name());
        }
    }
}

#[test]
fn seed_flag_changes_regression_output() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("game_option_regression.json");
    assert!(run_cli("price", &cfg, a.path(), &["--seed", "1"]).status.success());
    assert!(run_cli("price", &cfg, b.path(), &["--seed", "2"]).status.success());
    let pa: PriceRecord = read_json(&a.path().join("price.json")).unwrap();
    let pb: PriceRecord = read_json(&b.path().join("price.json")).unwrap();
    assert_eq!((pa.seed, pb.seed), (1, 2));
    assert_ne!(pa.engine_value, pb.engine_value);
    assert_eq!(pa.oracle_value, pb.oracle_value);
}
