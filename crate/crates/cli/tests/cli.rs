use std::fs;
use std::path::Path;
use std::process::Command;

use arithclass_core::io::{read_bounds_csv, read_density_csv, read_sigma_csv};
use arithclass_core::{BigInt, BigRational, ClassVerdict, VerdictStatus};
use num_traits::{ToPrimitive, Zero};
use serde_json::Value;
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_arithclass");

fn configs() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs"))
}

struct Run {
    code: i32,
    dir: TempDir,
    stderr: String,
}

impl Run {
    fn file(&self, name: &str) -> String {
        fs::read_to_string(self.dir.path().join(name)).unwrap()
    }
}

fn run_with(cmd: &str, config: &Path, extra: &[&str]) -> Run {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .arg(cmd)
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(dir.path())
        .args(extra)
        .output()
        .unwrap();
    Run {
        code: out.status.code().unwrap(),
        dir,
        stderr: String::from_utf8_lossy(&out.stderr).into_owned(),
    }
}

fn run_json(cmd: &str, config: &str, extra: &[&str]) -> Run {
    let cfg_dir = tempfile::tempdir().unwrap();
    let path = cfg_dir.path().join("run.json");
    fs::write(&path, config).unwrap();
    run_with(cmd, &path, extra)
}

fn rat(p: i64, q: i64) -> BigRational {
    BigRational::new(BigInt::from(p), BigInt::from(q))
}

fn sigma_values(run: &Run) -> Vec<BigRational> {
    read_sigma_csv(run.file("sigma.csv").as_bytes())
        .unwrap()
        .entries
        .into_iter()
        .map(|e| e.value)
        .collect()
}

#[test]
fn sigma_of_one_half() {
    let run = run_json("sigma", r#"{"alpha": ["1", "1/2"], "cutoff": 3}"#, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(sigma_values(&run), vec![rat(1, 2), rat(1, 2), rat(0, 1), rat(0, 1)]);
    let witnesses: Value = serde_json::from_str(&run.file("witnesses.json")).unwrap();
    assert_eq!(witnesses["schema"], "arithclass-schema: 1 witnesses");
}

#[test]
fn sigma_of_an_axis_vector_vanishes() {
    let run = run_json("sigma", r#"{"alpha": ["1", "0"], "cutoff": 4}"#, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(sigma_values(&run).iter().all(Zero::is_zero));
}

#[test]
fn golden_profile_hits_sqrt5_minus_2() {
    let run = run_with("sigma", &configs().join("sigma_golden.json"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let values = sigma_values(&run);
    assert_eq!(values.len(), 11);
    assert!(values.windows(2).all(|w| w[1] <= w[0]));
    assert!(values.iter().all(|v| *v > BigRational::zero()));
    let k2 = values[2].to_f64().unwrap();
    assert!((k2 - (5f64.sqrt() - 2.0)).abs() < 1e-15, "{k2}");
}

fn verdict(run: &Run) -> ClassVerdict {
    serde_json::from_str(&run.file("verdict.json")).unwrap()
}

#[test]
fn member_examples() {
    let run = run_with("member", &configs().join("member_half.json"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    match verdict(&run).status {
        VerdictStatus::Violated { i, k, value, .. } => {
            assert_eq!(k, 2);
            assert_eq!(i.0, vec![1, -2]);
            assert!(value.is_zero());
        }
        other => panic!("{other:?}"),
    }

    let golden = r#"{"alpha": ["1", "phi"], "sequence": {"type": "geometric", "C": "1/5", "tau": "1"}, "cutoff": 10}"#;
    let run = run_json("member", golden, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert_eq!(verdict(&run).status, VerdictStatus::InClassUpTo { k: 10 });

    let base = r#"{"alpha": ["1", "sqrt(2)"], "sequence": {"type": "geometric", "C": "1/5", "tau": "1"}, "cutoff": 10}"#;
    let scaled = r#"{"alpha": ["2", "sqrt(8)"], "sequence": {"type": "geometric", "C": "1/5", "tau": "1"}, "cutoff": 10}"#;
    let base = verdict(&run_json("member", base, &[]));
    assert!(base.is_in_class());
    assert!(verdict(&run_json("member", scaled, &[])).is_in_class());
}

#[test]
fn density_without_candidate_bands_is_exactly_one() {
    let cfg = r#"{
        "map": {"moment_curve": ["1", "phi"]},
        "sequence": {"type": "geometric", "C": "1/5", "tau": "1"},
        "cutoff": 5,
        "radii": [1e-4],
        "seed": 3
    }"#;
    let run = run_json("density", cfg, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = read_density_csv(run.file("density.csv").as_bytes()).unwrap();
    assert_eq!(rows.len(), 1);
    assert_eq!(rows[0].density_lb, 1.0);
    assert_eq!(rows[0].bands_considered, 0);
    assert!(run.file("density.svg").contains("<svg"));
}

#[test]
fn identity_map_with_a_wide_band_has_density_near_zero() {
    let run = run_with("density", &configs().join("density_identity.json"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let rows = read_density_csv(run.file("density.csv").as_bytes()).unwrap();
    assert!(rows[0].density_lb < 0.05, "{:?}", rows[0]);
}

#[test]
fn density_requires_a_seed() {
    let cfg = r#"{
        "map": {"moment_curve": ["1", "phi"]},
        "sequence": {"type": "geometric", "C": "1/5", "tau": "1"},
        "cutoff": 5,
        "radii": [1e-4]
    }"#;
    let run = run_json("density", cfg, &[]);
    assert_eq!(run.code, 4);
    let err: Value = serde_json::from_str(run.stderr.trim()).unwrap();
    assert_eq!(err["error"], "config");
    assert_eq!(err["exit_code"], 4);
    let run = run_json("density", cfg, &["--seed", "9"]);
    assert_eq!(run.code, 0, "{}", run.stderr);
}

#[test]
fn config_errors_exit_with_four() {
    assert_eq!(run_json("sigma", r#"{"alpha": ["1", "1/2"], "cutof": 3}"#, &[]).code, 4);
    assert_eq!(run_json("sigma", r#"{"alpha": ["1", "1/0"], "cutoff": 3}"#, &[]).code, 4);
    assert_eq!(run_json("sigma", "not json", &[]).code, 4);
    assert_eq!(run_json("flow", r#"{"alpha": ["1", "1/2"]}"#, &[]).code, 4);
    let out = Command::new(BIN).arg("sigma").output().unwrap();
    assert_eq!(out.status.code(), Some(4));
    let out = Command::new(BIN).arg("frobnicate").output().unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn budget_failures_exit_with_three() {
    let cfg = r#"{"alpha": ["1", "phi", "sqrt(2)"], "cutoff": 9, "budget": 10}"#;
    let run = run_json("sigma", cfg, &[]);
    assert_eq!(run.code, 3, "{}", run.stderr);
    let err: Value = serde_json::from_str(run.stderr.trim()).unwrap();
    assert_eq!(err["error"], "budget");
}

#[test]
fn flow_starts_at_the_embedding_length() {
    let cfg = r#"{"alpha": ["1/2"], "cutoff": 3, "flow": {"t_min": 0.0, "t_max": 1.0, "steps": 10}}"#;
    let run = run_json("flow", cfg, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let text = run.file("flow.csv");
    assert!(text.starts_with("# arithclass-schema: 1 flow"));
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 11);
    let delta: f64 = rows[0][1].parse().unwrap();
    assert!((delta - 5f64.sqrt() / 2.0).abs() < 1e-12, "{delta}");
    for r in &rows {
        let lo: f64 = r[2].parse().unwrap();
        let bound: f64 = r[6].parse().unwrap();
        assert!(lo <= bound);
    }
}

#[test]
fn golden_flow_lemma_rows_hold() {
    let run = run_with("flow", &configs().join("flow_golden.json"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let text = run.file("lemma.csv");
    let mut rdr = csv::ReaderBuilder::new()
        .comment(Some(b'#'))
        .from_reader(text.as_bytes());
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| &r[6] == "true"));
}

#[test]
fn bounds_round_trip_through_the_schema() {
    let cfg = r#"{
        "verify": {
            "ctau": {"degrees": [1, 2], "eps": [1e-3, 1e-1]},
            "shells": {"dims": [1, 2], "k_max": 4}
        }
    }"#;
    let run = run_json("verify", cfg, &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    let text = run.file("bounds.csv");
    assert!(text.starts_with("# arithclass-schema: 1 bounds"));
    let rows = read_bounds_csv(text.as_bytes()).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.satisfied == Some(true)));
    let report: Value = serde_json::from_str(&run.file("report.json")).unwrap();
    assert_eq!(report["schema"], "arithclass-schema: 1 verify");
    assert_eq!(report["passed"], true);
}

#[test]
fn outputs_carry_schema_stamps() {
    let run = run_with("sigma", &configs().join("sigma_golden.json"), &[]);
    assert!(run.file("sigma.csv").starts_with("# arithclass-schema: 1 sigma"));
    let run = run_with("plot-bands", &configs().join("plot_bands.json"), &[]);
    assert_eq!(run.code, 0, "{}", run.stderr);
    assert!(run.file("bands.svg").contains("arithclass-schema: 1"));
}

#[test]
fn svg_output_is_deterministic() {
    let a = run_with("plot-bands", &configs().join("plot_bands.json"), &[]);
    let b = run_with("plot-bands", &configs().join("plot_bands.json"), &["--threads", "2"]);
    assert_eq!(a.code, 0, "{}", a.stderr);
    assert_eq!(a.file("bands.svg"), b.file("bands.svg"));
    let a = run_with("density", &configs().join("density_identity.json"), &[]);
    let b = run_with("density", &configs().join("density_identity.json"), &[]);
    assert_eq!(a.file("density.svg"), b.file("density.svg"));
    assert_eq!(a.file("density.csv"), b.file("density.csv"));
}

#[test]
fn out_dir_falls_back_to_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(BIN)
        .arg("sigma")
        .arg("--config")
        .arg(configs().join("sigma_golden.json"))
        .env("ARITH_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.path().join("sigma.csv").exists());
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("sigma.csv"));
}
