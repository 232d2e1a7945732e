use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

const EXP1: &str = r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},"severity":{"kind":"exponential","rate":1.0}}"#;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_drawdown"))
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn run(cfg: &Path, args: &[&str]) -> Output {
    bin().arg("--config").arg(cfg).args(args).output().unwrap()
}

fn stdout_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&o.stdout));
    })
}

fn small_study(outputs: Option<&Path>) -> String {
    let out = outputs
        .map(|p| format!(r#","outputs":{}"#, serde_json::to_string(p).unwrap()))
        .unwrap_or_default();
    format!(
        r#"{{"market":{{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3}},"severity":{{"kind":"exponential","rate":1.0}},
            "study":{{"n_list":[1,4],"states":[[2,2]],"paths":3000,"seed":9,"barrier_mult":4{out}}}}}"#
    )
}

#[test]
fn validate_reports_pass_and_kappa() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", EXP1);
    let o = run(&cfg, &["validate"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    assert_eq!(v["pass"], true);
    assert!((v["kappa"].as_f64().unwrap() - 0.1).abs() < 1e-15);
}

#[test]
fn invalid_market_exits_with_two() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", &EXP1.replace("\"c\":1.2", "\"c\":0.9"));
    let o = run(&cfg, &["validate"]);
    assert_eq!(o.status.code(), Some(2));
    assert_eq!(stdout_json(&o)["pass"], false);

    let o = run(&cfg, &["report"]);
    assert_eq!(o.status.code(), Some(2));
    let v = stdout_json(&o);
    let detail = v["claims"][0]["detail"].as_str().unwrap();
    assert!(detail.contains("positive_safety_loading"), "{detail}");

    let o = run(&cfg, &["solve-rho", "--n", "4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_or_malformed_config_exits_with_one() {
    let d = TempDir::new().unwrap();
    let o = run(&d.path().join("absent.json"), &["validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("cannot read"));

    let cfg = write(&d, "cfg.json", &EXP1.replace("\"alpha\":0.3", "\"alpha\":0.3,\"beta\":1"));
    let o = run(&cfg, &["validate"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("beta"));

    let o = bin().arg("validate").output().unwrap();
    assert_eq!(o.status.code(), Some(1));

    let o = bin().arg("no-such-command").output().unwrap();
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn solve_rho_prints_roots_and_residuals() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", EXP1);
    let o = run(&cfg, &["solve-rho", "--n", "16"]);
    assert_eq!(o.status.code(), Some(0));
    let v = stdout_json(&o);
    let rho_d = v["rho_D"].as_f64().unwrap();
    let rho_n = v["rho_n"].as_f64().unwrap();
    let rho_rd = v["rho_n_of_RD"].as_f64().unwrap();
    assert!(rho_rd <= rho_n && rho_n < rho_d);
    for k in ["rho_D", "rho_n", "rho_n_of_RD"] {
        assert!(v["residuals"][k].as_f64().unwrap().abs() < 1e-10, "{k}");
    }
}

#[test]
fn bounds_and_constants_are_json() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", EXP1);
    let o = run(&cfg, &["constants"]);
    assert_eq!(o.status.code(), Some(0));
    let c = stdout_json(&o);
    assert!(c["N_prime"].as_u64().unwrap() >= 1);

    let o = run(&cfg, &["bounds", "--n", "64", "--x", "2.0", "--m", "3.0"]);
    assert_eq!(o.status.code(), Some(0));
    let b = stdout_json(&o);
    let psi_d = b["psi_D"].as_f64().unwrap();
    assert!(psi_d > 0.0 && psi_d < 1.0);
    assert!(b["ell_n"].is_null());

    let o = run(&cfg, &["bounds", "--n", "64", "--x", "3.5", "--m", "3.0"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible_and_honours_seed() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", EXP1);
    let args = [
        "simulate", "--n", "4", "--paths", "2000", "--mode", "drawdown", "--x0", "2", "--m0", "2",
        "--barrier-mult", "3",
    ];
    let a = bin().arg("--config").arg(&cfg).args(args).args(["--seed", "42"]).output().unwrap();
    let b = bin().arg("--config").arg(&cfg).args(args).args(["--seed", "42"]).output().unwrap();
    let c = bin().arg("--config").arg(&cfg).args(args).args(["--seed", "43"]).output().unwrap();
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    let v = stdout_json(&a);
    let p = v["p_hat"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&p));
    assert_eq!(v["paths"], 2000);

    let o = run(&cfg, &["simulate", "--paths", "10", "--x0", "3", "--m0", "2"]);
    assert_eq!(o.status.code(), Some(2));
    // R ≡ 0 breaks net profit
    let o = run(&cfg, &["simulate", "--paths", "10", "--x0", "2", "--m0", "2", "--retention", "cap=0"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&cfg, &["simulate", "--paths", "10", "--x0", "2", "--m0", "2", "--retention", "cap=-1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn oracle_emits_csv() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", EXP1);
    let out = d.path().join("psi.csv");
    let o = bin()
        .arg("--config")
        .arg(&cfg)
        .arg("--out")
        .arg(&out)
        .args(["oracle", "--m", "3.0", "--retention", "full", "--tol", "1e-6", "--h", "0.1"])
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,psi"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|v| v.parse().unwrap()).collect();
    assert!((first[0] - 0.9).abs() < 1e-12);
    // classical ruin at the barrier: λ/c
    assert!((first[1] - 1.0 / 1.2).abs() < 5e-3);
}

#[test]
fn converge_csv_is_byte_identical_across_runs() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", &small_study(None));
    let a = run(&cfg, &["converge"]);
    let b = run(&cfg, &["converge"]);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    assert_eq!(a.stdout, b.stdout);
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with(
        "n,x,m,rho_n,rho_n_RD,psi_D,ell_n,u_n,psibar_n,psibar_Dn,mc_p_hat,mc_se,trunc_bound,paths,flag\n"
    ));
    assert_eq!(text.lines().count(), 3);

    let c = bin().arg("--config").arg(&cfg).args(["--seed", "10", "converge"]).output().unwrap();
    assert_ne!(c.stdout, b.stdout);
}

#[test]
fn converge_writes_output_directory() {
    let d = TempDir::new().unwrap();
    let outdir = d.path().join("study");
    let cfg = write(&d, "cfg.json", &small_study(Some(&outdir)));
    let o = run(&cfg, &["converge"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(outdir.join("convergence.csv").exists());
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(outdir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"].as_array().unwrap().len(), 2);
}

#[test]
fn empty_study_is_a_config_error() {
    let d = TempDir::new().unwrap();
    let cfg = write(&d, "cfg.json", &small_study(None).replace("[1,4]", "[]"));
    let o = run(&cfg, &["converge"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("n_list"));
}
