//! Drawdown probability under R_D against ψ_D for n = 4 … 1024, with the
//! fitted log-log slope per state.
//!
//!     cargo run --release --example convergence_study -- [paths] [barrier_mult] [seed]

use std::time::Instant;

use drawdown::cli::{run_convergence_study, Config};

fn main() -> drawdown::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let mut cfg = Config::from_json(
        r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},
            "severity":{"kind":"exponential","rate":1.0}}"#,
    )?;
    cfg.study.paths = args.first().copied().unwrap_or(20_000.0) as u64;
    if let Some(mult) = args.get(1) {
        cfg.study.barrier_mult = *mult;
    }
    if let Some(seed) = args.get(2) {
        cfg.study.seed = *seed as u64;
    }

    let t = Instant::now();
    let rep = run_convergence_study(&cfg)?;
    println!("N' = {}, C' = {:.4}", rep.constants.n_prime, rep.constants.c_prime);
    println!("     n     x     m     psi_D     p_hat        se     trunc    p_hat-psi_D");
    for r in &rep.rows {
        println!(
            "{:>6} {:>5} {:>5}  {:.5}  {:.5}  {:.5}  {:.1e}  {:+.5}",
            r.n,
            r.x,
            r.m,
            r.psi_d,
            r.mc.p_hat,
            r.mc.se,
            r.mc.truncation_bound,
            r.mc.p_hat - r.psi_d
        );
    }
    for s in &rep.slopes {
        match s.slope {
            Some(v) => println!("slope at ({}, {}): {v:.3} over {} scales", s.x, s.m, s.points),
            None => println!("slope at ({}, {}): undefined", s.x, s.m),
        }
    }
    println!("{:.1?}", t.elapsed());
    Ok(())
}
