//! Picard oracle for the fixed-barrier probability next to a fixed_ruin
//! Monte Carlo estimate at n = 1.
//!
//!     cargo run --release --example oracle -- [m] [paths]

use std::time::Instant;

use drawdown::adjustment::solve_rho_d;
use drawdown::model::{MarketParams, Severity};
use drawdown::oracle::picard_solve;
use drawdown::retention::RetentionFn;
use drawdown::simulate::{mc_estimate, BarrierMode, Scheme, SimConfig};

fn main() -> drawdown::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let m = args.first().copied().unwrap_or(3.0);
    let paths = args.get(1).copied().unwrap_or(20_000.0) as u64;

    let p = MarketParams { lambda: 1.0, theta: 0.1, eta: 0.2, c: 1.2, alpha: 0.3 };
    let s = Severity::Exponential { rate: 1.0 };
    let rho_d = solve_rho_d(&p, &s)?;

    for (name, r) in [
        ("full", RetentionFn::Full),
        ("diffusion_optimal", RetentionFn::diffusion_optimal(rho_d, &p)),
    ] {
        let t = Instant::now();
        let run = picard_solve(&r, &p, &s, m, 1e-7, 0.02)?;
        println!(
            "{name}: {} iterations, J = {:.6}, worst Lundberg excess {:.3e}, {:.2?}",
            run.grid.iteration,
            run.grid.lundberg_j,
            run.worst_lundberg_excess,
            t.elapsed()
        );
        for x in [p.alpha * m, 1.5, 2.0, 2.5, m] {
            let cfg = SimConfig {
                n: 1.0,
                retention: r,
                x0: x,
                m0: m,
                barrier_mult: 10.0,
                paths,
                seed: 7,
                mode: BarrierMode::FixedRuin,
                scheme: Scheme::JumpExact,
            };
            let mc = mc_estimate(&cfg, &p, &s)?;
            println!(
                "  x = {x:.2}  picard {:.5}  mc {:.5} ± {:.5}  trunc {:.1e}",
                run.grid.eval(x),
                mc.p_hat,
                mc.se,
                mc.truncation_bound
            );
        }
    }
    Ok(())
}
