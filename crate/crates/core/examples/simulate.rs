//! Monte Carlo drawdown probability under R_D for the scaled model, next to
//! the diffusion value and its bounds.
//!
//!     cargo run --release --example simulate -- [n] [paths] [barrier_mult]

use std::time::Instant;

use drawdown::adjustment::solve_rho_d;
use drawdown::model::{MarketParams, Severity};
use drawdown::retention::RetentionFn;
use drawdown::simulate::{mc_estimate, BarrierMode, Scheme, SimConfig};
use drawdown::valuefn::psi_d;

fn main() -> drawdown::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let n = args.first().copied().unwrap_or(16.0);
    let paths = args.get(1).copied().unwrap_or(20_000.0) as u64;
    let mult = args.get(2).copied().unwrap_or(12.0);

    let p = MarketParams { lambda: 1.0, theta: 0.1, eta: 0.2, c: 1.2, alpha: 0.3 };
    let s = Severity::Exponential { rate: 1.0 };
    let rho_d = solve_rho_d(&p, &s)?;
    let cfg = SimConfig {
        n,
        retention: RetentionFn::diffusion_optimal(rho_d, &p),
        x0: 2.0,
        m0: 2.0,
        barrier_mult: mult,
        paths,
        seed: 42,
        mode: BarrierMode::Drawdown,
        scheme: Scheme::JumpExact,
    };
    let t = Instant::now();
    let est = mc_estimate(&cfg, &p, &s)?;
    let secs = t.elapsed().as_secs_f64();
    let target = psi_d(2.0, 2.0, p.alpha, rho_d)?;
    println!("n = {n}, paths = {paths}, barrier = {:.3}", est.barrier);
    println!("p_hat = {:.5} ± {:.5}  (truncation ≤ {:.2e})", est.p_hat, est.se, est.truncation_bound);
    println!("psi_D(2, 2) = {target:.5}, difference {:+.5}", est.p_hat - target);
    println!("{secs:.2} s");
    Ok(())
}
