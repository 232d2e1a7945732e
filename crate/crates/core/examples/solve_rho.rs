//! Adjustment coefficients ρ_n and ρ_n(R_D) approaching ρ_D from below.
//!
//!     cargo run --release --example solve_rho

use drawdown::adjustment::{
    rho_n_of_r_residual, rho_n_residual, solve_j, solve_rho_d, solve_rho_n, solve_rho_n_of_r,
};
use drawdown::model::{MarketParams, Severity};
use drawdown::retention::RetentionFn;

fn main() -> drawdown::Result<()> {
    let p = MarketParams { lambda: 1.0, theta: 0.1, eta: 0.2, c: 1.2, alpha: 0.3 };
    let s = Severity::Exponential { rate: 1.0 };
    let rho_d = solve_rho_d(&p, &s)?;
    let rd = RetentionFn::diffusion_optimal(rho_d, &p);
    println!("rho_D = {rho_d:.12}");
    println!("J(full) = {:.12}", solve_j(&RetentionFn::Full, &p, &s)?);
    println!("{:>6}  {:>14}  {:>14}  {:>10}  {:>10}", "n", "rho_n", "rho_n(R_D)", "res", "res(R_D)");
    for n in [1.0, 4.0, 16.0, 64.0, 256.0, 1024.0] {
        let a = solve_rho_n(n, &p, &s)?;
        let b = solve_rho_n_of_r(&rd, n, &p, &s)?;
        println!(
            "{n:>6}  {a:>14.10}  {b:>14.10}  {:>10.1e}  {:>10.1e}",
            rho_n_residual(n, &p, &s, a),
            rho_n_of_r_residual(&rd, n, &p, &s, b)
        );
    }
    Ok(())
}
