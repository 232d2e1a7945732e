//! ψ_D with the upper and lower bounds at one state across scales.
//!
//!     cargo run --release --example bounds -- [x] [m]

use drawdown::adjustment::compute_constants;
use drawdown::model::{MarketParams, Severity};
use drawdown::valuefn::bound_bundle;

fn main() -> drawdown::Result<()> {
    let args: Vec<f64> = std::env::args().skip(1).filter_map(|a| a.parse().ok()).collect();
    let x = args.first().copied().unwrap_or(2.0);
    let m = args.get(1).copied().unwrap_or(3.0);
    let p = MarketParams { lambda: 1.0, theta: 0.1, eta: 0.2, c: 1.2, alpha: 0.3 };
    let s = Severity::Exponential { rate: 1.0 };
    let cc = compute_constants(&p, &s, 0.01)?;
    let show = |v: Option<f64>| v.map_or("-".to_string(), |v| format!("{v:.6}"));
    println!("N_lemma32 = {}, N_lower = {}, N' = {}", cc.n_lemma32, cc.n_lower, cc.n_prime);
    println!("{:>8}  {:>9}  {:>9}  {:>9}  {:>9}  {:>9}", "n", "ell_n", "psi_D", "u_n", "psibar_n", "psibar_Dn");
    for n in [16.0, 256.0, cc.n_prime as f64, 1e5, 1e6] {
        let b = bound_bundle(x, m, n, &p, &s, &cc)?;
        println!(
            "{n:>8}  {:>9}  {:>9.6}  {:>9}  {:>9.6}  {:>9.6}",
            show(b.ell_n),
            b.psi_d,
            show(b.u_n),
            b.psibar_n,
            b.psibar_dn
        );
    }
    Ok(())
}
