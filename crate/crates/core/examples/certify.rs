//! Checks the sub- and supersolution inequalities of the bounds on the
//! 20×20 grid at the scale N′ where all bounds are in force.
//!
//!     cargo run --release --example certify

use drawdown::adjustment::compute_constants;
use drawdown::model::{MarketParams, Severity};
use drawdown::valuefn::certify;

fn main() -> drawdown::Result<()> {
    let p = MarketParams { lambda: 1.0, theta: 0.1, eta: 0.2, c: 1.2, alpha: 0.3 };
    let s = Severity::Exponential { rate: 1.0 };
    let cc = compute_constants(&p, &s, 0.01)?;
    let n = cc.n_prime as f64;
    println!("n = N' = {n}");
    for c in certify(n, &p, &s, &cc, 1e-8)? {
        println!(
            "{:<32} {:<4} worst {:>12.3e} at (x={:.3}, m={:.3})  {}",
            c.name,
            c.sense,
            c.worst,
            c.worst_x,
            c.worst_m,
            if c.pass { "pass" } else { "FAIL" }
        );
    }
    Ok(())
}
