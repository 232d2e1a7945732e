//! Admissibility checks for a few markets around the reference one.
//!
//!     cargo run --release --example validate_market

use drawdown::model::{validate_market, MarketParams, Severity};

fn main() {
    let base = MarketParams { lambda: 1.0, theta: 0.1, eta: 0.2, c: 1.2, alpha: 0.3 };
    let s = Severity::Exponential { rate: 1.0 };
    for c in [1.2, 0.9, 1.5] {
        let p = MarketParams { c, ..base };
        let r = validate_market(&p, &s);
        println!("c = {c}: pass = {}, kappa = {:.4}", r.pass, r.kappa);
        for f in r.failures() {
            println!("  {} ({})", f.name, f.detail);
        }
    }
}
