//! Explicit bound constants for the reference exponential market.
//!
//!     cargo run --release --example constants

use drawdown::adjustment::compute_constants;
use drawdown::model::{MarketParams, Severity};

fn main() -> drawdown::Result<()> {
    let p = MarketParams { lambda: 1.0, theta: 0.1, eta: 0.2, c: 1.2, alpha: 0.3 };
    for s in [Severity::Exponential { rate: 1.0 }, Severity::Uniform { b: 2.0 }] {
        let cc = compute_constants(&p, &s, 0.01)?;
        println!("{s:?}");
        println!("{}", serde_json::to_string_pretty(&cc).unwrap());
    }
    Ok(())
}
