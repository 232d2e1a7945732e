//! The full JSON report for a configuration file, or for the reference market.
//!
//!     cargo run --release --example report -- [config.json]

use drawdown::cli::{run_report, Config};

fn main() -> drawdown::Result<()> {
    let cfg = match std::env::args().nth(1) {
        Some(path) => Config::load(path.as_ref())?,
        None => Config::from_json(
            r#"{"market":{"lambda":1.0,"theta":0.1,"eta":0.2,"c":1.2,"alpha":0.3},
                "severity":{"kind":"exponential","rate":1.0}}"#,
        )?,
    };
    let rep = run_report(&cfg)?;
    for c in &rep.claims {
        println!("{:<36} {}  {}", c.name, if c.pass { "pass" } else { "FAIL" }, c.detail);
    }
    println!("overall: {}", if rep.pass { "pass" } else { "FAIL" });
    Ok(())
}
