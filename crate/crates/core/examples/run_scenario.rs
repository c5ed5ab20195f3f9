//! Run a scenario file headlessly and print the summary report.
//!
//! ```text
//! cargo run -p alertbed --example run_scenario -- crates/core/scenarios/a_matching_plmn_spoof.json
//! ```

use alertbed::sim::scenario::run_scenario;
use alertbed::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = std::env::args()
        .nth(1)
        .unwrap_or_else(|| concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/a_matching_plmn_spoof.json").into());
    let scenario = Scenario::from_path(&path)?;
    let (_, report) = run_scenario(&scenario)?;
    println!("{}", serde_json::to_string_pretty(&report)?);
    if !report.passed {
        std::process::exit(2);
    }
    Ok(())
}
