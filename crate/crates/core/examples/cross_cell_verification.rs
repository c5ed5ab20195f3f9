//! Run the three verification setups side by side: a legitimate network, a
//! lone rogue with silent neighbours and an isolated rogue.

use alertbed::sim::scenario::run_scenario;
use alertbed::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios");
    for name in ["verify_legitimate_network", "verify_single_rogue", "verify_isolated_rogue", "verify_resegmented"] {
        let scenario = Scenario::from_path(format!("{dir}/{name}.json"))?;
        let (sim, _) = run_scenario(&scenario)?;
        println!("{name}: {}", scenario.description);
        for ue in sim.ues() {
            for v in ue.verdicts() {
                println!(
                    "  ue{} alert from pci {}: {:?} ({:?}), scanned {:?}, matching {:?}, {} ms",
                    ue.id,
                    v.origin_pci,
                    v.status,
                    v.reason,
                    v.scanned_pcis,
                    v.matching_pcis,
                    v.concluded_at - v.started_at
                );
            }
        }
    }
    Ok(())
}
