//! Drive the built-in warning presets against every shipped device profile
//! and compare how many alerts each one shows.

use alertbed::control::presets;
use alertbed::sim::UeSpec;
use alertbed::{Command, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let profiles: Vec<String> = Simulation::new().profiles().names().map(String::from).collect();
    for preset in presets::builtin() {
        let mut sim = Simulation::new();
        sim.submit(serde_json::from_value(serde_json::json!({
            "op": "add_cell",
            "config": {"pci": 66, "plmn": "001-01", "tac": 9, "cell_identity": 66, "carrier": 1, "is_rogue": true}
        }))?)?;
        for (i, profile) in profiles.iter().enumerate() {
            let id = i as u32 + 1;
            sim.submit(Command::AddUe {
                ue: UeSpec {
                    id,
                    profile: profile.clone(),
                    hplmn: None,
                    imsi: None,
                    power_on_ms: 0,
                    data_service: false,
                    cross_cell_verification: false,
                    locked: false,
                },
            })?;
            sim.submit(Command::SetRxPower {
                ue: id,
                pci: 66,
                dbm: Some(-70.0),
            })?;
        }
        let ack = sim.submit(Command::ApplyPreset {
            preset: preset.clone(),
            pci: 66,
            warning_id: None,
        })?;
        sim.run(10_000)?;
        println!("{} ({:?}), warnings {:?}", preset.name, preset.mode, ack.warning_ids);
        for ue in sim.ues() {
            println!("  {:<30} {} alert(s)", ue.profile.name, ue.alerts().len());
        }
    }
    Ok(())
}
