//! Tap each clickable span of a received alert on a locked and an unlocked
//! handset and print what the device does.

use alertbed::sim::scenario::run_scenario;
use alertbed::ue::interaction::interact_with_alert;
use alertbed::Scenario;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/homoglyph_link.json");
    let (sim, _) = run_scenario(&Scenario::from_path(path)?)?;
    for ue in sim.ues() {
        let Some(alert) = ue.alerts().first() else { continue };
        println!("ue{} ({}) shows: {}", ue.id, ue.profile.name, alert.text);
        for (i, span) in alert.spans.iter().enumerate() {
            for locked in [true, false] {
                let trace = interact_with_alert(alert, i, locked)?;
                println!(
                    "  tap {:?} {:?} while {}: {:?}",
                    span.kind,
                    span.slice(&alert.text),
                    if locked { "locked" } else { "unlocked" },
                    trace
                );
            }
        }
    }
    Ok(())
}
