//! Write a run's event log as JSON lines, read it back and rebuild the final
//! state from the recorded commands alone.

use alertbed::event::{parse_jsonl, to_jsonl};
use alertbed::sim::scenario::run_scenario;
use alertbed::{Scenario, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/a_matching_plmn_spoof.json");
    let (sim, _) = run_scenario(&Scenario::from_path(path)?)?;
    let log = to_jsonl(sim.log());
    let out = std::env::temp_dir().join("alertbed-replay.jsonl");
    std::fs::write(&out, &log)?;
    println!("{} events written to {}", sim.log().len(), out.display());

    let records = parse_jsonl(&std::fs::read_to_string(&out)?)?;
    let commands = records.iter().filter(|e| e.event_type == "Command").count();
    let replayed = Simulation::replay(&records)?;
    println!("replayed {commands} command records");
    println!("identical log:      {}", to_jsonl(replayed.log()) == log);
    println!("identical snapshot: {}", replayed.snapshot() == sim.snapshot());
    Ok(())
}
