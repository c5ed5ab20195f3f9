//! Step a simulation by hand the way an operator would: attract a handset to
//! a rogue cell by jamming, push a warning, then change the rogue's PLMN.

use alertbed::codec::{Coding, WarningPayload};
use alertbed::radio::CellPatch;
use alertbed::{Command, Scenario, Simulation};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/scenarios/jam_reselection.json");
    let mut scenario = Scenario::from_path(path)?;
    scenario.timeline.clear();
    let mut sim = Simulation::load(&scenario)?;

    // Commands can emit events themselves, so read the log from a cursor
    // rather than only the run window.
    let mut cursor = 0;
    let mut show = |sim: &mut Simulation, until: u64| -> Result<(), Box<dyn std::error::Error>> {
        sim.run(until)?;
        for e in sim.events_since(cursor).iter().filter(|e| e.entity.starts_with("ue:")) {
            println!("{:>6} ms  {:<6} {:<24} {}", e.time_ms, e.entity, e.event_type, serde_json::to_string(&e.detail)?);
        }
        cursor = sim.log().last().map_or(0, |e| e.seq);
        Ok(())
    };

    show(&mut sim, 2000)?;
    println!("-- jam ue1 for 20 s");
    sim.submit(Command::Jam {
        ues: vec![1],
        duration_ms: 20_000,
    })?;
    show(&mut sim, 2500)?;
    println!("-- start a warning on the rogue with paging");
    sim.submit(Command::StartWarning {
        pci: 66,
        payload: WarningPayload::new(4370, 1, Coding::Gsm7, "Shelter in place. Details https://tinyurl.com/x9k"),
        with_paging: true,
    })?;
    show(&mut sim, 3500)?;
    println!("-- move the rogue to a foreign PLMN");
    sim.submit(Command::UpdateCell {
        pci: 66,
        patch: CellPatch {
            plmn: Some("999-99".parse()?),
            ..Default::default()
        },
    })?;
    show(&mut sim, 4000)?;
    Ok(())
}
