#![allow(dead_code)]

use std::path::PathBuf;

use alertbed::event::ue_entity;
use alertbed::sim::scenario::{run_scenario, RunReport};
use alertbed::{Scenario, SimEvent, Simulation};

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("scenarios").join(name)
}

pub fn scenario(name: &str) -> Scenario {
    Scenario::from_path(scenario_path(name)).unwrap()
}

pub fn run(name: &str) -> (Simulation, RunReport) {
    run_scenario(&scenario(name)).unwrap()
}

pub fn ue_events<'a>(sim: &'a Simulation, ue: u32, event_type: &'a str) -> impl Iterator<Item = &'a SimEvent> + 'a {
    let entity = ue_entity(ue);
    sim.log()
        .iter()
        .filter(move |e| e.entity == entity && e.event_type == event_type)
}

pub fn first_time(sim: &Simulation, ue: u32, event_type: &str) -> Option<u64> {
    ue_events(sim, ue, event_type).next().map(|e| e.time_ms)
}
