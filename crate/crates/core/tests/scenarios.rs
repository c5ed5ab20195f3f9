mod common;

use std::collections::BTreeSet;

use alertbed::codec::{Coding, WarningPayload};
use alertbed::radio::RadioError;
use alertbed::sim::SimError;
use alertbed::ue::{CellClass, RrcState};
use alertbed::Command;
use common::*;

#[test]
fn bundled_scenarios_meet_their_expectations() {
    let dir = scenario_path("");
    let mut names: Vec<_> = std::fs::read_dir(&dir)
        .unwrap()
        .map(|e| e.unwrap().file_name().into_string().unwrap())
        .filter(|n| n.ends_with(".json"))
        .collect();
    names.sort();
    assert!(names.len() >= 12);
    for name in names {
        let (_, report) = run(&name);
        assert!(report.passed, "{name}: {:#?}", report.expectations);
        assert!(!report.expectations.is_empty(), "{name} asserts nothing");
    }
}

#[test]
fn matching_plmn_spoof_displays_before_any_registration() {
    let (sim, report) = run("a_matching_plmn_spoof.json");
    let display = first_time(&sim, 1, "AlertDisplayed").unwrap();
    let attempt = first_time(&sim, 1, "RegistrationAttempt").unwrap();
    assert!(display < attempt);
    assert_eq!(report.ues[0].displayed_before_registration, Some(true));

    let on_rogue = |t: &str| ue_events(&sim, 1, t).filter(|e| e.get_u64("pci") == Some(66)).count();
    assert_eq!(on_rogue("AlertDisplayed"), 1);
    assert_eq!(on_rogue("RegistrationAttempt"), 3);
    assert_eq!(on_rogue("RegistrationAccepted"), 0);
    assert_eq!(on_rogue("CellBarred"), 1);
    // After the bar the handset registers on the legitimate cell.
    let accepted: Vec<_> = ue_events(&sim, 1, "RegistrationAccepted").collect();
    assert_eq!(accepted.len(), 1);
    assert_eq!(accepted[0].get_u64("pci"), Some(1));
}

#[test]
fn foreign_plmn_is_ignored_when_home_cell_exists() {
    let (sim, _) = run("b_foreign_plmn_with_home_cell.json");
    assert_eq!(ue_events(&sim, 1, "AlertDisplayed").count(), 0);
    assert!(ue_events(&sim, 1, "Camped").all(|e| e.get_u64("pci") == Some(1)));
}

#[test]
fn foreign_plmn_alone_displays_after_fallback_delay() {
    let (sim, _) = run("b_foreign_plmn_alone.json");
    let fallback = sim.settings().ue_timers.acceptable_fallback_ms;
    let search = first_time(&sim, 1, "CellSearch").unwrap();
    let camped: Vec<_> = ue_events(&sim, 1, "Camped").collect();
    assert_eq!(camped.len(), 1);
    assert_eq!(camped[0].time_ms, search + fallback);
    assert_eq!(sim.ue(1).unwrap().camped_class(), Some(CellClass::Acceptable));
    let displays: Vec<_> = ue_events(&sim, 1, "AlertDisplayed").collect();
    assert_eq!(displays.len(), 1);
    assert!(displays[0].time_ms >= search + fallback);
}

#[test]
fn serial_increments_each_display_once() {
    let (sim, _) = run("c_serial_increment.json");
    for ue in 1..=4 {
        let serials: Vec<u16> = sim.ue(ue).unwrap().alerts().iter().map(|a| a.serial_number).collect();
        assert_eq!(serials, vec![1, 2, 3, 4, 5], "ue{ue}");
    }
    // The final same-serial rebroadcast was applied and paged, yet nobody
    // displayed again.
    let rebroadcast = sim
        .log()
        .iter()
        .rfind(|e| e.event_type == "WarningUpdated")
        .unwrap()
        .time_ms;
    assert!(rebroadcast >= 6000);
    assert!(sim
        .log()
        .iter()
        .filter(|e| e.event_type == "AlertDisplayed")
        .all(|e| e.time_ms < rebroadcast));
}

#[test]
fn thirty_two_warnings_fill_the_cell_and_a_33rd_is_refused() {
    let (mut sim, _) = run("d_thirty_two_warnings.json");
    let failed: Vec<_> = sim
        .log()
        .iter()
        .filter(|e| e.event_type == "ScheduledCommandFailed")
        .collect();
    assert_eq!(failed.len(), 1);
    assert_eq!(failed[0].time_ms, 2000);
    assert_eq!(sim.cell(66).unwrap().slot_count(), 32);

    let extra = Command::StartWarning {
        pci: 66,
        payload: WarningPayload::new(4370, 40, Coding::Gsm7, "one too many"),
        with_paging: false,
    };
    let err = sim.submit(extra).unwrap_err();
    assert!(matches!(
        err,
        SimError::Radio(RadioError::TooManySiMessages { pci: 66, requested: 33 })
    ));

    let tablet = sim.ue(5).unwrap();
    assert_eq!(tablet.alerts().len(), 1);
    // The tablet camps at 160 ms, halfway through the SI cycle, so slots
    // 16..31 arrive before 0..15 and serial 16 completes last.
    assert_eq!(tablet.alerts()[0].serial_number, 16);
}

#[test]
fn interleaved_segments_complete_only_one_warning() {
    let (sim, _) = run("e_interleaved_segments.json");
    let warnings = sim.warnings();
    assert_eq!(warnings.len(), 3);
    assert!(warnings.iter().all(|w| w.segments == 2));
    for ue in 1..=4 {
        assert_eq!(sim.ue(ue).unwrap().alerts().len(), 1);
        assert!(sim.ue(ue).unwrap().reassembly_buffers() <= 1);
    }
    assert_eq!(sim.ue(5).unwrap().alerts().len(), 0);
    assert!(ue_events(&sim, 5, "AlertDiscarded").count() >= 1);
}

#[test]
fn jammed_connection_is_lost_and_the_rogue_takes_over() {
    let (sim, _) = run("jam_reselection.json");
    let lost = first_time(&sim, 1, "ConnectionLost").unwrap();
    assert_eq!(lost, 3000);
    let after: Vec<_> = sim
        .log()
        .iter()
        .filter(|e| e.entity == "ue:1" && e.time_ms >= lost)
        .map(|e| e.event_type.as_str())
        .filter(|t| matches!(*t, "ConnectionLost" | "CellSearch" | "Camped"))
        .take(3)
        .collect();
    assert_eq!(after, ["ConnectionLost", "CellSearch", "Camped"]);
    let ue = sim.ue(1).unwrap();
    assert_eq!(ue.serving_pci(), Some(66));
    assert_eq!(ue.alerts()[0].pci, 66);
}

#[test]
fn homoglyph_link_depends_on_the_profile() {
    let (sim, _) = run("homoglyph_link.json");
    let kinds = |ue: u32| -> Vec<(String, bool)> {
        sim.ue(ue).unwrap().alerts()[0]
            .spans
            .iter()
            .map(|s| (format!("{:?}", s.kind), s.contains_cyrillic))
            .collect()
    };
    assert_eq!(kinds(1), [("WebUrl".to_string(), true), ("Phone".to_string(), false)]);
    assert_eq!(kinds(2), [("Phone".to_string(), false)]);
    let trace = ue_events(&sim, 1, "AlertInteraction").next().unwrap();
    assert_eq!(
        trace.get("trace").unwrap(),
        &serde_json::json!([{"step": "UnlockPrompt"}, {"step": "Unlocked"}, {"step": "OpenTarget", "target": "browser"}])
    );
}

#[test]
fn runs_are_deterministic() {
    let a = run("a_matching_plmn_spoof.json").0;
    let b = run("a_matching_plmn_spoof.json").0;
    assert_eq!(alertbed::event::to_jsonl(a.log()), alertbed::event::to_jsonl(b.log()));
}

#[test]
fn replaying_command_records_reproduces_the_final_state() {
    for name in ["a_matching_plmn_spoof.json", "c_serial_increment.json", "verify_legitimate_network.json"] {
        let (sim, _) = run(name);
        let replayed = alertbed::Simulation::replay(sim.log()).unwrap();
        assert_eq!(sim.snapshot(), replayed.snapshot(), "{name}");
        assert_eq!(sim.log(), replayed.log(), "{name}");
    }
}

#[test]
fn serving_cell_and_rrc_state_agree_throughout() {
    let mut sim = alertbed::Simulation::load(&scenario("a_matching_plmn_spoof.json")).unwrap();
    let mut displayed = BTreeSet::new();
    for t in (0..=12_000).step_by(40) {
        sim.run(t).unwrap();
        let ue = sim.ue(1).unwrap();
        let scanning = matches!(ue.rrc(), RrcState::Scanning | RrcState::Off);
        assert_eq!(ue.serving_pci().is_none(), scanning, "t={t}");
        assert!(ue.reassembly_buffers() <= ue.profile.max_parallel_reassemblies as usize);
        assert!(ue.displayed().is_superset(&displayed));
        displayed = ue.displayed().clone();
    }
}
