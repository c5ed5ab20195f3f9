mod common;

use std::time::Duration;

use alertbed::sim::scenario::run_scenario;
use alertbed::sim::ScenarioError;
use alertbed::{Scenario, SimEvent};
use alertbed_nms::{ServeConfig, ServeError, Server};
use common::{scenario_path, serve, Api};
use futures::StreamExt;
use serde_json::{json, Value};

fn cell(pci: u16, plmn: &str) -> Value {
    json!({"config": {"pci": pci, "plmn": plmn, "tac": 1, "cell_identity": pci, "carrier": 1}})
}

fn warning(serial: u16, text: &str) -> Value {
    json!({"message_identifier": 4370, "serial_number": serial, "text": text})
}

fn log_records(path: &std::path::Path) -> Vec<SimEvent> {
    alertbed::event::parse_jsonl(&std::fs::read_to_string(path).unwrap()).unwrap()
}

async fn run_to_end(api: &Api, scenario: &str) -> Scenario {
    let scenario = Scenario::from_path(scenario_path(scenario)).unwrap();
    let (status, body) = api.post("/api/sim/run", json!({"until_ms": scenario.end_ms})).await;
    assert_eq!(status, 200, "{body}");
    scenario
}

#[tokio::test]
async fn serving_a_scenario_lists_its_cells() {
    let api = serve(Some(scenario_path("a_matching_plmn_spoof")), None).await;
    let scenario = Scenario::from_path(scenario_path("a_matching_plmn_spoof")).unwrap();
    let (status, cells) = api.get("/api/cells").await;
    assert_eq!(status, 200);
    let pcis: Vec<u64> = cells.as_array().unwrap().iter().map(|c| c["config"]["pci"].as_u64().unwrap()).collect();
    let expected: Vec<u64> = scenario.cells.iter().map(|c| u64::from(c.pci)).collect();
    assert_eq!(pcis, expected);
    let (_, status_body) = api.get("/api/status").await;
    assert_eq!(status_body["now_ms"], 0, "loaded paused at t=0");
}

#[tokio::test]
async fn malformed_scenario_reports_field_and_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{\n  \"cells\": [\n    {\"pci\": \"seven\"}\n  ],\n  \"end_ms\": 10\n}\n").unwrap();
    let config = ServeConfig {
        bind: "127.0.0.1:0".into(),
        scenario: Some(path),
        ..ServeConfig::default()
    };
    match Server::bind(&config).await {
        Err(ServeError::BadScenario(ScenarioError::Parse { path, line, .. })) => {
            assert_eq!(path, "cells[0].pci");
            assert_eq!(line, 3);
        }
        Err(other) => panic!("wrong error: {other}"),
        Ok(_) => panic!("bad scenario accepted"),
    }

    let api = serve(None, None).await;
    let resp = api
        .client
        .post(format!("{}/api/scenario/load", api.base))
        .body("{\"cells\": [], \"end_ms\": \"soon\"}")
        .send()
        .await
        .unwrap();
    assert_eq!(resp.status().as_u16(), 422);
    let body: Value = resp.json().await.unwrap();
    assert_eq!(body["error"], "BadScenario");
    assert_eq!(body["path"], "end_ms");
    assert_eq!(body["line"], 1);
    assert!(body["column"].as_u64().is_some());
}

#[tokio::test]
async fn restart_appends_to_the_existing_log() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let first = serve(Some(scenario_path("a_matching_plmn_spoof")), Some(log.clone())).await;
    first.post("/api/sim/step", json!({"ms": 2000})).await;
    let before = std::fs::read_to_string(&log).unwrap();
    assert!(!before.is_empty());

    let second = serve(Some(scenario_path("a_matching_plmn_spoof")), Some(log.clone())).await;
    second.post("/api/sim/step", json!({"ms": 500})).await;
    let after = std::fs::read_to_string(&log).unwrap();
    assert!(after.starts_with(&before), "earlier records were rewritten");
    assert!(after.len() > before.len());
    let appended = alertbed::event::parse_jsonl(&after[before.len()..]).unwrap();
    assert_eq!(appended[0].seq, 1, "a new session starts its own sequence");
    assert_eq!(appended[0].event_type, "Command");
}

#[tokio::test]
async fn errors_map_to_status_codes() {
    let api = serve(None, None).await;
    assert_eq!(api.post("/api/cells", cell(1, "001-01")).await.0, 201);

    let (status, body) = api.post("/api/cells", cell(1, "001-01")).await;
    assert_eq!((status, body["error"].as_str()), (409, Some("DuplicatePci")));

    let (status, body) = api.patch("/api/cells/9", json!({"tac": 2})).await;
    assert_eq!((status, body["error"].as_str()), (404, Some("UnknownCell")));
    assert_eq!(api.get("/api/cells/9").await.0, 404);
    assert_eq!(api.get("/api/ues/7/alerts").await.0, 404);
    assert_eq!(api.get("/api/ues/7/verdicts").await.0, 404);
    assert_eq!(api.delete("/api/warnings/77").await.0, 404);
    assert_eq!(api.get("/api/no/such/thing").await.0, 404);
    assert_eq!(api.post("/api/presets/nope/apply", json!({"pci": 1})).await.0, 404);

    let (status, body) = api.post("/api/cells", json!({"config": {"pci": "x"}})).await;
    assert_eq!(status, 422);
    assert_eq!(body["path"], "config.pci");

    let (status, body) = api.post("/api/cells", json!({"config": {"pci": 2, "plmn": "1-1", "tac": 1, "cell_identity": 2, "carrier": 1}})).await;
    assert_eq!(status, 422, "{body}");

    // 15 GSM7 pages hold 15 * 93 septets.
    let (status, body) = api.post("/api/cells/1/warnings", warning(1, &"a".repeat(15 * 93))).await;
    assert_eq!(status, 201, "{body}");
    assert_eq!(body["warnings"][0]["pages"], 15);
    let (status, body) = api.post("/api/cells/1/warnings", warning(2, &"a".repeat(15 * 93 + 1))).await;
    assert_eq!((status, body["error"].as_str()), (422, Some("MessageTooLong")));

    let (status, _) = api.post("/api/sim/run", json!({"until_ms": 10, "pause": true})).await;
    assert_eq!(status, 422);
    api.post("/api/sim/step", json!({"ms": 500})).await;
    let (status, body) = api.post("/api/sim/run", json!({"until_ms": 100})).await;
    assert_eq!((status, body["error"].as_str()), (409, Some("TimeInPast")));
}

#[tokio::test]
async fn thirty_third_si_message_is_a_conflict() {
    let api = serve(None, None).await;
    api.post("/api/cells", cell(1, "001-01")).await;
    for serial in 0..32 {
        let (status, body) = api.post("/api/cells/1/warnings", warning(serial, "short")).await;
        assert_eq!(status, 201, "{body}");
    }
    let (status, body) = api.post("/api/cells/1/warnings", warning(32, "short")).await;
    assert_eq!((status, body["error"].as_str()), (409, Some("TooManySiMessages")));
    let (_, cell) = api.get("/api/cells/1").await;
    assert_eq!(cell["si_entries"], 32);
}

#[tokio::test]
async fn events_since_a_cursor_are_strictly_later_and_gapless() {
    let api = serve(Some(scenario_path("a_matching_plmn_spoof")), None).await;
    run_to_end(&api, "a_matching_plmn_spoof").await;
    let all = api.all_events().await;
    let seqs: Vec<u64> = all.iter().map(|e| e["seq"].as_u64().unwrap()).collect();
    assert_eq!(seqs, (1..=seqs.len() as u64).collect::<Vec<_>>());

    for cursor in [0, 1, 17, 100, seqs.len() as u64 - 1, seqs.len() as u64] {
        let (_, page) = api.get(&format!("/api/events?since={cursor}")).await;
        let got: Vec<u64> = page["events"].as_array().unwrap().iter().map(|e| e["seq"].as_u64().unwrap()).collect();
        assert_eq!(got, ((cursor + 1)..=seqs.len() as u64).collect::<Vec<_>>(), "since={cursor}");
        assert_eq!(page["cursor"], seqs.len() as u64);
    }
}

#[tokio::test]
async fn event_stream_delivers_in_order_and_resumes() {
    let api = serve(Some(scenario_path("a_matching_plmn_spoof")), None).await;
    let (_, step) = api.post("/api/sim/step", json!({"ms": 1000})).await;
    let first_batch = step["cursor"].as_u64().unwrap();

    let resp = api.client.get(format!("{}/api/events/stream", api.base)).send().await.unwrap();
    assert_eq!(resp.headers()["content-type"], "text/event-stream");
    let mut body = resp.bytes_stream();
    let mut buffer = String::new();
    let mut ids = Vec::new();
    let mut stepped = false;
    let target = loop {
        let chunk = tokio::time::timeout(Duration::from_secs(5), body.next())
            .await
            .expect("stream stalled")
            .unwrap()
            .unwrap();
        buffer.push_str(std::str::from_utf8(&chunk).unwrap());
        while let Some(end) = buffer.find("\n\n") {
            let frame: String = buffer.drain(..end + 2).collect();
            let id = frame.lines().find_map(|l| l.strip_prefix("id: ")).map(|v| v.parse::<u64>().unwrap());
            let data = frame.lines().find_map(|l| l.strip_prefix("data: "));
            if let (Some(id), Some(data)) = (id, data) {
                let event: SimEvent = serde_json::from_str(data).unwrap();
                assert_eq!(event.seq, id);
                ids.push(id);
            }
        }
        if !stepped && ids.last() == Some(&first_batch) {
            // Later events arrive on the same connection.
            let (_, step) = api.post("/api/sim/step", json!({"ms": 500})).await;
            assert!(step["cursor"].as_u64().unwrap() > first_batch);
            stepped = true;
        }
        if stepped && ids.last() == Some(&api.service.published().cursor) {
            break api.service.published().cursor;
        }
    };
    assert_eq!(ids, (1..=target).collect::<Vec<_>>());

    let resp = api
        .client
        .get(format!("{}/api/events/stream", api.base))
        .header("Last-Event-ID", "40")
        .send()
        .await
        .unwrap();
    let mut body = resp.bytes_stream();
    let chunk = body.next().await.unwrap().unwrap();
    let text = std::str::from_utf8(&chunk).unwrap();
    let first_id = text.lines().find_map(|l| l.strip_prefix("id: ")).unwrap();
    assert_eq!(first_id, "41");
}

#[tokio::test]
async fn plmn_patch_reaches_later_sib1_broadcasts() {
    let api = serve(None, None).await;
    api.post("/api/cells", cell(3, "001-01")).await;
    api.post("/api/sim/step", json!({"ms": 1000})).await;
    let (status, body) = api.patch("/api/cells/3", json!({"plmn": "999-99"})).await;
    assert_eq!(status, 200);
    assert_eq!(body["cell"]["config"]["plmn"], "999-99");
    assert_eq!(body["ack"]["applies_at_ms"], 1000);
    api.post("/api/sim/step", json!({"ms": 1000})).await;

    let sib1: Vec<(u64, String)> = api
        .all_events()
        .await
        .iter()
        .filter(|e| e["event_type"] == "Sib1Broadcast")
        .map(|e| (e["time_ms"].as_u64().unwrap(), e["detail"]["plmn"].as_str().unwrap().to_string()))
        .collect();
    assert!(sib1.iter().any(|(t, _)| *t > 1000));
    for (t, plmn) in sib1 {
        let expected = if t <= 1000 { "001-01" } else { "999-99" };
        assert_eq!(plmn, expected, "SIB1 at {t} ms");
    }
}

#[tokio::test]
async fn serial_increment_preset_schedules_five_updates() {
    let api = serve(None, None).await;
    api.post("/api/cells", cell(5, "001-01")).await;
    let (status, body) = api
        .post(
            "/api/presets/serial-increment-loop/apply",
            json!({"pci": 5, "mode": {"kind": "SerialIncrementLoop", "count": 5, "interval_ms": 1000}}),
        )
        .await;
    assert_eq!(status, 201, "{body}");
    let scheduled = body["scheduled"].as_array().unwrap();
    assert_eq!(scheduled.len(), 5);
    for (i, s) in scheduled.iter().enumerate() {
        assert_eq!(s["op"], "update_warning");
        assert_eq!(s["apply_at_ms"], 1000 * (i as u64 + 1));
    }
    let id = body["warnings"][0]["id"].as_u64().unwrap();
    let start_serial = body["warnings"][0]["serial_number"].as_u64().unwrap();

    api.post("/api/sim/run", json!({"until_ms": 6000})).await;
    let applied = api
        .all_events()
        .await
        .into_iter()
        .filter(|e| e["event_type"] == "ScheduledCommandApplied" && e["detail"]["command"] == "update_warning")
        .count();
    assert_eq!(applied, 5);
    let (_, w) = api.get(&format!("/api/warnings/{id}")).await;
    assert_ne!(w["serial_number"].as_u64().unwrap(), start_serial);
}

#[tokio::test]
async fn scenario_a_alert_is_served_with_spans() {
    let api = serve(Some(scenario_path("a_matching_plmn_spoof")), None).await;
    run_to_end(&api, "a_matching_plmn_spoof").await;
    let (status, alerts) = api.get("/api/ues/1/alerts").await;
    assert_eq!(status, 200);
    let alerts = alerts.as_array().unwrap();
    assert_eq!(alerts.len(), 1);
    let spans = alerts[0]["spans"].as_array().unwrap();
    assert!(spans.iter().any(|s| s["kind"] == "WebUrl"), "{spans:?}");
}

#[tokio::test]
async fn verdicts_match_an_offline_run() {
    let name = "verify_legitimate_network";
    let api = serve(None, None).await;
    let text = std::fs::read_to_string(scenario_path(name)).unwrap();
    let resp = api.client.post(format!("{}/api/scenario/load", api.base)).body(text).send().await.unwrap();
    assert_eq!(resp.status().as_u16(), 200);
    let scenario = run_to_end(&api, name).await;

    let (_, verdicts) = api.get("/api/ues/1/verdicts").await;
    let verdicts = verdicts.as_array().unwrap();
    assert_eq!(verdicts.len(), 1);
    assert_eq!(verdicts[0]["status"], "Verified");
    let matching = verdicts[0]["matching_pcis"].as_array().unwrap();
    assert!(matching.len() >= 2);

    let (sim, _) = run_scenario(&scenario).unwrap();
    let offline = serde_json::to_value(sim.ue(1).unwrap().verdicts()).unwrap();
    assert_eq!(Value::Array(verdicts.clone()), offline);
}

#[tokio::test]
async fn every_successful_mutation_logs_one_command() {
    let dir = tempfile::tempdir().unwrap();
    let log = dir.path().join("events.jsonl");
    let api = serve(None, Some(log.clone())).await;
    let sub = |imsi: &str| json!({"imsi": imsi, "display_name": "n", "hplmn": "001-01"});
    let requests: Vec<(reqwest::Method, &str, Option<Value>)> = vec![
        (reqwest::Method::POST, "/api/cells", Some(cell(1, "001-01"))),
        (reqwest::Method::POST, "/api/cells", Some(cell(1, "001-01"))),
        (reqwest::Method::POST, "/api/cells", Some(cell(2, "001-01"))),
        (reqwest::Method::POST, "/api/ues", Some(json!({"id": 1, "profile": "iphone-13"}))),
        (reqwest::Method::POST, "/api/topology/rx_power", Some(json!({"ue": 1, "pci": 1, "dbm": -70.0}))),
        (reqwest::Method::POST, "/api/topology/rx_power", Some(json!({"ue": 9, "pci": 1, "dbm": -70.0}))),
        (reqwest::Method::POST, "/api/topology/threshold", Some(json!({"dbm": -115.0}))),
        (reqwest::Method::POST, "/api/cells/1/warnings", Some(warning(1, "Test"))),
        (reqwest::Method::POST, "/api/cells/8/warnings", Some(warning(1, "Test"))),
        (reqwest::Method::PATCH, "/api/warnings/1", Some(warning(2, "Test again"))),
        (reqwest::Method::PATCH, "/api/cells/2?at_ms=3000", Some(json!({"tac": 9}))),
        (reqwest::Method::POST, "/api/subscribers", Some(sub("001010000000001"))),
        (reqwest::Method::POST, "/api/subscribers", Some(sub("001010000000001"))),
        (reqwest::Method::PUT, "/api/subscribers/001010000000001", Some(sub("001010000000001"))),
        (reqwest::Method::DELETE, "/api/subscribers/001010000000009", None),
        (reqwest::Method::PUT, "/api/verification_policy", Some(json!({"max_cells_to_scan": 2, "required_matches": 1, "scan_timeout_ms": 1000, "carrier_list": [1]}))),
        (reqwest::Method::POST, "/api/sim/step", Some(json!({"ms": 1000}))),
        (reqwest::Method::POST, "/api/jam", Some(json!({"ues": [1], "duration_ms": 500}))),
        (reqwest::Method::POST, "/api/presets/single/apply", Some(json!({"pci": 2}))),
        (reqwest::Method::DELETE, "/api/warnings/1", None),
        (reqwest::Method::DELETE, "/api/cells/2", None),
        (reqwest::Method::POST, "/api/sim/run", Some(json!({"duration_ms": 4000}))),
        (reqwest::Method::POST, "/api/sim/reset", None),
        (reqwest::Method::GET, "/api/snapshot", None),
    ];
    let mut succeeded = 0;
    let mut mutations = 0;
    for (method, path, body) in requests {
        let is_mutation = method != reqwest::Method::GET;
        let (status, resp) = api.call(method, path, body).await;
        if is_mutation {
            mutations += 1;
            if (200..300).contains(&status) {
                succeeded += 1;
            }
        }
        assert!(status < 500, "{path}: {resp}");
    }
    assert!(succeeded < mutations, "some requests were meant to fail");
    let records = log_records(&log);
    let commands = records.iter().filter(|e| e.event_type == "Command").count();
    assert_eq!(commands, succeeded);
}

#[tokio::test]
async fn scheduled_mutation_applies_later() {
    let api = serve(None, None).await;
    api.post("/api/cells", cell(4, "001-01")).await;
    let (status, body) = api.patch("/api/cells/4?at_ms=2000", json!({"tac": 42})).await;
    assert_eq!(status, 200);
    assert_eq!(body["ack"]["scheduled"], true);
    assert_eq!(body["ack"]["applies_at_ms"], 2000);
    assert_eq!(body["cell"]["config"]["tac"], 1);
    api.post("/api/sim/step", json!({"ms": 2000})).await;
    let (_, cell) = api.get("/api/cells/4").await;
    assert_eq!(cell["config"]["tac"], 42);
}

#[tokio::test]
async fn subscribers_round_trip_and_save_to_the_scenario_file() {
    let dir = tempfile::tempdir().unwrap();
    let file = dir.path().join("scenario.json");
    std::fs::copy(scenario_path("a_matching_plmn_spoof"), &file).unwrap();
    let api = serve(Some(file.clone()), None).await;

    let entry = json!({"imsi": "001010000000077", "display_name": "field unit", "hplmn": "001-01"});
    let (status, body) = api.post("/api/subscribers", entry.clone()).await;
    assert_eq!(status, 201, "{body}");
    assert_eq!(body["subscriber"], entry);
    assert_eq!(api.post("/api/subscribers", entry.clone()).await.0, 409);
    let bad = json!({"imsi": "12345", "display_name": "x", "hplmn": "001-01"});
    assert_eq!(api.post("/api/subscribers", bad).await.0, 422);

    let renamed = json!({"imsi": "001010000000077", "display_name": "renamed", "hplmn": "001-01"});
    assert_eq!(api.put("/api/subscribers/001010000000077", renamed.clone()).await.0, 200);
    assert_eq!(api.put("/api/subscribers/001010000000078", renamed.clone()).await.0, 422);
    assert_eq!(api.get("/api/subscribers/001010000000077").await.1, renamed);

    let (status, _) = api.post("/api/subscribers/save", json!({})).await;
    assert_eq!(status, 200);
    let saved = Scenario::from_path(&file).unwrap();
    let (_, listed) = api.get("/api/subscribers").await;
    assert_eq!(serde_json::to_value(&saved.subscribers).unwrap(), listed);

    assert_eq!(api.delete("/api/subscribers/001010000000077").await.0, 200);
    assert_eq!(api.get("/api/subscribers/001010000000077").await.0, 404);

    let bare = serve(None, None).await;
    assert_eq!(bare.post("/api/subscribers/save", json!({})).await.0, 409);
}

#[tokio::test]
async fn tapping_a_span_returns_the_interaction_trace() {
    let api = serve(Some(scenario_path("homoglyph_link")), None).await;
    run_to_end(&api, "homoglyph_link").await;
    let (status, body) = api.post("/api/ues/2/alerts/0/interact", json!({"span_index": 0})).await;
    assert_eq!(status, 200, "{body}");
    assert!(!body["trace"].is_null());
    let (status, _) = api.post("/api/ues/2/alerts/5/interact", json!({"span_index": 0})).await;
    assert_eq!(status, 404);
}

#[tokio::test]
async fn free_run_advances_until_paused() {
    let api = serve(Some(scenario_path("a_matching_plmn_spoof")), None).await;
    let (status, body) = api.post("/api/sim/run", json!({"realtime_ratio": 10.0})).await;
    assert_eq!(status, 200);
    assert_eq!(body["free_run_ratio"], 10.0);
    tokio::time::sleep(Duration::from_millis(400)).await;
    let (_, body) = api.post("/api/sim/run", json!({"pause": true})).await;
    let paused_at = body["now_ms"].as_u64().unwrap();
    assert!(paused_at > 0);
    tokio::time::sleep(Duration::from_millis(200)).await;
    let (_, status_body) = api.get("/api/status").await;
    assert_eq!(status_body["now_ms"], paused_at);
    assert!(status_body["free_run_ratio"].is_null());
    assert_eq!(api.post("/api/sim/run", json!({"realtime_ratio": -1.0})).await.0, 422);
}
