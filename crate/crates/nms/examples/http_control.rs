//! Serve an empty testbed in-process and build scenario A through the HTTP
//! API: a legitimate cell, a stronger rogue and one handset, then a warning
//! on the rogue.
//!
//! ```text
//! cargo run -p alertbed-nms --example http_control
//! ```

use alertbed_nms::{ServeConfig, Server};
use serde_json::{json, Value};

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ServeConfig {
        bind: "127.0.0.1:0".into(),
        ..ServeConfig::default()
    };
    let (addr, _service) = Server::bind(&config).await?.spawn();
    let base = format!("http://{addr}/api");
    let http = reqwest::Client::new();
    let send = |method: reqwest::Method, path: &str, body: Option<Value>| {
        let mut req = http.request(method, format!("{base}{path}"));
        if let Some(body) = body {
            req = req.json(&body);
        }
        async move {
            let resp = req.send().await?;
            let status = resp.status();
            let body: Value = resp.json().await?;
            println!("{status} {}", body.to_string().chars().take(160).collect::<String>());
            Ok::<Value, reqwest::Error>(body)
        }
    };
    use reqwest::Method as M;

    send(M::POST, "/ues", Some(json!({"id": 1, "profile": "fairphone-5", "imsi": "001010000000001"}))).await?;
    send(M::POST, "/subscribers", Some(json!({"imsi": "001010000000001", "display_name": "demo", "hplmn": "001-01"}))).await?;
    for (pci, dbm, rogue) in [(1, -85.0, false), (66, -60.0, true)] {
        let config = json!({"pci": pci, "plmn": "001-01", "tac": 7, "cell_identity": pci, "carrier": 1,
                            "is_rogue": rogue, "core_network": !rogue});
        send(M::POST, "/cells", Some(json!({"config": config, "initial_power": {"1": dbm}}))).await?;
    }
    send(
        M::POST,
        "/cells/66/warnings",
        Some(json!({"message_identifier": 4370, "serial_number": 1,
                    "text": "Evacuate now. Details: https://tinyurl.com/x9k"})),
    )
    .await?;
    // A 16-page warning is refused at the API boundary.
    send(
        M::POST,
        "/cells/66/warnings",
        Some(json!({"message_identifier": 4370, "serial_number": 2, "text": "x".repeat(1396)})),
    )
    .await?;

    send(M::POST, "/sim/run", Some(json!({"until_ms": 12_000}))).await?;
    let alerts = send(M::GET, "/ues/1/alerts", None).await?;
    println!("\nUE 1 shows {} alert(s):", alerts.as_array().map_or(0, Vec::len));
    for alert in alerts.as_array().into_iter().flatten() {
        println!("  [{} ms, pci {}] {}", alert["time_ms"], alert["pci"], alert["text"]);
    }
    let ue = send(M::GET, "/ues/1", None).await?;
    println!("serving cell now: {}", ue["serving_pci"]);
    Ok(())
}
