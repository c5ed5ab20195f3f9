//! Follow the server-sent event stream while the simulation advances, the
//! way the operator console does.
//!
//! ```text
//! cargo run -p alertbed-nms --example event_stream
//! ```

use std::path::PathBuf;

use alertbed::SimEvent;
use alertbed_nms::{ServeConfig, Server};
use futures::StreamExt;

#[tokio::main]
async fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ServeConfig {
        bind: "127.0.0.1:0".into(),
        scenario: Some(PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/scenarios/jam_reselection.json")),
        ..ServeConfig::default()
    };
    let (addr, _service) = Server::bind(&config).await?.spawn();
    let http = reqwest::Client::new();

    // Run at 20x wall-clock speed; the stream delivers events as they happen.
    http.post(format!("http://{addr}/api/sim/run"))
        .json(&serde_json::json!({"realtime_ratio": 20.0}))
        .send()
        .await?;

    let mut stream = http.get(format!("http://{addr}/api/events/stream")).send().await?.bytes_stream();
    let mut buffer = String::new();
    'read: while let Some(chunk) = stream.next().await {
        buffer.push_str(std::str::from_utf8(&chunk?)?);
        while let Some(end) = buffer.find("\n\n") {
            let frame: String = buffer.drain(..end + 2).collect();
            let Some(data) = frame.lines().find_map(|l| l.strip_prefix("data: ")) else { continue };
            let event: SimEvent = serde_json::from_str(data)?;
            if event.entity.starts_with("ue:") {
                println!("{:>6} ms  #{:<4} {:<6} {}", event.time_ms, event.seq, event.entity, event.event_type);
            }
            if event.time_ms >= 6000 {
                break 'read;
            }
        }
    }
    Ok(())
}
