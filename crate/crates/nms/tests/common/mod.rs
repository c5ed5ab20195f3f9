#![allow(dead_code)]

use std::path::PathBuf;

use alertbed_nms::{ServeConfig, Server, SimService};
use reqwest::Method;
use serde_json::Value;

pub fn scenario_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join(format!("../core/scenarios/{name}.json"))
}

pub struct Api {
    pub base: String,
    pub client: reqwest::Client,
    pub service: SimService,
}

pub async fn serve(scenario: Option<PathBuf>, log: Option<PathBuf>) -> Api {
    let config = ServeConfig {
        bind: "127.0.0.1:0".into(),
        scenario,
        log,
        realtime_ratio: None,
    };
    let (addr, service) = Server::bind(&config).await.expect("server starts").spawn();
    Api {
        base: format!("http://{addr}"),
        client: reqwest::Client::new(),
        service,
    }
}

impl Api {
    pub async fn call(&self, method: Method, path: &str, body: Option<Value>) -> (u16, Value) {
        let mut req = self.client.request(method, format!("{}{path}", self.base));
        if let Some(body) = body {
            req = req.json(&body);
        }
        let resp = req.send().await.expect("request sent");
        let status = resp.status().as_u16();
        let text = resp.text().await.expect("body read");
        let value = serde_json::from_str(&text).unwrap_or(Value::String(text));
        (status, value)
    }

    pub async fn get(&self, path: &str) -> (u16, Value) {
        self.call(Method::GET, path, None).await
    }

    pub async fn post(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(Method::POST, path, Some(body)).await
    }

    pub async fn patch(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(Method::PATCH, path, Some(body)).await
    }

    pub async fn put(&self, path: &str, body: Value) -> (u16, Value) {
        self.call(Method::PUT, path, Some(body)).await
    }

    pub async fn delete(&self, path: &str) -> (u16, Value) {
        self.call(Method::DELETE, path, None).await
    }

    /// Every event so far, paging through the cursor API.
    pub async fn all_events(&self) -> Vec<Value> {
        let mut out = Vec::new();
        let mut cursor = 0;
        loop {
            let (status, page) = self.get(&format!("/api/events?since={cursor}&limit=500")).await;
            assert_eq!(status, 200);
            let events = page["events"].as_array().expect("events array").clone();
            if events.is_empty() {
                return out;
            }
            cursor = page["cursor"].as_u64().expect("cursor");
            out.extend(events);
        }
    }
}
