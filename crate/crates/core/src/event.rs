//! Event log records.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use serde_json::Value;

pub type Detail = BTreeMap<String, Value>;

/// One line of the event log. Field order is the serialization order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimEvent {
    pub time_ms: u64,
    pub seq: u64,
    pub entity: String,
    pub event_type: String,
    pub detail: Detail,
}

impl SimEvent {
    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("events serialize")
    }

    pub fn get(&self, key: &str) -> Option<&Value> {
        self.detail.get(key)
    }

    pub fn get_u64(&self, key: &str) -> Option<u64> {
        self.detail.get(key).and_then(Value::as_u64)
    }
}

pub fn detail<I, K>(pairs: I) -> Detail
where
    I: IntoIterator<Item = (K, Value)>,
    K: Into<String>,
{
    pairs.into_iter().map(|(k, v)| (k.into(), v)).collect()
}

pub fn cell_entity(pci: u16) -> String {
    format!("cell:{pci}")
}

pub fn ue_entity(id: u32) -> String {
    format!("ue:{id}")
}

/// Serialize events as JSON lines.
pub fn to_jsonl(events: &[SimEvent]) -> String {
    let mut out = String::new();
    for e in events {
        out.push_str(&e.to_json_line());
        out.push('\n');
    }
    out
}

pub fn parse_jsonl(text: &str) -> Result<Vec<SimEvent>, serde_json::Error> {
    text.lines()
        .filter(|l| !l.trim().is_empty())
        .map(serde_json::from_str)
        .collect()
}
