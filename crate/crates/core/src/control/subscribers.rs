use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::radio::Plmn;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum SubscriberError {
    #[error("IMSI must be exactly 15 digits, got {0:?}")]
    InvalidImsi(String),
    #[error("subscriber {0} already exists")]
    Duplicate(String),
    #[error("unknown subscriber {0}")]
    Unknown(String),
}

pub fn validate_imsi(imsi: &str) -> Result<(), SubscriberError> {
    if imsi.len() == 15 && imsi.bytes().all(|b| b.is_ascii_digit()) {
        Ok(())
    } else {
        Err(SubscriberError::InvalidImsi(imsi.to_string()))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubscriberEntry {
    pub imsi: String,
    pub display_name: String,
    pub hplmn: Plmn,
}

/// Subscribers known to legitimate core networks, keyed by IMSI.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SubscriberStore(BTreeMap<String, SubscriberEntry>);

impl SubscriberStore {
    pub fn add(&mut self, entry: SubscriberEntry) -> Result<(), SubscriberError> {
        validate_imsi(&entry.imsi)?;
        if self.0.contains_key(&entry.imsi) {
            return Err(SubscriberError::Duplicate(entry.imsi));
        }
        self.0.insert(entry.imsi.clone(), entry);
        Ok(())
    }

    pub fn update(&mut self, entry: SubscriberEntry) -> Result<(), SubscriberError> {
        let slot = self
            .0
            .get_mut(&entry.imsi)
            .ok_or_else(|| SubscriberError::Unknown(entry.imsi.clone()))?;
        *slot = entry;
        Ok(())
    }

    pub fn remove(&mut self, imsi: &str) -> Result<SubscriberEntry, SubscriberError> {
        self.0
            .remove(imsi)
            .ok_or_else(|| SubscriberError::Unknown(imsi.to_string()))
    }

    pub fn get(&self, imsi: &str) -> Option<&SubscriberEntry> {
        self.0.get(imsi)
    }

    pub fn entries(&self) -> impl Iterator<Item = &SubscriberEntry> {
        self.0.values()
    }
}
