use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::UeError;
use crate::content::ParserProfileFlags;
use crate::radio::Plmn;

const BUNDLED: &str = include_str!("../../data/profiles.json");

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DisplayPolicy {
    All,
    LastOnly,
}

/// Device quirks observed on real handsets.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct UeProfile {
    pub name: String,
    pub hplmn: Plmn,
    pub supports_segmentation: bool,
    pub multi_warning_display: DisplayPolicy,
    pub max_parallel_reassemblies: u32,
    #[serde(default)]
    pub parser_flags: ParserProfileFlags,
    #[serde(default = "default_retries")]
    pub registration_retries: u32,
}

fn default_retries() -> u32 {
    3
}

impl UeProfile {
    pub fn validate(&self) -> Result<(), UeError> {
        if self.name.trim().is_empty() {
            return Err(UeError::InvalidProfile("name must not be empty".into()));
        }
        if self.max_parallel_reassemblies == 0 {
            return Err(UeError::InvalidProfile(format!(
                "{}: max_parallel_reassemblies must be at least 1",
                self.name
            )));
        }
        if self.registration_retries == 0 {
            return Err(UeError::InvalidProfile(format!(
                "{}: registration_retries must be at least 1",
                self.name
            )));
        }
        Ok(())
    }
}

/// Named profiles available to scenarios.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProfileRegistry(BTreeMap<String, UeProfile>);

impl ProfileRegistry {
    pub fn from_json(text: &str) -> Result<Self, UeError> {
        let profiles: Vec<UeProfile> =
            serde_json::from_str(text).map_err(|e| UeError::InvalidProfile(e.to_string()))?;
        let mut registry = Self(BTreeMap::new());
        for p in profiles {
            registry.insert(p)?;
        }
        Ok(registry)
    }

    /// The five handsets from the reference test campaign.
    pub fn bundled() -> Self {
        Self::from_json(BUNDLED).expect("bundled profiles are valid")
    }

    pub fn insert(&mut self, profile: UeProfile) -> Result<(), UeError> {
        profile.validate()?;
        self.0.insert(profile.name.clone(), profile);
        Ok(())
    }

    pub fn get(&self, name: &str) -> Result<&UeProfile, UeError> {
        self.0.get(name).ok_or_else(|| UeError::UnknownProfile(name.to_string()))
    }

    pub fn names(&self) -> impl Iterator<Item = &str> {
        self.0.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = &UeProfile> {
        self.0.values()
    }
}

impl Default for ProfileRegistry {
    fn default() -> Self {
        Self::bundled()
    }
}
