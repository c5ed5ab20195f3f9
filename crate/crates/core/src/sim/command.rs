use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use super::{Scenario, SimError, SimSettings};
use crate::codec::{EncodedWarning, WarningPayload};
use crate::control::subscribers::validate_imsi;
use crate::control::{SubscriberEntry, WarningPreset};
use crate::radio::{CellConfig, CellPatch, Pci, Plmn, UeId, WarningId};
use crate::ue::UeProfile;
use crate::verify::VerificationPolicy;

fn yes() -> bool {
    true
}

/// Map keys inside an internally tagged enum reach us as strings whatever
/// their JSON spelling, so parse them by hand.
fn ue_keyed<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BTreeMap<UeId, f64>, D::Error> {
    let raw = BTreeMap::<String, f64>::deserialize(d)?;
    raw.into_iter()
        .map(|(k, v)| {
            k.parse()
                .map(|ue| (ue, v))
                .map_err(|_| serde::de::Error::custom(format!("invalid UE id {k:?}")))
        })
        .collect()
}

/// A UE as declared by a scenario or the API.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UeSpec {
    pub id: UeId,
    pub profile: String,
    /// Overrides the profile's home network.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub hplmn: Option<Plmn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub imsi: Option<String>,
    #[serde(default)]
    pub power_on_ms: u64,
    #[serde(default = "yes")]
    pub data_service: bool,
    #[serde(default)]
    pub cross_cell_verification: bool,
    #[serde(default)]
    pub locked: bool,
}

/// Every state change goes through one of these. Commands are recorded in
/// the event log, so replaying the records rebuilds the same state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "op", rename_all = "snake_case")]
pub enum Command {
    Configure {
        settings: SimSettings,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        tlds: Option<Vec<String>>,
    },
    DefineProfile {
        profile: UeProfile,
    },
    AddCell {
        config: CellConfig,
        #[serde(default, skip_serializing_if = "BTreeMap::is_empty", deserialize_with = "ue_keyed")]
        initial_power: BTreeMap<UeId, f64>,
    },
    UpdateCell {
        pci: Pci,
        patch: CellPatch,
    },
    StopCell {
        pci: Pci,
    },
    AddUe {
        ue: UeSpec,
    },
    SetRxPower {
        ue: UeId,
        pci: Pci,
        /// `None` removes the link.
        dbm: Option<f64>,
    },
    SetDetectionThreshold {
        dbm: f64,
    },
    AddSubscriber {
        entry: SubscriberEntry,
    },
    UpdateSubscriber {
        entry: SubscriberEntry,
    },
    RemoveSubscriber {
        imsi: String,
    },
    SetVerificationPolicy {
        policy: VerificationPolicy,
    },
    StartWarning {
        pci: Pci,
        payload: WarningPayload,
        #[serde(default)]
        with_paging: bool,
    },
    StartWarningBatch {
        pci: Pci,
        payloads: Vec<WarningPayload>,
        #[serde(default)]
        with_paging: bool,
        #[serde(default)]
        interleave: bool,
    },
    UpdateWarning {
        warning_id: WarningId,
        payload: WarningPayload,
    },
    StopWarning {
        warning_id: WarningId,
    },
    /// Broadcast a pre-encoded warning without the page limit check.
    InjectWarning {
        pci: Pci,
        warning: EncodedWarning,
        #[serde(default)]
        with_paging: bool,
    },
    ApplyPreset {
        preset: WarningPreset,
        pci: Pci,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        warning_id: Option<WarningId>,
    },
    Jam {
        ues: Vec<UeId>,
        duration_ms: u64,
    },
    Interact {
        ue: UeId,
        alert_index: usize,
        span_index: usize,
    },
    Run {
        until_ms: u64,
    },
    Reset,
    /// Reset, then set up the scenario and queue its timeline.
    LoadScenario {
        scenario: Box<Scenario>,
    },
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Configure { .. } => "configure",
            Self::DefineProfile { .. } => "define_profile",
            Self::AddCell { .. } => "add_cell",
            Self::UpdateCell { .. } => "update_cell",
            Self::StopCell { .. } => "stop_cell",
            Self::AddUe { .. } => "add_ue",
            Self::SetRxPower { .. } => "set_rx_power",
            Self::SetDetectionThreshold { .. } => "set_detection_threshold",
            Self::AddSubscriber { .. } => "add_subscriber",
            Self::UpdateSubscriber { .. } => "update_subscriber",
            Self::RemoveSubscriber { .. } => "remove_subscriber",
            Self::SetVerificationPolicy { .. } => "set_verification_policy",
            Self::StartWarning { .. } => "start_warning",
            Self::StartWarningBatch { .. } => "start_warning_batch",
            Self::UpdateWarning { .. } => "update_warning",
            Self::StopWarning { .. } => "stop_warning",
            Self::InjectWarning { .. } => "inject_warning",
            Self::ApplyPreset { .. } => "apply_preset",
            Self::Jam { .. } => "jam",
            Self::Interact { .. } => "interact",
            Self::Run { .. } => "run",
            Self::Reset => "reset",
            Self::LoadScenario { .. } => "load_scenario",
        }
    }

    /// Checks that need no simulation state.
    pub fn validate(&self) -> Result<(), SimError> {
        match self {
            Self::Configure { settings, .. } => settings.validate(),
            Self::DefineProfile { profile } => Ok(profile.validate()?),
            Self::AddCell { config, .. } => Ok(config.validate()?),
            Self::AddUe { ue } => match &ue.imsi {
                Some(imsi) => Ok(validate_imsi(imsi)?),
                None => Ok(()),
            },
            Self::AddSubscriber { entry } | Self::UpdateSubscriber { entry } => Ok(validate_imsi(&entry.imsi)?),
            Self::SetVerificationPolicy { policy } => Ok(policy.validate()?),
            Self::StartWarning { payload, .. } | Self::UpdateWarning { payload, .. } => Ok(payload.validate()?),
            Self::StartWarningBatch { payloads, .. } => {
                if payloads.is_empty() {
                    return Err(SimError::InvalidCommand("payloads must not be empty".into()));
                }
                payloads.iter().try_for_each(|p| p.validate().map_err(SimError::from))
            }
            Self::ApplyPreset { preset, .. } => preset.validate().map_err(SimError::InvalidCommand),
            Self::LoadScenario { scenario } => scenario
                .validate()
                .map_err(|e| SimError::InvalidCommand(e.to_string())),
            _ => Ok(()),
        }
    }

    /// Whether the command may be scheduled for a later simulated time.
    pub fn schedulable(&self) -> bool {
        !matches!(
            self,
            Self::Configure { .. } | Self::Run { .. } | Self::Reset | Self::LoadScenario { .. }
        )
    }
}
