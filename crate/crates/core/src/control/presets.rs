use serde::{Deserialize, Serialize};

use crate::codec::{Coding, WarningPayload, MAX_PAGES};

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind")]
pub enum PresetMode {
    Single,
    /// Repeat the template text until it fills exactly `pages` pages.
    MultiSegment { pages: u8 },
    /// Start the warning, then re-broadcast it `count` times with the serial
    /// number incremented each `interval_ms`. Applied to an existing warning,
    /// only the updates are issued.
    SerialIncrementLoop { count: u32, interval_ms: u64 },
    /// `count` warnings with consecutive serials whose segments alternate.
    ParallelInterleaved { count: u32 },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WarningPreset {
    pub name: String,
    pub payload: WarningPayload,
    pub mode: PresetMode,
    #[serde(default)]
    pub with_paging: bool,
}

/// Concrete operations a preset turns into.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PresetPlan {
    /// Warnings to start now, as one batch.
    pub start: Vec<WarningPayload>,
    pub interleave: bool,
    /// Updates of the started (or targeted) warning, by delay from now.
    pub updates: Vec<(u64, WarningPayload)>,
}

impl WarningPreset {
    pub fn validate(&self) -> Result<(), String> {
        match self.mode {
            PresetMode::MultiSegment { pages } if pages == 0 || pages as usize > MAX_PAGES => {
                Err(format!("pages must be between 1 and {MAX_PAGES}"))
            }
            PresetMode::SerialIncrementLoop { count, interval_ms } if count == 0 || interval_ms == 0 => {
                Err("count and interval_ms must be positive".into())
            }
            PresetMode::ParallelInterleaved { count: 0 } => Err("count must be positive".into()),
            _ if self.payload.text.is_empty() => Err("payload text must not be empty".into()),
            _ => Ok(()),
        }
    }

    /// Expand against `target`, the current payload of an existing warning
    /// when the preset is applied to one.
    pub fn expand(&self, target: Option<&WarningPayload>) -> PresetPlan {
        let base = target.unwrap_or(&self.payload);
        let with_serial = |delta: u32| WarningPayload {
            serial_number: base.serial_number.wrapping_add(delta as u16),
            ..base.clone()
        };
        let fresh = |payloads: Vec<WarningPayload>| if target.is_some() { Vec::new() } else { payloads };
        match self.mode {
            PresetMode::Single => PresetPlan {
                start: fresh(vec![self.payload.clone()]),
                interleave: false,
                updates: Vec::new(),
            },
            PresetMode::MultiSegment { pages } => {
                let mut payload = self.payload.clone();
                let want = pages as usize * payload.coding.chars_per_page();
                payload.text = self.payload.text.chars().chain(std::iter::once(' ')).cycle().take(want).collect();
                PresetPlan {
                    start: fresh(vec![payload]),
                    interleave: false,
                    updates: Vec::new(),
                }
            }
            PresetMode::SerialIncrementLoop { count, interval_ms } => PresetPlan {
                start: fresh(vec![self.payload.clone()]),
                interleave: false,
                updates: (1..=count).map(|k| (u64::from(k) * interval_ms, with_serial(k))).collect(),
            },
            PresetMode::ParallelInterleaved { count } => PresetPlan {
                start: (0..count).map(with_serial).collect(),
                interleave: true,
                updates: Vec::new(),
            },
        }
    }
}

fn template(serial: u16, text: &str) -> WarningPayload {
    WarningPayload::new(4370, serial, Coding::detect(text), text)
}

/// Presets offered by the control API.
pub fn builtin() -> Vec<WarningPreset> {
    let text = "Presidential Alert: this is a test of the emergency alert system.";
    vec![
        WarningPreset {
            name: "single".into(),
            payload: template(1, text),
            mode: PresetMode::Single,
            with_paging: true,
        },
        WarningPreset {
            name: "multi-segment".into(),
            payload: template(1, text),
            mode: PresetMode::MultiSegment { pages: 6 },
            with_paging: true,
        },
        WarningPreset {
            name: "serial-increment-loop".into(),
            payload: template(1, text),
            mode: PresetMode::SerialIncrementLoop {
                count: 5,
                interval_ms: 1000,
            },
            with_paging: true,
        },
        WarningPreset {
            name: "parallel-interleaved".into(),
            payload: template(1, &text.repeat(9)),
            mode: PresetMode::ParallelInterleaved { count: 3 },
            with_paging: true,
        },
    ]
}

pub fn find(name: &str) -> Option<WarningPreset> {
    builtin().into_iter().find(|p| p.name == name)
}
