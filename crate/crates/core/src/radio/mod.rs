//! Broadcast cells: identity, SIB1 scheduling, warning SI slots and paging.
//!
//! A [`Cell`] owns the SI slots it advertises. Each active warning occupies
//! one slot per SIB8 segment; slot `k` is transmitted at a fixed offset inside
//! every SI period so consecutive transmissions of the same index are exactly
//! one period apart.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{self, CodecError, EncodedWarning, SiMessage, Sib8Segment, WarningPayload};

pub type Pci = u16;
pub type UeId = u32;
pub type WarningId = u32;

/// SI messages a cell may schedule.
pub const MAX_SI_ENTRIES: usize = 32;
pub const VALUE_TAG_MODULUS: u8 = 32;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RadioError {
    #[error("pci {0} already in use")]
    DuplicatePci(Pci),
    #[error("unknown cell {0}")]
    UnknownCell(Pci),
    #[error("cell {0} is not transmitting")]
    CellInactive(Pci),
    #[error("unknown warning {0}")]
    UnknownWarning(WarningId),
    #[error("cell {pci} would schedule {requested} SI messages, at most {MAX_SI_ENTRIES} allowed")]
    TooManySiMessages { pci: Pci, requested: usize },
    #[error("invalid PLMN {0:?}, expected MCC-MNC such as 001-01")]
    InvalidPlmn(String),
    #[error(transparent)]
    Codec(#[from] CodecError),
}

/// Public land mobile network identity, `MCC-MNC`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Plmn(String);

impl Plmn {
    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl FromStr for Plmn {
    type Err = RadioError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let ok = s.split_once('-').is_some_and(|(mcc, mnc)| {
            mcc.len() == 3
                && (2..=3).contains(&mnc.len())
                && mcc.bytes().chain(mnc.bytes()).all(|b| b.is_ascii_digit())
        });
        if ok {
            Ok(Self(s.to_string()))
        } else {
            Err(RadioError::InvalidPlmn(s.to_string()))
        }
    }
}

impl fmt::Display for Plmn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl Serialize for Plmn {
    fn serialize<S: serde::Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for Plmn {
    fn deserialize<D: serde::Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        String::deserialize(d)?.parse().map_err(serde::de::Error::custom)
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellConfig {
    pub pci: Pci,
    pub plmn: Plmn,
    pub tac: u32,
    pub cell_identity: u64,
    pub carrier: u32,
    /// Scenario labelling only. Never broadcast.
    #[serde(default)]
    pub is_rogue: bool,
    #[serde(default = "yes")]
    pub tx_active: bool,
    /// A subscriber store backs registration. Rogue cells have none.
    #[serde(default)]
    pub core_network: bool,
    /// SI size budget used when segmenting this cell's warnings.
    #[serde(default = "default_si_budget")]
    pub si_budget: usize,
}

fn default_si_budget() -> usize {
    codec::MAX_SI_OCTETS
}

impl CellConfig {
    pub fn validate(&self) -> Result<(), RadioError> {
        codec::pages_per_segment(self.si_budget)?;
        if self.si_budget > codec::MAX_SI_OCTETS {
            return Err(CodecError::SiOverflow { len: self.si_budget }.into());
        }
        Ok(())
    }
}

/// Partial update of a cell's broadcast parameters.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct CellPatch {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub plmn: Option<Plmn>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tac: Option<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cell_identity: Option<u64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tx_active: Option<bool>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub core_network: Option<bool>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SchedulingEntry {
    pub si_index: u8,
    pub period_ms: u64,
    pub contains_sib8: bool,
}

/// What a UE decodes from SIB1.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Sib1Info {
    pub plmn: Plmn,
    pub tac: u32,
    pub cell_identity: u64,
    pub scheduling: Vec<SchedulingEntry>,
    pub value_tag: u8,
}

impl Sib1Info {
    pub fn sib8_indices(&self) -> BTreeSet<u8> {
        self.scheduling
            .iter()
            .filter(|e| e.contains_sib8)
            .map(|e| e.si_index)
            .collect()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct PagingMessage {
    pub si_modification: bool,
    pub etws_cmas_indication: bool,
}

impl PagingMessage {
    pub const WARNING: Self = Self {
        si_modification: true,
        etws_cmas_indication: true,
    };
    pub const MODIFICATION: Self = Self {
        si_modification: true,
        etws_cmas_indication: false,
    };

    fn merge(self, other: Self) -> Self {
        Self {
            si_modification: self.si_modification || other.si_modification,
            etws_cmas_indication: self.etws_cmas_indication || other.etws_cmas_indication,
        }
    }
}

/// Static received power per (UE, cell), plus jamming.
#[derive(Debug, Clone, Default)]
pub struct RadioTopology {
    pub rx_power: BTreeMap<(UeId, Pci), f64>,
    pub detection_threshold: f64,
    /// Jam expiry per (UE, cell).
    pub jammed: BTreeMap<(UeId, Pci), u64>,
}

impl RadioTopology {
    pub fn new(detection_threshold: f64) -> Self {
        Self {
            detection_threshold,
            ..Self::default()
        }
    }

    /// Effective received power: `None` when the UE cannot decode the cell.
    pub fn effective_rx(&self, ue: UeId, pci: Pci, now: u64) -> Option<f64> {
        if self.jammed.get(&(ue, pci)).is_some_and(|&until| until > now) {
            return None;
        }
        self.rx_power
            .get(&(ue, pci))
            .copied()
            .filter(|&p| p >= self.detection_threshold)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ActiveWarning {
    pub id: WarningId,
    /// `None` for warnings injected pre-encoded.
    pub payload: Option<WarningPayload>,
    pub encoded: EncodedWarning,
    /// SI index carrying each segment, by segment number.
    pub si_indices: Vec<u8>,
    #[serde(skip)]
    pub segments: Vec<Sib8Segment>,
}

#[derive(Debug, Clone)]
struct PendingUpdate {
    payload: Option<WarningPayload>,
    encoded: EncodedWarning,
    segments: Vec<Sib8Segment>,
}

/// Runtime state of one broadcasting cell.
#[derive(Debug, Clone)]
pub struct Cell {
    pub config: CellConfig,
    pub started_at: u64,
    pub value_tag: u8,
    pub warnings: BTreeMap<WarningId, ActiveWarning>,
    /// SI index -> (warning, segment number).
    slots: BTreeMap<u8, (WarningId, usize)>,
    pending: BTreeMap<WarningId, PendingUpdate>,
    pub pending_paging: Option<PagingMessage>,
    si_period_ms: u64,
}

impl Cell {
    pub fn new(config: CellConfig, started_at: u64, si_period_ms: u64) -> Self {
        Self {
            config,
            started_at,
            value_tag: 0,
            warnings: BTreeMap::new(),
            slots: BTreeMap::new(),
            pending: BTreeMap::new(),
            pending_paging: None,
            si_period_ms,
        }
    }

    pub fn pci(&self) -> Pci {
        self.config.pci
    }

    fn bump_value_tag(&mut self) {
        self.value_tag = (self.value_tag + 1) % VALUE_TAG_MODULUS;
    }

    pub fn queue_paging(&mut self, msg: PagingMessage) {
        self.pending_paging = Some(match self.pending_paging {
            Some(prev) => prev.merge(msg),
            None => msg,
        });
    }

    pub fn sib1(&self) -> Sib1Info {
        Sib1Info {
            plmn: self.config.plmn.clone(),
            tac: self.config.tac,
            cell_identity: self.config.cell_identity,
            scheduling: self
                .slots
                .keys()
                .map(|&si_index| SchedulingEntry {
                    si_index,
                    period_ms: self.si_period_ms,
                    contains_sib8: true,
                })
                .collect(),
            value_tag: self.value_tag,
        }
    }

    pub fn si_indices(&self) -> impl Iterator<Item = u8> + '_ {
        self.slots.keys().copied()
    }

    pub fn slot_count(&self) -> usize {
        self.slots.len()
    }

    /// Transmission offset of an SI index inside its period.
    pub fn si_offset(&self, si_index: u8) -> u64 {
        u64::from(si_index) * self.si_period_ms / MAX_SI_ENTRIES as u64
    }

    /// The SI message currently carried on `si_index`.
    pub fn si_message(&self, si_index: u8) -> Option<SiMessage> {
        let &(warning, seg) = self.slots.get(&si_index)?;
        let segment = &self.warnings.get(&warning)?.segments[seg];
        SiMessage::new(si_index, segment).ok()
    }

    pub fn slot_owner(&self, si_index: u8) -> Option<(WarningId, usize)> {
        self.slots.get(&si_index).copied()
    }

    fn free_indices(&self) -> impl Iterator<Item = u8> + '_ {
        (0..MAX_SI_ENTRIES as u8).filter(|i| !self.slots.contains_key(i))
    }

    fn ensure_capacity(&self, extra: usize) -> Result<(), RadioError> {
        let requested = self.slots.len() + extra;
        if requested > MAX_SI_ENTRIES {
            return Err(RadioError::TooManySiMessages {
                pci: self.pci(),
                requested,
            });
        }
        Ok(())
    }

    /// Add warnings, allocating SI indices. With `interleave`, indices are
    /// handed out round-robin over segment numbers so that transmission order
    /// alternates between warnings.
    pub fn add_warnings(
        &mut self,
        batch: Vec<(WarningId, Option<WarningPayload>, EncodedWarning, Vec<Sib8Segment>)>,
        interleave: bool,
    ) -> Result<(), RadioError> {
        if !self.config.tx_active {
            return Err(RadioError::CellInactive(self.pci()));
        }
        self.ensure_capacity(batch.iter().map(|b| b.3.len()).sum())?;

        let order: Vec<(usize, usize)> = if interleave {
            let depth = batch.iter().map(|b| b.3.len()).max().unwrap_or(0);
            (0..depth)
                .flat_map(|seg| (0..batch.len()).map(move |w| (w, seg)))
                .filter(|&(w, seg)| seg < batch[w].3.len())
                .collect()
        } else {
            batch
                .iter()
                .enumerate()
                .flat_map(|(w, b)| (0..b.3.len()).map(move |seg| (w, seg)))
                .collect()
        };
        let free: Vec<u8> = self.free_indices().take(order.len()).collect();
        let mut indices: Vec<Vec<u8>> = batch.iter().map(|b| vec![0; b.3.len()]).collect();
        for (&(w, seg), &si) in order.iter().zip(&free) {
            indices[w][seg] = si;
        }
        for ((id, payload, encoded, segments), si_indices) in batch.into_iter().zip(indices) {
            for (seg, &si) in si_indices.iter().enumerate() {
                self.slots.insert(si, (id, seg));
            }
            self.warnings.insert(
                id,
                ActiveWarning {
                    id,
                    payload,
                    encoded,
                    si_indices,
                    segments,
                },
            );
        }
        self.bump_value_tag();
        Ok(())
    }

    /// Stage a replacement, applied at the next SI period boundary.
    pub fn stage_update(
        &mut self,
        id: WarningId,
        payload: Option<WarningPayload>,
        encoded: EncodedWarning,
        segments: Vec<Sib8Segment>,
    ) -> Result<(), RadioError> {
        let current = self.warnings.get(&id).ok_or(RadioError::UnknownWarning(id))?;
        let extra = segments.len().saturating_sub(current.segments.len());
        self.ensure_capacity(extra)?;
        self.pending.insert(
            id,
            PendingUpdate {
                payload,
                encoded,
                segments,
            },
        );
        Ok(())
    }

    /// Apply staged updates. Returns the ids replaced.
    pub fn apply_pending(&mut self) -> Vec<WarningId> {
        let pending = std::mem::take(&mut self.pending);
        let mut applied = Vec::new();
        for (id, update) in pending {
            let Some(old) = self.warnings.remove(&id) else {
                continue;
            };
            let mut si_indices: Vec<u8> = old.si_indices.iter().take(update.segments.len()).copied().collect();
            for &si in &old.si_indices[si_indices.len()..] {
                self.slots.remove(&si);
            }
            while si_indices.len() < update.segments.len() {
                let Some(si) = self.free_indices().next() else { break };
                self.slots.insert(si, (id, si_indices.len()));
                si_indices.push(si);
            }
            for (seg, &si) in si_indices.iter().enumerate() {
                self.slots.insert(si, (id, seg));
            }
            self.warnings.insert(
                id,
                ActiveWarning {
                    id,
                    payload: update.payload,
                    encoded: update.encoded,
                    si_indices,
                    segments: update.segments,
                },
            );
            applied.push(id);
        }
        if !applied.is_empty() {
            self.bump_value_tag();
        }
        applied
    }

    pub fn stop_warning(&mut self, id: WarningId) -> Result<ActiveWarning, RadioError> {
        let w = self.warnings.remove(&id).ok_or(RadioError::UnknownWarning(id))?;
        for si in &w.si_indices {
            self.slots.remove(si);
        }
        self.pending.remove(&id);
        self.bump_value_tag();
        Ok(w)
    }

    /// Drop every warning. Returns the ids removed.
    pub fn clear_warnings(&mut self) -> Vec<WarningId> {
        let ids: Vec<WarningId> = self.warnings.keys().copied().collect();
        self.warnings.clear();
        self.slots.clear();
        self.pending.clear();
        if !ids.is_empty() {
            self.bump_value_tag();
        }
        ids
    }

    pub fn apply_patch(&mut self, patch: &CellPatch) {
        if let Some(plmn) = &patch.plmn {
            self.config.plmn = plmn.clone();
        }
        if let Some(tac) = patch.tac {
            self.config.tac = tac;
        }
        if let Some(ci) = patch.cell_identity {
            self.config.cell_identity = ci;
        }
        if let Some(core) = patch.core_network {
            self.config.core_network = core;
        }
        if let Some(tx) = patch.tx_active {
            self.config.tx_active = tx;
        }
    }
}

/// Encode and segment a payload for broadcast.
pub fn prepare(payload: &WarningPayload, si_budget: usize) -> Result<(EncodedWarning, Vec<Sib8Segment>), CodecError> {
    let encoded = codec::paginate(payload)?;
    let segments = codec::segment(&encoded, si_budget)?;
    Ok((encoded, segments))
}
