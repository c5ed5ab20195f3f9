//! Cross-cell verification of received warnings.
//!
//! After an alert is displayed, the UE listens to neighbouring cells on a
//! second receive chain, one cell at a time, and looks for the same warning.
//! Matching is by [`content_hash`] over the reassembled warning, so a neighbour
//! that segments the warning differently still matches. The session is purely
//! passive and never transmits.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::codec::{content_hash, reassemble, ContentDigest, EncodedWarning, Sib8Segment};
use crate::radio::{Pci, Sib1Info};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum VerifyError {
    #[error("a verification session is already running")]
    AlreadyVerifying,
    #[error("invalid verification policy: {0}")]
    InvalidPolicy(String),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationPolicy {
    pub max_cells_to_scan: u32,
    pub required_matches: u32,
    pub scan_timeout_ms: u64,
    pub carrier_list: Vec<u32>,
}

impl VerificationPolicy {
    pub fn validate(&self) -> Result<(), VerifyError> {
        if self.max_cells_to_scan == 0 {
            return Err(VerifyError::InvalidPolicy("max_cells_to_scan must be at least 1".into()));
        }
        if self.required_matches == 0 {
            return Err(VerifyError::InvalidPolicy("required_matches must be at least 1".into()));
        }
        if self.required_matches > self.max_cells_to_scan {
            return Err(VerifyError::InvalidPolicy(
                "required_matches must not exceed max_cells_to_scan".into(),
            ));
        }
        Ok(())
    }
}

impl Default for VerificationPolicy {
    fn default() -> Self {
        Self {
            max_cells_to_scan: 4,
            required_matches: 2,
            scan_timeout_ms: 5000,
            carrier_list: vec![1],
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictStatus {
    Verified,
    Unverified,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum VerdictReason {
    EnoughMatches,
    ScanExhausted,
    Timeout,
    NoNeighbors,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerificationVerdict {
    pub status: VerdictStatus,
    pub reason: VerdictReason,
    pub matching_pcis: BTreeSet<Pci>,
    pub scanned_pcis: Vec<Pci>,
    pub origin_pci: Pci,
    pub message_identifier: u16,
    pub serial_number: u16,
    pub digest: ContentDigest,
    pub started_at: u64,
    pub concluded_at: u64,
}

/// A neighbour the UE can currently decode.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Candidate {
    pub pci: Pci,
    pub carrier: u32,
    pub rx_dbm: f64,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ScanStep {
    /// Wait for this cell's next SIB1.
    Acquire(Pci),
    Concluded(VerificationVerdict),
}

#[derive(Debug, Clone)]
enum Phase {
    AwaitSib1,
    AwaitSib8 {
        remaining: BTreeSet<u8>,
        segments: BTreeMap<u16, Sib8Segment>,
    },
}

#[derive(Debug, Clone)]
pub struct VerificationSession {
    pub origin_pci: Pci,
    pub digest: ContentDigest,
    pub key: (u16, u16),
    pub policy: VerificationPolicy,
    pub started_at: u64,
    pub deadline: u64,
    scanned: Vec<Pci>,
    matching: BTreeSet<Pci>,
    ever_detected: bool,
    target: Option<(Pci, Phase)>,
}

impl VerificationSession {
    pub fn begin(
        warning: &EncodedWarning,
        origin_pci: Pci,
        policy: VerificationPolicy,
        now: u64,
    ) -> Result<Self, VerifyError> {
        policy.validate()?;
        Ok(Self {
            origin_pci,
            digest: content_hash(warning),
            key: (warning.message_identifier, warning.serial_number),
            deadline: now.saturating_add(policy.scan_timeout_ms),
            policy,
            started_at: now,
            scanned: Vec::new(),
            matching: BTreeSet::new(),
            ever_detected: false,
            target: None,
        })
    }

    pub fn target(&self) -> Option<Pci> {
        self.target.as_ref().map(|(pci, _)| *pci)
    }

    pub fn scanned(&self) -> &[Pci] {
        &self.scanned
    }

    pub fn matching(&self) -> &BTreeSet<Pci> {
        &self.matching
    }

    fn verdict(&self, status: VerdictStatus, reason: VerdictReason, now: u64) -> VerificationVerdict {
        VerificationVerdict {
            status,
            reason,
            matching_pcis: self.matching.clone(),
            scanned_pcis: self.scanned.clone(),
            origin_pci: self.origin_pci,
            message_identifier: self.key.0,
            serial_number: self.key.1,
            digest: self.digest,
            started_at: self.started_at,
            concluded_at: now,
        }
    }

    fn unverified(&self, now: u64, fallback: VerdictReason) -> VerificationVerdict {
        let reason = if self.ever_detected {
            fallback
        } else {
            VerdictReason::NoNeighbors
        };
        self.verdict(VerdictStatus::Unverified, reason, now)
    }

    /// Pick the next cell to inspect: carriers in policy order, then strongest
    /// first, ties to the lowest pci. The origin and inspected cells are skipped.
    pub fn next(&mut self, candidates: &[Candidate], now: u64) -> ScanStep {
        let mut eligible: Vec<(usize, &Candidate)> = candidates
            .iter()
            .filter(|c| c.pci != self.origin_pci)
            .filter_map(|c| {
                self.policy
                    .carrier_list
                    .iter()
                    .position(|&k| k == c.carrier)
                    .map(|rank| (rank, c))
            })
            .collect();
        self.ever_detected |= !eligible.is_empty();
        eligible.retain(|(_, c)| !self.scanned.contains(&c.pci));
        eligible.sort_by(|(ra, a), (rb, b)| {
            ra.cmp(rb)
                .then(b.rx_dbm.total_cmp(&a.rx_dbm))
                .then(a.pci.cmp(&b.pci))
        });
        if self.scanned.len() >= self.policy.max_cells_to_scan as usize {
            return ScanStep::Concluded(self.unverified(now, VerdictReason::ScanExhausted));
        }
        match eligible.first() {
            Some((_, c)) => {
                self.target = Some((c.pci, Phase::AwaitSib1));
                ScanStep::Acquire(c.pci)
            }
            None => ScanStep::Concluded(self.unverified(now, VerdictReason::ScanExhausted)),
        }
    }

    /// SIB1 heard from the target. Returns the cell's outcome once known.
    pub fn on_sib1(&mut self, pci: Pci, sib1: &Sib1Info) -> Option<bool> {
        let (target, phase) = self.target.as_mut()?;
        if *target != pci || !matches!(phase, Phase::AwaitSib1) {
            return None;
        }
        let remaining = sib1.sib8_indices();
        if remaining.is_empty() {
            return Some(false);
        }
        *phase = Phase::AwaitSib8 {
            remaining,
            segments: BTreeMap::new(),
        };
        None
    }

    /// SI heard from the target. `segment` is `None` when undecodable.
    pub fn on_si(&mut self, pci: Pci, si_index: u8, segment: Option<&Sib8Segment>) -> Option<bool> {
        let key = self.key;
        let digest = self.digest;
        let (target, phase) = self.target.as_mut()?;
        let Phase::AwaitSib8 { remaining, segments } = phase else {
            return None;
        };
        if *target != pci || !remaining.remove(&si_index) {
            return None;
        }
        if let Some(seg) = segment.filter(|s| s.key() == key) {
            segments.insert(seg.segment_number, seg.clone());
            let parts: Vec<Sib8Segment> = segments.values().cloned().collect();
            if reassemble(&parts).is_ok_and(|w| content_hash(&w) == digest) {
                return Some(true);
            }
        }
        remaining.is_empty().then_some(false)
    }

    /// The target stopped being decodable before its result was known.
    pub fn cell_lost(&mut self, pci: Pci) -> Option<bool> {
        (self.target() == Some(pci)).then_some(false)
    }

    /// Record the target's outcome. Returns a verdict as soon as enough
    /// matches have been found.
    pub fn record(&mut self, pci: Pci, matched: bool, now: u64) -> Option<VerificationVerdict> {
        self.target = None;
        if !self.scanned.contains(&pci) {
            self.scanned.push(pci);
        }
        if matched {
            self.matching.insert(pci);
        }
        (self.matching.len() >= self.policy.required_matches as usize)
            .then(|| self.verdict(VerdictStatus::Verified, VerdictReason::EnoughMatches, now))
    }

    pub fn timeout(&self, now: u64) -> VerificationVerdict {
        self.unverified(now, VerdictReason::Timeout)
    }
}
