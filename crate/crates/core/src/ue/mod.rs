//! Simulated handset.
//!
//! A [`Ue`] is a deterministic state machine fed by the simulation loop: it
//! hears SIB1, SI and paging from cells it can decode, selects and reselects
//! cells, acquires SIB8, reassembles warnings and displays them subject to its
//! [`UeProfile`] quirks. Each callback takes a [`UeCx`] carrying the current
//! time and collecting the log events and timers the call produced.
//!
//! SIB1 is only acted on when camping and after a paging message, so a cell
//! that starts a warning without paging reaches idle UEs only when they next
//! camp on it.

pub mod interaction;
pub mod profile;

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use interaction::{interact_with_alert, InteractionStep, TargetApp};
pub use profile::{DisplayPolicy, ProfileRegistry, UeProfile};

use crate::codec::{decode_text, reassemble, CodecError, EncodedWarning, SiMessage, Sib8Segment};
use crate::content::{parse_content, ParsedSpan, TldList};
use crate::event::Detail;
use crate::radio::{PagingMessage, Pci, Plmn, Sib1Info, UeId};
use crate::verify::{Candidate, ScanStep, VerificationPolicy, VerificationSession, VerificationVerdict};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum UeError {
    #[error("invalid profile: {0}")]
    InvalidProfile(String),
    #[error("unknown profile {0:?}")]
    UnknownProfile(String),
    #[error("span index {index} out of range ({spans} spans)")]
    InvalidSpan { index: usize, spans: usize },
    #[error("no cell available")]
    NoCellAvailable,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RrcState {
    Off,
    Scanning,
    CampedIdle,
    ConnectingAttempt,
    Connected,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CellClass {
    Suitable,
    Acceptable,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct UeTimers {
    /// Time without a suitable cell before camping on an acceptable one.
    pub acceptable_fallback_ms: u64,
    pub reselection_hysteresis_db: f64,
    pub bar_duration_ms: u64,
    /// Delay between camping and the first registration attempt.
    pub registration_delay_ms: u64,
    /// Time to wait for a registration response before counting a failure.
    pub registration_timeout_ms: u64,
    pub scan_window_ms: u64,
}

impl Default for UeTimers {
    fn default() -> Self {
        Self {
            acceptable_fallback_ms: 10_000,
            reselection_hysteresis_db: 3.0,
            bar_duration_ms: 300_000,
            registration_delay_ms: 1000,
            registration_timeout_ms: 1000,
            scan_window_ms: 160,
        }
    }
}

/// A cell as measured during selection.
#[derive(Debug, Clone, PartialEq)]
pub struct VisibleCell {
    pub pci: Pci,
    pub plmn: Plmn,
    pub rx_dbm: f64,
}

fn strongest<'a>(cells: impl Iterator<Item = &'a VisibleCell>) -> Option<&'a VisibleCell> {
    cells.min_by(|a, b| b.rx_dbm.total_cmp(&a.rx_dbm).then(a.pci.cmp(&b.pci)))
}

/// Best cell by received power, home network first. Ties go to the lowest
/// pci. The acceptable-cell delay is the caller's concern.
pub fn select_cell(visible: &[VisibleCell], hplmn: &Plmn) -> Result<(Pci, CellClass), UeError> {
    if let Some(c) = strongest(visible.iter().filter(|c| &c.plmn == hplmn)) {
        return Ok((c.pci, CellClass::Suitable));
    }
    strongest(visible.iter())
        .map(|c| (c.pci, CellClass::Acceptable))
        .ok_or(UeError::NoCellAvailable)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AlertDisplayEvent {
    pub time_ms: u64,
    pub ue: UeId,
    pub pci: Pci,
    pub message_identifier: u16,
    pub serial_number: u16,
    pub text: String,
    pub spans: Vec<ParsedSpan>,
    pub device_locked: bool,
}

impl AlertDisplayEvent {
    pub fn key(&self) -> (u16, u16) {
        (self.message_identifier, self.serial_number)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum UeTimer {
    PowerOn,
    ScanWindowEnd { epoch: u64 },
    FallbackExpired { epoch: u64 },
    RegistrationStart { epoch: u64 },
    RegistrationTimeout { epoch: u64 },
    BarExpired { pci: Pci },
    VerificationTimeout { session: u64 },
}

/// Per-call context: inputs from the simulation and collected outputs.
pub struct UeCx<'a> {
    pub now: u64,
    pub timers: &'a UeTimers,
    pub tlds: &'a TldList,
    pub policy: Option<&'a VerificationPolicy>,
    pub events: Vec<(&'static str, Detail)>,
    pub schedule: Vec<(u64, UeTimer)>,
    /// Registration request sent on this pci; the simulation answers it.
    pub registration: Option<Pci>,
}

impl<'a> UeCx<'a> {
    pub fn new(now: u64, timers: &'a UeTimers, tlds: &'a TldList, policy: Option<&'a VerificationPolicy>) -> Self {
        Self {
            now,
            timers,
            tlds,
            policy,
            events: Vec::new(),
            schedule: Vec::new(),
            registration: None,
        }
    }

    fn emit<const N: usize>(&mut self, event_type: &'static str, pairs: [(&str, Value); N]) {
        self.events
            .push((event_type, pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect()));
    }

    fn after(&mut self, delay: u64, timer: UeTimer) {
        self.schedule.push((self.now + delay, timer));
    }
}

#[derive(Debug, Clone)]
struct KnownCell {
    sib1: Sib1Info,
    rx_dbm: f64,
    acted_tag: Option<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UeSnapshot {
    pub id: UeId,
    pub profile: String,
    pub rrc: RrcState,
    pub serving_pci: Option<Pci>,
    pub camped_class: Option<CellClass>,
    pub displayed: Vec<(u16, u16)>,
    pub alerts: usize,
    pub verdicts: usize,
    pub barred: BTreeMap<Pci, u64>,
    pub verifying: bool,
}

#[derive(Debug, Clone)]
pub struct Ue {
    pub id: UeId,
    pub profile: UeProfile,
    pub imsi: Option<String>,
    pub data_service: bool,
    pub cross_cell_verification: bool,
    pub locked: bool,
    rrc: RrcState,
    serving: Option<Pci>,
    class: Option<CellClass>,
    known: BTreeMap<Pci, KnownCell>,
    reassembly: BTreeMap<(u16, u16), BTreeMap<u16, Sib8Segment>>,
    displayed: BTreeSet<(u16, u16)>,
    /// Completed or abandoned warnings that will never be displayed.
    dropped: BTreeSet<(u16, u16)>,
    barred: BTreeMap<Pci, u64>,
    epoch: u64,
    search_started: Option<u64>,
    no_cell_reported: bool,
    fallback_armed: bool,
    /// SIB8 SI indices still to be received in the current acquisition.
    round: BTreeSet<u8>,
    /// Warning keys that delivered a segment during the current round.
    round_keys: BTreeSet<(u16, u16)>,
    reacquire: bool,
    last_only: Option<(AlertDisplayEvent, EncodedWarning)>,
    registration_attempt: u32,
    deferred: Option<UeTimer>,
    session: Option<VerificationSession>,
    session_no: u64,
    wants_candidates: bool,
    alerts: Vec<AlertDisplayEvent>,
    verdicts: Vec<VerificationVerdict>,
}

impl Ue {
    pub fn new(id: UeId, profile: UeProfile) -> Self {
        Self {
            id,
            profile,
            imsi: None,
            data_service: true,
            cross_cell_verification: false,
            locked: false,
            rrc: RrcState::Off,
            serving: None,
            class: None,
            known: BTreeMap::new(),
            reassembly: BTreeMap::new(),
            displayed: BTreeSet::new(),
            dropped: BTreeSet::new(),
            barred: BTreeMap::new(),
            epoch: 0,
            search_started: None,
            no_cell_reported: false,
            fallback_armed: false,
            round: BTreeSet::new(),
            round_keys: BTreeSet::new(),
            reacquire: false,
            last_only: None,
            registration_attempt: 0,
            deferred: None,
            session: None,
            session_no: 0,
            wants_candidates: false,
            alerts: Vec::new(),
            verdicts: Vec::new(),
        }
    }

    pub fn rrc(&self) -> RrcState {
        self.rrc
    }

    pub fn serving_pci(&self) -> Option<Pci> {
        self.serving
    }

    pub fn camped_class(&self) -> Option<CellClass> {
        self.class
    }

    pub fn alerts(&self) -> &[AlertDisplayEvent] {
        &self.alerts
    }

    pub fn verdicts(&self) -> &[VerificationVerdict] {
        &self.verdicts
    }

    pub fn displayed(&self) -> &BTreeSet<(u16, u16)> {
        &self.displayed
    }

    pub fn reassembly_buffers(&self) -> usize {
        self.reassembly.len()
    }

    pub fn is_verifying(&self) -> bool {
        self.session.is_some()
    }

    pub fn verification_target(&self) -> Option<Pci> {
        self.session.as_ref().and_then(VerificationSession::target)
    }

    /// True when the verification session needs the current neighbour list.
    pub fn wants_candidates(&self) -> bool {
        self.wants_candidates
    }

    pub fn is_barred(&self, pci: Pci, now: u64) -> bool {
        self.barred.get(&pci).is_some_and(|&until| until > now)
    }

    pub fn snapshot(&self) -> UeSnapshot {
        UeSnapshot {
            id: self.id,
            profile: self.profile.name.clone(),
            rrc: self.rrc,
            serving_pci: self.serving,
            camped_class: self.class,
            displayed: self.displayed.iter().copied().collect(),
            alerts: self.alerts.len(),
            verdicts: self.verdicts.len(),
            barred: self.barred.clone(),
            verifying: self.session.is_some(),
        }
    }

    pub fn power_on(&mut self, cx: &mut UeCx) {
        if self.rrc != RrcState::Off {
            return;
        }
        cx.emit("PowerOn", [("profile", json!(self.profile.name))]);
        self.start_search(cx);
    }

    fn start_search(&mut self, cx: &mut UeCx) {
        self.leave_cell(cx);
        self.rrc = RrcState::Scanning;
        self.epoch += 1;
        self.search_started = Some(cx.now);
        self.no_cell_reported = false;
        self.fallback_armed = false;
        self.known.clear();
        cx.emit("CellSearch", []);
        cx.after(cx.timers.scan_window_ms, UeTimer::ScanWindowEnd { epoch: self.epoch });
    }

    fn leave_cell(&mut self, cx: &mut UeCx) {
        self.flush_last_only(cx);
        self.serving = None;
        self.class = None;
        self.reassembly.clear();
        self.round.clear();
        self.round_keys.clear();
        self.reacquire = false;
        self.registration_attempt = 0;
        self.deferred = None;
    }

    fn camp(&mut self, cx: &mut UeCx, pci: Pci, class: CellClass) {
        self.leave_cell(cx);
        self.rrc = RrcState::CampedIdle;
        self.serving = Some(pci);
        self.class = Some(class);
        self.epoch += 1;
        self.search_started = None;
        let plmn = self.known.get(&pci).map(|k| k.sib1.plmn.to_string());
        cx.emit("Camped", [("pci", json!(pci)), ("class", json!(class)), ("plmn", json!(plmn))]);
        if let Some(k) = self.known.get_mut(&pci) {
            k.acted_tag = None;
        }
        self.act_on_sib1(cx, pci);
        if self.data_service {
            cx.after(
                cx.timers.registration_delay_ms,
                UeTimer::RegistrationStart { epoch: self.epoch },
            );
        }
    }

    fn visible(&self, now: u64) -> Vec<VisibleCell> {
        self.known
            .iter()
            .filter(|(&pci, _)| !self.is_barred(pci, now))
            .map(|(&pci, k)| VisibleCell {
                pci,
                plmn: k.sib1.plmn.clone(),
                rx_dbm: k.rx_dbm,
            })
            .collect()
    }

    fn try_select(&mut self, cx: &mut UeCx) {
        let started = self.search_started.unwrap_or(cx.now);
        let fallback_at = started + cx.timers.acceptable_fallback_ms;
        match select_cell(&self.visible(cx.now), &self.profile.hplmn) {
            Ok((pci, CellClass::Suitable)) => return self.camp(cx, pci, CellClass::Suitable),
            Ok((pci, CellClass::Acceptable)) if cx.now >= fallback_at => {
                return self.camp(cx, pci, CellClass::Acceptable)
            }
            Ok(_) => {
                if !self.fallback_armed {
                    self.fallback_armed = true;
                    cx.schedule.push((fallback_at, UeTimer::FallbackExpired { epoch: self.epoch }));
                }
            }
            Err(_) => {
                if !self.no_cell_reported {
                    self.no_cell_reported = true;
                    cx.emit("NoCellAvailable", []);
                }
            }
        }
        cx.after(cx.timers.scan_window_ms, UeTimer::ScanWindowEnd { epoch: self.epoch });
    }

    pub fn on_timer(&mut self, cx: &mut UeCx, timer: UeTimer) {
        let current = |epoch: u64| epoch == self.epoch;
        match timer {
            UeTimer::PowerOn => self.power_on(cx),
            UeTimer::ScanWindowEnd { epoch } | UeTimer::FallbackExpired { epoch } => {
                if current(epoch) && self.rrc == RrcState::Scanning {
                    if matches!(timer, UeTimer::FallbackExpired { .. }) {
                        self.fallback_armed = false;
                        self.select_now(cx);
                    } else {
                        self.try_select(cx);
                    }
                }
            }
            UeTimer::RegistrationStart { epoch } => {
                if current(epoch) && self.rrc == RrcState::CampedIdle && self.data_service {
                    if self.session.is_some() {
                        self.defer(cx, timer);
                    } else {
                        self.registration_attempt = 1;
                        self.rrc = RrcState::ConnectingAttempt;
                        self.request_registration(cx);
                    }
                }
            }
            UeTimer::RegistrationTimeout { epoch } => {
                if current(epoch) && self.rrc == RrcState::ConnectingAttempt {
                    if self.session.is_some() {
                        self.defer(cx, timer);
                    } else {
                        self.registration_failed(cx);
                    }
                }
            }
            UeTimer::BarExpired { pci } => {
                if self.barred.get(&pci).is_some_and(|&until| until <= cx.now) {
                    self.barred.remove(&pci);
                    cx.emit("BarExpired", [("pci", json!(pci))]);
                }
            }
            UeTimer::VerificationTimeout { session } => {
                if session == self.session_no {
                    if let Some(s) = &self.session {
                        let verdict = s.timeout(cx.now);
                        self.conclude(cx, verdict);
                    }
                }
            }
        }
    }

    /// Fallback delay elapsed: camp on whatever is best right now.
    fn select_now(&mut self, cx: &mut UeCx) {
        if let Ok((pci, class)) = select_cell(&self.visible(cx.now), &self.profile.hplmn) {
            self.camp(cx, pci, class);
        }
    }

    fn defer(&mut self, cx: &mut UeCx, timer: UeTimer) {
        self.deferred = Some(timer);
        cx.emit("RegistrationDeferred", [("reason", json!("verification"))]);
    }

    fn request_registration(&mut self, cx: &mut UeCx) {
        let pci = self.serving.expect("camped");
        cx.emit(
            "RegistrationAttempt",
            [("pci", json!(pci)), ("attempt", json!(self.registration_attempt))],
        );
        cx.registration = Some(pci);
    }

    /// Outcome of the request issued through [`UeCx::registration`].
    pub fn registration_result(&mut self, cx: &mut UeCx, accepted: bool) {
        if self.rrc != RrcState::ConnectingAttempt {
            return;
        }
        if accepted {
            self.rrc = RrcState::Connected;
            cx.emit("RegistrationAccepted", [("pci", json!(self.serving))]);
        } else {
            cx.after(
                cx.timers.registration_timeout_ms,
                UeTimer::RegistrationTimeout { epoch: self.epoch },
            );
        }
    }

    fn registration_failed(&mut self, cx: &mut UeCx) {
        let pci = self.serving.expect("camped");
        cx.emit(
            "RegistrationFailed",
            [("pci", json!(pci)), ("attempt", json!(self.registration_attempt))],
        );
        if self.registration_attempt < self.profile.registration_retries {
            self.registration_attempt += 1;
            self.request_registration(cx);
            return;
        }
        let until = cx.now + cx.timers.bar_duration_ms;
        self.barred.insert(pci, until);
        cx.emit("CellBarred", [("pci", json!(pci)), ("until_ms", json!(until))]);
        cx.schedule.push((until, UeTimer::BarExpired { pci }));
        self.start_search(cx);
    }

    pub fn on_sib1(&mut self, cx: &mut UeCx, pci: Pci, sib1: &Sib1Info, rx_dbm: f64) {
        if self.rrc == RrcState::Off {
            return;
        }
        if let Some(matched) = self.session.as_mut().and_then(|s| s.on_sib1(pci, sib1)) {
            self.record_scan(cx, pci, matched);
        }
        let acted_tag = self.known.get(&pci).and_then(|k| k.acted_tag);
        self.known.insert(
            pci,
            KnownCell {
                sib1: sib1.clone(),
                rx_dbm,
                acted_tag,
            },
        );
        if self.rrc == RrcState::Scanning {
            return;
        }
        if self.serving == Some(pci) {
            if self.class == Some(CellClass::Suitable) && sib1.plmn != self.profile.hplmn {
                cx.emit("CellLost", [("pci", json!(pci)), ("reason", json!("plmn_changed"))]);
                self.start_search(cx);
                return;
            }
            if std::mem::take(&mut self.reacquire) {
                self.act_on_sib1(cx, pci);
            }
        } else if self.rrc == RrcState::CampedIdle {
            self.evaluate_reselection(cx);
        }
    }

    fn evaluate_reselection(&mut self, cx: &mut UeCx) {
        let Some(serving) = self.serving else { return };
        let Some(serving_rx) = self.known.get(&serving).map(|k| k.rx_dbm) else {
            return;
        };
        let others: Vec<VisibleCell> = self.visible(cx.now).into_iter().filter(|c| c.pci != serving).collect();
        let hplmn = &self.profile.hplmn;
        let threshold = serving_rx + cx.timers.reselection_hysteresis_db;
        let target = match self.class {
            Some(CellClass::Acceptable) => strongest(others.iter().filter(|c| &c.plmn == hplmn))
                .map(|c| (c.pci, CellClass::Suitable))
                .or_else(|| {
                    strongest(others.iter().filter(|c| c.rx_dbm > threshold)).map(|c| (c.pci, CellClass::Acceptable))
                }),
            _ => strongest(others.iter().filter(|c| &c.plmn == hplmn && c.rx_dbm > threshold))
                .map(|c| (c.pci, CellClass::Suitable)),
        };
        if let Some((pci, class)) = target {
            cx.emit("CellReselection", [("from", json!(serving)), ("to", json!(pci))]);
            self.camp(cx, pci, class);
        }
    }

    /// Start a SIB8 acquisition if the cell's value tag is new to us.
    fn act_on_sib1(&mut self, cx: &mut UeCx, pci: Pci) {
        let Some(k) = self.known.get_mut(&pci) else {
            self.reacquire = true;
            return;
        };
        let tag = k.sib1.value_tag;
        if k.acted_tag == Some(tag) {
            return;
        }
        k.acted_tag = Some(tag);
        let indices = k.sib1.sib8_indices();
        self.flush_last_only(cx);
        self.round = indices;
        self.round_keys.clear();
        if !self.round.is_empty() {
            cx.emit(
                "Sib8AcquisitionScheduled",
                [
                    ("pci", json!(pci)),
                    ("value_tag", json!(tag)),
                    ("si_indices", json!(self.round)),
                ],
            );
        }
    }

    pub fn on_paging(&mut self, cx: &mut UeCx, pci: Pci, msg: PagingMessage) {
        if self.serving != Some(pci) {
            return;
        }
        cx.emit(
            "PagingReceived",
            [
                ("pci", json!(pci)),
                ("si_modification", json!(msg.si_modification)),
                ("etws_cmas_indication", json!(msg.etws_cmas_indication)),
            ],
        );
        if msg.si_modification || msg.etws_cmas_indication {
            self.reacquire = true;
        }
    }

    pub fn on_si(&mut self, cx: &mut UeCx, pci: Pci, si: &SiMessage) {
        if self.rrc == RrcState::Off {
            return;
        }
        let segment = si.segment();
        if let Some(matched) = self
            .session
            .as_mut()
            .and_then(|s| s.on_si(pci, si.si_index, segment.as_ref().ok()))
        {
            self.record_scan(cx, pci, matched);
        }
        if self.serving != Some(pci) || !self.round.remove(&si.si_index) {
            return;
        }
        match segment {
            Ok(seg) => self.on_sib8_segment(cx, pci, seg),
            Err(e) => cx.emit(
                "SegmentDropped",
                [("pci", json!(pci)), ("si_index", json!(si.si_index)), ("error", json!(e.to_string()))],
            ),
        }
        if self.round.is_empty() {
            // A partial warning absent from a whole round is no longer on
            // air; free its buffer for others.
            let seen = std::mem::take(&mut self.round_keys);
            self.reassembly.retain(|key, _| seen.contains(key));
            self.flush_last_only(cx);
        }
    }

    fn discard(&mut self, cx: &mut UeCx, key: (u16, u16), reason: &str) {
        self.reassembly.remove(&key);
        self.dropped.insert(key);
        cx.emit(
            "AlertDiscarded",
            [
                ("message_identifier", json!(key.0)),
                ("serial_number", json!(key.1)),
                ("reason", json!(reason)),
            ],
        );
    }

    pub fn on_sib8_segment(&mut self, cx: &mut UeCx, pci: Pci, seg: Sib8Segment) {
        let key = seg.key();
        self.round_keys.insert(key);
        if self.displayed.contains(&key) || self.dropped.contains(&key) {
            return;
        }
        if !self.reassembly.contains_key(&key)
            && self.reassembly.len() >= self.profile.max_parallel_reassemblies as usize
        {
            return;
        }
        let multi = !(seg.segment_number == 0 && seg.is_last);
        if multi && !self.profile.supports_segmentation {
            return self.discard(cx, key, "segmentation_unsupported");
        }
        let buffer = self.reassembly.entry(key).or_default();
        buffer.insert(seg.segment_number, seg);
        let parts: Vec<Sib8Segment> = buffer.values().cloned().collect();
        match reassemble(&parts) {
            Ok(warning) => {
                self.reassembly.remove(&key);
                self.complete(cx, pci, warning);
            }
            Err(CodecError::Incomplete { .. }) => {}
            Err(CodecError::TooManyPages { .. }) => self.discard(cx, key, "too_many_pages"),
            Err(e) => self.discard(cx, key, &e.to_string()),
        }
    }

    fn complete(&mut self, cx: &mut UeCx, pci: Pci, warning: EncodedWarning) {
        let key = (warning.message_identifier, warning.serial_number);
        let text = match decode_text(&warning) {
            Ok(text) => text,
            Err(e) => return self.discard(cx, key, &e.to_string()),
        };
        let event = AlertDisplayEvent {
            time_ms: cx.now,
            ue: self.id,
            pci,
            message_identifier: key.0,
            serial_number: key.1,
            spans: parse_content(&text, self.profile.parser_flags, cx.tlds),
            text,
            device_locked: self.locked,
        };
        match self.profile.multi_warning_display {
            DisplayPolicy::All => self.display(cx, event, warning),
            DisplayPolicy::LastOnly => {
                if let Some((prev, _)) = self.last_only.replace((event, warning)) {
                    self.discard(cx, prev.key(), "superseded");
                }
            }
        }
    }

    fn flush_last_only(&mut self, cx: &mut UeCx) {
        if let Some((mut event, warning)) = self.last_only.take() {
            event.time_ms = cx.now;
            self.display(cx, event, warning);
        }
    }

    fn display(&mut self, cx: &mut UeCx, event: AlertDisplayEvent, warning: EncodedWarning) {
        self.displayed.insert(event.key());
        cx.emit(
            "AlertDisplayed",
            [
                ("pci", json!(event.pci)),
                ("message_identifier", json!(event.message_identifier)),
                ("serial_number", json!(event.serial_number)),
                ("text", json!(event.text)),
                ("spans", json!(event.spans)),
                ("device_locked", json!(event.device_locked)),
            ],
        );
        let origin = event.pci;
        self.alerts.push(event);
        if self.cross_cell_verification {
            self.begin_verification(cx, &warning, origin);
        }
    }

    fn begin_verification(&mut self, cx: &mut UeCx, warning: &EncodedWarning, origin: Pci) {
        let key = json!([warning.message_identifier, warning.serial_number]);
        if self.session.is_some() {
            cx.emit("VerificationRejected", [("warning", key), ("error", json!("AlreadyVerifying"))]);
            return;
        }
        let policy = cx.policy.cloned().unwrap_or_default();
        match VerificationSession::begin(warning, origin, policy.clone(), cx.now) {
            Ok(session) => {
                self.session_no += 1;
                cx.emit(
                    "VerificationStarted",
                    [
                        ("warning", key),
                        ("origin_pci", json!(origin)),
                        ("digest", json!(session.digest)),
                        ("policy", json!(policy)),
                    ],
                );
                cx.schedule.push((
                    session.deadline,
                    UeTimer::VerificationTimeout {
                        session: self.session_no,
                    },
                ));
                self.session = Some(session);
                self.wants_candidates = true;
            }
            Err(e) => cx.emit("VerificationRejected", [("warning", key), ("error", json!(e.to_string()))]),
        }
    }

    /// Continue the verification scan with the cells currently decodable.
    pub fn advance_verification(&mut self, cx: &mut UeCx, candidates: &[Candidate]) {
        self.wants_candidates = false;
        let Some(session) = self.session.as_mut() else { return };
        match session.next(candidates, cx.now) {
            ScanStep::Acquire(pci) => cx.emit("VerificationScanning", [("pci", json!(pci))]),
            ScanStep::Concluded(verdict) => self.conclude(cx, verdict),
        }
    }

    fn record_scan(&mut self, cx: &mut UeCx, pci: Pci, matched: bool) {
        let Some(session) = self.session.as_mut() else { return };
        cx.emit("VerificationCellScanned", [("pci", json!(pci)), ("matched", json!(matched))]);
        match session.record(pci, matched, cx.now) {
            Some(verdict) => self.conclude(cx, verdict),
            None => self.wants_candidates = true,
        }
    }

    fn conclude(&mut self, cx: &mut UeCx, verdict: VerificationVerdict) {
        self.session = None;
        self.wants_candidates = false;
        cx.emit(
            "VerificationConcluded",
            [
                ("status", json!(verdict.status)),
                ("reason", json!(verdict.reason)),
                ("matching_pcis", json!(verdict.matching_pcis)),
                ("scanned_pcis", json!(verdict.scanned_pcis)),
                ("origin_pci", json!(verdict.origin_pci)),
                ("warning", json!([verdict.message_identifier, verdict.serial_number])),
                ("digest", json!(verdict.digest)),
            ],
        );
        self.verdicts.push(verdict);
        if let Some(timer) = self.deferred.take() {
            cx.schedule.push((cx.now, timer));
        }
    }

    /// A cell became undecodable for this UE.
    pub fn on_cell_lost(&mut self, cx: &mut UeCx, pci: Pci) {
        self.known.remove(&pci);
        if let Some(matched) = self.session.as_mut().and_then(|s| s.cell_lost(pci)) {
            self.record_scan(cx, pci, matched);
        }
        if self.serving != Some(pci) {
            return;
        }
        let event = match self.rrc {
            RrcState::Connected | RrcState::ConnectingAttempt => "ConnectionLost",
            _ => "CellLost",
        };
        cx.emit(event, [("pci", json!(pci))]);
        self.start_search(cx);
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cell(pci: Pci, plmn: &str, rx_dbm: f64) -> VisibleCell {
        VisibleCell {
            pci,
            plmn: plmn.parse().unwrap(),
            rx_dbm,
        }
    }

    #[test]
    fn stronger_matching_plmn_wins() {
        let hplmn: Plmn = "001-01".parse().unwrap();
        let visible = [cell(1, "001-01", -90.0), cell(66, "001-01", -70.0)];
        assert_eq!(select_cell(&visible, &hplmn), Ok((66, CellClass::Suitable)));
    }

    #[test]
    fn home_network_beats_power() {
        let hplmn: Plmn = "001-01".parse().unwrap();
        let visible = [cell(1, "001-01", -100.0), cell(66, "999-99", -50.0)];
        assert_eq!(select_cell(&visible, &hplmn), Ok((1, CellClass::Suitable)));
        assert_eq!(select_cell(&visible[1..], &hplmn), Ok((66, CellClass::Acceptable)));
        assert_eq!(select_cell(&[], &hplmn), Err(UeError::NoCellAvailable));
    }

    #[test]
    fn ties_go_to_lowest_pci() {
        let hplmn: Plmn = "001-01".parse().unwrap();
        let visible = [cell(9, "001-01", -80.0), cell(4, "001-01", -80.0), cell(7, "001-01", -80.0)];
        assert_eq!(select_cell(&visible, &hplmn), Ok((4, CellClass::Suitable)));
    }

    #[test]
    fn interaction_traces() {
        let event = AlertDisplayEvent {
            time_ms: 0,
            ue: 1,
            pci: 1,
            message_identifier: 4370,
            serial_number: 1,
            text: "call 0112345678 https://x.com".into(),
            spans: parse_content(
                "call 0112345678 https://x.com",
                Default::default(),
                &TldList::bundled(),
            ),
            device_locked: true,
        };
        assert_eq!(
            interact_with_alert(&event, 1, true).unwrap(),
            [
                InteractionStep::UnlockPrompt,
                InteractionStep::Unlocked,
                InteractionStep::OpenTarget(TargetApp::Browser)
            ]
        );
        assert_eq!(
            interact_with_alert(&event, 0, false).unwrap(),
            [InteractionStep::OpenTarget(TargetApp::Dialer)]
        );
        assert_eq!(
            interact_with_alert(&event, 2, false),
            Err(UeError::InvalidSpan { index: 2, spans: 2 })
        );
    }
}
