//! Deterministic discrete-event simulation of cells and UEs.
//!
//! Time is integer milliseconds. Pending work sits in a priority queue keyed
//! by `(time, insertion order)`, so two runs fed the same commands produce the
//! same event log byte for byte. Every mutation arrives as a [`Command`] and is
//! recorded in the log before its consequences; [`Simulation::replay`]
//! rebuilds a simulation from those records.
//!
//! Per cell, SIB1 goes out every `sib1_period_ms` and each SI index `k` at
//! offset `k * si_period_ms / 32` inside every SI period. Warning updates are
//! staged and swapped in at the next SI period boundary. Paging is sent on the
//! next paging occasion after something queued it.

pub mod command;
pub mod scenario;

use std::cmp::Reverse;
use std::collections::{BTreeMap, BTreeSet, BinaryHeap};

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

pub use command::{Command, UeSpec};
pub use scenario::{Expectation, Scenario, ScenarioError};

use crate::codec::{self, CodecError, EncodedWarning, SiMessage, WarningPayload};
use crate::content::TldList;
use crate::control::{SubscriberEntry, SubscriberError, SubscriberStore};
use crate::event::{cell_entity, ue_entity, Detail, SimEvent};
use crate::radio::{
    self, ActiveWarning, Cell, CellConfig, PagingMessage, Pci, RadioError, RadioTopology, UeId, WarningId,
};
use crate::ue::{
    interact_with_alert, AlertDisplayEvent, ProfileRegistry, Ue, UeCx, UeError, UeSnapshot, UeTimer, UeTimers,
};
use crate::verify::{Candidate, VerificationPolicy, VerificationVerdict, VerifyError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error(transparent)]
    Radio(#[from] RadioError),
    #[error(transparent)]
    Ue(#[from] UeError),
    #[error(transparent)]
    Verify(#[from] VerifyError),
    #[error(transparent)]
    Subscriber(#[from] SubscriberError),
    #[error("unknown UE {0}")]
    UnknownUe(UeId),
    #[error("UE {0} already exists")]
    DuplicateUe(UeId),
    #[error("UE {ue} has no alert {index}")]
    UnknownAlert { ue: UeId, index: usize },
    #[error("cannot run to {until_ms} ms, simulation is already at {now_ms} ms")]
    TimeInPast { until_ms: u64, now_ms: u64 },
    #[error("invalid command: {0}")]
    InvalidCommand(String),
}

impl From<CodecError> for SimError {
    fn from(e: CodecError) -> Self {
        Self::Radio(RadioError::Codec(e))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SimSettings {
    pub sib1_period_ms: u64,
    pub si_period_ms: u64,
    pub paging_period_ms: u64,
    pub clock_period_ms: u64,
    pub detection_threshold_dbm: f64,
    pub ue_timers: UeTimers,
}

impl Default for SimSettings {
    fn default() -> Self {
        Self {
            sib1_period_ms: 160,
            si_period_ms: 320,
            paging_period_ms: 320,
            clock_period_ms: 1000,
            detection_threshold_dbm: -110.0,
            ue_timers: UeTimers::default(),
        }
    }
}

impl SimSettings {
    pub fn validate(&self) -> Result<(), SimError> {
        let periods = [
            ("sib1_period_ms", self.sib1_period_ms),
            ("si_period_ms", self.si_period_ms),
            ("paging_period_ms", self.paging_period_ms),
            ("clock_period_ms", self.clock_period_ms),
            ("ue_timers.scan_window_ms", self.ue_timers.scan_window_ms),
        ];
        for (name, value) in periods {
            if value == 0 {
                return Err(SimError::InvalidCommand(format!("{name} must be positive")));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Action {
    Clock,
    Sib1(Pci),
    SiCycle(Pci),
    SiTx(Pci, u8),
    Paging(Pci),
    Ue(UeId, UeTimer),
    Command(Box<Command>),
    JamEnd(UeId, Pci),
}

#[derive(Debug)]
struct Queued {
    time: u64,
    order: u64,
    action: Action,
}

impl PartialEq for Queued {
    fn eq(&self, other: &Self) -> bool {
        (self.time, self.order) == (other.time, other.order)
    }
}

impl Eq for Queued {}

impl PartialOrd for Queued {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Queued {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        (self.time, self.order).cmp(&(other.time, other.order))
    }
}

enum UeInput {
    PowerOn,
    Timer(UeTimer),
    Sib1(Pci, radio::Sib1Info, f64),
    Si(Pci, SiMessage),
    Paging(Pci, PagingMessage),
    CellLost(Pci),
    Registration(bool),
    Candidates(Vec<Candidate>),
}

/// How a submitted command was handled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Ack {
    pub command: &'static str,
    /// Simulated time at which the command takes (or took) effect.
    pub applies_at_ms: u64,
    pub scheduled: bool,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub warning_ids: Vec<WarningId>,
}

/// One SI transmission, captured when tapping is enabled.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SiCapture {
    pub time_ms: u64,
    pub pci: Pci,
    pub si_index: u8,
    pub body: Vec<u8>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CellSnapshot {
    pub config: CellConfig,
    pub value_tag: u8,
    pub si_entries: usize,
    pub warnings: Vec<WarningId>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WarningSnapshot {
    pub id: WarningId,
    pub pci: Pci,
    pub message_identifier: u16,
    pub serial_number: u16,
    pub dcs: u8,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub payload: Option<WarningPayload>,
    pub pages: usize,
    pub segments: usize,
    pub si_indices: Vec<u8>,
}

impl WarningSnapshot {
    fn new(pci: Pci, w: &ActiveWarning) -> Self {
        Self {
            id: w.id,
            pci,
            message_identifier: w.encoded.message_identifier,
            serial_number: w.encoded.serial_number,
            dcs: w.encoded.dcs,
            payload: w.payload.clone(),
            pages: w.encoded.pages.len(),
            segments: w.segments.len(),
            si_indices: w.si_indices.clone(),
        }
    }
}

/// Complete observable state, used to compare a run with its replay.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimSnapshot {
    pub now_ms: u64,
    pub cells: Vec<CellSnapshot>,
    pub warnings: Vec<WarningSnapshot>,
    pub ues: Vec<UeSnapshot>,
    pub alerts: BTreeMap<UeId, Vec<AlertDisplayEvent>>,
    pub verdicts: BTreeMap<UeId, Vec<VerificationVerdict>>,
    pub subscribers: Vec<SubscriberEntry>,
    pub verification_policy: Option<VerificationPolicy>,
    pub next_warning_id: WarningId,
}

pub struct Simulation {
    settings: SimSettings,
    tlds: TldList,
    profiles: ProfileRegistry,
    now: u64,
    seq: u64,
    order: u64,
    queue: BinaryHeap<Reverse<Queued>>,
    cells: BTreeMap<Pci, Cell>,
    ues: BTreeMap<UeId, Ue>,
    topology: RadioTopology,
    subscribers: SubscriberStore,
    policy: Option<VerificationPolicy>,
    next_warning_id: WarningId,
    warning_cell: BTreeMap<WarningId, Pci>,
    paging_scheduled: BTreeSet<Pci>,
    log: Vec<SimEvent>,
    si_tap: Option<Vec<SiCapture>>,
}

impl Default for Simulation {
    fn default() -> Self {
        Self::new()
    }
}

impl Simulation {
    pub fn new() -> Self {
        let settings = SimSettings::default();
        let mut sim = Self {
            topology: RadioTopology::new(settings.detection_threshold_dbm),
            settings,
            tlds: TldList::bundled(),
            profiles: ProfileRegistry::bundled(),
            now: 0,
            seq: 0,
            order: 0,
            queue: BinaryHeap::new(),
            cells: BTreeMap::new(),
            ues: BTreeMap::new(),
            subscribers: SubscriberStore::default(),
            policy: None,
            next_warning_id: 1,
            warning_cell: BTreeMap::new(),
            paging_scheduled: BTreeSet::new(),
            log: Vec::new(),
            si_tap: None,
        };
        sim.push(sim.settings.clock_period_ms, Action::Clock);
        sim
    }

    /// Rebuild a simulation from the `Command` records of an event log.
    pub fn replay<'a>(records: impl IntoIterator<Item = &'a SimEvent>) -> Result<Self, SimError> {
        let mut sim = Self::new();
        for record in records.into_iter().filter(|e| e.event_type == "Command") {
            let cmd: Command = record
                .get("command")
                .cloned()
                .map(serde_json::from_value)
                .transpose()
                .map_err(|e| SimError::InvalidCommand(e.to_string()))?
                .ok_or_else(|| SimError::InvalidCommand("record has no command".into()))?;
            if record.time_ms > sim.now {
                sim.run_until(record.time_ms)?;
            }
            let at = record.get_u64("apply_at_ms").filter(|&t| t > sim.now);
            sim.submit_at(cmd, at)?;
        }
        Ok(sim)
    }

    pub fn now(&self) -> u64 {
        self.now
    }

    pub fn settings(&self) -> &SimSettings {
        &self.settings
    }

    pub fn tlds(&self) -> &TldList {
        &self.tlds
    }

    pub fn profiles(&self) -> &ProfileRegistry {
        &self.profiles
    }

    /// Everything logged since the simulation was created.
    pub fn log(&self) -> &[SimEvent] {
        &self.log
    }

    /// Events with `seq` strictly greater than `cursor`.
    pub fn events_since(&self, cursor: u64) -> &[SimEvent] {
        let start = self.log.partition_point(|e| e.seq <= cursor);
        &self.log[start..]
    }

    pub fn cells(&self) -> impl Iterator<Item = &Cell> {
        self.cells.values()
    }

    pub fn cell(&self, pci: Pci) -> Option<&Cell> {
        self.cells.get(&pci)
    }

    pub fn ues(&self) -> impl Iterator<Item = &Ue> {
        self.ues.values()
    }

    pub fn ue(&self, id: UeId) -> Option<&Ue> {
        self.ues.get(&id)
    }

    pub fn subscribers(&self) -> &SubscriberStore {
        &self.subscribers
    }

    pub fn verification_policy(&self) -> Option<&VerificationPolicy> {
        self.policy.as_ref()
    }

    pub fn topology(&self) -> &RadioTopology {
        &self.topology
    }

    pub fn warning(&self, id: WarningId) -> Option<WarningSnapshot> {
        let pci = *self.warning_cell.get(&id)?;
        Some(WarningSnapshot::new(pci, self.cells[&pci].warnings.get(&id)?))
    }

    pub fn warnings(&self) -> Vec<WarningSnapshot> {
        self.cells
            .values()
            .flat_map(|c| c.warnings.values().map(|w| WarningSnapshot::new(c.pci(), w)))
            .collect()
    }

    /// Start recording every SI body transmitted from now on.
    pub fn tap_si(&mut self) {
        self.si_tap.get_or_insert_with(Vec::new);
    }

    pub fn si_captures(&self) -> &[SiCapture] {
        self.si_tap.as_deref().unwrap_or_default()
    }

    pub fn snapshot(&self) -> SimSnapshot {
        SimSnapshot {
            now_ms: self.now,
            cells: self
                .cells
                .values()
                .map(|c| CellSnapshot {
                    config: c.config.clone(),
                    value_tag: c.value_tag,
                    si_entries: c.slot_count(),
                    warnings: c.warnings.keys().copied().collect(),
                })
                .collect(),
            warnings: self.warnings(),
            ues: self.ues.values().map(Ue::snapshot).collect(),
            alerts: self.ues.values().map(|u| (u.id, u.alerts().to_vec())).collect(),
            verdicts: self.ues.values().map(|u| (u.id, u.verdicts().to_vec())).collect(),
            subscribers: self.subscribers.entries().cloned().collect(),
            verification_policy: self.policy.clone(),
            next_warning_id: self.next_warning_id,
        }
    }

    fn push(&mut self, time: u64, action: Action) {
        self.order += 1;
        self.queue.push(Reverse(Queued {
            time,
            order: self.order,
            action,
        }));
    }

    fn emit(&mut self, entity: String, event_type: &str, detail: Detail) {
        self.seq += 1;
        self.log.push(SimEvent {
            time_ms: self.now,
            seq: self.seq,
            entity,
            event_type: event_type.to_string(),
            detail,
        });
    }

    fn emit_with<const N: usize>(&mut self, entity: String, event_type: &str, pairs: [(&str, Value); N]) {
        let detail = pairs.into_iter().map(|(k, v)| (k.to_string(), v)).collect();
        self.emit(entity, event_type, detail);
    }

    /// Apply a command now.
    pub fn submit(&mut self, cmd: Command) -> Result<Ack, SimError> {
        self.submit_at(cmd, None)
    }

    /// Apply a command now, or queue it for `apply_at` when that is later.
    /// A rejected command leaves no trace in the log or the state.
    pub fn submit_at(&mut self, cmd: Command, apply_at: Option<u64>) -> Result<Ack, SimError> {
        cmd.validate()?;
        let name = cmd.name();
        let record = |at: u64| {
            [
                ("command", serde_json::to_value(&cmd).expect("commands serialize")),
                ("apply_at_ms", json!(at)),
            ]
        };
        if let Some(at) = apply_at.filter(|&t| t > self.now) {
            if !cmd.schedulable() {
                return Err(SimError::InvalidCommand(format!("{name} cannot be scheduled")));
            }
            let detail = record(at);
            self.emit_with("control".into(), "Command", detail);
            self.push(at, Action::Command(Box::new(cmd)));
            return Ok(Ack {
                command: name,
                applies_at_ms: at,
                scheduled: true,
                warning_ids: Vec::new(),
            });
        }
        let mark = (self.log.len(), self.seq);
        let detail = record(self.now);
        self.emit_with("control".into(), "Command", detail);
        match self.apply(cmd) {
            Ok(warning_ids) => Ok(Ack {
                command: name,
                applies_at_ms: self.now,
                scheduled: false,
                warning_ids,
            }),
            Err(e) => {
                self.log.truncate(mark.0);
                self.seq = mark.1;
                Err(e)
            }
        }
    }

    /// Advance to `until_ms` (inclusive) and return the events emitted.
    pub fn run(&mut self, until_ms: u64) -> Result<Vec<SimEvent>, SimError> {
        let start = self.log.len();
        self.submit(Command::Run { until_ms })?;
        Ok(self.log[start + 1..].to_vec())
    }

    fn run_until(&mut self, until: u64) -> Result<(), SimError> {
        if until < self.now {
            return Err(SimError::TimeInPast {
                until_ms: until,
                now_ms: self.now,
            });
        }
        while self.queue.peek().is_some_and(|Reverse(q)| q.time <= until) {
            let Reverse(q) = self.queue.pop().expect("peeked");
            self.now = q.time;
            self.dispatch(q.action);
        }
        self.now = until;
        Ok(())
    }

    fn rx(&self, ue: UeId, pci: Pci) -> Option<f64> {
        let cell = self.cells.get(&pci)?;
        if !cell.config.tx_active {
            return None;
        }
        self.topology.effective_rx(ue, pci, self.now)
    }

    fn listeners(&self, pci: Pci) -> Vec<(UeId, f64)> {
        self.ues
            .keys()
            .filter_map(|&ue| self.rx(ue, pci).map(|rx| (ue, rx)))
            .collect()
    }

    fn dispatch(&mut self, action: Action) {
        match action {
            Action::Clock => {
                self.emit_with("sim".into(), "Clock", []);
                self.push(self.now + self.settings.clock_period_ms, Action::Clock);
            }
            Action::Sib1(pci) => {
                self.push(self.now + self.settings.sib1_period_ms, Action::Sib1(pci));
                let cell = &self.cells[&pci];
                if !cell.config.tx_active {
                    return;
                }
                let sib1 = cell.sib1();
                self.emit_with(
                    cell_entity(pci),
                    "Sib1Broadcast",
                    [
                        ("plmn", json!(sib1.plmn)),
                        ("value_tag", json!(sib1.value_tag)),
                        ("sib8_entries", json!(sib1.scheduling.len())),
                    ],
                );
                for (ue, rx) in self.listeners(pci) {
                    self.drive_ue(ue, UeInput::Sib1(pci, sib1.clone(), rx));
                }
            }
            Action::SiCycle(pci) => self.si_cycle(pci),
            Action::SiTx(pci, si_index) => {
                let cell = &self.cells[&pci];
                if !cell.config.tx_active {
                    return;
                }
                let Some(si) = cell.si_message(si_index) else { return };
                let (warning, segment) = cell.slot_owner(si_index).expect("slot in use");
                self.emit_with(
                    cell_entity(pci),
                    "SiBroadcast",
                    [
                        ("si_index", json!(si_index)),
                        ("warning_id", json!(warning)),
                        ("segment_number", json!(segment)),
                        ("octets", json!(si.body.len())),
                    ],
                );
                if let Some(tap) = &mut self.si_tap {
                    tap.push(SiCapture {
                        time_ms: self.now,
                        pci,
                        si_index,
                        body: si.body.clone(),
                    });
                }
                for (ue, _) in self.listeners(pci) {
                    self.drive_ue(ue, UeInput::Si(pci, si.clone()));
                }
            }
            Action::Paging(pci) => {
                self.paging_scheduled.remove(&pci);
                let cell = self.cells.get_mut(&pci).expect("cell exists");
                let Some(msg) = cell.pending_paging.take() else { return };
                if !cell.config.tx_active {
                    return;
                }
                self.emit_with(
                    cell_entity(pci),
                    "PagingBroadcast",
                    [
                        ("si_modification", json!(msg.si_modification)),
                        ("etws_cmas_indication", json!(msg.etws_cmas_indication)),
                    ],
                );
                for (ue, _) in self.listeners(pci) {
                    self.drive_ue(ue, UeInput::Paging(pci, msg));
                }
            }
            Action::Ue(ue, timer) => self.drive_ue(ue, UeInput::Timer(timer)),
            Action::Command(cmd) => {
                let name = cmd.name();
                match self.apply(*cmd) {
                    Ok(_) => self.emit_with("control".into(), "ScheduledCommandApplied", [("command", json!(name))]),
                    Err(e) => self.emit_with(
                        "control".into(),
                        "ScheduledCommandFailed",
                        [("command", json!(name)), ("error", json!(e.to_string()))],
                    ),
                }
            }
            Action::JamEnd(ue, pci) => {
                if self.topology.jammed.get(&(ue, pci)).is_some_and(|&t| t <= self.now) {
                    self.topology.jammed.remove(&(ue, pci));
                    self.emit_with(ue_entity(ue), "JamEnded", [("pci", json!(pci))]);
                }
            }
        }
    }

    fn si_cycle(&mut self, pci: Pci) {
        self.push(self.now + self.settings.si_period_ms, Action::SiCycle(pci));
        let cell = self.cells.get_mut(&pci).expect("cell exists");
        let applied = cell.apply_pending();
        let updated: Vec<WarningSnapshot> = applied
            .iter()
            .map(|id| WarningSnapshot::new(pci, &cell.warnings[id]))
            .collect();
        let value_tag = cell.value_tag;
        let tx: Vec<(u8, u64)> = if cell.config.tx_active {
            cell.si_indices().map(|i| (i, cell.si_offset(i))).collect()
        } else {
            Vec::new()
        };
        for w in updated {
            self.emit_with(
                cell_entity(pci),
                "WarningUpdated",
                [
                    ("warning_id", json!(w.id)),
                    ("message_identifier", json!(w.message_identifier)),
                    ("serial_number", json!(w.serial_number)),
                    ("pages", json!(w.pages)),
                    ("si_indices", json!(w.si_indices)),
                    ("value_tag", json!(value_tag)),
                ],
            );
        }
        if !applied.is_empty() {
            self.page(pci, PagingMessage::MODIFICATION);
        }
        for (si_index, offset) in tx {
            self.push(self.now + offset, Action::SiTx(pci, si_index));
        }
    }

    fn page(&mut self, pci: Pci, msg: PagingMessage) {
        let cell = self.cells.get_mut(&pci).expect("cell exists");
        cell.queue_paging(msg);
        if self.paging_scheduled.insert(pci) {
            let period = self.settings.paging_period_ms;
            let since = self.now - cell.started_at;
            let at = cell.started_at + since.div_ceil(period) * period;
            self.push(at, Action::Paging(pci));
        }
    }

    fn candidates(&self, ue: UeId) -> Vec<Candidate> {
        self.cells
            .values()
            .filter_map(|c| {
                self.rx(ue, c.pci()).map(|rx_dbm| Candidate {
                    pci: c.pci(),
                    carrier: c.config.carrier,
                    rx_dbm,
                })
            })
            .collect()
    }

    fn registration_accepted(&self, ue: UeId, pci: Pci) -> bool {
        let (Some(cell), Some(ue)) = (self.cells.get(&pci), self.ues.get(&ue)) else {
            return false;
        };
        cell.config.core_network
            && ue
                .imsi
                .as_deref()
                .and_then(|imsi| self.subscribers.get(imsi))
                .is_some_and(|s| s.hplmn == cell.config.plmn)
    }

    fn drive_ue(&mut self, id: UeId, input: UeInput) {
        let mut input = Some(input);
        while let Some(step) = input.take() {
            let Some(ue) = self.ues.get_mut(&id) else { return };
            let mut cx = UeCx::new(self.now, &self.settings.ue_timers, &self.tlds, self.policy.as_ref());
            match step {
                UeInput::PowerOn => ue.power_on(&mut cx),
                UeInput::Timer(t) => ue.on_timer(&mut cx, t),
                UeInput::Sib1(pci, sib1, rx) => ue.on_sib1(&mut cx, pci, &sib1, rx),
                UeInput::Si(pci, si) => ue.on_si(&mut cx, pci, &si),
                UeInput::Paging(pci, msg) => ue.on_paging(&mut cx, pci, msg),
                UeInput::CellLost(pci) => ue.on_cell_lost(&mut cx, pci),
                UeInput::Registration(accepted) => ue.registration_result(&mut cx, accepted),
                UeInput::Candidates(c) => ue.advance_verification(&mut cx, &c),
            }
            let wants_candidates = ue.wants_candidates();
            let UeCx {
                events,
                schedule,
                registration,
                ..
            } = cx;
            for (event_type, detail) in events {
                self.emit(ue_entity(id), event_type, detail);
            }
            for (at, timer) in schedule {
                self.push(at, Action::Ue(id, timer));
            }
            if let Some(pci) = registration {
                input = Some(UeInput::Registration(self.registration_accepted(id, pci)));
            } else if wants_candidates {
                input = Some(UeInput::Candidates(self.candidates(id)));
            }
        }
    }

    /// Tell every UE that stopped hearing `pci` about it.
    fn notify_losses(&mut self, pci: Pci) {
        let lost: Vec<UeId> = self.ues.keys().copied().filter(|&ue| self.rx(ue, pci).is_none()).collect();
        for ue in lost {
            self.drive_ue(ue, UeInput::CellLost(pci));
        }
    }

    fn cell_mut(&mut self, pci: Pci) -> Result<&mut Cell, SimError> {
        self.cells.get_mut(&pci).ok_or(SimError::Radio(RadioError::UnknownCell(pci)))
    }

    fn require_ue(&self, id: UeId) -> Result<&Ue, SimError> {
        self.ues.get(&id).ok_or(SimError::UnknownUe(id))
    }

    fn warning_pci(&self, id: WarningId) -> Result<Pci, SimError> {
        self.warning_cell
            .get(&id)
            .copied()
            .ok_or(SimError::Radio(RadioError::UnknownWarning(id)))
    }

    /// Validate fully, then mutate. On error nothing has changed.
    fn apply(&mut self, cmd: Command) -> Result<Vec<WarningId>, SimError> {
        match cmd {
            Command::Configure { settings, tlds } => {
                if !self.cells.is_empty() || !self.ues.is_empty() || self.now != 0 {
                    return Err(SimError::InvalidCommand(
                        "configure requires an empty simulation at t=0".into(),
                    ));
                }
                self.queue.clear();
                self.topology.detection_threshold = settings.detection_threshold_dbm;
                self.settings = settings;
                if let Some(tlds) = tlds {
                    self.tlds = TldList::new(tlds);
                }
                self.push(self.settings.clock_period_ms, Action::Clock);
            }
            Command::DefineProfile { profile } => self.profiles.insert(profile)?,
            Command::AddCell { config, initial_power } => {
                let pci = config.pci;
                if self.cells.contains_key(&pci) {
                    return Err(RadioError::DuplicatePci(pci).into());
                }
                for (ue, dbm) in initial_power {
                    self.topology.rx_power.insert((ue, pci), dbm);
                }
                self.emit_with(
                    cell_entity(pci),
                    "CellStarted",
                    [
                        ("plmn", json!(config.plmn)),
                        ("tac", json!(config.tac)),
                        ("cell_identity", json!(config.cell_identity)),
                        ("carrier", json!(config.carrier)),
                        ("is_rogue", json!(config.is_rogue)),
                        ("tx_active", json!(config.tx_active)),
                    ],
                );
                self.cells.insert(pci, Cell::new(config, self.now, self.settings.si_period_ms));
                self.push(self.now, Action::Sib1(pci));
                self.push(self.now, Action::SiCycle(pci));
            }
            Command::UpdateCell { pci, patch } => {
                let cell = self.cell_mut(pci)?;
                cell.apply_patch(&patch);
                self.emit_with(cell_entity(pci), "CellUpdated", [("patch", json!(patch))]);
                if patch.tx_active == Some(false) {
                    self.notify_losses(pci);
                }
            }
            Command::StopCell { pci } => {
                let cell = self.cell_mut(pci)?;
                cell.config.tx_active = false;
                cell.pending_paging = None;
                let stopped = cell.clear_warnings();
                for id in stopped {
                    self.warning_cell.remove(&id);
                    self.emit_with(cell_entity(pci), "WarningStopped", [("warning_id", json!(id))]);
                }
                self.emit_with(cell_entity(pci), "CellStopped", []);
                self.notify_losses(pci);
            }
            Command::AddUe { ue: spec } => {
                if self.ues.contains_key(&spec.id) {
                    return Err(SimError::DuplicateUe(spec.id));
                }
                let mut profile = self.profiles.get(&spec.profile)?.clone();
                if let Some(hplmn) = &spec.hplmn {
                    profile.hplmn = hplmn.clone();
                }
                let mut ue = Ue::new(spec.id, profile);
                ue.imsi = spec.imsi.clone();
                ue.data_service = spec.data_service;
                ue.cross_cell_verification = spec.cross_cell_verification;
                ue.locked = spec.locked;
                self.ues.insert(spec.id, ue);
                self.emit_with(
                    ue_entity(spec.id),
                    "UeAdded",
                    [("profile", json!(spec.profile)), ("power_on_ms", json!(spec.power_on_ms))],
                );
                if spec.power_on_ms <= self.now {
                    self.drive_ue(spec.id, UeInput::PowerOn);
                } else {
                    self.push(spec.power_on_ms, Action::Ue(spec.id, UeTimer::PowerOn));
                }
            }
            Command::SetRxPower { ue, pci, dbm } => {
                self.require_ue(ue)?;
                self.cell_mut(pci)?;
                match dbm {
                    Some(p) => self.topology.rx_power.insert((ue, pci), p),
                    None => self.topology.rx_power.remove(&(ue, pci)),
                };
                self.emit_with(ue_entity(ue), "RxPowerChanged", [("pci", json!(pci)), ("dbm", json!(dbm))]);
                if self.rx(ue, pci).is_none() {
                    self.drive_ue(ue, UeInput::CellLost(pci));
                }
            }
            Command::SetDetectionThreshold { dbm } => {
                self.topology.detection_threshold = dbm;
                self.emit_with("sim".into(), "DetectionThresholdChanged", [("dbm", json!(dbm))]);
                let pcis: Vec<Pci> = self.cells.keys().copied().collect();
                for pci in pcis {
                    self.notify_losses(pci);
                }
            }
            Command::AddSubscriber { entry } => {
                self.subscribers.add(entry.clone())?;
                self.emit_with("control".into(), "SubscriberAdded", [("imsi", json!(entry.imsi))]);
            }
            Command::UpdateSubscriber { entry } => {
                self.subscribers.update(entry.clone())?;
                self.emit_with("control".into(), "SubscriberUpdated", [("imsi", json!(entry.imsi))]);
            }
            Command::RemoveSubscriber { imsi } => {
                self.subscribers.remove(&imsi)?;
                self.emit_with("control".into(), "SubscriberRemoved", [("imsi", json!(imsi))]);
            }
            Command::SetVerificationPolicy { policy } => {
                self.emit_with("control".into(), "VerificationPolicySet", [("policy", json!(policy))]);
                self.policy = Some(policy);
            }
            Command::StartWarning {
                pci,
                payload,
                with_paging,
            } => return self.start_warnings(pci, vec![payload], with_paging, false),
            Command::StartWarningBatch {
                pci,
                payloads,
                with_paging,
                interleave,
            } => return self.start_warnings(pci, payloads, with_paging, interleave),
            Command::InjectWarning {
                pci,
                warning,
                with_paging,
            } => return self.start_encoded(pci, vec![(None, warning)], with_paging, false),
            Command::UpdateWarning { warning_id, payload } => self.update_warning(warning_id, payload)?,
            Command::StopWarning { warning_id } => {
                let pci = self.warning_pci(warning_id)?;
                self.cell_mut(pci)?.stop_warning(warning_id)?;
                self.warning_cell.remove(&warning_id);
                self.emit_with(cell_entity(pci), "WarningStopped", [("warning_id", json!(warning_id))]);
            }
            Command::ApplyPreset {
                preset,
                pci,
                warning_id,
            } => return self.apply_preset(&preset, pci, warning_id),
            Command::Jam { ues, duration_ms } => self.jam(&ues, duration_ms)?,
            Command::Interact {
                ue,
                alert_index,
                span_index,
            } => {
                let u = self.require_ue(ue)?;
                let alert = u
                    .alerts()
                    .get(alert_index)
                    .ok_or(SimError::UnknownAlert { ue, index: alert_index })?;
                let trace = interact_with_alert(alert, span_index, u.locked)?;
                self.emit_with(
                    ue_entity(ue),
                    "AlertInteraction",
                    [
                        ("alert_index", json!(alert_index)),
                        ("span_index", json!(span_index)),
                        ("trace", json!(trace)),
                    ],
                );
            }
            Command::Run { until_ms } => self.run_until(until_ms)?,
            Command::Reset => {
                let (log, seq, tap) = (std::mem::take(&mut self.log), self.seq, self.si_tap.take());
                *self = Self::new();
                self.log = log;
                self.seq = seq;
                self.si_tap = tap;
                self.emit_with("sim".into(), "Reset", []);
            }
            Command::LoadScenario { scenario } => {
                self.apply(Command::Reset)?;
                for (at, cmd) in scenario.commands() {
                    cmd.validate()?;
                    match at.filter(|&t| t > self.now) {
                        Some(t) if cmd.schedulable() => self.push(t, Action::Command(Box::new(cmd))),
                        Some(_) => {
                            return Err(SimError::InvalidCommand(format!("{} cannot be scheduled", cmd.name())));
                        }
                        None => {
                            self.apply(cmd)?;
                        }
                    }
                }
            }
        }
        Ok(Vec::new())
    }

    fn start_warnings(
        &mut self,
        pci: Pci,
        payloads: Vec<WarningPayload>,
        with_paging: bool,
        interleave: bool,
    ) -> Result<Vec<WarningId>, SimError> {
        let encoded = payloads
            .into_iter()
            .map(|p| codec::paginate(&p).map(|w| (Some(p), w)))
            .collect::<Result<Vec<_>, _>>()?;
        self.start_encoded(pci, encoded, with_paging, interleave)
    }

    fn start_encoded(
        &mut self,
        pci: Pci,
        warnings: Vec<(Option<WarningPayload>, EncodedWarning)>,
        with_paging: bool,
        interleave: bool,
    ) -> Result<Vec<WarningId>, SimError> {
        let budget = self
            .cells
            .get(&pci)
            .ok_or(RadioError::UnknownCell(pci))?
            .config
            .si_budget;
        let first = self.next_warning_id;
        let mut batch = Vec::new();
        for (k, (payload, encoded)) in warnings.into_iter().enumerate() {
            let segments = codec::segment(&encoded, budget)?;
            batch.push((first + k as WarningId, payload, encoded, segments));
        }
        let ids: Vec<WarningId> = batch.iter().map(|b| b.0).collect();
        let cell = self.cell_mut(pci)?;
        cell.add_warnings(batch, interleave)?;
        let snapshots: Vec<WarningSnapshot> = ids.iter().map(|id| WarningSnapshot::new(pci, &cell.warnings[id])).collect();
        let value_tag = cell.value_tag;
        self.next_warning_id = first + ids.len() as WarningId;
        for w in snapshots {
            self.warning_cell.insert(w.id, pci);
            self.emit_with(
                cell_entity(pci),
                "WarningStarted",
                [
                    ("warning_id", json!(w.id)),
                    ("message_identifier", json!(w.message_identifier)),
                    ("serial_number", json!(w.serial_number)),
                    ("pages", json!(w.pages)),
                    ("segments", json!(w.segments)),
                    ("si_indices", json!(w.si_indices)),
                    ("value_tag", json!(value_tag)),
                ],
            );
        }
        if with_paging {
            self.page(pci, PagingMessage::WARNING);
        }
        Ok(ids)
    }

    fn update_warning(&mut self, id: WarningId, payload: WarningPayload) -> Result<(), SimError> {
        let pci = self.warning_pci(id)?;
        let budget = self.cells[&pci].config.si_budget;
        let (encoded, segments) = radio::prepare(&payload, budget)?;
        let serial = payload.serial_number;
        let (now, period) = (self.now, self.settings.si_period_ms);
        let cell = self.cell_mut(pci)?;
        cell.stage_update(id, Some(payload), encoded, segments)?;
        let boundary = cell.started_at + ((now - cell.started_at) / period + 1) * period;
        self.emit_with(
            cell_entity(pci),
            "WarningUpdateScheduled",
            [
                ("warning_id", json!(id)),
                ("serial_number", json!(serial)),
                ("effective_at_ms", json!(boundary)),
            ],
        );
        Ok(())
    }

    fn apply_preset(
        &mut self,
        preset: &crate::control::WarningPreset,
        pci: Pci,
        target: Option<WarningId>,
    ) -> Result<Vec<WarningId>, SimError> {
        self.cell_mut(pci)?;
        let current = match target {
            Some(id) => {
                let w = self.warning(id).ok_or(RadioError::UnknownWarning(id))?;
                if w.pci != pci {
                    return Err(RadioError::UnknownWarning(id).into());
                }
                Some(w.payload.ok_or_else(|| {
                    SimError::InvalidCommand(format!("warning {id} was injected pre-encoded"))
                })?)
            }
            None => None,
        };
        let plan = preset.expand(current.as_ref());
        for (_, p) in &plan.updates {
            p.validate()?;
        }
        let ids = if plan.start.is_empty() {
            Vec::new()
        } else {
            self.start_warnings(pci, plan.start, preset.with_paging, plan.interleave)?
        };
        let mut scheduled = Vec::new();
        if let Some(id) = target.or_else(|| ids.first().copied()) {
            for (delay, payload) in plan.updates {
                scheduled.push(json!({"op": "update_warning", "warning_id": id, "apply_at_ms": self.now + delay}));
                self.push(
                    self.now + delay,
                    Action::Command(Box::new(Command::UpdateWarning { warning_id: id, payload })),
                );
            }
        }
        self.emit_with(
            "control".into(),
            "PresetApplied",
            [
                ("preset", json!(preset.name)),
                ("pci", json!(pci)),
                ("warning_ids", json!(ids)),
                ("scheduled", json!(scheduled)),
            ],
        );
        Ok(ids)
    }

    fn jam(&mut self, ues: &[UeId], duration_ms: u64) -> Result<(), SimError> {
        for &ue in ues {
            self.require_ue(ue)?;
        }
        if duration_ms == 0 {
            return Ok(());
        }
        let until = self.now + duration_ms;
        for &ue in ues {
            let Some(pci) = self.ues[&ue].serving_pci() else { continue };
            self.topology.jammed.insert((ue, pci), until);
            self.push(until, Action::JamEnd(ue, pci));
            self.emit_with(ue_entity(ue), "JamStarted", [("pci", json!(pci)), ("until_ms", json!(until))]);
            self.drive_ue(ue, UeInput::CellLost(pci));
        }
        Ok(())
    }
}
