//! Scenario files: a JSON description of cells, UEs, link powers and a
//! timeline of commands, plus optional expectations checked after the run.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::{Ack, Command, SimError, SimSettings, Simulation, UeSpec};
use crate::control::SubscriberEntry;
use crate::radio::{CellConfig, Pci, UeId};
use crate::ue::{ProfileRegistry, UeProfile};
use crate::verify::{VerdictStatus, VerificationPolicy, VerificationVerdict};

#[derive(Debug, Error)]
pub enum ScenarioError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("at `{path}` (line {line}, column {column}): {message}")]
    Parse {
        path: String,
        line: usize,
        column: usize,
        message: String,
    },
    #[error("invalid scenario: {0}")]
    Invalid(String),
    #[error("bad expectation {text:?}: {reason}")]
    Expectation { text: String, reason: String },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RxPowerEntry {
    pub ue: UeId,
    pub pci: Pci,
    pub dbm: f64,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TopologySpec {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub detection_threshold_dbm: Option<f64>,
    #[serde(default)]
    pub rx_power: Vec<RxPowerEntry>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimelineEntry {
    pub at_ms: u64,
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    #[serde(default)]
    pub name: String,
    #[serde(default)]
    pub description: String,
    #[serde(default)]
    pub settings: SimSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tlds: Option<Vec<String>>,
    #[serde(default)]
    pub profiles: Vec<UeProfile>,
    pub cells: Vec<CellConfig>,
    #[serde(default)]
    pub ues: Vec<UeSpec>,
    #[serde(default)]
    pub subscribers: Vec<SubscriberEntry>,
    #[serde(default)]
    pub topology: TopologySpec,
    #[serde(default)]
    pub timeline: Vec<TimelineEntry>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification_policy: Option<VerificationPolicy>,
    pub end_ms: u64,
    #[serde(default)]
    pub expectations: Vec<String>,
}

impl Scenario {
    pub fn from_json(text: &str) -> Result<Self, ScenarioError> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let scenario: Self = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            let inner = e.into_inner();
            ScenarioError::Parse {
                path,
                line: inner.line(),
                column: inner.column(),
                message: inner.to_string(),
            }
        })?;
        scenario.validate()?;
        Ok(scenario)
    }

    pub fn from_path(path: impl AsRef<Path>) -> Result<Self, ScenarioError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| ScenarioError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("scenarios serialize")
    }

    /// Cross-reference checks the schema cannot express.
    pub fn validate(&self) -> Result<(), ScenarioError> {
        let invalid = |msg: String| Err(ScenarioError::Invalid(msg));
        self.settings
            .validate()
            .map_err(|e| ScenarioError::Invalid(e.to_string()))?;
        let mut profiles = ProfileRegistry::bundled();
        for p in &self.profiles {
            profiles
                .insert(p.clone())
                .map_err(|e| ScenarioError::Invalid(format!("profiles: {e}")))?;
        }
        let mut pcis = BTreeSet::new();
        for (i, c) in self.cells.iter().enumerate() {
            if !pcis.insert(c.pci) {
                return invalid(format!("cells[{i}]: pci {} used twice", c.pci));
            }
            c.validate()
                .map_err(|e| ScenarioError::Invalid(format!("cells[{i}]: {e}")))?;
        }
        let mut ue_ids = BTreeSet::new();
        for (i, u) in self.ues.iter().enumerate() {
            if !ue_ids.insert(u.id) {
                return invalid(format!("ues[{i}]: id {} used twice", u.id));
            }
            if profiles.get(&u.profile).is_err() {
                return invalid(format!("ues[{i}]: unknown profile {:?}", u.profile));
            }
            Command::AddUe { ue: u.clone() }
                .validate()
                .map_err(|e| ScenarioError::Invalid(format!("ues[{i}]: {e}")))?;
        }
        for (i, r) in self.topology.rx_power.iter().enumerate() {
            if !ue_ids.contains(&r.ue) {
                return invalid(format!("topology.rx_power[{i}]: unknown ue {}", r.ue));
            }
            if !pcis.contains(&r.pci) {
                return invalid(format!("topology.rx_power[{i}]: unknown pci {}", r.pci));
            }
        }
        for (i, s) in self.subscribers.iter().enumerate() {
            Command::AddSubscriber { entry: s.clone() }
                .validate()
                .map_err(|e| ScenarioError::Invalid(format!("subscribers[{i}]: {e}")))?;
        }
        if let Some(policy) = &self.verification_policy {
            policy
                .validate()
                .map_err(|e| ScenarioError::Invalid(format!("verification_policy: {e}")))?;
        }
        for (i, t) in self.timeline.iter().enumerate() {
            t.command
                .validate()
                .map_err(|e| ScenarioError::Invalid(format!("timeline[{i}]: {e}")))?;
            if !t.command.schedulable() {
                return invalid(format!("timeline[{i}]: {} is not allowed in a timeline", t.command.name()));
            }
        }
        for text in &self.expectations {
            text.parse::<Expectation>()?;
        }
        Ok(())
    }

    /// The command sequence that sets the scenario up, with apply times.
    pub fn commands(&self) -> Vec<(Option<u64>, Command)> {
        let mut settings = self.settings.clone();
        if let Some(t) = self.topology.detection_threshold_dbm {
            settings.detection_threshold_dbm = t;
        }
        let mut out = vec![(
            None,
            Command::Configure {
                settings,
                tlds: self.tlds.clone(),
            },
        )];
        out.extend(self.profiles.iter().map(|p| (None, Command::DefineProfile { profile: p.clone() })));
        out.extend(self.subscribers.iter().map(|s| (None, Command::AddSubscriber { entry: s.clone() })));
        if let Some(policy) = &self.verification_policy {
            out.push((None, Command::SetVerificationPolicy { policy: policy.clone() }));
        }
        for c in &self.cells {
            let initial_power: BTreeMap<UeId, f64> = self
                .topology
                .rx_power
                .iter()
                .filter(|r| r.pci == c.pci)
                .map(|r| (r.ue, r.dbm))
                .collect();
            out.push((
                None,
                Command::AddCell {
                    config: c.clone(),
                    initial_power,
                },
            ));
        }
        out.extend(self.ues.iter().map(|u| (None, Command::AddUe { ue: u.clone() })));
        out.extend(
            self.timeline
                .iter()
                .map(|t| ((t.at_ms > 0).then_some(t.at_ms), t.command.clone())),
        );
        out
    }

    pub fn expectations(&self) -> Vec<Expectation> {
        self.expectations
            .iter()
            .map(|e| e.parse().expect("validated at load"))
            .collect()
    }
}

impl Simulation {
    /// A fresh simulation with the scenario's setup and timeline submitted,
    /// paused at t=0.
    pub fn load(scenario: &Scenario) -> Result<Self, SimError> {
        let mut sim = Self::new();
        sim.load_into(scenario)?;
        Ok(sim)
    }

    /// Replace the current state with the scenario's, as one logged
    /// command.
    pub fn load_into(&mut self, scenario: &Scenario) -> Result<Ack, SimError> {
        self.submit(Command::LoadScenario {
            scenario: Box::new(scenario.clone()),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum CmpOp {
    Eq,
    Ne,
    Lt,
    Le,
    Gt,
    Ge,
}

impl CmpOp {
    fn holds(self, a: i64, b: i64) -> bool {
        match self {
            Self::Eq => a == b,
            Self::Ne => a != b,
            Self::Lt => a < b,
            Self::Le => a <= b,
            Self::Gt => a > b,
            Self::Ge => a >= b,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Subject {
    Ue(UeId),
    Cell(Pci),
}

/// `ue1.displays == 5`, `cell66.si_entries <= 32`, ...
///
/// UE metrics: `displays`, `registration_attempts`, `registrations`,
/// `cells_barred`, `verified`, `unverified`, `serving_pci` (-1 when none).
/// Cell metrics: `si_entries`, `value_tag`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Expectation {
    pub text: String,
    pub subject: Subject,
    pub metric: String,
    pub op: CmpOp,
    pub value: i64,
}

const UE_METRICS: [&str; 7] = [
    "displays",
    "registration_attempts",
    "registrations",
    "cells_barred",
    "verified",
    "unverified",
    "serving_pci",
];
const CELL_METRICS: [&str; 2] = ["si_entries", "value_tag"];

impl FromStr for Expectation {
    type Err = ScenarioError;

    fn from_str(text: &str) -> Result<Self, Self::Err> {
        let fail = |reason: &str| ScenarioError::Expectation {
            text: text.to_string(),
            reason: reason.to_string(),
        };
        let parts: Vec<&str> = text.split_whitespace().collect();
        let [lhs, op, rhs] = parts[..] else {
            return Err(fail("expected `<subject>.<metric> <op> <integer>`"));
        };
        let op = match op {
            "==" => CmpOp::Eq,
            "!=" => CmpOp::Ne,
            "<" => CmpOp::Lt,
            "<=" => CmpOp::Le,
            ">" => CmpOp::Gt,
            ">=" => CmpOp::Ge,
            _ => return Err(fail("unknown comparison operator")),
        };
        let value: i64 = rhs.parse().map_err(|_| fail("right-hand side must be an integer"))?;
        let (subject, metric) = lhs.split_once('.').ok_or_else(|| fail("missing `.metric`"))?;
        let subject = if let Some(id) = subject.strip_prefix("ue") {
            Subject::Ue(id.parse().map_err(|_| fail("bad ue id"))?)
        } else if let Some(pci) = subject.strip_prefix("cell") {
            Subject::Cell(pci.parse().map_err(|_| fail("bad cell pci"))?)
        } else {
            return Err(fail("subject must be ue<id> or cell<pci>"));
        };
        let known = match subject {
            Subject::Ue(_) => UE_METRICS.contains(&metric),
            Subject::Cell(_) => CELL_METRICS.contains(&metric),
        };
        if !known {
            return Err(fail("unknown metric"));
        }
        Ok(Self {
            text: text.to_string(),
            subject,
            metric: metric.to_string(),
            op,
            value,
        })
    }
}

impl fmt::Display for Expectation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl Expectation {
    /// Measured value, or `None` when the subject does not exist.
    pub fn measure(&self, sim: &Simulation) -> Option<i64> {
        match self.subject {
            Subject::Ue(id) => {
                let ue = sim.ue(id)?;
                let entity = crate::event::ue_entity(id);
                let count = |t: &str| {
                    sim.log()
                        .iter()
                        .filter(|e| e.entity == entity && e.event_type == t)
                        .count() as i64
                };
                let verdicts = |s: VerdictStatus| ue.verdicts().iter().filter(|v| v.status == s).count() as i64;
                Some(match self.metric.as_str() {
                    "displays" => count("AlertDisplayed"),
                    "registration_attempts" => count("RegistrationAttempt"),
                    "registrations" => count("RegistrationAccepted"),
                    "cells_barred" => count("CellBarred"),
                    "verified" => verdicts(VerdictStatus::Verified),
                    "unverified" => verdicts(VerdictStatus::Unverified),
                    _ => ue.serving_pci().map_or(-1, i64::from),
                })
            }
            Subject::Cell(pci) => {
                let cell = sim.cell(pci)?;
                Some(match self.metric.as_str() {
                    "si_entries" => cell.slot_count() as i64,
                    _ => i64::from(cell.value_tag),
                })
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExpectationResult {
    pub expectation: String,
    pub actual: Option<i64>,
    pub passed: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AlertSummary {
    pub time_ms: u64,
    pub pci: Pci,
    pub message_identifier: u16,
    pub serial_number: u16,
    pub text: String,
    pub spans: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UeSummary {
    pub id: UeId,
    pub profile: String,
    pub displays: usize,
    pub alerts: Vec<AlertSummary>,
    pub first_display_ms: Option<u64>,
    pub first_registration_attempt_ms: Option<u64>,
    pub displayed_before_registration: Option<bool>,
    pub registrations: usize,
    pub verdicts: Vec<VerificationVerdict>,
}

/// Summary written after a headless run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunReport {
    pub scenario: String,
    pub end_ms: u64,
    pub events: usize,
    pub ues: Vec<UeSummary>,
    pub expectations: Vec<ExpectationResult>,
    pub passed: bool,
}

impl RunReport {
    pub fn build(scenario: &Scenario, sim: &Simulation) -> Self {
        let first = |entity: &str, t: &str| {
            sim.log()
                .iter()
                .find(|e| e.entity == entity && e.event_type == t)
                .map(|e| e.time_ms)
        };
        let ues: Vec<UeSummary> = sim
            .ues()
            .map(|ue| {
                let entity = crate::event::ue_entity(ue.id);
                let first_display_ms = first(&entity, "AlertDisplayed");
                let first_registration_attempt_ms = first(&entity, "RegistrationAttempt");
                UeSummary {
                    id: ue.id,
                    profile: ue.profile.name.clone(),
                    displays: ue.alerts().len(),
                    alerts: ue
                        .alerts()
                        .iter()
                        .map(|a| AlertSummary {
                            time_ms: a.time_ms,
                            pci: a.pci,
                            message_identifier: a.message_identifier,
                            serial_number: a.serial_number,
                            text: a.text.clone(),
                            spans: a.spans.len(),
                        })
                        .collect(),
                    first_display_ms,
                    first_registration_attempt_ms,
                    displayed_before_registration: first_display_ms
                        .map(|d| first_registration_attempt_ms.is_none_or(|r| d < r)),
                    registrations: sim
                        .log()
                        .iter()
                        .filter(|e| e.entity == entity && e.event_type == "RegistrationAccepted")
                        .count(),
                    verdicts: ue.verdicts().to_vec(),
                }
            })
            .collect();
        let expectations: Vec<ExpectationResult> = scenario
            .expectations()
            .into_iter()
            .map(|e| {
                let actual = e.measure(sim);
                ExpectationResult {
                    passed: actual.is_some_and(|a| e.op.holds(a, e.value)),
                    expectation: e.text,
                    actual,
                }
            })
            .collect();
        Self {
            scenario: scenario.name.clone(),
            end_ms: sim.now(),
            events: sim.log().len(),
            passed: expectations.iter().all(|e| e.passed),
            ues,
            expectations,
        }
    }
}

/// Load, run to `end_ms` and summarize.
pub fn run_scenario(scenario: &Scenario) -> Result<(Simulation, RunReport), SimError> {
    let mut sim = Simulation::load(scenario)?;
    sim.run(scenario.end_ms)?;
    let report = RunReport::build(scenario, &sim);
    Ok((sim, report))
}
