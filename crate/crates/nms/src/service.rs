//! The simulation lives on one dedicated thread. HTTP handlers send it
//! requests over a channel and read the state it publishes after every
//! request; nothing else ever touches the simulation.

use std::path::PathBuf;
use std::sync::mpsc::{self, RecvTimeoutError};
use std::sync::{Arc, RwLock};
use std::thread;
use std::time::{Duration, Instant};

use alertbed::sim::{Ack, SimError, SimSnapshot};
use alertbed::{Command, Scenario, Simulation};
use serde::Serialize;
use tokio::sync::oneshot;

use crate::events::{EventStore, LogFile};

/// Wall-clock interval between free-run advances.
const FREE_RUN_TICK: Duration = Duration::from_millis(50);

#[derive(Debug, Clone, Serialize)]
pub struct Published {
    pub snapshot: SimSnapshot,
    pub free_run_ratio: Option<f64>,
    pub cursor: u64,
}

#[derive(Debug)]
enum Op {
    Submit { cmd: Command, at: Option<u64> },
    Step { ms: u64 },
    FreeRun(Option<f64>),
}

struct Request {
    op: Op,
    reply: oneshot::Sender<Result<(Ack, Arc<Published>), SimError>>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error("simulation thread has stopped")]
    Stopped,
}

/// Cheap to clone; every clone talks to the same simulation thread.
#[derive(Clone)]
pub struct SimService {
    tx: mpsc::Sender<Request>,
    published: Arc<RwLock<Arc<Published>>>,
    events: Arc<EventStore>,
}

struct Worker {
    sim: Simulation,
    published: Arc<RwLock<Arc<Published>>>,
    events: Arc<EventStore>,
    log: Option<LogFile>,
    cursor: u64,
    free_run: Option<f64>,
}

impl Worker {
    fn handle(&mut self, op: Op) -> Result<Ack, SimError> {
        match op {
            Op::Submit { cmd, at } => self.sim.submit_at(cmd, at),
            Op::Step { ms } => {
                let until = self.sim.now() + ms;
                self.sim.submit(Command::Run { until_ms: until })
            }
            Op::FreeRun(ratio) => {
                self.free_run = ratio.filter(|r| *r > 0.0);
                Ok(Ack {
                    command: "free_run",
                    applies_at_ms: self.sim.now(),
                    scheduled: false,
                    warning_ids: Vec::new(),
                })
            }
        }
    }

    /// Forward new log records and publish a fresh snapshot.
    fn publish(&mut self) -> Arc<Published> {
        let batch = self.sim.events_since(self.cursor);
        if let Some(last) = batch.last() {
            if let Some(log) = &mut self.log {
                if let Err(e) = log.write(batch) {
                    tracing::error!("event log write failed: {e}");
                }
            }
            self.events.append(batch);
            self.cursor = last.seq;
        }
        let published = Arc::new(Published {
            snapshot: self.sim.snapshot(),
            free_run_ratio: self.free_run,
            cursor: self.cursor,
        });
        *self.published.write().expect("snapshot lock poisoned") = published.clone();
        published
    }

    fn run(mut self, rx: mpsc::Receiver<Request>) {
        let mut carry = 0.0;
        let mut last_tick = Instant::now();
        loop {
            let next = match self.free_run {
                Some(_) => rx.recv_timeout(FREE_RUN_TICK.saturating_sub(last_tick.elapsed())),
                None => rx.recv().map_err(|_| RecvTimeoutError::Disconnected),
            };
            match next {
                Ok(Request { op, reply }) => {
                    let result = self.handle(op);
                    let published = self.publish();
                    let _ = reply.send(result.map(|ack| (ack, published)));
                }
                Err(RecvTimeoutError::Timeout) => {
                    let ratio = self.free_run.unwrap_or(0.0);
                    carry += last_tick.elapsed().as_secs_f64() * 1000.0 * ratio;
                    last_tick = Instant::now();
                    let whole = carry.floor();
                    carry -= whole;
                    if whole >= 1.0 {
                        let until = self.sim.now() + whole as u64;
                        if let Err(e) = self.sim.submit(Command::Run { until_ms: until }) {
                            tracing::error!("free run stopped: {e}");
                            self.free_run = None;
                        }
                        self.publish();
                    }
                }
                Err(RecvTimeoutError::Disconnected) => break,
            }
            if self.free_run.is_none() {
                last_tick = Instant::now();
                carry = 0.0;
            }
        }
    }
}

impl SimService {
    /// Take ownership of `sim` on a new thread. Existing log records are
    /// written to `log_path` first.
    pub fn spawn(sim: Simulation, log_path: Option<PathBuf>) -> std::io::Result<Self> {
        let log = log_path.as_deref().map(LogFile::open).transpose()?;
        let events = Arc::new(EventStore::default());
        let placeholder = Arc::new(Published {
            snapshot: sim.snapshot(),
            free_run_ratio: None,
            cursor: 0,
        });
        let published = Arc::new(RwLock::new(placeholder));
        let mut worker = Worker {
            sim,
            published: published.clone(),
            events: events.clone(),
            log,
            cursor: 0,
            free_run: None,
        };
        worker.publish();
        let (tx, rx) = mpsc::channel();
        thread::Builder::new()
            .name("simulation".into())
            .spawn(move || worker.run(rx))?;
        Ok(Self { tx, published, events })
    }

    async fn request(&self, op: Op) -> Result<(Ack, Arc<Published>), ServiceError> {
        let (reply, rx) = oneshot::channel();
        self.tx.send(Request { op, reply }).map_err(|_| ServiceError::Stopped)?;
        Ok(rx.await.map_err(|_| ServiceError::Stopped)??)
    }

    pub async fn submit(&self, cmd: Command, at: Option<u64>) -> Result<(Ack, Arc<Published>), ServiceError> {
        self.request(Op::Submit { cmd, at }).await
    }

    pub async fn step(&self, ms: u64) -> Result<(Ack, Arc<Published>), ServiceError> {
        self.request(Op::Step { ms }).await
    }

    pub async fn load(&self, scenario: Scenario) -> Result<(Ack, Arc<Published>), ServiceError> {
        let cmd = Command::LoadScenario {
            scenario: Box::new(scenario),
        };
        self.submit(cmd, None).await
    }

    /// `Some(ratio)` advances simulated time at `ratio` times wall-clock
    /// speed; `None` pauses.
    pub async fn free_run(&self, ratio: Option<f64>) -> Result<(Ack, Arc<Published>), ServiceError> {
        self.request(Op::FreeRun(ratio)).await
    }

    pub fn published(&self) -> Arc<Published> {
        self.published.read().expect("snapshot lock poisoned").clone()
    }

    pub fn events(&self) -> &EventStore {
        &self.events
    }
}
