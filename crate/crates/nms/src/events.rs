//! Append-only copy of the simulation log shared with HTTP readers, plus the
//! on-disk JSON-lines file.

use std::fs::{File, OpenOptions};
use std::io::{BufWriter, Write};
use std::path::Path;
use std::sync::RwLock;

use alertbed::SimEvent;
use tokio::sync::watch;

pub struct EventStore {
    events: RwLock<Vec<SimEvent>>,
    latest: watch::Sender<u64>,
}

impl Default for EventStore {
    fn default() -> Self {
        Self {
            events: RwLock::new(Vec::new()),
            latest: watch::channel(0).0,
        }
    }
}

impl EventStore {
    pub fn append(&self, batch: &[SimEvent]) {
        let Some(last) = batch.last() else { return };
        self.events.write().expect("event store poisoned").extend_from_slice(batch);
        self.latest.send_replace(last.seq);
    }

    /// Events with `seq` greater than `cursor`, at most `limit` of them.
    pub fn since(&self, cursor: u64, limit: usize) -> Vec<SimEvent> {
        let events = self.events.read().expect("event store poisoned");
        let start = events.partition_point(|e| e.seq <= cursor);
        events[start..].iter().take(limit).cloned().collect()
    }

    pub fn latest(&self) -> u64 {
        *self.latest.borrow()
    }

    pub fn subscribe(&self) -> watch::Receiver<u64> {
        self.latest.subscribe()
    }
}

/// JSON-lines log opened for append; existing content is never truncated.
pub struct LogFile(BufWriter<File>);

impl LogFile {
    pub fn open(path: &Path) -> std::io::Result<Self> {
        let file = OpenOptions::new().create(true).append(true).open(path)?;
        Ok(Self(BufWriter::new(file)))
    }

    pub fn write(&mut self, batch: &[SimEvent]) -> std::io::Result<()> {
        for event in batch {
            writeln!(self.0, "{}", event.to_json_line())?;
        }
        self.0.flush()
    }
}
