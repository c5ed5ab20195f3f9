//! Control plane for the alertbed simulation: an HTTP+JSON service in the
//! role of a base station's network management system, and the pieces the
//! `alertbed` command-line tool is built from.

pub mod api;
pub mod events;
pub mod service;

use std::net::SocketAddr;
use std::path::PathBuf;

use alertbed::sim::ScenarioError;
use alertbed::{Scenario, Simulation};
use tokio::net::TcpListener;

pub use service::SimService;

#[derive(Debug, thiserror::Error)]
pub enum ServeError {
    #[error("bad scenario: {0}")]
    BadScenario(#[from] ScenarioError),
    #[error("scenario rejected by the simulation: {0}")]
    Rejected(#[from] alertbed::sim::SimError),
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("event log {path}: {source}")]
    Log { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Default)]
pub struct ServeConfig {
    pub bind: String,
    pub scenario: Option<PathBuf>,
    pub log: Option<PathBuf>,
    /// Start free-running at this multiple of wall-clock speed.
    pub realtime_ratio: Option<f64>,
}

/// A bound server with its simulation loaded, paused at t=0.
pub struct Server {
    pub addr: SocketAddr,
    pub service: SimService,
    scenario_file: Option<PathBuf>,
    listener: TcpListener,
}

impl Server {
    pub async fn bind(config: &ServeConfig) -> Result<Self, ServeError> {
        let sim = match &config.scenario {
            Some(path) => Simulation::load(&Scenario::from_path(path)?)?,
            None => Simulation::new(),
        };
        let service = SimService::spawn(sim, config.log.clone()).map_err(|source| ServeError::Log {
            path: config.log.clone().unwrap_or_default(),
            source,
        })?;
        if let Some(ratio) = config.realtime_ratio {
            service
                .free_run(Some(ratio))
                .await
                .map_err(|e| std::io::Error::other(e.to_string()))?;
        }
        let listener = TcpListener::bind(&config.bind).await.map_err(|source| ServeError::Bind {
            addr: config.bind.clone(),
            source,
        })?;
        Ok(Self {
            addr: listener.local_addr()?,
            service,
            scenario_file: config.scenario.clone(),
            listener,
        })
    }

    pub async fn run(self) -> std::io::Result<()> {
        axum::serve(self.listener, api::router(self.service, self.scenario_file)).await
    }

    /// Serve on a background task; handy for tests and examples.
    pub fn spawn(self) -> (SocketAddr, SimService) {
        let (addr, service) = (self.addr, self.service.clone());
        tokio::spawn(self.run());
        (addr, service)
    }
}
