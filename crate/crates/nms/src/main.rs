//! `alertbed`: run scenarios headlessly or serve the control-plane API.

use std::path::PathBuf;
use std::process::ExitCode;

use alertbed::codec::hex_dump;
use alertbed::event::to_jsonl;
use alertbed::sim::scenario::RunReport;
use alertbed::{Scenario, Simulation};
use alertbed_nms::{ServeConfig, Server};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "alertbed", version, about = "Public warning system spoofing testbed")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run a scenario to completion and check its expectations.
    Run {
        scenario: PathBuf,
        /// Stop at this simulated time instead of the scenario's end_ms.
        #[arg(long)]
        until: Option<u64>,
        /// Write the event log here as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Write the JSON run report here.
        #[arg(long)]
        report: Option<PathBuf>,
        /// Print every transmitted SI body as hex.
        #[arg(long)]
        dump_si_hex: bool,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long, default_value = "127.0.0.1:8080")]
        bind: String,
        #[arg(long)]
        scenario: Option<PathBuf>,
        /// Append the event log here as JSON lines.
        #[arg(long)]
        log: Option<PathBuf>,
        /// Start free-running at this multiple of wall-clock speed.
        #[arg(long)]
        realtime_ratio: Option<f64>,
    },
}

fn run(
    path: PathBuf,
    until: Option<u64>,
    log: Option<PathBuf>,
    report_path: Option<PathBuf>,
    dump_si_hex: bool,
) -> Result<bool, Box<dyn std::error::Error>> {
    let scenario = Scenario::from_path(&path)?;
    let mut sim = Simulation::new();
    if dump_si_hex {
        sim.tap_si();
    }
    sim.load_into(&scenario)?;
    sim.run(until.unwrap_or(scenario.end_ms))?;
    let report = RunReport::build(&scenario, &sim);

    if let Some(log) = log {
        std::fs::write(log, to_jsonl(sim.log()))?;
    }
    if let Some(out) = report_path {
        std::fs::write(out, serde_json::to_string_pretty(&report)?)?;
    }
    if dump_si_hex {
        for c in sim.si_captures() {
            println!("{:>8} pci={} si={}: {}", c.time_ms, c.pci, c.si_index, hex_dump(&c.body));
        }
    }
    print_summary(&report);
    Ok(report.passed)
}

fn print_summary(report: &RunReport) {
    println!("scenario {:?}: {} events to t={} ms", report.scenario, report.events, report.end_ms);
    for ue in &report.ues {
        println!(
            "  ue{} ({}): {} alert(s), first display {}, first registration attempt {}{}",
            ue.id,
            ue.profile,
            ue.displays,
            ue.first_display_ms.map_or("-".into(), |t| format!("{t} ms")),
            ue.first_registration_attempt_ms.map_or("-".into(), |t| format!("{t} ms")),
            match ue.displayed_before_registration {
                Some(true) => ", displayed before registration",
                Some(false) => ", displayed after registration",
                None => "",
            },
        );
        for v in &ue.verdicts {
            println!("    verdict: {}", serde_json::to_string(v).unwrap_or_default());
        }
    }
    for e in &report.expectations {
        let actual = e.actual.map_or("n/a".into(), |a| a.to_string());
        let mark = if e.passed { "ok  " } else { "FAIL" };
        println!("  {mark} {} (actual {actual})", e.expectation);
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match cli.command {
        Cmd::Run {
            scenario,
            until,
            log,
            report,
            dump_si_hex,
        } => match run(scenario, until, log, report, dump_si_hex) {
            Ok(true) => ExitCode::SUCCESS,
            Ok(false) => ExitCode::from(2),
            Err(e) => {
                eprintln!("error: {e}");
                ExitCode::FAILURE
            }
        },
        Cmd::Serve {
            bind,
            scenario,
            log,
            realtime_ratio,
        } => {
            tracing_subscriber::fmt()
                .with_env_filter(
                    tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "info".into()),
                )
                .init();
            let config = ServeConfig {
                bind,
                scenario,
                log,
                realtime_ratio,
            };
            let rt = tokio::runtime::Runtime::new().expect("tokio runtime");
            let result = rt.block_on(async {
                let server = Server::bind(&config).await?;
                tracing::info!("listening on http://{}", server.addr);
                tokio::select! {
                    r = server.run() => r?,
                    _ = tokio::signal::ctrl_c() => tracing::info!("shutting down"),
                }
                Ok::<_, alertbed_nms::ServeError>(())
            });
            match result {
                Ok(()) => ExitCode::SUCCESS,
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::FAILURE
                }
            }
        }
    }
}
