//! Executes one validated [`RunConfig`] and collects its observables.

use std::collections::HashSet;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::analysis::{compute_metrics, segment_phases, MetricsReport, PhaseReport, QueueTrace};
use crate::config::{ConfigError, RunConfig};
use crate::net::packet::FlowId;
use crate::net::port::{PortId, PortStats};
use crate::net::telemetry::TelemetryLog;
use crate::scenarios::{FlowGroup, QuerySpec, Scenario};
use crate::sim::{Annotation, FlowRecord, RunSummary, SimError, Simulation};
use crate::transport::Algorithm;
use crate::units::SimTime;

#[derive(Debug, Error)]
pub enum RunError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error(transparent)]
    Sim(#[from] SimError),
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub config: RunConfig,
    pub summary: RunSummary,
    pub flows: Vec<FlowRecord>,
    pub queries: Vec<QuerySpec>,
    pub trace: TelemetryLog,
    pub annotations: Vec<Annotation>,
    pub monitored: Vec<(PortId, String)>,
    /// Arrival-side trace of the first monitored port.
    pub queue: QueueTrace,
    pub phases: Option<PhaseReport>,
    pub metrics: MetricsReport,
    pub port_stats: Vec<(String, PortStats)>,
    pub conserves_bytes: bool,
}

fn ms(v: f64) -> SimTime {
    SimTime((v * 1e6).round().max(0.0) as u64)
}

/// Builds the simulation for `cfg` without running it.
pub fn build(cfg: &RunConfig) -> Result<Simulation, RunError> {
    cfg.validate()?;
    let topo = cfg.topology.build();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let schedule = cfg
        .scenario
        .generate(&topo, &mut rng)
        .map_err(ConfigError::from)?;
    Ok(Simulation::new(
        topo,
        &cfg.network_config(),
        &cfg.transport_config(),
        schedule,
        rng,
    )?)
}

pub fn run(cfg: &RunConfig) -> Result<RunResult, RunError> {
    let mut sim = build(cfg)?;
    let horizon = cfg.horizon();
    let summary = if sim.unfinished() > 0 {
        sim.run_until_done(horizon)
    } else {
        sim.run_until(horizon)
    };
    Ok(collect(cfg, &sim, summary))
}

fn collect(cfg: &RunConfig, sim: &Simulation, summary: RunSummary) -> RunResult {
    let flows = sim.flow_records();
    let fanin: HashSet<FlowId> = flows
        .iter()
        .filter(|f| f.group != FlowGroup::Background)
        .map(|f| f.id)
        .collect();
    let monitored: Vec<(PortId, String)> = sim
        .monitored_ports()
        .into_iter()
        .map(|p| (p, sim.port_name(p).to_string()))
        .collect();
    let queue = monitored
        .first()
        .map(|&(p, _)| QueueTrace::from_run(sim.trace(), p, &fanin, sim.annotations()))
        .unwrap_or_default();
    let phases = match cfg.scenario {
        Scenario::WebSearch(_) | Scenario::LongFlowBatches(_) => None,
        _ => segment_phases(&queue).ok(),
    };

    let burst = cfg.scenario.burst_start();
    let last_end = flows
        .iter()
        .filter(|f| f.group != FlowGroup::Background)
        .filter_map(|f| f.end)
        .max()
        .unwrap_or(summary.end_time);
    let a = &cfg.analysis;
    let default_from = match cfg.protocol.algorithm() {
        Algorithm::NewReno => 2.0,
        Algorithm::Dctcp => 10.0,
    };
    let sd_from = burst + ms(a.stddev_from_ms.unwrap_or(default_from));
    let sd_to = a.stddev_to_ms.map(|t| burst + ms(t)).unwrap_or(last_end);
    let goodput_window = match (&cfg.scenario, a.goodput_from_ms, a.goodput_to_ms) {
        (_, Some(f), t) => Some((ms(f), t.map(ms).unwrap_or(summary.end_time))),
        (Scenario::LongFlowBatches(_), None, _) => Some((SimTime::ZERO, summary.end_time)),
        _ => None,
    };
    let metrics = compute_metrics(
        &flows,
        sim.queries(),
        &queue,
        Some((sd_from, sd_to)),
        goodput_window,
        summary.packets_marked,
        summary.packets_dropped,
    );
    RunResult {
        config: cfg.clone(),
        summary,
        flows,
        queries: sim.queries().to_vec(),
        trace: sim.trace().clone(),
        annotations: sim.annotations().to_vec(),
        monitored,
        queue,
        phases,
        metrics,
        port_stats: sim.port_stats(),
        conserves_bytes: sim.conserves_bytes(),
    }
}

#[derive(Debug, Error)]
pub enum ExecError {
    #[error(transparent)]
    Run(#[from] RunError),
    #[error("writing {path}: {source}")]
    Io {
        path: std::path::PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl ExecError {
    pub fn is_config(&self) -> bool {
        matches!(self, ExecError::Run(RunError::Config(_)))
    }
}

/// Runs `cfg` (every sweep point, in parallel) and writes the outputs under
/// `out`, one subdirectory per sweep point. Returns the written directories.
pub fn execute(
    cfg: &RunConfig,
    out: &std::path::Path,
) -> Result<Vec<std::path::PathBuf>, ExecError> {
    use rayon::prelude::*;
    let points = cfg.expand_sweep().map_err(RunError::from)?;
    let sweep = cfg.sweep.is_some();
    points
        .par_iter()
        .map(|(label, pc)| {
            let dir = if sweep {
                out.join(label)
            } else {
                out.to_path_buf()
            };
            let r = run(pc)?;
            crate::output::write_all(&r, &dir).map_err(|source| ExecError::Io {
                path: dir.clone(),
                source,
            })?;
            Ok(dir)
        })
        .collect()
}
