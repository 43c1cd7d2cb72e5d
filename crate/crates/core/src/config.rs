//! TOML run configuration, validation and sweeps.

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::marking::{PolicyKind, SecnCounting, SecnEngine, SecnOptions};
use crate::net::telemetry::TelemetryMode;
use crate::net::topology::Topology;
use crate::scenarios::{Scenario, ScenarioError};
use crate::sim::{NetworkConfig, TransportConfig};
use crate::transport::{Algorithm, SenderConfig, MSS};
use crate::units::{BitRate, ByteCount, SimTime, KB};

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Parse(#[from] toml::de::Error),
    #[error("invalid value for `{field}`: {reason}")]
    Invalid { field: String, reason: String },
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl From<ScenarioError> for ConfigError {
    fn from(e: ScenarioError) -> Self {
        match e {
            ScenarioError::InvalidParam { field, reason } => ConfigError::Invalid {
                field: field.into(),
                reason,
            },
            ScenarioError::Cdf(c) => ConfigError::Invalid {
                field: "scenario.cdf_file".into(),
                reason: c.to_string(),
            },
        }
    }
}

fn invalid(field: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        field: field.into(),
        reason: reason.into(),
    }
}

/// Host algorithm × switch policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Protocol {
    #[serde(rename = "tcp")]
    Tcp,
    #[serde(rename = "ecn*", alias = "ecn")]
    EcnStar,
    #[serde(rename = "s-ecn")]
    SEcn,
    #[serde(rename = "sl-ecn")]
    SlEcn,
    #[serde(rename = "dctcp")]
    Dctcp,
    #[serde(rename = "dctcp+sl-ecn")]
    DctcpSlEcn,
}

impl Protocol {
    pub const ALL: [Protocol; 6] = [
        Protocol::Tcp,
        Protocol::EcnStar,
        Protocol::SEcn,
        Protocol::SlEcn,
        Protocol::Dctcp,
        Protocol::DctcpSlEcn,
    ];

    pub fn algorithm(self) -> Algorithm {
        match self {
            Protocol::Dctcp | Protocol::DctcpSlEcn => Algorithm::Dctcp,
            _ => Algorithm::NewReno,
        }
    }

    pub fn ecn(self) -> bool {
        self != Protocol::Tcp
    }

    pub fn policy(self) -> PolicyKind {
        match self {
            Protocol::Tcp => PolicyKind::TailDrop,
            Protocol::EcnStar | Protocol::Dctcp => PolicyKind::ThresholdEcn,
            Protocol::SEcn => PolicyKind::SEcn,
            Protocol::SlEcn | Protocol::DctcpSlEcn => PolicyKind::SlEcn,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Protocol::Tcp => "tcp",
            Protocol::EcnStar => "ecn*",
            Protocol::SEcn => "s-ecn",
            Protocol::SlEcn => "sl-ecn",
            Protocol::Dctcp => "dctcp",
            Protocol::DctcpSlEcn => "dctcp+sl-ecn",
        }
    }
}

impl fmt::Display for Protocol {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    Testbed,
    Star,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TopologyConfig {
    pub preset: Preset,
    /// Star preset only.
    pub hosts: usize,
    pub rate_gbps: u64,
    pub propagation_ns: u64,
}

impl Default for TopologyConfig {
    fn default() -> Self {
        TopologyConfig {
            preset: Preset::Testbed,
            hosts: 12,
            rate_gbps: 1,
            propagation_ns: 100,
        }
    }
}

impl TopologyConfig {
    pub fn build(&self) -> Topology {
        let rate = BitRate::from_gbps(self.rate_gbps);
        let prop = SimTime(self.propagation_ns);
        match self.preset {
            Preset::Testbed => Topology::two_tier(4, 3, rate, prop),
            Preset::Star => Topology::star(self.hosts, rate, prop),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PortBuffer {
    pub from: String,
    pub to: String,
    pub kb: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NetworkSection {
    /// Defaults to 512 KB, or 128 KB for incast and web search.
    pub buffer_kb: Option<u64>,
    pub host_buffer_kb: u64,
    pub ecn_threshold_kb: u64,
    pub processing_delay_ns: u64,
    pub telemetry: TelemetryMode,
    /// Traced ports as "from->to".
    pub monitor: Vec<String>,
    pub port_buffer: Vec<PortBuffer>,
}

impl Default for NetworkSection {
    fn default() -> Self {
        NetworkSection {
            buffer_kb: None,
            host_buffer_kb: 16 * 1024,
            ecn_threshold_kb: 32,
            processing_delay_ns: 1000,
            telemetry: TelemetryMode::Exact,
            monitor: vec!["root->tor4".into()],
            port_buffer: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MarkingSection {
    pub secn_clamp: bool,
    pub secn_mark_next: bool,
    pub secn_counting: SecnCounting,
    pub secn_engine: SecnEngine,
}

impl Default for MarkingSection {
    fn default() -> Self {
        let d = SecnOptions::default();
        MarkingSection {
            secn_clamp: d.clamp,
            secn_mark_next: d.mark_next,
            secn_counting: d.counting,
            secn_engine: d.engine,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TransportSection {
    pub rto_min_ms: u64,
    pub dctcp_gain: f64,
    pub max_cwnd_packets: u64,
    pub pacing: bool,
    pub delayed_ack: bool,
    pub delayed_ack_timeout_us: u64,
}

impl Default for TransportSection {
    fn default() -> Self {
        TransportSection {
            rto_min_ms: 10,
            dctcp_gain: 0.125,
            max_cwnd_packets: 64,
            pacing: false,
            delayed_ack: false,
            delayed_ack_timeout_us: 500,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AnalysisSection {
    /// Queue standard deviation window, relative to the burst start.
    pub stddev_from_ms: Option<f64>,
    pub stddev_to_ms: Option<f64>,
    /// Goodput window in absolute simulated time.
    pub goodput_from_ms: Option<f64>,
    pub goodput_to_ms: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSection {
    pub dir: String,
    pub trace: bool,
}

impl Default for OutputSection {
    fn default() -> Self {
        OutputSection {
            dir: "out".into(),
            trace: true,
        }
    }
}

/// Runs one point per value, with `field` (a dotted path such as
/// `scenario.senders`) set to that value.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepSection {
    pub field: String,
    pub values: Vec<toml::Value>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub seed: u64,
    pub protocol: Protocol,
    /// Simulation horizon; scenario-specific default when unset.
    #[serde(default)]
    pub duration_ms: Option<u64>,
    #[serde(default)]
    pub topology: TopologyConfig,
    #[serde(default)]
    pub network: NetworkSection,
    #[serde(default)]
    pub marking: MarkingSection,
    #[serde(default)]
    pub transport: TransportSection,
    pub scenario: Scenario,
    #[serde(default)]
    pub analysis: AnalysisSection,
    #[serde(default)]
    pub output: OutputSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepSection>,
}

impl RunConfig {
    pub fn new(seed: u64, protocol: Protocol, scenario: Scenario) -> Self {
        RunConfig {
            seed,
            protocol,
            duration_ms: None,
            topology: TopologyConfig::default(),
            network: NetworkSection::default(),
            marking: MarkingSection::default(),
            transport: TransportSection::default(),
            scenario,
            analysis: AnalysisSection::default(),
            output: OutputSection::default(),
            sweep: None,
        }
    }

    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        let cfg: RunConfig = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &std::path::Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.to_owned(),
            source,
        })?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("config serializes")
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario.validate()?;
        let t = &self.topology;
        if t.rate_gbps == 0 {
            return Err(invalid("topology.rate_gbps", "must be positive"));
        }
        if t.preset == Preset::Star && t.hosts < 2 {
            return Err(invalid("topology.hosts", "a star needs at least two hosts"));
        }
        let n = &self.network;
        if n.buffer_kb == Some(0) {
            return Err(invalid("network.buffer_kb", "must be positive"));
        }
        if n.host_buffer_kb == 0 {
            return Err(invalid("network.host_buffer_kb", "must be positive"));
        }
        for m in &n.monitor {
            if m.split_once("->").is_none() {
                return Err(invalid(
                    "network.monitor",
                    format!("`{m}` is not of the form from->to"),
                ));
            }
        }
        let tr = &self.transport;
        if !(tr.dctcp_gain > 0.0 && tr.dctcp_gain <= 1.0) {
            return Err(invalid("transport.dctcp_gain", "must be in (0, 1]"));
        }
        if tr.max_cwnd_packets == 0 {
            return Err(invalid("transport.max_cwnd_packets", "must be at least 1"));
        }
        if let Some(s) = &self.sweep {
            if s.values.is_empty() {
                return Err(invalid("sweep.values", "must not be empty"));
            }
        }
        Ok(())
    }

    pub fn buffer(&self) -> ByteCount {
        let default_kb = match self.scenario {
            Scenario::Incast(_) | Scenario::WebSearch(_) => 128,
            _ => 512,
        };
        self.network.buffer_kb.unwrap_or(default_kb) * KB
    }

    pub fn secn_options(&self) -> SecnOptions {
        SecnOptions {
            clamp: self.marking.secn_clamp,
            mark_next: self.marking.secn_mark_next,
            counting: self.marking.secn_counting,
            engine: self.marking.secn_engine,
        }
    }

    pub fn network_config(&self) -> NetworkConfig {
        let n = &self.network;
        let mut port_buffers = self.scenario.port_buffers();
        for p in &n.port_buffer {
            port_buffers.retain(|(a, b, _)| !(a == &p.from && b == &p.to));
            port_buffers.push((p.from.clone(), p.to.clone(), p.kb * KB));
        }
        NetworkConfig {
            switch_buffer: self.buffer(),
            host_buffer: n.host_buffer_kb * KB,
            port_buffers,
            policy: self.protocol.policy(),
            ecn_threshold: n.ecn_threshold_kb * KB,
            secn: self.secn_options(),
            processing_delay: SimTime(n.processing_delay_ns),
            telemetry: n.telemetry,
            monitored: n
                .monitor
                .iter()
                .filter_map(|m| m.split_once("->"))
                .map(|(a, b)| (a.trim().to_string(), b.trim().to_string()))
                .collect(),
        }
    }

    pub fn transport_config(&self) -> TransportConfig {
        let t = &self.transport;
        TransportConfig {
            sender: SenderConfig {
                algorithm: self.protocol.algorithm(),
                ecn: self.protocol.ecn(),
                max_cwnd: t.max_cwnd_packets * MSS,
                rto_min: SimTime::from_millis(t.rto_min_ms),
                dctcp_gain: t.dctcp_gain,
                pacing: t.pacing,
            },
            delayed_ack: t.delayed_ack,
            delayed_ack_timeout: SimTime::from_micros(t.delayed_ack_timeout_us),
        }
    }

    /// Simulation horizon.
    pub fn horizon(&self) -> SimTime {
        if let Some(d) = self.duration_ms {
            return SimTime::from_millis(d);
        }
        let start = self.scenario.burst_start();
        match &self.scenario {
            Scenario::SyncFanIn(_) | Scenario::AsyncFanIn(_) | Scenario::Incast(_) => {
                start + SimTime::from_secs(5)
            }
            Scenario::OneBackground(_) | Scenario::SameHop(_) | Scenario::PrevHop(_) => {
                start + SimTime::from_secs(2)
            }
            Scenario::WebSearch(p) => SimTime::from_millis(p.duration_ms) + SimTime::from_secs(5),
            Scenario::LongFlowBatches(p) => SimTime::from_millis(p.interval_ms * p.batches as u64),
        }
    }

    /// One config per sweep point, labelled `field=value`. A config without
    /// a sweep yields itself.
    pub fn expand_sweep(&self) -> Result<Vec<(String, RunConfig)>, ConfigError> {
        let Some(sweep) = &self.sweep else {
            return Ok(vec![(String::new(), self.clone())]);
        };
        let mut base = self.clone();
        base.sweep = None;
        let base_value = toml::Value::try_from(&base).expect("config serializes");
        let path: Vec<&str> = sweep.field.split('.').collect();
        let mut out = Vec::new();
        for v in &sweep.values {
            let mut doc = base_value.clone();
            set_path(&mut doc, &path, v.clone()).ok_or_else(|| {
                invalid(
                    "sweep.field",
                    format!("`{}` is not a config field", sweep.field),
                )
            })?;
            let cfg: RunConfig = doc
                .try_into()
                .map_err(|e: toml::de::Error| invalid(&sweep.field, e.message().to_string()))?;
            cfg.validate()?;
            let label = format!("{}={}", path.last().unwrap(), value_label(v));
            out.push((label, cfg));
        }
        Ok(out)
    }
}

fn value_label(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

fn set_path(doc: &mut toml::Value, path: &[&str], v: toml::Value) -> Option<()> {
    let (last, parents) = path.split_last()?;
    let mut cur = doc;
    for p in parents {
        cur = cur
            .as_table_mut()?
            .entry(p.to_string())
            .or_insert_with(|| toml::Value::Table(Default::default()));
    }
    cur.as_table_mut()?.insert(last.to_string(), v);
    Some(())
}
