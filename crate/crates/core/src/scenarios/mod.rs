//! Flow schedules for the fan-in scenarios, incast microbenchmarks and the
//! web-search workload.
//!
//! Host numbers follow the testbed preset: hosts 1–12, racks of three,
//! host 10 is the aggregator of every fan-in.

pub mod cdf;

use rand::Rng;
use rand_distr::{Distribution, Exp};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::net::packet::FlowId;
use crate::net::topology::{HostId, Topology};
use crate::transport::MSS;
use crate::units::{BitRate, ByteCount, SimTime, KB};

pub use cdf::{CdfError, StepCdf};

/// Size used for flows that must outlast the run.
pub const LONG_FLOW_BYTES: ByteCount = 1 << 30;
pub const AGGREGATOR: HostId = HostId(10);

#[derive(Debug, Error, PartialEq)]
pub enum ScenarioError {
    #[error("invalid value for `{field}`: {reason}")]
    InvalidParam { field: &'static str, reason: String },
    #[error(transparent)]
    Cdf(#[from] CdfError),
}

fn invalid(field: &'static str, reason: impl Into<String>) -> ScenarioError {
    ScenarioError::InvalidParam {
        field,
        reason: reason.into(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FlowGroup {
    FanIn,
    Background,
    Query(u32),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowSpec {
    pub id: FlowId,
    pub src: HostId,
    pub dst: HostId,
    pub bytes: ByteCount,
    pub start: SimTime,
    pub group: FlowGroup,
    pub pacing: bool,
    /// Per-flow send-window cap, overriding the transport default.
    pub max_cwnd: Option<ByteCount>,
    pub telemetry: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct QuerySpec {
    pub id: u32,
    pub issue: SimTime,
    pub flows: Vec<FlowId>,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct FlowSchedule {
    pub flows: Vec<FlowSpec>,
    pub queries: Vec<QuerySpec>,
}

impl FlowSchedule {
    fn push(
        &mut self,
        src: HostId,
        dst: HostId,
        bytes: ByteCount,
        start: SimTime,
        group: FlowGroup,
    ) -> FlowId {
        let id = FlowId(self.flows.len() as u32);
        self.flows.push(FlowSpec {
            id,
            src,
            dst,
            bytes,
            start,
            group,
            pacing: false,
            max_cwnd: None,
            telemetry: true,
        });
        id
    }

    fn finish(mut self) -> Self {
        self.flows.sort_by_key(|f| (f.start, f.id));
        self
    }

    pub fn fanin_flows(&self) -> impl Iterator<Item = &FlowSpec> {
        self.flows.iter().filter(|f| f.group == FlowGroup::FanIn)
    }

    pub fn total_bytes(&self) -> ByteCount {
        self.flows.iter().map(|f| f.bytes).sum()
    }
}

fn hosts(ids: &[u32]) -> Vec<HostId> {
    ids.iter().map(|&h| HostId(h)).collect()
}

fn jitter<R: Rng + ?Sized>(rng: &mut R, us: u64) -> SimTime {
    if us == 0 {
        SimTime::ZERO
    } else {
        SimTime(rng.random_range(0..SimTime::from_micros(us).as_nanos()))
    }
}

fn check_hosts(topo: &Topology, list: &[HostId]) -> Result<(), ScenarioError> {
    for &h in list {
        topo.host_node(h)
            .map_err(|_| invalid("scenario", format!("{h} is not in the topology")))?;
    }
    Ok(())
}

/// n flows to the aggregator, responders assigned round-robin.
fn fan_in<R: Rng + ?Sized>(
    s: &mut FlowSchedule,
    rng: &mut R,
    responders: &[HostId],
    n: u32,
    sizes: impl Fn(u32) -> ByteCount,
    start: SimTime,
    jitter_us: u64,
) {
    for i in 0..n {
        let src = responders[i as usize % responders.len()];
        let t = start + jitter(rng, jitter_us);
        s.push(src, AGGREGATOR, sizes(i), t, FlowGroup::FanIn);
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SyncParams {
    pub flows: u32,
    pub response_kb: u64,
    pub start_us: u64,
    pub jitter_us: u64,
    /// Sending hosts, used round-robin; hosts 1-9 when unset.
    pub responders: Option<Vec<u32>>,
}

impl Default for SyncParams {
    fn default() -> Self {
        SyncParams {
            flows: 18,
            response_kb: 1000,
            start_us: 100,
            jitter_us: 10,
            responders: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AsyncParams {
    pub flows: u32,
    pub response_kb: u64,
    pub start_us: u64,
    pub window_us: u64,
}

impl Default for AsyncParams {
    fn default() -> Self {
        AsyncParams {
            flows: 18,
            response_kb: 1000,
            start_us: 100,
            window_us: 2000,
        }
    }
}

/// Shared by the three background scenarios; unset counts take the
/// scenario's own defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BackgroundParams {
    pub background: Option<u32>,
    pub fanin_flows: Option<u32>,
    pub response_kb: u64,
    pub delay_ms: u64,
    pub jitter_us: u64,
    /// Background flows start uniformly in [0, this).
    pub background_start_ms: u64,
    /// Window cap of the background flows, in packets.
    pub background_max_cwnd: Option<u64>,
    /// Buffer of the congested ToR uplink (previous-hop variant only).
    pub tor_buffer_kb: Option<u64>,
}

impl Default for BackgroundParams {
    fn default() -> Self {
        BackgroundParams {
            background: None,
            fanin_flows: None,
            response_kb: 1000,
            delay_ms: 500,
            jitter_us: 10,
            background_start_ms: 0,
            background_max_cwnd: None,
            tor_buffer_kb: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum IncastMode {
    /// Every responder sends `response_kb`.
    FixedResponse,
    /// Responders share `response_kb` in total.
    FixedTotal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct IncastParams {
    pub senders: u32,
    pub mode: IncastMode,
    pub response_kb: Option<u64>,
    pub start_us: u64,
    pub jitter_us: u64,
    /// Sending hosts, used round-robin; hosts 1-9 when unset.
    pub responders: Option<Vec<u32>>,
}

impl Default for IncastParams {
    fn default() -> Self {
        IncastParams {
            senders: 40,
            mode: IncastMode::FixedResponse,
            response_kb: None,
            start_us: 100,
            jitter_us: 10,
            responders: None,
        }
    }
}

impl IncastParams {
    pub fn response_kb(&self) -> u64 {
        self.response_kb.unwrap_or(match self.mode {
            IncastMode::FixedResponse => 64,
            IncastMode::FixedTotal => 1024,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct WebSearchParams {
    pub load: f64,
    pub duration_ms: u64,
    /// Network-wide query arrivals per second.
    pub query_rate: f64,
    pub query_kb: u64,
    /// Flow-size CDF file; the bundled approximation when unset.
    pub cdf_file: Option<String>,
}

impl Default for WebSearchParams {
    fn default() -> Self {
        WebSearchParams {
            load: 0.4,
            duration_ms: 10_000,
            query_rate: 106.0,
            query_kb: 100,
            cdf_file: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BatchParams {
    pub batch: u32,
    pub interval_ms: u64,
    pub batches: u32,
}

impl Default for BatchParams {
    fn default() -> Self {
        BatchParams {
            batch: 3,
            interval_ms: 1000,
            batches: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Scenario {
    SyncFanIn(SyncParams),
    AsyncFanIn(AsyncParams),
    OneBackground(BackgroundParams),
    SameHop(BackgroundParams),
    PrevHop(BackgroundParams),
    Incast(IncastParams),
    WebSearch(WebSearchParams),
    LongFlowBatches(BatchParams),
}

impl Default for Scenario {
    fn default() -> Self {
        Scenario::SyncFanIn(SyncParams::default())
    }
}

impl Scenario {
    pub fn name(&self) -> &'static str {
        match self {
            Scenario::SyncFanIn(_) => "sync-fan-in",
            Scenario::AsyncFanIn(_) => "async-fan-in",
            Scenario::OneBackground(_) => "one-background",
            Scenario::SameHop(_) => "same-hop",
            Scenario::PrevHop(_) => "prev-hop",
            Scenario::Incast(_) => "incast",
            Scenario::WebSearch(_) => "web-search",
            Scenario::LongFlowBatches(_) => "long-flow-batches",
        }
    }

    /// Buffer overrides implied by the scenario: (from, to, bytes).
    pub fn port_buffers(&self) -> Vec<(String, String, ByteCount)> {
        match self {
            Scenario::PrevHop(p) => vec![(
                "tor3".into(),
                "root".into(),
                p.tor_buffer_kb.unwrap_or(512) * KB,
            )],
            _ => Vec::new(),
        }
    }

    /// Time the fan-in part of the scenario begins.
    pub fn burst_start(&self) -> SimTime {
        match self {
            Scenario::SyncFanIn(p) => SimTime::from_micros(p.start_us),
            Scenario::AsyncFanIn(p) => SimTime::from_micros(p.start_us),
            Scenario::OneBackground(p) | Scenario::SameHop(p) | Scenario::PrevHop(p) => {
                SimTime::from_millis(p.delay_ms)
            }
            Scenario::Incast(p) => SimTime::from_micros(p.start_us),
            Scenario::WebSearch(_) | Scenario::LongFlowBatches(_) => SimTime::ZERO,
        }
    }

    pub fn validate(&self) -> Result<(), ScenarioError> {
        match self {
            Scenario::SyncFanIn(p) => {
                check_responders(&p.responders)?;
                if p.flows == 0 {
                    return Err(invalid("scenario.flows", "must be at least 1"));
                }
                if p.response_kb == 0 {
                    return Err(invalid("scenario.response_kb", "must be positive"));
                }
            }
            Scenario::AsyncFanIn(p) => {
                if p.flows == 0 {
                    return Err(invalid("scenario.flows", "must be at least 1"));
                }
                if p.window_us == 0 {
                    return Err(invalid("scenario.window_us", "must be positive"));
                }
            }
            Scenario::OneBackground(p) | Scenario::SameHop(p) | Scenario::PrevHop(p) => {
                if p.fanin_flows == Some(0) {
                    return Err(invalid("scenario.fanin_flows", "must be at least 1"));
                }
                if p.background == Some(0) {
                    return Err(invalid("scenario.background", "must be at least 1"));
                }
                if p.tor_buffer_kb.is_some() && !matches!(self, Scenario::PrevHop(_)) {
                    return Err(invalid("scenario.tor_buffer_kb", "only used by prev-hop"));
                }
                if p.background_start_ms >= p.delay_ms.max(1) {
                    return Err(invalid(
                        "scenario.background_start_ms",
                        "must be below delay_ms",
                    ));
                }
                if p.background_max_cwnd == Some(0) {
                    return Err(invalid("scenario.background_max_cwnd", "must be positive"));
                }
            }
            Scenario::Incast(p) => {
                check_responders(&p.responders)?;
                if p.senders == 0 {
                    return Err(invalid("scenario.senders", "must be at least 1"));
                }
                if p.response_kb() == 0 {
                    return Err(invalid("scenario.response_kb", "must be positive"));
                }
            }
            Scenario::WebSearch(p) => {
                if !(p.load > 0.0 && p.load < 1.0) {
                    return Err(invalid(
                        "scenario.load",
                        format!("{} is outside (0, 1)", p.load),
                    ));
                }
                if p.duration_ms == 0 {
                    return Err(invalid("scenario.duration_ms", "must be positive"));
                }
                if p.query_rate.is_nan() || p.query_rate < 0.0 {
                    return Err(invalid("scenario.query_rate", "must be non-negative"));
                }
            }
            Scenario::LongFlowBatches(p) => {
                if p.batch == 0 || p.batches == 0 {
                    return Err(invalid(
                        "scenario.batch",
                        "batch and batches must be at least 1",
                    ));
                }
                if p.batch * p.batches > 9 {
                    return Err(invalid(
                        "scenario.batch",
                        "at most 9 distinct senders are available",
                    ));
                }
            }
        }
        Ok(())
    }

    pub fn generate<R: Rng + ?Sized>(
        &self,
        topo: &Topology,
        rng: &mut R,
    ) -> Result<FlowSchedule, ScenarioError> {
        self.validate()?;
        check_hosts(topo, &[AGGREGATOR])?;
        match self {
            Scenario::SyncFanIn(p) => gen_sync_fanin(topo, rng, p),
            Scenario::AsyncFanIn(p) => gen_async_fanin(topo, rng, p),
            Scenario::OneBackground(p) => gen_background(topo, rng, BackgroundKind::One, p),
            Scenario::SameHop(p) => gen_background(topo, rng, BackgroundKind::SameHop, p),
            Scenario::PrevHop(p) => gen_background(topo, rng, BackgroundKind::PrevHop, p),
            Scenario::Incast(p) => gen_incast(topo, rng, p),
            Scenario::WebSearch(p) => {
                let cdf = match &p.cdf_file {
                    None => StepCdf::websearch(),
                    Some(path) => {
                        let text = std::fs::read_to_string(path)
                            .map_err(|e| invalid("scenario.cdf_file", format!("{path}: {e}")))?;
                        StepCdf::parse(&text)?
                    }
                };
                gen_websearch(topo, rng, p, &cdf)
            }
            Scenario::LongFlowBatches(p) => gen_long_flow_batches(topo, p),
        }
    }
}

const RESPONDERS: [u32; 9] = [1, 2, 3, 4, 5, 6, 7, 8, 9];

fn responder_list(custom: &Option<Vec<u32>>) -> Vec<HostId> {
    hosts(custom.as_deref().unwrap_or(&RESPONDERS))
}

fn check_responders(custom: &Option<Vec<u32>>) -> Result<(), ScenarioError> {
    match custom {
        Some(v) if v.is_empty() => Err(invalid("scenario.responders", "must not be empty")),
        Some(v) if v.contains(&AGGREGATOR.0) => Err(invalid(
            "scenario.responders",
            "must not include the aggregator (host 10)",
        )),
        _ => Ok(()),
    }
}

pub fn gen_sync_fanin<R: Rng + ?Sized>(
    topo: &Topology,
    rng: &mut R,
    p: &SyncParams,
) -> Result<FlowSchedule, ScenarioError> {
    let responders = responder_list(&p.responders);
    check_hosts(topo, &responders)?;
    let mut s = FlowSchedule::default();
    fan_in(
        &mut s,
        rng,
        &responders,
        p.flows,
        |_| p.response_kb * KB,
        SimTime::from_micros(p.start_us),
        p.jitter_us,
    );
    Ok(s.finish())
}

pub fn gen_async_fanin<R: Rng + ?Sized>(
    topo: &Topology,
    rng: &mut R,
    p: &AsyncParams,
) -> Result<FlowSchedule, ScenarioError> {
    let responders = hosts(&RESPONDERS);
    check_hosts(topo, &responders)?;
    let mut s = FlowSchedule::default();
    let window = SimTime::from_micros(p.window_us).as_nanos();
    let t0 = SimTime::from_micros(p.start_us);
    for i in 0..p.flows {
        let src = responders[i as usize % responders.len()];
        let t = t0 + SimTime(rng.random_range(0..window));
        s.push(src, AGGREGATOR, p.response_kb * KB, t, FlowGroup::FanIn);
    }
    Ok(s.finish())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BackgroundKind {
    One,
    SameHop,
    PrevHop,
}

pub fn gen_background<R: Rng + ?Sized>(
    topo: &Topology,
    rng: &mut R,
    kind: BackgroundKind,
    p: &BackgroundParams,
) -> Result<FlowSchedule, ScenarioError> {
    let (bg_src, bg_dst, fanin_src, bg_n, fanin_n) = match kind {
        BackgroundKind::One => (
            hosts(&[9]),
            hosts(&[11]),
            hosts(&[1, 2, 3, 4, 5, 6, 7, 8]),
            1,
            8,
        ),
        BackgroundKind::SameHop => (
            hosts(&[1, 4, 7]),
            hosts(&[11, 12]),
            hosts(&[2, 3, 5, 6, 8, 9]),
            3,
            12,
        ),
        BackgroundKind::PrevHop => (
            hosts(&[7, 8, 9]),
            hosts(&[11, 12]),
            hosts(&[1, 2, 3, 4, 5, 6]),
            3,
            12,
        ),
    };
    check_hosts(topo, &bg_src)?;
    check_hosts(topo, &bg_dst)?;
    check_hosts(topo, &fanin_src)?;
    let bg_n = p.background.unwrap_or(bg_n);
    if kind == BackgroundKind::One && bg_n != 1 {
        return Err(invalid(
            "scenario.background",
            "one-background has exactly one background flow",
        ));
    }
    let mut s = FlowSchedule::default();
    for k in 0..bg_n as usize {
        let id = s.push(
            bg_src[k % bg_src.len()],
            bg_dst[k % bg_dst.len()],
            LONG_FLOW_BYTES,
            jitter(rng, p.background_start_ms * 1000),
            FlowGroup::Background,
        );
        s.flows[id.0 as usize].max_cwnd = p.background_max_cwnd.map(|w| w * MSS);
    }
    fan_in(
        &mut s,
        rng,
        &fanin_src,
        p.fanin_flows.unwrap_or(fanin_n),
        |_| p.response_kb * KB,
        SimTime::from_millis(p.delay_ms),
        p.jitter_us,
    );
    Ok(s.finish())
}

/// Per-responder sizes: floor of total/n with the remainder on flow 0.
pub fn split_evenly(total: ByteCount, n: u32) -> Vec<ByteCount> {
    let n = n.max(1) as ByteCount;
    let base = total / n;
    let mut v = vec![base; n as usize];
    v[0] += total - base * n;
    v
}

pub fn gen_incast<R: Rng + ?Sized>(
    topo: &Topology,
    rng: &mut R,
    p: &IncastParams,
) -> Result<FlowSchedule, ScenarioError> {
    let responders = responder_list(&p.responders);
    check_hosts(topo, &responders)?;
    let sizes = match p.mode {
        IncastMode::FixedResponse => vec![p.response_kb() * KB; p.senders as usize],
        IncastMode::FixedTotal => split_evenly(p.response_kb() * KB, p.senders),
    };
    let mut s = FlowSchedule::default();
    fan_in(
        &mut s,
        rng,
        &responders,
        p.senders,
        |i| sizes[i as usize],
        SimTime::from_micros(p.start_us),
        p.jitter_us,
    );
    let flows = s.flows.iter().map(|f| f.id).collect();
    s.queries.push(QuerySpec {
        id: 0,
        issue: SimTime::from_micros(p.start_us),
        flows,
    });
    Ok(s.finish())
}

/// Fraction of all-to-all uniform traffic that crosses the busiest link,
/// which on the two-tier preset is a ToR uplink.
pub fn busiest_link_share(topo: &Topology) -> f64 {
    let hs: Vec<HostId> = topo.hosts().collect();
    let n = hs.len();
    if n < 2 {
        return 1.0;
    }
    let mut load = vec![0.0f64; topo.links().len() * 2];
    let pairs = (n * (n - 1)) as f64;
    for &a in &hs {
        for &b in &hs {
            if a == b {
                continue;
            }
            let (na, nb) = (topo.host_node(a).unwrap(), topo.host_node(b).unwrap());
            let path = topo.path(na, nb);
            for w in path.windows(2) {
                let idx = topo
                    .neighbors(w[0])
                    .iter()
                    .position(|&(v, _)| v == w[1])
                    .unwrap();
                let link = topo.neighbors(w[0])[idx].1;
                let dir = usize::from(topo.links()[link].a != w[0]);
                load[link * 2 + dir] += 1.0 / pairs;
            }
        }
    }
    load.into_iter().fold(0.0, f64::max)
}

pub fn gen_websearch<R: Rng + ?Sized>(
    topo: &Topology,
    rng: &mut R,
    p: &WebSearchParams,
    cdf: &StepCdf,
) -> Result<FlowSchedule, ScenarioError> {
    let hs: Vec<HostId> = topo.hosts().collect();
    if hs.len() < 2 {
        return Err(invalid("topology", "web-search needs at least two hosts"));
    }
    let rate = topo
        .links()
        .iter()
        .map(|l| l.rate)
        .min()
        .unwrap_or(BitRate::from_gbps(1));
    let share = busiest_link_share(topo);
    let query_bytes = (p.query_kb * KB) as f64;
    // total offered bytes/s such that the busiest link carries `load`
    let total_bps = p.load * rate.as_f64() / share;
    let bg_bps = total_bps - p.query_rate * query_bytes * 8.0;
    if bg_bps <= 0.0 {
        return Err(invalid(
            "scenario.query_rate",
            "queries alone exceed the requested load",
        ));
    }
    let bg_rate = bg_bps / (8.0 * cdf.mean());
    let horizon = SimTime::from_millis(p.duration_ms);
    let mut s = FlowSchedule::default();

    // Queries and background flows draw from the run generator in
    // alternation, ordered by arrival time.
    let mut next_q = if p.query_rate > 0.0 {
        Some(exp_secs(rng, p.query_rate))
    } else {
        None
    };
    let mut next_b = exp_secs(rng, bg_rate);
    let mut qid = 0;
    loop {
        let tq = next_q.unwrap_or(f64::INFINITY);
        let t = tq.min(next_b);
        let at = SimTime((t * 1e9) as u64);
        if at >= horizon {
            break;
        }
        if tq <= next_b {
            let agg = hs[rng.random_range(0..hs.len())];
            let responders: Vec<HostId> = hs.iter().copied().filter(|&h| h != agg).collect();
            let sizes = split_evenly(p.query_kb * KB, responders.len() as u32);
            let flows = responders
                .iter()
                .zip(&sizes)
                .map(|(&src, &b)| s.push(src, agg, b, at, FlowGroup::Query(qid)))
                .collect();
            s.queries.push(QuerySpec {
                id: qid,
                issue: at,
                flows,
            });
            qid += 1;
            next_q = Some(t + exp_secs(rng, p.query_rate));
        } else {
            let src = hs[rng.random_range(0..hs.len())];
            let mut dst = hs[rng.random_range(0..hs.len() - 1)];
            if dst >= src {
                dst = hs[hs.iter().position(|&h| h == dst).unwrap() + 1];
            }
            let bytes = cdf.sample(rng);
            s.push(src, dst, bytes, at, FlowGroup::Background);
            next_b = t + exp_secs(rng, bg_rate);
        }
    }
    Ok(s.finish())
}

fn exp_secs<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    Exp::new(rate).expect("positive rate").sample(rng)
}

pub fn gen_long_flow_batches(
    topo: &Topology,
    p: &BatchParams,
) -> Result<FlowSchedule, ScenarioError> {
    // consecutive senders sit in different racks
    let responders = hosts(&[1, 4, 7, 2, 5, 8, 3, 6, 9]);
    check_hosts(topo, &responders)?;
    let mut s = FlowSchedule::default();
    let mut next = 0;
    for b in 0..p.batches {
        let t = SimTime::from_millis(p.interval_ms * b as u64);
        for _ in 0..p.batch {
            s.push(
                responders[next],
                AGGREGATOR,
                LONG_FLOW_BYTES,
                t,
                FlowGroup::Background,
            );
            next += 1;
        }
    }
    Ok(s.finish())
}

/// Offered load of the schedule on its busiest link over `duration`.
pub fn offered_load(topo: &Topology, s: &FlowSchedule, duration: SimTime) -> f64 {
    offered_link_loads(topo, s, duration)
        .into_iter()
        .fold(0.0, f64::max)
}

/// Offered load per directed link, two entries per link.
pub fn offered_link_loads(topo: &Topology, s: &FlowSchedule, duration: SimTime) -> Vec<f64> {
    let mut bytes = vec![0u64; topo.links().len() * 2];
    for f in &s.flows {
        let (a, b) = (
            topo.host_node(f.src).unwrap(),
            topo.host_node(f.dst).unwrap(),
        );
        for w in topo.path(a, b).windows(2) {
            let link = topo
                .neighbors(w[0])
                .iter()
                .find(|&&(v, _)| v == w[1])
                .unwrap()
                .1;
            let dir = usize::from(topo.links()[link].a != w[0]);
            bytes[link * 2 + dir] += f.bytes;
        }
    }
    bytes
        .iter()
        .enumerate()
        .map(|(i, &b)| {
            b as f64 * 8.0 / (topo.links()[i / 2].rate.as_f64() * duration.as_secs_f64())
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn rng() -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(11)
    }

    fn well_formed(s: &FlowSchedule) {
        assert!(s.flows.windows(2).all(|w| w[0].start <= w[1].start));
        let mut ids: Vec<_> = s.flows.iter().map(|f| f.id).collect();
        ids.sort();
        ids.dedup();
        assert_eq!(ids.len(), s.flows.len());
        assert!(s.flows.iter().all(|f| f.src != f.dst && f.bytes > 0));
    }

    #[test]
    fn sync_eighteen_flows() {
        let t = Topology::testbed();
        let s = Scenario::SyncFanIn(SyncParams::default())
            .generate(&t, &mut rng())
            .unwrap();
        well_formed(&s);
        assert_eq!(s.flows.len(), 18);
        assert!(s
            .flows
            .iter()
            .all(|f| f.bytes == 1000 * KB && f.dst == AGGREGATOR));
        let spread = s.flows.last().unwrap().start - s.flows[0].start;
        assert!(spread < SimTime::from_micros(10));
    }

    #[test]
    fn nine_flows_one_per_host() {
        let t = Topology::testbed();
        let p = SyncParams {
            flows: 9,
            ..SyncParams::default()
        };
        let s = gen_sync_fanin(&t, &mut rng(), &p).unwrap();
        let mut src: Vec<_> = s.flows.iter().map(|f| f.src.0).collect();
        src.sort();
        assert_eq!(src, (1..=9).collect::<Vec<_>>());
    }

    #[test]
    fn zero_flows_rejected() {
        let t = Topology::testbed();
        let p = SyncParams {
            flows: 0,
            ..SyncParams::default()
        };
        let err = Scenario::SyncFanIn(p).generate(&t, &mut rng()).unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::InvalidParam {
                field: "scenario.flows",
                ..
            }
        ));
    }

    #[test]
    fn async_is_reproducible() {
        let t = Topology::testbed();
        let sc = Scenario::AsyncFanIn(AsyncParams::default());
        let a = sc.generate(&t, &mut rng()).unwrap();
        let b = sc.generate(&t, &mut rng()).unwrap();
        assert_eq!(a, b);
        well_formed(&a);
        let last = a.flows.last().unwrap().start;
        assert!(last < SimTime::from_micros(2100));
    }

    #[test]
    fn background_placements() {
        let t = Topology::testbed();
        let one = Scenario::OneBackground(BackgroundParams::default())
            .generate(&t, &mut rng())
            .unwrap();
        well_formed(&one);
        let bg: Vec<_> = one
            .flows
            .iter()
            .filter(|f| f.group == FlowGroup::Background)
            .collect();
        assert_eq!(bg.len(), 1);
        assert_eq!((bg[0].src, bg[0].dst), (HostId(9), HostId(11)));
        assert_eq!(one.fanin_flows().count(), 8);
        assert!(one
            .fanin_flows()
            .all(|f| f.start >= SimTime::from_millis(500)));

        let p = BackgroundParams {
            background: Some(9),
            ..BackgroundParams::default()
        };
        let same = Scenario::SameHop(p).generate(&t, &mut rng()).unwrap();
        assert_eq!(same.flows.len(), 9 + 12);
        assert!(same.fanin_flows().all(|f| ![1, 4, 7].contains(&f.src.0)));

        let prev = Scenario::PrevHop(BackgroundParams::default());
        assert_eq!(
            prev.port_buffers(),
            vec![("tor3".into(), "root".into(), 512 * KB)]
        );
        let s = prev.generate(&t, &mut rng()).unwrap();
        assert!(s.fanin_flows().all(|f| f.src.0 <= 6));
    }

    #[test]
    fn incast_sizes() {
        let t = Topology::testbed();
        let p = IncastParams {
            senders: 40,
            ..IncastParams::default()
        };
        let s = gen_incast(&t, &mut rng(), &p).unwrap();
        assert_eq!(s.flows.len(), 40);
        assert!(s.flows.iter().all(|f| f.bytes == 64 * KB));
        let p = IncastParams {
            senders: 8,
            mode: IncastMode::FixedTotal,
            ..IncastParams::default()
        };
        let s = gen_incast(&t, &mut rng(), &p).unwrap();
        assert!(s.flows.iter().all(|f| f.bytes == 128 * KB));
        let p = IncastParams {
            senders: 1,
            mode: IncastMode::FixedTotal,
            ..IncastParams::default()
        };
        assert_eq!(
            gen_incast(&t, &mut rng(), &p).unwrap().flows[0].bytes,
            1024 * KB
        );
    }

    #[test]
    fn query_split_across_eleven() {
        let v = split_evenly(100 * KB, 11);
        assert_eq!(v[1], 9309);
        assert_eq!(v.iter().sum::<u64>(), 100 * KB);
        assert_eq!(v[0], 9310);
    }

    #[test]
    fn websearch_rejects_load_out_of_range() {
        let p = WebSearchParams {
            load: 1.5,
            ..WebSearchParams::default()
        };
        let err = Scenario::WebSearch(p).validate().unwrap_err();
        assert!(matches!(
            err,
            ScenarioError::InvalidParam {
                field: "scenario.load",
                ..
            }
        ));
    }

    #[test]
    fn websearch_offered_load_matches() {
        let t = Topology::testbed();
        let p = WebSearchParams {
            duration_ms: 20_000,
            ..WebSearchParams::default()
        };
        let mut loads = vec![0.0; t.links().len() * 2];
        let seeds = 16;
        for seed in 0..seeds {
            let mut r = ChaCha8Rng::seed_from_u64(seed);
            let s = gen_websearch(&t, &mut r, &p, &StepCdf::websearch()).unwrap();
            well_formed(&s);
            assert!(s.queries.iter().all(|q| q.flows.len() == 11));
            for (acc, l) in loads.iter_mut().zip(offered_link_loads(
                &t,
                &s,
                SimTime::from_millis(p.duration_ms),
            )) {
                *acc += l / seeds as f64;
            }
        }
        // expectation per link, then the busiest
        let busiest = loads.iter().copied().fold(0.0, f64::max);
        assert!((busiest - 0.4).abs() < 0.4 * 0.05, "offered load {busiest}");
    }

    #[test]
    fn batches_use_distinct_senders() {
        let t = Topology::testbed();
        let s = gen_long_flow_batches(
            &t,
            &BatchParams {
                batches: 3,
                ..BatchParams::default()
            },
        )
        .unwrap();
        assert_eq!(s.flows.len(), 9);
        let at2 = s
            .flows
            .iter()
            .filter(|f| f.start <= SimTime::from_secs(2))
            .count();
        assert_eq!(at2, 9);
    }

    #[test]
    fn busiest_link_is_tor_uplink() {
        let share = busiest_link_share(&Topology::testbed());
        assert!((share - 3.0 * 9.0 / (12.0 * 11.0)).abs() < 1e-12);
    }
}
