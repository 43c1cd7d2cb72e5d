//! Built-in acceptance experiments. Each returns a [`CheckOutcome`] with
//! the measured values next to the expected ones.

use std::fmt;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::analysis::{slope_bound, stats, PhaseReport};
use crate::config::{Preset, Protocol, RunConfig};
use crate::marking::{prob_of_arrival, SEcnState, SecnOptions};
use crate::output;
use crate::run::{run, RunError, RunResult};
use crate::scenarios::{
    BackgroundParams, BatchParams, IncastMode, IncastParams, Scenario, SyncParams, WebSearchParams,
};
use crate::units::{BitRate, SimTime, KB};

pub const CHECK_NAMES: [&str; 12] = [
    "law1",
    "law2",
    "law3",
    "overshoot",
    "suppression",
    "dctcp",
    "equivalence",
    "utilization",
    "incast",
    "websearch",
    "pacing",
    "determinism",
];

#[derive(Debug, Clone, PartialEq)]
pub struct CheckOutcome {
    pub name: &'static str,
    pub pass: bool,
    pub measured: String,
    pub expected: String,
    /// Extra lines (per-point values) printed under the verdict.
    pub details: Vec<String>,
}

impl fmt::Display for CheckOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let verdict = if self.pass { "PASS" } else { "FAIL" };
        write!(
            f,
            "{verdict} {}: measured {}; expected {}",
            self.name, self.measured, self.expected
        )?;
        for d in &self.details {
            write!(f, "\n    {d}")?;
        }
        Ok(())
    }
}

/// Runs the named check with repetition seeds `seed, seed+1, ...`.
/// `None` for an unknown name.
pub fn run_check(name: &str, seed: u64) -> Option<Result<CheckOutcome, RunError>> {
    Some(match name {
        "law1" => law1(seed, 20),
        "law2" => law2(seed, 20),
        "law3" => law3(seed, 20),
        "overshoot" => overshoot(seed, 5),
        "suppression" => suppression(seed, 5),
        "dctcp" => dctcp(seed, 5),
        "equivalence" => Ok(equivalence()),
        "utilization" => utilization(seed),
        "incast" => incast(seed, 3),
        "websearch" => websearch(seed, 5),
        "pacing" => pacing(seed, 5),
        "determinism" => determinism(seed),
        _ => return None,
    })
}

fn gbps(v: f64) -> String {
    format!("{:.3} Gbps", v / 1e9)
}

fn kb(v: f64) -> String {
    format!("{:.1} KB", v / KB as f64)
}

fn run_all(cfgs: Vec<RunConfig>) -> Result<Vec<RunResult>, RunError> {
    cfgs.par_iter().map(run).collect()
}

fn seeds(seed: u64, reps: u64) -> impl Iterator<Item = u64> {
    (0..reps).map(move |i| seed.wrapping_add(i))
}

fn phase2_slope(r: &RunResult) -> Option<f64> {
    r.phases
        .as_ref()
        .and_then(|p: &PhaseReport| p.phase2)
        .map(|p| p.slope)
}

fn slopes(results: &[RunResult]) -> Vec<f64> {
    results.iter().filter_map(phase2_slope).collect()
}

const R: f64 = 1e9;

pub fn law1_config(seed: u64) -> RunConfig {
    RunConfig::new(
        seed,
        Protocol::Tcp,
        Scenario::SyncFanIn(SyncParams::default()),
    )
}

pub fn law1(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let res = run_all(seeds(seed, reps).map(law1_config).collect())?;
    let s = slopes(&res);
    let mean = stats::mean(&s).unwrap_or(0.0);
    let cv = stats::cv(&s).unwrap_or(f64::INFINITY);
    let lo = s.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = s.iter().copied().fold(0.0, f64::max);
    Ok(CheckOutcome {
        name: "law1",
        pass: s.len() == res.len() && lo >= 0.95 * R && hi <= 1.05 * R && cv < 0.05,
        measured: format!(
            "{} runs, Phase-2 slope {}..{} (mean {}), CV {cv:.4}",
            s.len(),
            gbps(lo),
            gbps(hi),
            gbps(mean)
        ),
        expected: format!("{reps} runs, every slope in [0.950, 1.050] Gbps, CV < 0.05"),
        details: vec![],
    })
}

/// Background flows start at a random offset in the first 200 ms so that
/// repetitions catch the background window at different points.
fn background_params() -> BackgroundParams {
    BackgroundParams {
        background_start_ms: 200,
        ..BackgroundParams::default()
    }
}

pub fn law2_config(seed: u64) -> RunConfig {
    RunConfig::new(
        seed,
        Protocol::Tcp,
        Scenario::OneBackground(background_params()),
    )
}

pub fn law2(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let res = run_all(seeds(seed, reps).map(law2_config).collect())?;
    let s = slopes(&res);
    let hi = s.iter().copied().fold(0.0, f64::max);
    let mean = stats::mean(&s).unwrap_or(0.0);
    Ok(CheckOutcome {
        name: "law2",
        pass: s.len() == res.len() && hi < 0.95 * R,
        measured: format!(
            "{} runs, max Phase-2 slope {} (mean {})",
            s.len(),
            gbps(hi),
            gbps(mean)
        ),
        expected: format!("{reps} runs, every slope < 0.950 Gbps"),
        details: vec![],
    })
}

pub fn law3_config(seed: u64, tor_buffer_kb: u64) -> RunConfig {
    RunConfig::new(
        seed,
        Protocol::Tcp,
        Scenario::PrevHop(BackgroundParams {
            tor_buffer_kb: Some(tor_buffer_kb),
            ..background_params()
        }),
    )
}

pub fn law3(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let buffers = [128, 256, 512];
    let cfgs: Vec<RunConfig> = buffers
        .iter()
        .flat_map(|&b| seeds(seed, reps).map(move |s| law3_config(s, b)))
        .collect();
    let res = run_all(cfgs)?;
    let mut means = Vec::new();
    let mut details = Vec::new();
    let mut within_bound = true;
    let mut complete = true;
    let mut worst_ratio: f64 = 0.0;
    for (i, b) in buffers.iter().enumerate() {
        let chunk = &res[i * reps as usize..(i + 1) * reps as usize];
        let s = slopes(chunk);
        complete &= s.len() == chunk.len();
        for r in chunk {
            if let (Some(slope), Some(a)) = (phase2_slope(r), r.queue.first_round_rate()) {
                let ratio = slope / slope_bound(a, BitRate::from_gbps(1));
                worst_ratio = worst_ratio.max(ratio);
                within_bound &= ratio <= 1.05;
            } else {
                complete = false;
            }
        }
        let mean = stats::mean(&s).unwrap_or(0.0);
        let a = stats::mean(
            &chunk
                .iter()
                .filter_map(|r| r.queue.first_round_rate())
                .collect::<Vec<_>>(),
        )
        .unwrap_or(0.0);
        details.push(format!(
            "ToR buffer {b} KB: mean Phase-2 slope {}, a = {}, bound 2aR/(a+R) = {}",
            gbps(mean),
            gbps(a),
            gbps(slope_bound(a, BitRate::from_gbps(1)))
        ));
        means.push(mean);
    }
    let increasing = means.windows(2).all(|w| w[0] < w[1]);
    Ok(CheckOutcome {
        name: "law3",
        pass: complete && increasing && within_bound,
        measured: format!(
            "mean slopes {} / {} / {}, max slope/bound {worst_ratio:.3}",
            gbps(means[0]),
            gbps(means[1]),
            gbps(means[2])
        ),
        expected: "strictly increasing in ToR buffer, every slope <= 1.05 x 2aR/(a+R)".into(),
        details,
    })
}

/// Nine senders sharing 20 MB, 512 KB buffers.
pub fn marking_config(seed: u64, protocol: Protocol) -> RunConfig {
    let mut c = RunConfig::new(
        seed,
        protocol,
        Scenario::Incast(IncastParams {
            senders: 9,
            mode: IncastMode::FixedTotal,
            response_kb: Some(20 * 1024),
            ..IncastParams::default()
        }),
    );
    c.network.buffer_kb = Some(512);
    c
}

struct MarkingStats {
    max_queue: f64,
    stddev: f64,
}

fn marking_runs(
    seed: u64,
    reps: u64,
    protocols: &[Protocol],
) -> Result<Vec<MarkingStats>, RunError> {
    let cfgs: Vec<RunConfig> = protocols
        .iter()
        .flat_map(|&p| seeds(seed, reps).map(move |s| marking_config(s, p)))
        .collect();
    let res = run_all(cfgs)?;
    Ok(res
        .chunks(reps as usize)
        .map(|c| MarkingStats {
            max_queue: stats::mean(
                &c.iter()
                    .map(|r| r.metrics.max_queue as f64)
                    .collect::<Vec<_>>(),
            )
            .unwrap_or(0.0),
            stddev: stats::mean(
                &c.iter()
                    .filter_map(|r| r.metrics.queue_stddev)
                    .collect::<Vec<_>>(),
            )
            .unwrap_or(0.0),
        })
        .collect())
}

pub fn overshoot(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let res = run_all(
        seeds(seed, reps)
            .map(|s| marking_config(s, Protocol::EcnStar))
            .collect(),
    )?;
    let lo = res.iter().map(|r| r.metrics.max_queue).min().unwrap_or(0);
    let hi = res.iter().map(|r| r.metrics.max_queue).max().unwrap_or(0);
    Ok(CheckOutcome {
        name: "overshoot",
        pass: lo >= 64 * KB,
        measured: format!(
            "ECN* max queue {}..{} over {reps} runs",
            kb(lo as f64),
            kb(hi as f64)
        ),
        expected: "every run >= 64.0 KB (2K with K = 32 KB)".into(),
        details: vec![],
    })
}

pub fn suppression(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let m = marking_runs(
        seed,
        reps,
        &[Protocol::EcnStar, Protocol::SEcn, Protocol::SlEcn],
    )?;
    let (ecn, secn, slecn) = (&m[0], &m[1], &m[2]);
    let ratio = secn.max_queue / ecn.max_queue;
    let sl_dev = (slecn.max_queue - secn.max_queue).abs() / secn.max_queue;
    Ok(CheckOutcome {
        name: "suppression",
        pass: ratio <= 0.5 && sl_dev <= 0.15,
        measured: format!(
            "mean max queue ECN* {}, S-ECN {} ({:.1}%), SL-ECN {} ({:.1}% from S-ECN)",
            kb(ecn.max_queue),
            kb(secn.max_queue),
            ratio * 100.0,
            kb(slecn.max_queue),
            sl_dev * 100.0
        ),
        expected: "S-ECN <= 50% of ECN*, SL-ECN within 15% of S-ECN".into(),
        details: vec![format!(
            "queue stddev after 2 ms: ECN* {}, S-ECN {}, SL-ECN {}",
            kb(ecn.stddev),
            kb(secn.stddev),
            kb(slecn.stddev)
        )],
    })
}

pub fn dctcp(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let m = marking_runs(seed, reps, &[Protocol::Dctcp, Protocol::DctcpSlEcn])?;
    let (d, dsl) = (&m[0], &m[1]);
    let ratio = dsl.max_queue / d.max_queue;
    Ok(CheckOutcome {
        name: "dctcp",
        pass: ratio <= 0.6 && dsl.stddev < d.stddev,
        measured: format!(
            "mean max queue DCTCP {}, DCTCP+SL-ECN {} ({:.1}%); stddev after 10 ms {} vs {}",
            kb(d.max_queue),
            kb(dsl.max_queue),
            ratio * 100.0,
            kb(d.stddev),
            kb(dsl.stddev)
        ),
        expected: "DCTCP+SL-ECN max <= 60% of DCTCP, lower stddev".into(),
        details: vec![],
    })
}

/// Marked fraction of the accumulator on a constant-rate stream of
/// 1500-byte packets, and the oracle's expected fraction.
pub fn marked_fraction(interval_ns: u64, packets: usize) -> (f64, f64) {
    let rate = BitRate::from_gbps(1);
    let mut state = SEcnState::new(rate, SecnOptions::default());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut marks = 0usize;
    let mut expected = 0.0;
    let mut t = SimTime::ZERO;
    let mut last: Option<SimTime> = None;
    for _ in 0..packets {
        if state.decide(1500, t, &mut rng).is_mark() {
            marks += 1;
        }
        if let Some(l) = last {
            expected += prob_of_arrival(1500, Some(t - l), rate).expect("rate is positive");
        }
        last = Some(t);
        t += SimTime(interval_ns);
    }
    (marks as f64 / packets as f64, expected / packets as f64)
}

pub fn equivalence() -> CheckOutcome {
    // 1500 B at 1 Gbps is 12 us on the wire
    let factors = [1.0, 1.25, 1.5, 1.75, 2.0];
    let mut pass = true;
    let mut parts = Vec::new();
    let mut details = Vec::new();
    for f in factors {
        let interval = (12_000.0_f64 / f).round() as u64;
        let (got, want) = marked_fraction(interval, 10_000);
        let ideal = f - 1.0;
        pass &= (got - want).abs() <= 0.05 && (got - ideal).abs() <= 0.05;
        if f == 1.0 {
            pass &= got == 0.0;
        }
        parts.push(format!("{got:.3}"));
        details.push(format!(
            "{f:.2}R: marked {got:.4}, oracle {want:.4}, ideal {ideal:.2}"
        ));
    }
    // below line rate nothing may be marked
    let (slow, _) = marked_fraction(15_000, 10_000);
    pass &= slow == 0.0;
    details.push(format!("0.80R: marked {slow:.4}"));
    CheckOutcome {
        name: "equivalence",
        pass,
        measured: format!("marked fractions {}", parts.join(" / ")),
        expected: "within 0.05 of the oracle and of 0 / 0.25 / 0.5 / 0.75 / 1.0, zero at <= R"
            .into(),
        details,
    }
}

pub fn utilization_config(seed: u64, protocol: Protocol) -> RunConfig {
    RunConfig::new(
        seed,
        protocol,
        Scenario::LongFlowBatches(BatchParams::default()),
    )
}

pub fn utilization(seed: u64) -> Result<CheckOutcome, RunError> {
    let protos = [
        Protocol::DctcpSlEcn,
        Protocol::SEcn,
        Protocol::SlEcn,
        Protocol::Dctcp,
        Protocol::Tcp,
    ];
    let res = run_all(
        protos
            .iter()
            .map(|&p| utilization_config(seed, p))
            .collect(),
    )?;
    let g: Vec<f64> = res.iter().map(|r| r.metrics.goodput_bps).collect();
    let details = protos
        .iter()
        .zip(&g)
        .map(|(p, v)| format!("{p}: {:.1} Mbps", v / 1e6))
        .collect();
    Ok(CheckOutcome {
        name: "utilization",
        pass: g[0] > 900e6 && g[1] < g[0] && g[2] < g[0],
        measured: format!(
            "3 flows: DCTCP+SL-ECN {:.1} Mbps, S-ECN {:.1} Mbps, SL-ECN {:.1} Mbps",
            g[0] / 1e6,
            g[1] / 1e6,
            g[2] / 1e6
        ),
        expected: "DCTCP+SL-ECN > 900 Mbps, S-ECN and SL-ECN below it".into(),
        details,
    })
}

pub const INCAST_RTO_MIN_MS: u64 = 200;

pub fn incast_config(seed: u64, protocol: Protocol, senders: u32) -> RunConfig {
    let mut c = RunConfig::new(
        seed,
        protocol,
        Scenario::Incast(IncastParams {
            senders,
            mode: IncastMode::FixedResponse,
            response_kb: Some(64),
            ..IncastParams::default()
        }),
    );
    c.transport.rto_min_ms = INCAST_RTO_MIN_MS;
    c.output.trace = false;
    c
}

/// Mean goodput per sender count over `reps` seeds.
pub fn incast_curve(
    seed: u64,
    reps: u64,
    protocol: Protocol,
    ns: &[u32],
) -> Result<Vec<f64>, RunError> {
    let cfgs: Vec<RunConfig> = ns
        .iter()
        .flat_map(|&n| seeds(seed, reps).map(move |s| incast_config(s, protocol, n)))
        .collect();
    let res = run_all(cfgs)?;
    Ok(res
        .chunks(reps as usize)
        .map(|c| {
            stats::mean(&c.iter().map(|r| r.metrics.goodput_bps).collect::<Vec<_>>()).unwrap_or(0.0)
        })
        .collect())
}

/// First sender count whose goodput falls below half the plateau (the
/// median over the five smallest counts); one past the sweep if none.
pub fn collapse_point(ns: &[u32], goodput: &[f64]) -> u32 {
    let mut head: Vec<f64> = goodput.iter().take(5).copied().collect();
    head.sort_by(f64::total_cmp);
    let plateau = head.get(head.len() / 2).copied().unwrap_or(0.0);
    ns.iter()
        .zip(goodput)
        .find(|(_, &g)| g < 0.5 * plateau)
        .map(|(&n, _)| n)
        .unwrap_or(ns.last().map_or(0, |n| n + 1))
}

pub fn incast(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let ns: Vec<u32> = (2..=50).collect();
    let protos = [
        Protocol::Tcp,
        Protocol::EcnStar,
        Protocol::SlEcn,
        Protocol::Dctcp,
        Protocol::DctcpSlEcn,
    ];
    let mut onset = Vec::new();
    let mut details = Vec::new();
    for p in protos {
        let g = incast_curve(seed, reps, p, &ns)?;
        let n = collapse_point(&ns, &g);
        let sample: Vec<String> = ns
            .iter()
            .zip(&g)
            .filter(|(n, _)| *n % 8 == 2)
            .map(|(n, g)| format!("{n}:{:.0}", g / 1e6))
            .collect();
        details.push(format!(
            "{p}: collapse at n = {n}; goodput Mbps {}",
            sample.join(" ")
        ));
        onset.push(n);
    }
    let pass = onset[0] <= onset[1] && onset[1] <= onset[2] && onset[3] <= onset[4];
    Ok(CheckOutcome {
        name: "incast",
        pass,
        measured: format!(
            "collapse n: TCP {}, ECN* {}, SL-ECN {}, DCTCP {}, DCTCP+SL-ECN {}",
            onset[0], onset[1], onset[2], onset[3], onset[4]
        ),
        expected: "TCP <= ECN* <= SL-ECN and DCTCP <= DCTCP+SL-ECN".into(),
        details,
    })
}

pub fn websearch_config(seed: u64, protocol: Protocol) -> RunConfig {
    let mut c = RunConfig::new(
        seed,
        protocol,
        Scenario::WebSearch(WebSearchParams::default()),
    );
    c.output.trace = false;
    c
}

pub fn websearch(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let protos = [Protocol::Dctcp, Protocol::DctcpSlEcn];
    let cfgs: Vec<RunConfig> = protos
        .iter()
        .flat_map(|&p| seeds(seed, reps).map(move |s| websearch_config(s, p)))
        .collect();
    let res = run_all(cfgs)?;
    let mut mean = Vec::new();
    let mut p99 = Vec::new();
    let mut details = Vec::new();
    for (p, chunk) in protos.iter().zip(res.chunks(reps as usize)) {
        let qct: Vec<f64> = chunk
            .iter()
            .flat_map(|r| r.metrics.qct.iter().copied())
            .collect();
        let incomplete: usize = chunk.iter().map(|r| r.metrics.incomplete_queries).sum();
        let m = stats::mean(&qct).unwrap_or(f64::INFINITY);
        let q = stats::percentile(&qct, 99.0).unwrap_or(f64::INFINITY);
        details.push(format!(
            "{p}: {} queries ({incomplete} incomplete), mean QCT {:.3} ms, p99 {:.3} ms",
            qct.len(),
            m * 1e3,
            q * 1e3
        ));
        mean.push(m);
        p99.push(q);
    }
    let gain = 1.0 - p99[1] / p99[0];
    Ok(CheckOutcome {
        name: "websearch",
        pass: mean[1] < mean[0] && p99[1] < p99[0] && gain >= 0.05,
        measured: format!(
            "{reps} seeds: mean QCT {:.3} -> {:.3} ms, p99 {:.3} -> {:.3} ms ({:.1}% lower)",
            mean[0] * 1e3,
            mean[1] * 1e3,
            p99[0] * 1e3,
            p99[1] * 1e3,
            gain * 100.0
        ),
        expected: "DCTCP+SL-ECN lower mean and p99 QCT than DCTCP, p99 >= 5% lower".into(),
        details,
    })
}

/// 40 senders and one receiver on a single switch, as a star.
pub fn pacing_config(seed: u64, pacing: bool) -> RunConfig {
    let responders: Vec<u32> = (1..=41).filter(|&h| h != 10).collect();
    let mut c = RunConfig::new(
        seed,
        Protocol::Tcp,
        Scenario::SyncFanIn(SyncParams {
            flows: 40,
            responders: Some(responders),
            ..SyncParams::default()
        }),
    );
    c.topology.preset = Preset::Star;
    c.topology.hosts = 41;
    c.network.monitor = vec!["switch->host10".into()];
    c.transport.pacing = pacing;
    c
}

pub fn pacing(seed: u64, reps: u64) -> Result<CheckOutcome, RunError> {
    let cfgs: Vec<RunConfig> = [false, true]
        .iter()
        .flat_map(|&p| seeds(seed, reps).map(move |s| pacing_config(s, p)))
        .collect();
    let res = run_all(cfgs)?;
    let (plain, paced) = res.split_at(reps as usize);
    let mq = |rs: &[RunResult]| {
        stats::mean(
            &rs.iter()
                .map(|r| r.metrics.max_queue as f64)
                .collect::<Vec<_>>(),
        )
        .unwrap_or(0.0)
    };
    let sl = |rs: &[RunResult]| stats::mean(&slopes(rs)).unwrap_or(0.0);
    let (q0, q1) = (mq(plain), mq(paced));
    let (s0, s1) = (sl(plain), sl(paced));
    let dq = (q1 - q0).abs() / q0;
    let ds = (s1 - s0).abs() / s0;
    Ok(CheckOutcome {
        name: "pacing",
        pass: dq < 0.10,
        measured: format!(
            "mean max queue {} vs {} paced ({:.1}% apart)",
            kb(q0),
            kb(q1),
            dq * 100.0
        ),
        expected: "max queue heights within 10%".into(),
        details: vec![format!(
            "Phase-2 slope {} vs {} paced ({:.1}% apart)",
            gbps(s0),
            gbps(s1),
            ds * 100.0
        )],
    })
}

fn rendered(r: &RunResult) -> (Vec<u8>, Vec<u8>) {
    let mut trace = Vec::new();
    r.trace.write_csv(&mut trace).expect("writing to memory");
    let mut metrics = Vec::new();
    output::write_metrics(r, &mut metrics).expect("writing to memory");
    (trace, metrics)
}

pub fn determinism(seed: u64) -> Result<CheckOutcome, RunError> {
    let mut async_cfg = marking_config(seed, Protocol::SlEcn);
    async_cfg.scenario = Scenario::AsyncFanIn(Default::default());
    let mut ws = websearch_config(seed, Protocol::DctcpSlEcn);
    if let Scenario::WebSearch(p) = &mut ws.scenario {
        p.duration_ms = 500;
    }
    ws.output.trace = true;
    let cfgs = vec![async_cfg, law3_config(seed, 256), ws];
    let mut pass = true;
    let mut details = Vec::new();
    for c in &cfgs {
        let a = run(c)?;
        let b = run(c)?;
        let (ta, ma) = rendered(&a);
        let (tb, mb) = rendered(&b);
        let same = ta == tb && ma == mb;
        pass &= same;
        details.push(format!(
            "{} / {}: trace {} bytes, metrics {} bytes, {}",
            c.scenario.name(),
            c.protocol,
            ta.len(),
            ma.len(),
            if same { "identical" } else { "DIFFERENT" }
        ));
    }
    Ok(CheckOutcome {
        name: "determinism",
        pass,
        measured: format!("{} configs run twice", cfgs.len()),
        expected: "byte-identical trace.csv and metrics.csv".into(),
        details,
    })
}
