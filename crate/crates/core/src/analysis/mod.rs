//! Queue-trace analysis: phase segmentation, slope fitting and run metrics.

pub mod metrics;
pub mod stats;

use std::collections::HashSet;

use thiserror::Error;

use crate::net::packet::{FlowId, DATA_PACKET_BYTES};
use crate::net::port::PortId;
use crate::net::telemetry::{TelemetryLog, TraceEvent};
use crate::sim::{Annotation, AnnotationKind};
use crate::units::{BitRate, ByteCount, SimTime};

pub use metrics::{compute_metrics, goodput_bps, query_completion_times, MetricsReport};

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AnalysisError {
    #[error("insufficient data: {0}")]
    InsufficientData(&'static str),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct QueueSample {
    pub time: SimTime,
    pub queue_bytes: ByteCount,
}

/// Arrival-side queue samples at one port plus ground truth from the run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct QueueTrace {
    pub port: Option<PortId>,
    pub samples: Vec<QueueSample>,
    /// Arrivals of fan-in data packets: (time, round).
    pub fanin_arrivals: Vec<(SimTime, u32)>,
    pub drops: Vec<SimTime>,
    /// Window cuts of fan-in flows, at the sender.
    pub cuts: Vec<SimTime>,
}

impl QueueTrace {
    pub fn from_samples(samples: Vec<QueueSample>) -> Self {
        QueueTrace {
            samples,
            ..QueueTrace::default()
        }
    }

    /// Builds the trace of `port`; `fanin` selects the flows whose rounds
    /// delimit the phases.
    pub fn from_run(
        log: &TelemetryLog,
        port: PortId,
        fanin: &HashSet<FlowId>,
        annotations: &[Annotation],
    ) -> Self {
        let mut t = QueueTrace {
            port: Some(port),
            ..QueueTrace::default()
        };
        for r in log.for_port(port) {
            if !r.event.is_arrival() {
                continue;
            }
            t.samples.push(QueueSample {
                time: r.time,
                queue_bytes: r.queue_bytes,
            });
            if r.event == TraceEvent::Drop {
                t.drops.push(r.time);
            }
            if r.is_data && !r.retransmit && fanin.contains(&r.flow) {
                t.fanin_arrivals.push((r.time, r.round));
            }
        }
        t.cuts = annotations
            .iter()
            .filter(|a| {
                fanin.contains(&a.flow)
                    && matches!(a.kind, AnnotationKind::CwndCut | AnnotationKind::Timeout)
            })
            .map(|a| a.time)
            .collect();
        t.cuts.sort();
        t
    }

    pub fn max_queue(&self) -> ByteCount {
        self.samples
            .iter()
            .map(|s| s.queue_bytes)
            .max()
            .unwrap_or(0)
    }

    fn window(&self, start: SimTime, end: SimTime) -> impl Iterator<Item = &QueueSample> {
        self.samples
            .iter()
            .filter(move |s| s.time >= start && s.time <= end)
    }

    /// Time span of fan-in arrivals of `round`.
    pub fn round_span(&self, round: u32) -> Option<(SimTime, SimTime)> {
        let mut it = self
            .fanin_arrivals
            .iter()
            .filter(|a| a.1 == round)
            .map(|a| a.0);
        let first = it.next()?;
        let last = it.fold(first, SimTime::max);
        Some((first, last))
    }

    /// Arrival rate of first-round fan-in packets, bits/s.
    pub fn first_round_rate(&self) -> Option<f64> {
        let (a, b) = self.round_span(1)?;
        let n = self.fanin_arrivals.iter().filter(|r| r.1 == 1).count();
        if b <= a || n < 2 {
            return None;
        }
        // n packets arrive over n-1 gaps
        Some((n - 1) as f64 * DATA_PACKET_BYTES as f64 * 8.0 / (b - a).as_secs_f64())
    }
}

/// Least-squares slope of queue length in `[start, end]`, in bits/s.
pub fn fit_slope(trace: &QueueTrace, start: SimTime, end: SimTime) -> Result<f64, AnalysisError> {
    let pts: Vec<(f64, f64)> = trace
        .window(start, end)
        .map(|s| ((s.time - start).as_secs_f64(), s.queue_bytes as f64 * 8.0))
        .collect();
    stats::ls_slope(&pts).ok_or(AnalysisError::InsufficientData(
        "fewer than two samples in the window",
    ))
}

/// Upper bound on the Phase-2 slope with a hidden buffer: 2aR/(a+R).
pub fn slope_bound(a_bps: f64, rate: BitRate) -> f64 {
    let r = rate.as_f64();
    2.0 * a_bps * r / (a_bps + r)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phase {
    pub start: SimTime,
    pub end: SimTime,
    pub height: ByteCount,
    /// bits/s
    pub slope: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PhaseReport {
    pub phase1: Phase,
    /// Empty when the burst ends with the first round.
    pub phase2: Option<Phase>,
    /// Per-round segments from round 2 on, up to the end of Phase 2.
    pub later_phases: Vec<Phase>,
}

fn phase(trace: &QueueTrace, start: SimTime, end: SimTime) -> Option<Phase> {
    let slope = fit_slope(trace, start, end).ok()?;
    let height = trace.window(start, end).map(|s| s.queue_bytes).max()?;
    Some(Phase {
        start,
        end,
        height,
        slope,
    })
}

/// Phase 1 spans the first-round fan-in arrivals. Phase 2 runs from there
/// to the first drop, the first fan-in window cut, or the peak of the queue
/// before either, whichever comes first.
pub fn segment_phases(trace: &QueueTrace) -> Result<PhaseReport, AnalysisError> {
    let (p1s, p1e) = trace
        .round_span(1)
        .ok_or(AnalysisError::InsufficientData("no first-round arrivals"))?;
    let phase1 = phase(trace, p1s, p1e).ok_or(AnalysisError::InsufficientData(
        "fewer than two samples in Phase 1",
    ))?;

    let mut stop = trace.samples.last().map(|s| s.time).unwrap_or(p1e);
    if let Some(&d) = trace.drops.iter().find(|&&d| d > p1e) {
        stop = stop.min(d);
    }
    if let Some(&c) = trace.cuts.iter().find(|&&c| c > p1e) {
        stop = stop.min(c);
    }
    // growth stop: the last time the queue reaches its peak before `stop`
    let mut peak: Option<QueueSample> = None;
    for s in trace.window(p1e, stop) {
        if peak.is_none_or(|p| s.queue_bytes >= p.queue_bytes) {
            peak = Some(*s);
        }
    }
    let p2e = peak.map(|p| p.time).unwrap_or(p1e);
    let phase2 = if p2e > p1e {
        phase(trace, p1e, p2e)
    } else {
        None
    };

    let mut later_phases = Vec::new();
    if phase2.is_some() {
        let mut round = 2;
        while let Some((a, b)) = trace.round_span(round) {
            if a >= p2e {
                break;
            }
            if let Some(p) = phase(trace, a, b.min(p2e)) {
                later_phases.push(p);
            }
            round += 1;
        }
    }
    Ok(PhaseReport {
        phase1,
        phase2,
        later_phases,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SlopeDistribution {
    pub sorted: Vec<f64>,
    pub mean: f64,
    pub cv: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseSel {
    One,
    Two,
}

pub fn slope_distribution(runs: &[PhaseReport], which: PhaseSel) -> Option<SlopeDistribution> {
    let mut v: Vec<f64> = runs
        .iter()
        .filter_map(|r| match which {
            PhaseSel::One => Some(r.phase1.slope),
            PhaseSel::Two => r.phase2.map(|p| p.slope),
        })
        .collect();
    v.sort_by(f64::total_cmp);
    Some(SlopeDistribution {
        mean: stats::mean(&v)?,
        cv: stats::cv(&v)?,
        sorted: v,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn line(rate_bps: u64, n: u64, dt_ns: u64) -> QueueTrace {
        QueueTrace::from_samples(
            (0..n)
                .map(|i| QueueSample {
                    time: SimTime(i * dt_ns),
                    queue_bytes: rate_bps * i * dt_ns / 8 / 1_000_000_000,
                })
                .collect(),
        )
    }

    #[test]
    fn exact_fit_returns_rate() {
        let t = line(1_000_000_000, 100, 12_000);
        let s = fit_slope(&t, SimTime::ZERO, SimTime::from_millis(10)).unwrap();
        assert!((s - 1e9).abs() < 1e-3);
    }

    #[test]
    fn flat_queue_is_zero() {
        let t = QueueTrace::from_samples(
            (0..10)
                .map(|i| QueueSample {
                    time: SimTime(i),
                    queue_bytes: 3000,
                })
                .collect(),
        );
        assert_eq!(fit_slope(&t, SimTime::ZERO, SimTime(100)), Ok(0.0));
        assert!(fit_slope(&t, SimTime(50), SimTime(100)).is_err());
    }

    #[test]
    fn bound_cases() {
        let r = BitRate::from_gbps(1);
        assert!((slope_bound(1e9, r) - 1e9).abs() < 1e-6);
        assert!((slope_bound(3e9, r) - 1.5e9).abs() < 1e-3);
        assert!(slope_bound(1e15, r) < 2e9 && slope_bound(1e15, r) > 1.999e9);
    }

    #[test]
    fn single_run_distribution_is_degenerate() {
        let p = Phase {
            start: SimTime::ZERO,
            end: SimTime(1),
            height: 0,
            slope: 1e9,
        };
        let r = PhaseReport {
            phase1: p,
            phase2: Some(p),
            later_phases: vec![],
        };
        let d = slope_distribution(&[r], PhaseSel::Two).unwrap();
        assert_eq!(d.sorted, vec![1e9]);
        assert_eq!(d.cv, 0.0);
    }

    #[test]
    fn segments_synthetic_burst() {
        // Phase 1: 10 packets at 3 Gbps net growth; Phase 2: growth at 1 Gbps
        let mut t = QueueTrace::default();
        let mut q = 0u64;
        let mut now = 0u64;
        for _ in 0..10 {
            t.samples.push(QueueSample {
                time: SimTime(now),
                queue_bytes: q,
            });
            t.fanin_arrivals.push((SimTime(now), 1));
            now += 4_000;
            q += 1500;
        }
        now -= 4_000;
        for _ in 0..50 {
            now += 6_000;
            q += 750;
            t.samples.push(QueueSample {
                time: SimTime(now),
                queue_bytes: q,
            });
            t.fanin_arrivals.push((SimTime(now), 2));
        }
        let r = segment_phases(&t).unwrap();
        assert_eq!(r.phase1.end, SimTime(36_000));
        assert!((r.phase1.slope - 3e9).abs() < 1.0);
        let p2 = r.phase2.unwrap();
        assert!((p2.slope - 1e9).abs() / 1e9 < 0.01, "{}", p2.slope);
        assert_eq!(r.later_phases.len(), 1);
    }

    #[test]
    fn burst_without_second_round_has_no_phase2() {
        let mut t = QueueTrace::default();
        for i in 0..3u64 {
            t.samples.push(QueueSample {
                time: SimTime(i * 1000),
                queue_bytes: i * 1500,
            });
            t.fanin_arrivals.push((SimTime(i * 1000), 1));
        }
        let r = segment_phases(&t).unwrap();
        assert!(r.phase2.is_none());
    }

    proptest! {
        #[test]
        fn fit_is_exact_on_lines(
            step in 0u64..3000,
            q0 in 0u64..1_000_000,
            n in 2u64..200,
            dt in 1u64..50_000,
        ) {
            let t = QueueTrace::from_samples(
                (0..n)
                    .map(|i| QueueSample {
                        time: SimTime(1_000 + i * dt),
                        queue_bytes: q0 + step * i,
                    })
                    .collect(),
            );
            let expect = step as f64 * 8.0 / (dt as f64 * 1e-9);
            let fitted = fit_slope(&t, SimTime(1_000), SimTime::MAX).unwrap();
            prop_assert!((fitted - expect).abs() <= 1e-9 * expect.max(1.0), "{} vs {}", fitted, expect);
        }
    }
}
