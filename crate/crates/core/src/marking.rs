//! Admission-time marking policies for switch output ports.
//!
//! `TailDrop` never marks. `ThresholdEcn` marks against the instantaneous
//! queue length. `SEcn` marks according to the slope of queue growth,
//! inferred per packet from its size `P` and the interval `I` since the
//! previous arrival: with `R·I` expressed in bytes, the marking probability
//! is `0` when `P <= R·I`, `(P - R·I) / (R·I)` in between and `1` once
//! `P >= 2R·I`. `SlEcn` applies `SEcn` below a queue threshold and marks
//! every packet above it.

use rand::Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::units::{BitRate, ByteCount, SimTime, KB};

pub const DEFAULT_ECN_THRESHOLD: ByteCount = 32 * KB;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Error)]
pub enum MarkingError {
    #[error("port rate must be positive")]
    InvalidRate,
    #[error("no previous arrival at this port")]
    NoPreviousArrival,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MarkDecision {
    Mark,
    NoMark,
}

impl MarkDecision {
    pub fn is_mark(self) -> bool {
        self == MarkDecision::Mark
    }
}

/// Marking probability as a function of the queue slope `s` (bits/s).
pub fn prob_of_slope(slope_bps: f64, rate: BitRate) -> Result<f64, MarkingError> {
    if rate.bps() == 0 {
        return Err(MarkingError::InvalidRate);
    }
    let r = rate.as_f64();
    Ok(if slope_bps <= 0.0 {
        0.0
    } else if slope_bps >= r {
        1.0
    } else {
        slope_bps / r
    })
}

/// Marking probability for one arrival of `size` bytes, `interval` after
/// the previous arrival at the same port.
pub fn prob_of_arrival(
    size: ByteCount,
    interval: Option<SimTime>,
    rate: BitRate,
) -> Result<f64, MarkingError> {
    if rate.bps() == 0 {
        return Err(MarkingError::InvalidRate);
    }
    let interval = interval.ok_or(MarkingError::NoPreviousArrival)?;
    Ok(prob_from_bytes(size, rate.bytes_in(interval)))
}

fn prob_from_bytes(size: ByteCount, line_bytes: ByteCount) -> f64 {
    if size <= line_bytes {
        0.0
    } else if size >= 2 * line_bytes {
        1.0
    } else {
        (size - line_bytes) as f64 / line_bytes as f64
    }
}

/// Worst-case queue height reached under a queue-threshold marker when the
/// queue grows at the port rate: the first sender reacts `h/R + rtt` after
/// the queue crosses `h`, by which time the queue holds `2h + R·rtt`.
pub fn threshold_overshoot_bound(threshold: ByteCount, rate: BitRate, rtt: SimTime) -> ByteCount {
    2 * threshold + rate.bytes_in(rtt)
}

/// How the slope accumulator realizes a marking probability.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecnCounting {
    /// Mark when the accumulated excess reaches `R·I`; the excess beyond it
    /// carries over to the next decision and each packet's contribution is
    /// capped at `R·I` (probability saturates at one). Long-run marked
    /// fraction equals the mean per-packet probability.
    #[default]
    Carry,
    /// Mark when the accumulated excess strictly exceeds `R·I`, then reset
    /// the accumulator to zero. Marks a fraction `p / (1 + p)` of a
    /// constant-rate stream.
    Reset,
}

/// Which engine executes the slope policy.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SecnEngine {
    /// Divider-free byte accumulator.
    #[default]
    Accumulator,
    /// Independent Bernoulli draw per packet with the arrival probability.
    RandomDraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SecnOptions {
    /// Never let the accumulator go below zero.
    pub clamp: bool,
    /// Defer a mark decision to the packet after the one that triggered it.
    pub mark_next: bool,
    pub counting: SecnCounting,
    pub engine: SecnEngine,
}

impl Default for SecnOptions {
    fn default() -> Self {
        SecnOptions {
            clamp: true,
            mark_next: false,
            counting: SecnCounting::Carry,
            engine: SecnEngine::Accumulator,
        }
    }
}

/// Per-port state of the slope marker.
#[derive(Debug, Clone)]
pub struct SEcnState {
    rate: BitRate,
    accumulator: i64,
    last_arrival: Option<SimTime>,
    pending_mark: bool,
    opts: SecnOptions,
}

impl SEcnState {
    pub fn new(rate: BitRate, opts: SecnOptions) -> Self {
        SEcnState {
            rate,
            accumulator: 0,
            last_arrival: None,
            pending_mark: false,
            opts,
        }
    }

    pub fn accumulator(&self) -> i64 {
        self.accumulator
    }

    pub fn last_arrival(&self) -> Option<SimTime> {
        self.last_arrival
    }

    /// Forgets interval history; the next arrival is treated as the first.
    pub fn reset(&mut self) {
        self.accumulator = 0;
        self.last_arrival = None;
        self.pending_mark = false;
    }

    /// Records an arrival that was marked for another reason (queue above
    /// threshold) so that interval bookkeeping stays continuous.
    pub fn note_forced_mark(&mut self, now: SimTime) {
        self.accumulator = 0;
        self.pending_mark = false;
        self.last_arrival = Some(now);
    }

    pub fn decide<R: Rng + ?Sized>(
        &mut self,
        size: ByteCount,
        now: SimTime,
        rng: &mut R,
    ) -> MarkDecision {
        let raw = self.raw_decision(size, now, rng);
        if !self.opts.mark_next {
            return raw;
        }
        let out = if self.pending_mark {
            self.pending_mark = false;
            MarkDecision::Mark
        } else {
            MarkDecision::NoMark
        };
        if raw.is_mark() {
            self.pending_mark = true;
        }
        out
    }

    fn raw_decision<R: Rng + ?Sized>(
        &mut self,
        size: ByteCount,
        now: SimTime,
        rng: &mut R,
    ) -> MarkDecision {
        let Some(last) = self.last_arrival.replace(now) else {
            return MarkDecision::NoMark;
        };
        let line_bytes = self.rate.bytes_in(now.saturating_sub(last));
        match self.opts.engine {
            SecnEngine::RandomDraw => {
                let p = prob_from_bytes(size, line_bytes);
                if p > 0.0 && rng.random::<f64>() < p {
                    MarkDecision::Mark
                } else {
                    MarkDecision::NoMark
                }
            }
            SecnEngine::Accumulator => self.accumulate(size as i64, line_bytes as i64),
        }
    }

    fn accumulate(&mut self, size: i64, line_bytes: i64) -> MarkDecision {
        let excess = size - line_bytes;
        match self.opts.counting {
            SecnCounting::Carry => {
                self.accumulator += excess.min(line_bytes);
                if self.opts.clamp {
                    self.accumulator = self.accumulator.max(0);
                }
                if self.accumulator >= line_bytes && self.accumulator >= 0 {
                    self.accumulator -= line_bytes;
                    MarkDecision::Mark
                } else {
                    MarkDecision::NoMark
                }
            }
            SecnCounting::Reset => {
                self.accumulator += excess;
                if self.opts.clamp {
                    self.accumulator = self.accumulator.max(0);
                }
                if self.accumulator > line_bytes {
                    self.accumulator = 0;
                    MarkDecision::Mark
                } else {
                    MarkDecision::NoMark
                }
            }
        }
    }
}

/// Policy configuration as named in run configs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum PolicyKind {
    TailDrop,
    ThresholdEcn,
    SEcn,
    SlEcn,
}

#[derive(Debug, Clone)]
pub enum MarkingPolicy {
    TailDrop,
    ThresholdEcn {
        threshold: ByteCount,
    },
    SEcn(SEcnState),
    SlEcn {
        threshold: ByteCount,
        secn: SEcnState,
    },
}

impl MarkingPolicy {
    pub fn build(kind: PolicyKind, threshold: ByteCount, rate: BitRate, opts: SecnOptions) -> Self {
        match kind {
            PolicyKind::TailDrop => MarkingPolicy::TailDrop,
            PolicyKind::ThresholdEcn => MarkingPolicy::ThresholdEcn { threshold },
            PolicyKind::SEcn => MarkingPolicy::SEcn(SEcnState::new(rate, opts)),
            PolicyKind::SlEcn => MarkingPolicy::SlEcn {
                threshold,
                secn: SEcnState::new(rate, opts),
            },
        }
    }

    /// Decision for an admitted packet of `size` bytes arriving when the
    /// queue holds `queue_bytes` (not counting the packet itself).
    pub fn decide<R: Rng + ?Sized>(
        &mut self,
        queue_bytes: ByteCount,
        size: ByteCount,
        now: SimTime,
        rng: &mut R,
    ) -> MarkDecision {
        match self {
            MarkingPolicy::TailDrop => MarkDecision::NoMark,
            MarkingPolicy::ThresholdEcn { threshold } => {
                if queue_bytes > *threshold {
                    MarkDecision::Mark
                } else {
                    MarkDecision::NoMark
                }
            }
            MarkingPolicy::SEcn(state) => state.decide(size, now, rng),
            MarkingPolicy::SlEcn { threshold, secn } => {
                if queue_bytes > *threshold {
                    secn.note_forced_mark(now);
                    MarkDecision::Mark
                } else {
                    secn.decide(size, now, rng)
                }
            }
        }
    }

    /// Called when a packet arrives at an empty, idle port.
    pub fn on_idle_arrival(&mut self) {
        match self {
            MarkingPolicy::SEcn(state) | MarkingPolicy::SlEcn { secn: state, .. } => state.reset(),
            _ => {}
        }
    }
}
