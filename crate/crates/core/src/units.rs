//! Unit-bearing scalars: simulated time, byte counts and link rates.
//!
//! Time is integer nanoseconds so that event ordering never depends on
//! floating-point rounding.

use std::fmt;
use std::ops::{Add, AddAssign, Sub};

use serde::{Deserialize, Serialize};

/// A count of bytes on the wire.
pub type ByteCount = u64;

/// One kilobyte as used throughout the configuration (1024 bytes).
pub const KB: ByteCount = 1024;

/// Nanoseconds since the start of a simulation run.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct SimTime(pub u64);

impl SimTime {
    pub const ZERO: SimTime = SimTime(0);
    pub const MAX: SimTime = SimTime(u64::MAX);

    pub const fn from_nanos(ns: u64) -> Self {
        SimTime(ns)
    }

    pub const fn from_micros(us: u64) -> Self {
        SimTime(us * 1_000)
    }

    pub const fn from_millis(ms: u64) -> Self {
        SimTime(ms * 1_000_000)
    }

    pub const fn from_secs(s: u64) -> Self {
        SimTime(s * 1_000_000_000)
    }

    pub const fn as_nanos(self) -> u64 {
        self.0
    }

    pub fn as_secs_f64(self) -> f64 {
        self.0 as f64 * 1e-9
    }

    pub fn as_micros_f64(self) -> f64 {
        self.0 as f64 * 1e-3
    }

    pub fn saturating_sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0.saturating_sub(rhs.0))
    }

    /// Rounds down to a multiple of `granularity` ns.
    pub fn quantize(self, granularity: u64) -> SimTime {
        if granularity == 0 {
            return self;
        }
        SimTime(self.0 - self.0 % granularity)
    }
}

impl Add for SimTime {
    type Output = SimTime;
    fn add(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 + rhs.0)
    }
}

impl AddAssign for SimTime {
    fn add_assign(&mut self, rhs: SimTime) {
        self.0 += rhs.0;
    }
}

impl Sub for SimTime {
    type Output = SimTime;
    fn sub(self, rhs: SimTime) -> SimTime {
        SimTime(self.0 - rhs.0)
    }
}

impl fmt::Display for SimTime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}ns", self.0)
    }
}

/// Link or port rate in bits per second.
#[derive(
    Debug, Clone, Copy, Default, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(transparent)]
pub struct BitRate(pub u64);

impl BitRate {
    pub const fn from_bps(bps: u64) -> Self {
        BitRate(bps)
    }

    pub const fn from_mbps(mbps: u64) -> Self {
        BitRate(mbps * 1_000_000)
    }

    pub const fn from_gbps(gbps: u64) -> Self {
        BitRate(gbps * 1_000_000_000)
    }

    pub const fn bps(self) -> u64 {
        self.0
    }

    pub fn as_f64(self) -> f64 {
        self.0 as f64
    }

    /// Time to serialize `bytes` onto a link of this rate, rounded up to
    /// whole nanoseconds.
    pub fn serialization_time(self, bytes: ByteCount) -> SimTime {
        assert!(self.0 > 0, "serialization on a zero-rate link");
        let bits = bytes as u128 * 8 * 1_000_000_000;
        let rate = self.0 as u128;
        SimTime(bits.div_ceil(rate) as u64)
    }

    /// Bytes this rate carries in `interval`, rounded to the nearest byte
    /// (ties away from zero).
    pub fn bytes_in(self, interval: SimTime) -> ByteCount {
        let num = self.0 as u128 * interval.0 as u128;
        let den = 8_000_000_000u128;
        ((num + den / 2) / den) as ByteCount
    }
}

impl fmt::Display for BitRate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:.3}Gbps", self.0 as f64 / 1e9)
    }
}

/// Converts a rate in bits per second to Gbps.
pub fn to_gbps(bps: f64) -> f64 {
    bps / 1e9
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn mss_serializes_in_twelve_micros_at_one_gig() {
        assert_eq!(
            BitRate::from_gbps(1).serialization_time(1500),
            SimTime::from_micros(12)
        );
        assert_eq!(BitRate::from_gbps(1).serialization_time(64), SimTime(512));
    }

    #[test]
    fn bytes_in_rounds_to_nearest() {
        let r = BitRate::from_gbps(1);
        assert_eq!(r.bytes_in(SimTime(12_000)), 1500);
        // 6857 ns at 1 Gbps = 857.125 B
        assert_eq!(r.bytes_in(SimTime(6_857)), 857);
        // 4 ns = 0.5 B rounds up
        assert_eq!(r.bytes_in(SimTime(4)), 1);
        assert_eq!(r.bytes_in(SimTime(3)), 0);
    }

    #[test]
    fn quantize_floors() {
        assert_eq!(SimTime(1234).quantize(800), SimTime(800));
        assert_eq!(SimTime(1600).quantize(800), SimTime(1600));
        assert_eq!(SimTime(5).quantize(0), SimTime(5));
    }
}
