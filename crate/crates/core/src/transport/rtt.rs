//! Smoothed RTT and retransmission timeout with binary backoff.

use crate::units::SimTime;

const MAX_BACKOFF_SHIFT: u32 = 6;

#[derive(Debug, Clone)]
pub struct RttEstimator {
    srtt: Option<u64>,
    rttvar: u64,
    rto_min: SimTime,
    backoff: u32,
}

impl RttEstimator {
    pub fn new(rto_min: SimTime) -> Self {
        RttEstimator {
            srtt: None,
            rttvar: 0,
            rto_min,
            backoff: 0,
        }
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.srtt.map(SimTime)
    }

    pub fn sample(&mut self, rtt: SimTime) {
        let r = rtt.as_nanos();
        match self.srtt {
            None => {
                self.srtt = Some(r);
                self.rttvar = r / 2;
            }
            Some(s) => {
                let err = s.abs_diff(r);
                self.rttvar = (3 * self.rttvar + err) / 4;
                self.srtt = Some((7 * s + r) / 8);
            }
        }
    }

    /// Timeout before backoff. Before the first sample this is `rto_min`.
    pub fn base_rto(&self) -> SimTime {
        let est = match self.srtt {
            None => 0,
            Some(s) => s + 4 * self.rttvar,
        };
        SimTime(est.max(self.rto_min.as_nanos()))
    }

    pub fn rto(&self) -> SimTime {
        SimTime(self.base_rto().as_nanos() << self.backoff)
    }

    pub fn back_off(&mut self) {
        self.backoff = (self.backoff + 1).min(MAX_BACKOFF_SHIFT);
    }

    pub fn reset_backoff(&mut self) {
        self.backoff = 0;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floor_dominates_short_rtt() {
        let mut e = RttEstimator::new(SimTime::from_millis(10));
        e.sample(SimTime::from_micros(100));
        assert_eq!(e.rto(), SimTime::from_millis(10));
    }

    #[test]
    fn consecutive_timeouts_double() {
        let mut e = RttEstimator::new(SimTime::from_millis(10));
        e.sample(SimTime::from_micros(100));
        let mut seen = vec![e.rto()];
        e.back_off();
        seen.push(e.rto());
        e.back_off();
        seen.push(e.rto());
        assert_eq!(
            seen,
            [
                SimTime::from_millis(10),
                SimTime::from_millis(20),
                SimTime::from_millis(40)
            ]
        );
        e.reset_backoff();
        assert_eq!(e.rto(), SimTime::from_millis(10));
    }

    #[test]
    fn smoothing_converges() {
        let mut e = RttEstimator::new(SimTime::ZERO);
        for _ in 0..200 {
            e.sample(SimTime::from_micros(50));
        }
        assert_eq!(e.srtt(), Some(SimTime::from_micros(50)));
    }
}
