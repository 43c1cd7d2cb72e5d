//! Window-based sender: NewReno with ECN, or DCTCP.
//!
//! The sender is a pure state machine. Every entry point returns a
//! [`SendOutput`] describing the segments to put on the wire and what to do
//! with the retransmission timer; the simulation owns the timers.

use serde::{Deserialize, Serialize};

use crate::net::packet::DATA_PACKET_BYTES;
use crate::units::{ByteCount, SimTime};

use super::rtt::RttEstimator;

pub const MSS: ByteCount = DATA_PACKET_BYTES;
pub const INITIAL_WINDOW: ByteCount = 3 * MSS;
pub const DEFAULT_DCTCP_GAIN: f64 = 0.125;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Algorithm {
    NewReno,
    Dctcp,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CcState {
    SlowStart,
    CongestionAvoidance,
    FastRecovery,
    TimeoutRecovery,
}

#[derive(Debug, Clone)]
pub struct SenderConfig {
    pub algorithm: Algorithm,
    pub ecn: bool,
    pub max_cwnd: ByteCount,
    pub rto_min: SimTime,
    pub dctcp_gain: f64,
    pub pacing: bool,
}

impl Default for SenderConfig {
    fn default() -> Self {
        SenderConfig {
            algorithm: Algorithm::NewReno,
            ecn: false,
            max_cwnd: 64 * MSS,
            rto_min: SimTime::from_millis(10),
            dctcp_gain: DEFAULT_DCTCP_GAIN,
            pacing: false,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Segment {
    pub seq: u64,
    pub len: u32,
    pub round: u32,
    pub retransmit: bool,
    pub cwr: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum TimerAction {
    /// Leave the timer as it is.
    #[default]
    Keep,
    /// Arm the timer if it is not running.
    Ensure,
    /// (Re)arm for a full RTO from now.
    Restart,
    Stop,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SendOutput {
    pub segments: Vec<Segment>,
    pub timer: TimerAction,
    /// Pacing: earliest time the next segment may leave.
    pub wake_at: Option<SimTime>,
    /// A congestion-window cut was applied on this call.
    pub cwnd_cut: bool,
}

/// Fields carried back by an ACK.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AckInfo {
    pub ack: u64,
    pub ece: bool,
    pub round: u32,
    /// Send time of the data packet that triggered this ACK.
    pub echo_time: SimTime,
    pub echo_retransmit: bool,
}

#[derive(Debug, Clone)]
pub struct Sender {
    cfg: SenderConfig,
    bytes_total: ByteCount,
    cwnd: ByteCount,
    ssthresh: ByteCount,
    state: CcState,
    snd_una: u64,
    next_seq: u64,
    high_water: u64,
    recover: u64,
    dupacks: u32,
    ca_acked: ByteCount,
    rtt: RttEstimator,
    round: u32,
    // ECN reaction for NewReno: no further cut until snd_una passes this.
    cwr_high: Option<u64>,
    send_cwr: bool,
    // DCTCP observation window.
    alpha: f64,
    window_end: u64,
    win_acked: ByteCount,
    win_marked: ByteCount,
    next_send: SimTime,
    started: bool,
    pub retransmits: u64,
    pub timeouts: u64,
}

impl Sender {
    pub fn new(cfg: SenderConfig, bytes_total: ByteCount) -> Self {
        let cwnd = INITIAL_WINDOW.min(cfg.max_cwnd.max(MSS));
        Sender {
            rtt: RttEstimator::new(cfg.rto_min),
            cfg,
            bytes_total,
            cwnd,
            ssthresh: ByteCount::MAX,
            state: CcState::SlowStart,
            snd_una: 0,
            next_seq: 0,
            high_water: 0,
            recover: 0,
            dupacks: 0,
            ca_acked: 0,
            round: 1,
            cwr_high: None,
            send_cwr: false,
            alpha: 0.0,
            window_end: 0,
            win_acked: 0,
            win_marked: 0,
            next_send: SimTime::ZERO,
            started: false,
            retransmits: 0,
            timeouts: 0,
        }
    }

    pub fn config(&self) -> &SenderConfig {
        &self.cfg
    }

    pub fn cwnd(&self) -> ByteCount {
        self.cwnd
    }

    pub fn ssthresh(&self) -> ByteCount {
        self.ssthresh
    }

    pub fn state(&self) -> CcState {
        self.state
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn snd_una(&self) -> u64 {
        self.snd_una
    }

    pub fn next_seq(&self) -> u64 {
        self.next_seq
    }

    pub fn in_flight(&self) -> ByteCount {
        self.next_seq - self.snd_una
    }

    pub fn srtt(&self) -> Option<SimTime> {
        self.rtt.srtt()
    }

    pub fn rto(&self) -> SimTime {
        self.rtt.rto()
    }

    pub fn bytes_total(&self) -> ByteCount {
        self.bytes_total
    }

    pub fn is_complete(&self) -> bool {
        self.snd_una >= self.bytes_total
    }

    /// Inter-send spacing in paced mode: srtt · MSS / cwnd.
    pub fn pacing_gap(&self) -> Option<SimTime> {
        let srtt = self.rtt.srtt()?;
        Some(SimTime(
            (srtt.as_nanos() as u128 * MSS as u128 / self.cwnd as u128) as u64,
        ))
    }

    pub fn on_start(&mut self, now: SimTime) -> SendOutput {
        self.started = true;
        self.window_end = self.cwnd;
        let mut out = SendOutput::default();
        self.transmit(now, &mut out);
        out.timer = TimerAction::Ensure;
        out
    }

    /// Pacing timer fired.
    pub fn on_wake(&mut self, now: SimTime) -> SendOutput {
        let mut out = SendOutput::default();
        self.transmit(now, &mut out);
        if !out.segments.is_empty() {
            out.timer = TimerAction::Ensure;
        }
        out
    }

    pub fn on_ack(&mut self, a: AckInfo, now: SimTime) -> SendOutput {
        let mut out = SendOutput::default();
        if !self.started || self.is_complete() {
            return out;
        }
        self.round = self.round.max(a.round + 1);
        if a.ack > self.snd_una {
            self.on_new_ack(a, now, &mut out);
        } else if a.ack == self.snd_una && self.next_seq > self.snd_una {
            self.on_dupack(a, &mut out);
        }
        if self.is_complete() {
            out.timer = TimerAction::Stop;
            return out;
        }
        self.transmit(now, &mut out);
        out
    }

    fn on_new_ack(&mut self, a: AckInfo, now: SimTime, out: &mut SendOutput) {
        let newly = a.ack - self.snd_una;
        self.snd_una = a.ack;
        self.next_seq = self.next_seq.max(self.snd_una);
        self.dupacks = 0;
        if !a.echo_retransmit {
            self.rtt.sample(now.saturating_sub(a.echo_time));
        }
        self.rtt.reset_backoff();
        out.timer = TimerAction::Restart;

        if self.cfg.algorithm == Algorithm::Dctcp {
            self.win_acked += newly;
            if a.ece {
                self.win_marked += newly;
            }
            if self.snd_una >= self.window_end {
                if self.dctcp_window_boundary() {
                    out.cwnd_cut = true;
                }
                self.window_end = self.next_seq.max(self.snd_una + 1);
            }
        }
        if let Some(h) = self.cwr_high {
            if self.snd_una >= h {
                self.cwr_high = None;
            }
        }

        match self.state {
            CcState::FastRecovery => {
                if self.snd_una >= self.recover {
                    self.cwnd = self.ssthresh.max(MSS);
                    self.ca_acked = 0;
                    self.state = self.growth_state();
                } else {
                    // partial ACK: retransmit the next hole, deflate
                    self.cwnd = (self.cwnd.saturating_sub(newly) + MSS).max(MSS);
                    self.push_retransmit(self.snd_una, out);
                }
                return;
            }
            CcState::TimeoutRecovery if self.snd_una >= self.recover => {
                self.state = self.growth_state();
            }
            _ => {}
        }

        if self.cfg.algorithm == Algorithm::NewReno && a.ece && self.cfg.ecn {
            if self.cwr_high.is_none() {
                self.ecn_cut();
                out.cwnd_cut = true;
            }
            return;
        }
        if self.cwr_high.is_some() {
            return;
        }
        self.grow(newly);
    }

    fn on_dupack(&mut self, a: AckInfo, out: &mut SendOutput) {
        if self.cfg.algorithm == Algorithm::NewReno
            && a.ece
            && self.cfg.ecn
            && self.cwr_high.is_none()
            && matches!(
                self.state,
                CcState::SlowStart | CcState::CongestionAvoidance
            )
        {
            self.ecn_cut();
            out.cwnd_cut = true;
        }
        match self.state {
            CcState::FastRecovery => {
                self.cwnd = (self.cwnd + MSS).min(self.cfg.max_cwnd + 3 * MSS);
            }
            CcState::TimeoutRecovery => {}
            _ => {
                self.dupacks += 1;
                if self.dupacks == 3 && self.snd_una >= self.recover {
                    self.ssthresh = (self.in_flight() / 2).max(2 * MSS);
                    self.cwnd = self.ssthresh + 3 * MSS;
                    self.recover = self.high_water;
                    self.state = CcState::FastRecovery;
                    self.cwr_high = None;
                    out.cwnd_cut = true;
                    self.push_retransmit(self.snd_una, out);
                    out.timer = TimerAction::Restart;
                }
            }
        }
    }

    fn growth_state(&self) -> CcState {
        if self.cwnd < self.ssthresh {
            CcState::SlowStart
        } else {
            CcState::CongestionAvoidance
        }
    }

    fn grow(&mut self, newly: ByteCount) {
        if self.cwnd < self.ssthresh {
            self.cwnd += MSS;
        } else {
            self.ca_acked += newly;
            if self.ca_acked >= self.cwnd {
                self.ca_acked -= self.cwnd;
                self.cwnd += MSS;
            }
        }
        self.cwnd = self.cwnd.min(self.cfg.max_cwnd);
        if self.state != CcState::TimeoutRecovery {
            self.state = self.growth_state();
        }
    }

    fn ecn_cut(&mut self) {
        self.cwnd = (self.cwnd / 2).max(MSS);
        self.ssthresh = self.cwnd;
        self.ca_acked = 0;
        self.cwr_high = Some(self.next_seq.max(self.snd_una + 1));
        self.send_cwr = true;
        self.state = CcState::CongestionAvoidance;
    }

    /// Returns true if the window was cut.
    fn dctcp_window_boundary(&mut self) -> bool {
        let f = if self.win_acked == 0 {
            0.0
        } else {
            self.win_marked as f64 / self.win_acked as f64
        };
        let g = self.cfg.dctcp_gain;
        self.alpha = ((1.0 - g) * self.alpha + g * f).clamp(0.0, 1.0);
        self.win_acked = 0;
        self.win_marked = 0;
        if f > 0.0
            && matches!(
                self.state,
                CcState::SlowStart | CcState::CongestionAvoidance
            )
        {
            let cut = (self.cwnd as f64 * (1.0 - self.alpha / 2.0)) as ByteCount;
            self.cwnd = cut.max(MSS);
            self.ssthresh = self.cwnd;
            self.ca_acked = 0;
            self.state = CcState::CongestionAvoidance;
            return true;
        }
        false
    }

    pub fn on_timeout(&mut self, now: SimTime) -> SendOutput {
        let mut out = SendOutput::default();
        if self.is_complete() || self.next_seq == self.snd_una {
            out.timer = TimerAction::Stop;
            return out;
        }
        self.timeouts += 1;
        self.ssthresh = (self.cwnd / 2).max(2 * MSS);
        self.cwnd = MSS;
        self.ca_acked = 0;
        self.dupacks = 0;
        self.recover = self.high_water;
        self.next_seq = self.snd_una;
        self.cwr_high = None;
        self.state = CcState::TimeoutRecovery;
        self.win_acked = 0;
        self.win_marked = 0;
        self.window_end = self.high_water;
        self.rtt.back_off();
        self.next_send = now;
        out.cwnd_cut = true;
        self.transmit(now, &mut out);
        out.timer = TimerAction::Restart;
        out
    }

    fn push_retransmit(&mut self, seq: u64, out: &mut SendOutput) {
        let len = (self.bytes_total - seq).min(MSS) as u32;
        self.retransmits += 1;
        let cwr = std::mem::take(&mut self.send_cwr);
        out.segments.push(Segment {
            seq,
            len,
            round: self.round,
            retransmit: true,
            cwr,
        });
    }

    fn transmit(&mut self, now: SimTime, out: &mut SendOutput) {
        while self.next_seq < self.bytes_total {
            let len = (self.bytes_total - self.next_seq).min(MSS);
            if self.in_flight() + len > self.cwnd.max(MSS) && self.in_flight() > 0 {
                break;
            }
            if self.cfg.pacing {
                if let Some(gap) = self.pacing_gap() {
                    if now < self.next_send {
                        out.wake_at = Some(self.next_send);
                        break;
                    }
                    self.next_send = now + gap;
                }
            }
            let retransmit = self.next_seq < self.high_water;
            if retransmit {
                self.retransmits += 1;
            }
            let cwr = std::mem::take(&mut self.send_cwr);
            out.segments.push(Segment {
                seq: self.next_seq,
                len: len as u32,
                round: self.round,
                retransmit,
                cwr,
            });
            self.next_seq += len;
            self.high_water = self.high_water.max(self.next_seq);
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ack(n: u64, round: u32) -> AckInfo {
        AckInfo {
            ack: n,
            ece: false,
            round,
            echo_time: SimTime::ZERO,
            echo_retransmit: false,
        }
    }

    fn newreno(ecn: bool) -> Sender {
        Sender::new(
            SenderConfig {
                ecn,
                ..SenderConfig::default()
            },
            1000 * 1024,
        )
    }

    #[test]
    fn first_round_is_three_segments() {
        let mut s = newreno(false);
        let out = s.on_start(SimTime::ZERO);
        assert_eq!(out.segments.len(), 3);
        assert!(out.segments.iter().all(|g| g.len == 1500 && g.round == 1));
        assert_eq!(out.timer, TimerAction::Ensure);
    }

    #[test]
    fn slow_start_ack_releases_two() {
        let mut s = newreno(false);
        s.on_start(SimTime::ZERO);
        let out = s.on_ack(ack(1500, 1), SimTime::from_micros(60));
        assert_eq!(s.cwnd(), 4 * MSS);
        assert_eq!(out.segments.len(), 2);
        assert!(out.segments.iter().all(|g| g.round == 2));
    }

    #[test]
    fn single_packet_flow_completes() {
        let mut s = Sender::new(SenderConfig::default(), 1500);
        assert_eq!(s.on_start(SimTime::ZERO).segments.len(), 1);
        let out = s.on_ack(ack(1500, 1), SimTime::from_micros(60));
        assert!(s.is_complete());
        assert_eq!(out.timer, TimerAction::Stop);
        assert!(out.segments.is_empty());
    }

    #[test]
    fn congestion_avoidance_adds_one_mss_per_window() {
        let mut s = newreno(false);
        s.on_start(SimTime::ZERO);
        s.cwnd = 10 * MSS;
        s.ssthresh = 10 * MSS;
        s.state = CcState::CongestionAvoidance;
        s.transmit(SimTime::ZERO, &mut SendOutput::default());
        let mut acked = s.snd_una;
        for _ in 0..10 {
            acked += MSS;
            s.on_ack(ack(acked, 1), SimTime::from_micros(60));
        }
        assert_eq!(s.cwnd(), 11 * MSS);
    }

    #[test]
    fn ece_halves_once_per_window() {
        let mut s = newreno(true);
        s.on_start(SimTime::ZERO);
        s.cwnd = 8 * MSS;
        s.transmit(SimTime::ZERO, &mut SendOutput::default());
        let mut a = ack(MSS, 1);
        a.ece = true;
        let out = s.on_ack(a, SimTime::from_micros(60));
        assert!(out.cwnd_cut);
        assert_eq!(s.cwnd(), 4 * MSS);
        assert_eq!(s.ssthresh(), 4 * MSS);
        assert!(out.segments.first().is_none_or(|g| g.cwr));
        a.ack = 2 * MSS;
        let out = s.on_ack(a, SimTime::from_micros(61));
        assert!(!out.cwnd_cut);
        assert_eq!(s.cwnd(), 4 * MSS);
    }

    #[test]
    fn ece_ignored_without_ecn() {
        let mut s = newreno(false);
        s.on_start(SimTime::ZERO);
        let mut a = ack(MSS, 1);
        a.ece = true;
        s.on_ack(a, SimTime::from_micros(60));
        assert_eq!(s.cwnd(), 4 * MSS);
    }

    #[test]
    fn dctcp_fully_marked_window() {
        let mut s = Sender::new(
            SenderConfig {
                algorithm: Algorithm::Dctcp,
                ecn: true,
                ..SenderConfig::default()
            },
            1000 * 1024,
        );
        s.on_start(SimTime::ZERO);
        for i in 1..=3 {
            let mut a = ack(i * MSS, 1);
            a.ece = true;
            let out = s.on_ack(a, SimTime::from_micros(60));
            if i < 3 {
                assert!(!out.cwnd_cut);
            } else {
                assert!(out.cwnd_cut);
            }
        }
        assert!((s.alpha() - 0.125).abs() < 1e-12);
        // cwnd grew to 5 MSS during the window, then the cut applies
        assert_eq!(s.cwnd(), (5.0 * MSS as f64 * 0.9375) as ByteCount);
    }

    #[test]
    fn dctcp_alpha_decays_without_marks() {
        let mut s = Sender::new(
            SenderConfig {
                algorithm: Algorithm::Dctcp,
                ecn: true,
                ..SenderConfig::default()
            },
            100 * 1024 * 1024,
        );
        s.on_start(SimTime::ZERO);
        s.alpha = 1.0;
        let mut acked = 0;
        for _ in 0..4000 {
            acked += MSS;
            s.on_ack(ack(acked, 1), SimTime::from_micros(60));
        }
        assert!(s.alpha() < 0.01);
        assert_eq!(s.ssthresh(), ByteCount::MAX);
    }

    #[test]
    fn timeout_collapses_window_and_backs_off() {
        let mut s = newreno(false);
        s.on_start(SimTime::ZERO);
        s.on_ack(ack(MSS, 1), SimTime::from_micros(100));
        let t1 = s.rto();
        let out = s.on_timeout(SimTime::from_millis(10));
        assert_eq!(t1, SimTime::from_millis(10));
        assert_eq!(s.cwnd(), MSS);
        assert_eq!(s.ssthresh(), 2 * MSS);
        assert_eq!(s.state(), CcState::TimeoutRecovery);
        assert_eq!(out.segments.len(), 1);
        assert!(out.segments[0].retransmit);
        assert_eq!(out.segments[0].seq, MSS);
        assert_eq!(s.rto(), SimTime::from_millis(20));
        s.on_timeout(SimTime::from_millis(30));
        assert_eq!(s.rto(), SimTime::from_millis(40));
        assert_eq!(s.timeouts, 2);
    }

    #[test]
    fn triple_dupack_fast_retransmit() {
        let mut s = newreno(false);
        s.on_start(SimTime::ZERO);
        s.cwnd = 10 * MSS;
        s.transmit(SimTime::ZERO, &mut SendOutput::default());
        s.on_ack(ack(MSS, 1), SimTime::from_micros(60));
        for i in 0..3 {
            let out = s.on_ack(ack(MSS, 2), SimTime::from_micros(61 + i));
            if i == 2 {
                assert_eq!(s.state(), CcState::FastRecovery);
                assert!(out.segments[0].retransmit);
                assert_eq!(out.segments[0].seq, MSS);
            }
        }
        let hw = s.high_water;
        s.on_ack(ack(hw, 2), SimTime::from_micros(70));
        assert_eq!(s.state(), CcState::CongestionAvoidance);
        assert_eq!(s.cwnd(), s.ssthresh());
    }

    #[test]
    fn pacing_gap_is_srtt_over_window() {
        let mut s = Sender::new(
            SenderConfig {
                pacing: true,
                ..SenderConfig::default()
            },
            1000 * 1024,
        );
        s.on_start(SimTime::ZERO);
        s.rtt.sample(SimTime::from_micros(100));
        s.cwnd = 4 * MSS;
        assert_eq!(s.pacing_gap(), Some(SimTime::from_micros(25)));
    }

    #[test]
    fn paced_sender_spreads_releases() {
        let mut s = Sender::new(
            SenderConfig {
                pacing: true,
                ..SenderConfig::default()
            },
            1000 * 1024,
        );
        s.on_start(SimTime::ZERO);
        let out = s.on_ack(
            AckInfo {
                ack: MSS,
                ece: false,
                round: 1,
                echo_time: SimTime::ZERO,
                echo_retransmit: false,
            },
            SimTime::from_micros(100),
        );
        assert_eq!(out.segments.len(), 1);
        assert_eq!(out.wake_at, Some(SimTime::from_micros(125)));
        let out = s.on_wake(SimTime::from_micros(125));
        assert_eq!(out.segments.len(), 1);
    }

    #[test]
    fn window_never_exceeds_cap() {
        let mut s = Sender::new(
            SenderConfig {
                max_cwnd: 5 * MSS,
                ..SenderConfig::default()
            },
            100 * 1024 * 1024,
        );
        s.on_start(SimTime::ZERO);
        let mut acked = 0;
        for _ in 0..100 {
            acked += MSS;
            s.on_ack(ack(acked, 1), SimTime::from_micros(60));
            assert!(s.cwnd() <= 5 * MSS);
            assert!(s.in_flight() <= 5 * MSS);
        }
    }
}
