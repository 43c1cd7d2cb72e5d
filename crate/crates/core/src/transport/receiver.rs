//! Cumulative-ACK receiver with NewReno-style sticky or DCTCP-style exact
//! CE echo.

use std::collections::BTreeMap;

use crate::units::{ByteCount, SimTime};

use super::sender::AckInfo;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EchoMode {
    /// Keep echoing ECE until a segment with CWR arrives.
    Sticky,
    /// ECE on an ACK iff the segment that triggered it was CE-marked.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DataArrival {
    pub seq: u64,
    pub len: u32,
    pub ce: bool,
    pub cwr: bool,
    pub round: u32,
    pub sent_at: SimTime,
    pub retransmit: bool,
}

#[derive(Debug, Clone)]
pub struct Receiver {
    rcv_nxt: u64,
    // start -> end of buffered out-of-order ranges
    ooo: BTreeMap<u64, u64>,
    echo: EchoMode,
    ece_latched: bool,
    delayed_ack: bool,
    held: Option<AckInfo>,
    bytes_total: ByteCount,
    completed_at: Option<SimTime>,
    pub bytes_received: ByteCount,
}

impl Receiver {
    pub fn new(bytes_total: ByteCount, echo: EchoMode, delayed_ack: bool) -> Self {
        Receiver {
            rcv_nxt: 0,
            ooo: BTreeMap::new(),
            echo,
            ece_latched: false,
            delayed_ack,
            held: None,
            bytes_total,
            completed_at: None,
            bytes_received: 0,
        }
    }

    pub fn ack_point(&self) -> u64 {
        self.rcv_nxt
    }

    pub fn completed_at(&self) -> Option<SimTime> {
        self.completed_at
    }

    /// Returns the ACK to send now, if any. With delayed ACK enabled an ACK
    /// may be held; the caller arms a timer and later calls [`flush`].
    ///
    /// [`flush`]: Receiver::flush
    pub fn on_data(&mut self, d: DataArrival, now: SimTime) -> Option<AckInfo> {
        let in_order = d.seq == self.rcv_nxt;
        let end = d.seq + d.len as u64;
        if end > self.rcv_nxt {
            if d.seq <= self.rcv_nxt {
                self.bytes_received += end - self.rcv_nxt;
                self.rcv_nxt = end;
            } else {
                let e = self.ooo.entry(d.seq).or_insert(end);
                *e = (*e).max(end);
            }
            while let Some((&s, &e)) = self.ooo.first_key_value() {
                if s > self.rcv_nxt {
                    break;
                }
                self.ooo.pop_first();
                if e > self.rcv_nxt {
                    self.bytes_received += e - self.rcv_nxt;
                    self.rcv_nxt = e;
                }
            }
        }
        if self.completed_at.is_none() && self.rcv_nxt >= self.bytes_total {
            self.completed_at = Some(now);
        }

        let ece = match self.echo {
            EchoMode::Exact => d.ce,
            EchoMode::Sticky => {
                if d.cwr {
                    self.ece_latched = false;
                }
                if d.ce {
                    self.ece_latched = true;
                }
                self.ece_latched
            }
        };
        let ack = AckInfo {
            ack: self.rcv_nxt,
            ece,
            round: d.round,
            echo_time: d.sent_at,
            echo_retransmit: d.retransmit,
        };
        if !self.delayed_ack {
            return Some(ack);
        }
        // Delayed ACK: every second in-order segment, immediately on
        // reordering, on a CE change, or when the flow is complete.
        let immediate = !in_order
            || !self.ooo.is_empty()
            || self.completed_at.is_some()
            || self.held.is_some_and(|h| h.ece != ece);
        if immediate || self.held.is_some() {
            self.held = None;
            Some(ack)
        } else {
            self.held = Some(ack);
            None
        }
    }

    pub fn has_held_ack(&self) -> bool {
        self.held.is_some()
    }

    pub fn flush(&mut self) -> Option<AckInfo> {
        self.held.take()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn seg(seq: u64, ce: bool) -> DataArrival {
        DataArrival {
            seq,
            len: 1500,
            ce,
            cwr: false,
            round: 1,
            sent_at: SimTime::ZERO,
            retransmit: false,
        }
    }

    #[test]
    fn in_order_advances() {
        let mut r = Receiver::new(3000, EchoMode::Exact, false);
        let a = r.on_data(seg(0, false), SimTime(1)).unwrap();
        assert_eq!(a.ack, 1500);
        assert!(r.completed_at().is_none());
        r.on_data(seg(1500, false), SimTime(2));
        assert_eq!(r.completed_at(), Some(SimTime(2)));
    }

    #[test]
    fn out_of_order_is_duplicate_then_fills() {
        let mut r = Receiver::new(10_000, EchoMode::Exact, false);
        r.on_data(seg(0, false), SimTime(1));
        let a = r.on_data(seg(3000, false), SimTime(2)).unwrap();
        assert_eq!(a.ack, 1500);
        let a = r.on_data(seg(1500, false), SimTime(3)).unwrap();
        assert_eq!(a.ack, 4500);
        assert_eq!(r.bytes_received, 4500);
    }

    #[test]
    fn exact_echo_follows_each_segment() {
        let mut r = Receiver::new(10_000, EchoMode::Exact, false);
        assert!(r.on_data(seg(0, true), SimTime(1)).unwrap().ece);
        assert!(!r.on_data(seg(1500, false), SimTime(2)).unwrap().ece);
    }

    #[test]
    fn sticky_echo_until_cwr() {
        let mut r = Receiver::new(10_000, EchoMode::Sticky, false);
        assert!(r.on_data(seg(0, true), SimTime(1)).unwrap().ece);
        assert!(r.on_data(seg(1500, false), SimTime(2)).unwrap().ece);
        let mut s = seg(3000, false);
        s.cwr = true;
        assert!(!r.on_data(s, SimTime(3)).unwrap().ece);
    }

    #[test]
    fn delayed_ack_every_second_segment() {
        let mut r = Receiver::new(10_000, EchoMode::Exact, true);
        assert!(r.on_data(seg(0, false), SimTime(1)).is_none());
        assert!(r.has_held_ack());
        assert_eq!(r.on_data(seg(1500, false), SimTime(2)).unwrap().ack, 3000);
        assert!(r.on_data(seg(3000, false), SimTime(3)).is_none());
        assert_eq!(r.flush().unwrap().ack, 4500);
    }
}
