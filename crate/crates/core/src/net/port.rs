//! Output-queued port: FIFO, byte-limited buffer, line-rate drain.
//!
//! The packet being serialized stays at the head of the queue and counts
//! toward `queue_bytes` until its transmission completes.

use std::collections::VecDeque;

use rand::Rng;

use crate::marking::MarkingPolicy;
use crate::units::{BitRate, ByteCount, SimTime};

use super::packet::Packet;
use super::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct PortId(pub usize);

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum EnqueueOutcome {
    Accepted,
    AcceptedMarked,
    Dropped,
}

impl EnqueueOutcome {
    pub fn admitted(self) -> bool {
        self != EnqueueOutcome::Dropped
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct PortStats {
    pub bytes_in: ByteCount,
    pub bytes_out: ByteCount,
    pub bytes_dropped: ByteCount,
    pub packets_in: u64,
    pub packets_out: u64,
    pub packets_dropped: u64,
    pub packets_marked: u64,
    pub max_queue_bytes: ByteCount,
}

#[derive(Debug)]
pub struct PortState {
    pub id: PortId,
    pub node: NodeId,
    pub peer: NodeId,
    pub rate: BitRate,
    pub propagation: SimTime,
    pub buffer_limit: ByteCount,
    pub policy: MarkingPolicy,
    queue: VecDeque<Packet>,
    queue_bytes: ByteCount,
    busy: bool,
    stats: PortStats,
}

impl PortState {
    pub fn new(
        id: PortId,
        node: NodeId,
        peer: NodeId,
        rate: BitRate,
        propagation: SimTime,
        buffer_limit: ByteCount,
        policy: MarkingPolicy,
    ) -> Self {
        PortState {
            id,
            node,
            peer,
            rate,
            propagation,
            buffer_limit,
            policy,
            queue: VecDeque::new(),
            queue_bytes: 0,
            busy: false,
            stats: PortStats::default(),
        }
    }

    pub fn queue_bytes(&self) -> ByteCount {
        self.queue_bytes
    }

    pub fn queue_len(&self) -> usize {
        self.queue.len()
    }

    pub fn is_busy(&self) -> bool {
        self.busy
    }

    pub fn stats(&self) -> &PortStats {
        &self.stats
    }

    /// Admits or drops `pkt`. On admission, returns the serialization time
    /// of the new head if the port was idle and must start transmitting.
    pub fn enqueue<R: Rng + ?Sized>(
        &mut self,
        mut pkt: Packet,
        now: SimTime,
        rng: &mut R,
    ) -> (EnqueueOutcome, Option<SimTime>) {
        let size = pkt.size_bytes();
        self.stats.bytes_in += size;
        self.stats.packets_in += 1;
        if self.queue_bytes + size > self.buffer_limit {
            self.stats.bytes_dropped += size;
            self.stats.packets_dropped += 1;
            return (EnqueueOutcome::Dropped, None);
        }
        if !self.busy && self.queue.is_empty() {
            self.policy.on_idle_arrival();
        }
        let decision = self.policy.decide(self.queue_bytes, size, now, rng);
        let outcome = if decision.is_mark() && pkt.mark_ce() {
            self.stats.packets_marked += 1;
            EnqueueOutcome::AcceptedMarked
        } else {
            EnqueueOutcome::Accepted
        };
        self.queue_bytes += size;
        self.stats.max_queue_bytes = self.stats.max_queue_bytes.max(self.queue_bytes);
        self.queue.push_back(pkt);
        let start = if self.busy {
            None
        } else {
            self.busy = true;
            Some(self.rate.serialization_time(size))
        };
        (outcome, start)
    }

    /// Finishes serializing the head packet. Returns it together with the
    /// serialization time of the next head, if any; otherwise the port
    /// goes idle.
    pub fn on_transmit_complete(&mut self) -> (Packet, Option<SimTime>) {
        let pkt = self
            .queue
            .pop_front()
            .expect("transmit complete on an empty port");
        let size = pkt.size_bytes();
        self.queue_bytes -= size;
        self.stats.bytes_out += size;
        self.stats.packets_out += 1;
        let next = match self.queue.front() {
            Some(head) => Some(self.rate.serialization_time(head.size_bytes())),
            None => {
                self.busy = false;
                None
            }
        };
        (pkt, next)
    }

    /// bytes_in = bytes_out + queue_bytes + bytes_dropped
    pub fn conserves_bytes(&self) -> bool {
        self.stats.bytes_in == self.stats.bytes_out + self.queue_bytes + self.stats.bytes_dropped
            && self.queue.iter().map(Packet::size_bytes).sum::<ByteCount>() == self.queue_bytes
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::marking::{PolicyKind, SecnOptions};
    use crate::net::packet::{FlowId, PacketKind};
    use crate::units::KB;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn data(size: u32) -> Packet {
        Packet {
            flow: FlowId(1),
            kind: PacketKind::Data { seq: 0, len: size },
            size,
            src: NodeId(0),
            dst: NodeId(1),
            ecn_capable: true,
            ecn_marked: false,
            ece: false,
            cwr: false,
            timestamp: SimTime::ZERO,
            retransmit: false,
            round: 1,
            telemetry: None,
        }
    }

    fn port(limit: ByteCount, kind: PolicyKind) -> PortState {
        let rate = BitRate::from_gbps(1);
        PortState::new(
            PortId(0),
            NodeId(0),
            NodeId(1),
            rate,
            SimTime::ZERO,
            limit,
            MarkingPolicy::build(kind, 32 * KB, rate, SecnOptions::default()),
        )
    }

    fn fill(p: &mut PortState, bytes: ByteCount, rng: &mut ChaCha8Rng) {
        let mut left = bytes;
        while left > 0 {
            let s = left.min(1500) as u32;
            p.enqueue(data(s), SimTime::ZERO, rng);
            left -= s as ByteCount;
        }
    }

    #[test]
    fn overflow_drops() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = port(512 * KB, PolicyKind::TailDrop);
        fill(&mut p, 511 * KB, &mut rng);
        assert_eq!(p.queue_bytes(), 511 * KB);
        let (o, start) = p.enqueue(data(1500), SimTime::ZERO, &mut rng);
        assert_eq!(o, EnqueueOutcome::Dropped);
        assert!(start.is_none());
        assert_eq!(p.queue_bytes(), 511 * KB);
        assert_eq!(p.stats().packets_dropped, 1);
        assert!(p.conserves_bytes());
    }

    #[test]
    fn tail_drop_never_marks() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = port(512 * KB, PolicyKind::TailDrop);
        let (o, start) = p.enqueue(data(1500), SimTime::ZERO, &mut rng);
        assert_eq!(o, EnqueueOutcome::Accepted);
        assert_eq!(start, Some(SimTime::from_micros(12)));
        fill(&mut p, 400 * KB, &mut rng);
        let (o, _) = p.enqueue(data(1500), SimTime::ZERO, &mut rng);
        assert_eq!(o, EnqueueOutcome::Accepted);
    }

    #[test]
    fn threshold_marks_above_k() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = port(512 * KB, PolicyKind::ThresholdEcn);
        fill(&mut p, 40 * KB, &mut rng);
        let (o, _) = p.enqueue(data(1500), SimTime::ZERO, &mut rng);
        assert_eq!(o, EnqueueOutcome::AcceptedMarked);
        let mut ack = data(64);
        ack.ecn_capable = false;
        let (o, _) = p.enqueue(ack, SimTime::ZERO, &mut rng);
        assert_eq!(
            o,
            EnqueueOutcome::Accepted,
            "non-ECT packets are never marked"
        );
    }

    #[test]
    fn drains_fifo_and_goes_idle() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut p = port(512 * KB, PolicyKind::TailDrop);
        for i in 0..3 {
            let mut d = data(1500);
            d.round = i;
            p.enqueue(d, SimTime::ZERO, &mut rng);
        }
        for i in 0..3 {
            let (pkt, next) = p.on_transmit_complete();
            assert_eq!(pkt.round, i);
            if i < 2 {
                assert_eq!(next, Some(SimTime::from_micros(12)));
                assert!(p.is_busy());
            } else {
                assert!(next.is_none());
                assert!(!p.is_busy());
            }
        }
        assert_eq!(p.queue_bytes(), 0);
        assert!(p.conserves_bytes());
    }
}
