use crate::units::{ByteCount, SimTime};

use super::topology::NodeId;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct FlowId(pub u32);

impl std::fmt::Display for FlowId {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}", self.0)
    }
}

pub const DATA_PACKET_BYTES: ByteCount = 1500;
pub const ACK_PACKET_BYTES: ByteCount = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PacketKind {
    /// Carries application bytes `[seq, seq + len)`.
    Data { seq: u64, len: u32 },
    /// Cumulative acknowledgement of everything below `ack`.
    Ack { ack: u64 },
}

/// Queue-length stamp written by a monitored port before enqueue.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TelemetryStamp {
    pub time: SimTime,
    pub queue_bytes: ByteCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Packet {
    pub flow: FlowId,
    pub kind: PacketKind,
    pub size: u32,
    pub src: NodeId,
    pub dst: NodeId,
    pub ecn_capable: bool,
    /// Congestion Experienced, set by a switch.
    pub ecn_marked: bool,
    /// ECN echo on ACKs.
    pub ece: bool,
    /// Congestion window reduced, on data.
    pub cwr: bool,
    /// Transmission time at the sender (data) or the echoed value (ACK).
    pub timestamp: SimTime,
    pub retransmit: bool,
    /// Window round the data belongs to; echoed on ACKs.
    pub round: u32,
    pub telemetry: Option<TelemetryStamp>,
}

impl Packet {
    pub fn is_data(&self) -> bool {
        matches!(self.kind, PacketKind::Data { .. })
    }

    pub fn size_bytes(&self) -> ByteCount {
        self.size as ByteCount
    }

    /// Sets CE; a no-op for packets that are not ECN-capable.
    pub fn mark_ce(&mut self) -> bool {
        if self.ecn_capable {
            self.ecn_marked = true;
        }
        self.ecn_marked
    }
}
