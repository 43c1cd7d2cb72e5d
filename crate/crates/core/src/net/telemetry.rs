//! Per-packet queue-length telemetry at monitored ports.
//!
//! In fidelity mode, stamps mimic the hardware registers: time in 800 ns
//! ticks and queue length in 8-byte units, both rounded down.

use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::units::{ByteCount, SimTime};

use super::packet::{FlowId, Packet, TelemetryStamp};
use super::port::PortId;

pub const FIDELITY_TIME_GRANULARITY_NS: u64 = 800;
pub const FIDELITY_QUEUE_GRANULARITY: ByteCount = 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TelemetryMode {
    #[default]
    Exact,
    Fidelity,
}

impl TelemetryMode {
    pub fn stamp(self, now: SimTime, queue_bytes: ByteCount) -> TelemetryStamp {
        match self {
            TelemetryMode::Exact => TelemetryStamp {
                time: now,
                queue_bytes,
            },
            TelemetryMode::Fidelity => TelemetryStamp {
                time: now.quantize(FIDELITY_TIME_GRANULARITY_NS),
                queue_bytes: queue_bytes - queue_bytes % FIDELITY_QUEUE_GRANULARITY,
            },
        }
    }
}

/// Writes the arrival stamp into `pkt` if its flow is eligible.
pub fn stamp_telemetry(
    queue_bytes: ByteCount,
    pkt: &mut Packet,
    now: SimTime,
    mode: TelemetryMode,
    eligible: bool,
) {
    if eligible {
        pkt.telemetry = Some(mode.stamp(now, queue_bytes));
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TraceEvent {
    Enqueue,
    Dequeue,
    Drop,
    Mark,
}

impl TraceEvent {
    pub fn as_str(self) -> &'static str {
        match self {
            TraceEvent::Enqueue => "enqueue",
            TraceEvent::Dequeue => "dequeue",
            TraceEvent::Drop => "drop",
            TraceEvent::Mark => "mark",
        }
    }

    /// Arrival-side events carry the pre-admission queue length.
    pub fn is_arrival(self) -> bool {
        !matches!(self, TraceEvent::Dequeue)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TelemetryRecord {
    pub time: SimTime,
    pub port: PortId,
    pub queue_bytes: ByteCount,
    pub flow: FlowId,
    pub event: TraceEvent,
    // Ground truth, not part of the CSV.
    pub is_data: bool,
    pub round: u32,
    pub retransmit: bool,
}

#[derive(Debug, Clone, Default)]
pub struct TelemetryLog {
    records: Vec<TelemetryRecord>,
}

impl TelemetryLog {
    pub fn push(&mut self, r: TelemetryRecord) {
        self.records.push(r);
    }

    pub fn records(&self) -> &[TelemetryRecord] {
        &self.records
    }

    pub fn for_port(&self, port: PortId) -> impl Iterator<Item = &TelemetryRecord> {
        self.records.iter().filter(move |r| r.port == port)
    }

    pub const CSV_HEADER: &'static str = "time_ns,port_id,queue_bytes,flow_id,event";

    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            writeln!(
                w,
                "{},{},{},{},{}",
                r.time.as_nanos(),
                r.port.0,
                r.queue_bytes,
                r.flow.0,
                r.event.as_str()
            )?;
        }
        Ok(())
    }
}
