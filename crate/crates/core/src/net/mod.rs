//! Network model: topology, packets, output-queued ports and telemetry.

pub mod packet;
pub mod port;
pub mod telemetry;
pub mod topology;

pub use packet::{FlowId, Packet, PacketKind, TelemetryStamp, ACK_PACKET_BYTES, DATA_PACKET_BYTES};
pub use port::{EnqueueOutcome, PortId, PortState, PortStats};
pub use telemetry::{stamp_telemetry, TelemetryLog, TelemetryMode, TelemetryRecord, TraceEvent};
pub use topology::{HostId, Link, Node, NodeId, NodeKind, Topology, TopologyError};
