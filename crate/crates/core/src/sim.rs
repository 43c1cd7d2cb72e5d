//! One simulation run: topology, ports, endpoints and the event loop.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::engine::{EventHandle, EventQueue};
use crate::marking::{MarkingPolicy, PolicyKind, SecnOptions};
use crate::net::packet::{FlowId, Packet, PacketKind, ACK_PACKET_BYTES};
use crate::net::port::{EnqueueOutcome, PortId, PortState, PortStats};
use crate::net::telemetry::{
    stamp_telemetry, TelemetryLog, TelemetryMode, TelemetryRecord, TraceEvent,
};
use crate::net::topology::{HostId, NodeId, NodeKind, Topology, TopologyError};
use crate::scenarios::{FlowGroup, FlowSchedule, FlowSpec, QuerySpec};
use crate::transport::{
    AckInfo, Algorithm, DataArrival, EchoMode, Receiver, Segment, SendOutput, Sender, SenderConfig,
    TimerAction, MSS,
};
use crate::units::{ByteCount, SimTime, KB};

#[derive(Debug, Clone)]
pub struct NetworkConfig {
    pub switch_buffer: ByteCount,
    /// Host NICs are the senders' own queues; effectively unbounded.
    pub host_buffer: ByteCount,
    /// (from, to, bytes) by node name.
    pub port_buffers: Vec<(String, String, ByteCount)>,
    pub policy: PolicyKind,
    pub ecn_threshold: ByteCount,
    pub secn: SecnOptions,
    pub processing_delay: SimTime,
    pub telemetry: TelemetryMode,
    /// Ports whose packets are traced, as (from, to) node names.
    pub monitored: Vec<(String, String)>,
}

impl Default for NetworkConfig {
    fn default() -> Self {
        NetworkConfig {
            switch_buffer: 512 * KB,
            host_buffer: 16 * 1024 * KB,
            port_buffers: Vec::new(),
            policy: PolicyKind::TailDrop,
            ecn_threshold: 32 * KB,
            secn: SecnOptions::default(),
            processing_delay: SimTime::from_micros(1),
            telemetry: TelemetryMode::Exact,
            monitored: vec![("root".into(), "tor4".into())],
        }
    }
}

#[derive(Debug, Clone)]
pub struct TransportConfig {
    pub sender: SenderConfig,
    pub delayed_ack: bool,
    pub delayed_ack_timeout: SimTime,
}

impl Default for TransportConfig {
    fn default() -> Self {
        TransportConfig {
            sender: SenderConfig::default(),
            delayed_ack: false,
            delayed_ack_timeout: SimTime::from_micros(500),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TimerKind {
    Rto,
    Pace,
    DelayedAck,
}

#[derive(Debug, Clone)]
pub enum Event {
    PacketArrival { node: NodeId, pkt: Box<Packet> },
    TransmitComplete(PortId),
    TimerExpiry { flow: usize, kind: TimerKind },
    AppStart(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AnnotationKind {
    CwndCut,
    Timeout,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Annotation {
    pub time: SimTime,
    pub flow: FlowId,
    pub kind: AnnotationKind,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct RunSummary {
    pub events_dispatched: u64,
    pub packets_sent: u64,
    pub packets_dropped: u64,
    pub packets_marked: u64,
    pub end_time: SimTime,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FlowRecord {
    pub id: FlowId,
    pub src: HostId,
    pub dst: HostId,
    pub bytes: ByteCount,
    pub group: FlowGroup,
    pub start: SimTime,
    /// Time the last byte reached the receiver.
    pub end: Option<SimTime>,
    pub bytes_received: ByteCount,
    pub retransmits: u64,
    pub timeouts: u64,
}

impl FlowRecord {
    pub fn fct(&self) -> Option<SimTime> {
        self.end.map(|e| e - self.start)
    }
}

struct FlowRuntime {
    spec: FlowSpec,
    src: NodeId,
    dst: NodeId,
    sender: Sender,
    receiver: Receiver,
    rto: Option<EventHandle>,
    pace: Option<EventHandle>,
    delack: Option<EventHandle>,
}

pub struct Simulation {
    topo: Topology,
    queue: EventQueue<Event>,
    ports: Vec<PortState>,
    port_names: Vec<String>,
    // port_of[node][adjacency index]
    port_of: Vec<Vec<PortId>>,
    monitored: Vec<bool>,
    telemetry: TelemetryMode,
    processing_delay: SimTime,
    flows: Vec<FlowRuntime>,
    queries: Vec<QuerySpec>,
    rng: ChaCha8Rng,
    trace: TelemetryLog,
    annotations: Vec<Annotation>,
    packets_sent: u64,
    unfinished: usize,
    delayed_ack_timeout: SimTime,
}

#[derive(Debug, thiserror::Error)]
pub enum SimError {
    #[error(transparent)]
    Topology(#[from] TopologyError),
    #[error("no port from `{0}` to `{1}`")]
    UnknownPort(String, String),
    #[error("flow ids must be 0..n without gaps")]
    FlowIds,
}

impl Simulation {
    /// Builds a run. `rng` continues the generator used to build the
    /// schedule so one seed drives the whole run.
    pub fn new(
        topo: Topology,
        net: &NetworkConfig,
        transport: &TransportConfig,
        schedule: FlowSchedule,
        rng: ChaCha8Rng,
    ) -> Result<Self, SimError> {
        let mut ports = Vec::new();
        let mut port_names = Vec::new();
        let mut port_of: Vec<Vec<PortId>> = topo.nodes().iter().map(|_| Vec::new()).collect();
        for (node_idx, adj) in (0..topo.nodes().len()).map(|i| (i, topo.neighbors(NodeId(i)))) {
            for &(peer, link_idx) in adj {
                let link = topo.links()[link_idx];
                let node = NodeId(node_idx);
                let from = &topo.node(node).name;
                let to = &topo.node(peer).name;
                let is_host = matches!(topo.node(node).kind, NodeKind::Host(_));
                let buffer = net
                    .port_buffers
                    .iter()
                    .find(|(a, b, _)| a == from && b == to)
                    .map(|p| p.2)
                    .unwrap_or(if is_host {
                        net.host_buffer
                    } else {
                        net.switch_buffer
                    });
                let policy = if is_host {
                    MarkingPolicy::TailDrop
                } else {
                    MarkingPolicy::build(net.policy, net.ecn_threshold, link.rate, net.secn)
                };
                let id = PortId(ports.len());
                ports.push(PortState::new(
                    id,
                    node,
                    peer,
                    link.rate,
                    link.propagation,
                    buffer,
                    policy,
                ));
                port_names.push(format!("{from}->{to}"));
                port_of[node_idx].push(id);
            }
        }
        for (a, b, _) in &net.port_buffers {
            if !port_names.contains(&format!("{a}->{b}")) {
                return Err(SimError::UnknownPort(a.clone(), b.clone()));
            }
        }
        let mut monitored = vec![false; ports.len()];
        for (a, b) in &net.monitored {
            let name = format!("{a}->{b}");
            let i = port_names
                .iter()
                .position(|n| *n == name)
                .ok_or_else(|| SimError::UnknownPort(a.clone(), b.clone()))?;
            monitored[i] = true;
        }

        let echo = match transport.sender.algorithm {
            Algorithm::NewReno => EchoMode::Sticky,
            Algorithm::Dctcp => EchoMode::Exact,
        };
        let mut flows = Vec::with_capacity(schedule.flows.len());
        let mut queue = EventQueue::new();
        let mut specs = schedule.flows;
        specs.sort_by_key(|f| f.id);
        if specs.iter().enumerate().any(|(i, f)| f.id.0 as usize != i) {
            return Err(SimError::FlowIds);
        }
        // Starts are scheduled in time order so equal-time ties follow the
        // schedule's own order.
        let mut order: Vec<usize> = (0..specs.len()).collect();
        order.sort_by_key(|&i| (specs[i].start, i));
        for &i in &order {
            queue
                .schedule(specs[i].start, Event::AppStart(i))
                .expect("schedule starts at or after zero");
        }
        for spec in specs {
            let src = topo.host_node(spec.src)?;
            let dst = topo.host_node(spec.dst)?;
            let mut cfg = transport.sender.clone();
            cfg.pacing |= spec.pacing;
            if let Some(w) = spec.max_cwnd {
                cfg.max_cwnd = w.max(MSS);
            }
            flows.push(FlowRuntime {
                sender: Sender::new(cfg, spec.bytes),
                receiver: Receiver::new(spec.bytes, echo, transport.delayed_ack),
                spec,
                src,
                dst,
                rto: None,
                pace: None,
                delack: None,
            });
        }
        let unfinished = flows
            .iter()
            .filter(|f| f.spec.group != FlowGroup::Background)
            .count();
        Ok(Simulation {
            topo,
            queue,
            ports,
            port_names,
            port_of,
            monitored,
            telemetry: net.telemetry,
            processing_delay: net.processing_delay,
            flows,
            queries: schedule.queries,
            rng,
            trace: TelemetryLog::default(),
            annotations: Vec::new(),
            packets_sent: 0,
            unfinished,
            delayed_ack_timeout: transport.delayed_ack_timeout,
        })
    }

    /// Convenience constructor seeding a fresh generator.
    pub fn with_seed(
        topo: Topology,
        net: &NetworkConfig,
        transport: &TransportConfig,
        schedule: FlowSchedule,
        seed: u64,
    ) -> Result<Self, SimError> {
        Self::new(
            topo,
            net,
            transport,
            schedule,
            ChaCha8Rng::seed_from_u64(seed),
        )
    }

    pub fn now(&self) -> SimTime {
        self.queue.now()
    }

    pub fn topology(&self) -> &Topology {
        &self.topo
    }

    pub fn port_id(&self, from: &str, to: &str) -> Option<PortId> {
        let name = format!("{from}->{to}");
        self.port_names.iter().position(|n| *n == name).map(PortId)
    }

    pub fn port_name(&self, id: PortId) -> &str {
        &self.port_names[id.0]
    }

    pub fn port(&self, id: PortId) -> &PortState {
        &self.ports[id.0]
    }

    pub fn ports(&self) -> &[PortState] {
        &self.ports
    }

    pub fn trace(&self) -> &TelemetryLog {
        &self.trace
    }

    pub fn annotations(&self) -> &[Annotation] {
        &self.annotations
    }

    pub fn queries(&self) -> &[QuerySpec] {
        &self.queries
    }

    pub fn monitored_ports(&self) -> Vec<PortId> {
        (0..self.ports.len())
            .filter(|&i| self.monitored[i])
            .map(PortId)
            .collect()
    }

    /// Non-background flows still incomplete.
    pub fn unfinished(&self) -> usize {
        self.unfinished
    }

    pub fn bytes_delivered(&self) -> ByteCount {
        self.flows.iter().map(|f| f.receiver.bytes_received).sum()
    }

    pub fn bytes_delivered_to(&self, host: HostId) -> ByteCount {
        self.flows
            .iter()
            .filter(|f| f.spec.dst == host)
            .map(|f| f.receiver.bytes_received)
            .sum()
    }

    pub fn sender(&self, flow: FlowId) -> Option<&Sender> {
        self.flows
            .iter()
            .find(|f| f.spec.id == flow)
            .map(|f| &f.sender)
    }

    pub fn flow_records(&self) -> Vec<FlowRecord> {
        let mut v: Vec<FlowRecord> = self
            .flows
            .iter()
            .map(|f| FlowRecord {
                id: f.spec.id,
                src: f.spec.src,
                dst: f.spec.dst,
                bytes: f.spec.bytes,
                group: f.spec.group,
                start: f.spec.start,
                end: f.receiver.completed_at(),
                bytes_received: f.receiver.bytes_received,
                retransmits: f.sender.retransmits,
                timeouts: f.sender.timeouts,
            })
            .collect();
        v.sort_by_key(|r| r.id);
        v
    }

    pub fn summary(&self) -> RunSummary {
        RunSummary {
            events_dispatched: self.queue.dispatched(),
            packets_sent: self.packets_sent,
            packets_dropped: self.ports.iter().map(|p| p.stats().packets_dropped).sum(),
            packets_marked: self.ports.iter().map(|p| p.stats().packets_marked).sum(),
            end_time: self.queue.now(),
        }
    }

    pub fn port_stats(&self) -> Vec<(String, PortStats)> {
        self.port_names
            .iter()
            .cloned()
            .zip(self.ports.iter().map(|p| *p.stats()))
            .collect()
    }

    pub fn conserves_bytes(&self) -> bool {
        self.ports.iter().all(PortState::conserves_bytes)
    }

    /// Dispatches every event with fire time ≤ `t_end`.
    pub fn run_until(&mut self, t_end: SimTime) -> RunSummary {
        while let Some((now, ev)) = self.queue.pop_until(t_end) {
            self.dispatch(now, ev);
        }
        self.queue.advance_to(t_end.max(self.queue.now()));
        self.summary()
    }

    /// Like [`run_until`](Self::run_until) but returns as soon as every
    /// non-background flow has completed.
    pub fn run_until_done(&mut self, t_end: SimTime) -> RunSummary {
        while self.unfinished > 0 {
            let Some((now, ev)) = self.queue.pop_until(t_end) else {
                break;
            };
            self.dispatch(now, ev);
        }
        self.summary()
    }

    fn dispatch(&mut self, now: SimTime, ev: Event) {
        match ev {
            Event::AppStart(i) => {
                let out = self.flows[i].sender.on_start(now);
                self.apply(i, out, now);
            }
            Event::TransmitComplete(port) => self.on_transmit_complete(port, now),
            Event::PacketArrival { node, pkt } => self.on_arrival(node, *pkt, now),
            Event::TimerExpiry { flow, kind } => self.on_timer(flow, kind, now),
        }
    }

    fn on_timer(&mut self, i: usize, kind: TimerKind, now: SimTime) {
        match kind {
            TimerKind::Rto => {
                self.flows[i].rto = None;
                let before = self.flows[i].sender.timeouts;
                let out = self.flows[i].sender.on_timeout(now);
                if self.flows[i].sender.timeouts > before {
                    self.annotations.push(Annotation {
                        time: now,
                        flow: self.flows[i].spec.id,
                        kind: AnnotationKind::Timeout,
                    });
                }
                self.apply(i, out, now);
            }
            TimerKind::Pace => {
                self.flows[i].pace = None;
                let out = self.flows[i].sender.on_wake(now);
                self.apply(i, out, now);
            }
            TimerKind::DelayedAck => {
                self.flows[i].delack = None;
                if let Some(a) = self.flows[i].receiver.flush() {
                    self.send_ack(i, a, now);
                }
            }
        }
    }

    fn apply(&mut self, i: usize, out: SendOutput, now: SimTime) {
        if out.cwnd_cut {
            self.annotations.push(Annotation {
                time: now,
                flow: self.flows[i].spec.id,
                kind: AnnotationKind::CwndCut,
            });
        }
        for seg in &out.segments {
            self.send_segment(i, *seg, now);
        }
        let f = &mut self.flows[i];
        match out.timer {
            TimerAction::Keep => {}
            TimerAction::Ensure => {
                if f.rto.is_none() {
                    f.rto = Some(self.queue.schedule_in(
                        f.sender.rto(),
                        Event::TimerExpiry {
                            flow: i,
                            kind: TimerKind::Rto,
                        },
                    ));
                }
            }
            TimerAction::Restart => {
                if let Some(h) = f.rto.take() {
                    self.queue.cancel(h);
                }
                f.rto = Some(self.queue.schedule_in(
                    f.sender.rto(),
                    Event::TimerExpiry {
                        flow: i,
                        kind: TimerKind::Rto,
                    },
                ));
            }
            TimerAction::Stop => {
                if let Some(h) = f.rto.take() {
                    self.queue.cancel(h);
                }
            }
        }
        if let Some(t) = out.wake_at {
            if f.pace.is_none() {
                let at = t.max(now);
                f.pace = Some(
                    self.queue
                        .schedule(
                            at,
                            Event::TimerExpiry {
                                flow: i,
                                kind: TimerKind::Pace,
                            },
                        )
                        .expect("pace time is not in the past"),
                );
            }
        }
    }

    fn send_segment(&mut self, i: usize, seg: Segment, now: SimTime) {
        let f = &self.flows[i];
        let pkt = Packet {
            flow: f.spec.id,
            kind: PacketKind::Data {
                seq: seg.seq,
                len: seg.len,
            },
            size: seg.len,
            src: f.src,
            dst: f.dst,
            ecn_capable: f.sender.config().ecn,
            ecn_marked: false,
            ece: false,
            cwr: seg.cwr,
            timestamp: now,
            retransmit: seg.retransmit,
            round: seg.round,
            telemetry: None,
        };
        self.packets_sent += 1;
        let port = self.port_of[f.src.0][0];
        self.enqueue(port, pkt, now);
    }

    fn send_ack(&mut self, i: usize, a: AckInfo, now: SimTime) {
        let f = &self.flows[i];
        let pkt = Packet {
            flow: f.spec.id,
            kind: PacketKind::Ack { ack: a.ack },
            size: ACK_PACKET_BYTES as u32,
            src: f.dst,
            dst: f.src,
            ecn_capable: false,
            ecn_marked: false,
            ece: a.ece,
            cwr: false,
            timestamp: a.echo_time,
            retransmit: a.echo_retransmit,
            round: a.round,
            telemetry: None,
        };
        let port = self.port_of[f.dst.0][0];
        self.enqueue(port, pkt, now);
    }

    fn enqueue(&mut self, port: PortId, mut pkt: Packet, now: SimTime) {
        let p = &mut self.ports[port.0];
        let monitored = self.monitored[port.0];
        let eligible = monitored && self.flows[pkt.flow.0 as usize].spec.telemetry;
        if monitored {
            stamp_telemetry(p.queue_bytes(), &mut pkt, now, self.telemetry, eligible);
        }
        let stamp = pkt.telemetry;
        let (flow, is_data, round, retransmit) =
            (pkt.flow, pkt.is_data(), pkt.round, pkt.retransmit);
        let (outcome, start) = p.enqueue(pkt, now, &mut self.rng);
        if let Some(s) = stamp {
            let event = match outcome {
                EnqueueOutcome::Accepted => TraceEvent::Enqueue,
                EnqueueOutcome::AcceptedMarked => TraceEvent::Mark,
                EnqueueOutcome::Dropped => TraceEvent::Drop,
            };
            self.trace.push(TelemetryRecord {
                time: s.time,
                port,
                queue_bytes: s.queue_bytes,
                flow,
                event,
                is_data,
                round,
                retransmit,
            });
        }
        if let Some(ser) = start {
            self.queue.schedule_in(ser, Event::TransmitComplete(port));
        }
    }

    fn on_transmit_complete(&mut self, port: PortId, now: SimTime) {
        let p = &mut self.ports[port.0];
        let (pkt, next) = p.on_transmit_complete();
        let (peer, prop) = (p.peer, p.propagation);
        if let Some(ser) = next {
            self.queue.schedule_in(ser, Event::TransmitComplete(port));
        }
        if self.monitored[port.0] && pkt.telemetry.is_some() {
            let s = self.telemetry.stamp(now, self.ports[port.0].queue_bytes());
            self.trace.push(TelemetryRecord {
                time: s.time,
                port,
                queue_bytes: s.queue_bytes,
                flow: pkt.flow,
                event: TraceEvent::Dequeue,
                is_data: pkt.is_data(),
                round: pkt.round,
                retransmit: pkt.retransmit,
            });
        }
        let mut delay = prop;
        if !self.topo.is_host(peer) {
            delay += self.processing_delay;
        }
        let mut pkt = pkt;
        pkt.telemetry = None;
        self.queue.schedule_in(
            delay,
            Event::PacketArrival {
                node: peer,
                pkt: Box::new(pkt),
            },
        );
    }

    fn on_arrival(&mut self, node: NodeId, pkt: Packet, now: SimTime) {
        if !self.topo.is_host(node) {
            let hop = self
                .topo
                .next_hop(node, pkt.dst)
                .expect("routes cover every host");
            let port = self.port_of[node.0][hop];
            self.enqueue(port, pkt, now);
            return;
        }
        debug_assert_eq!(node, pkt.dst);
        let i = pkt.flow.0 as usize;
        match pkt.kind {
            PacketKind::Data { seq, len } => {
                let was_done = self.flows[i].receiver.completed_at().is_some();
                let ack = self.flows[i].receiver.on_data(
                    DataArrival {
                        seq,
                        len,
                        ce: pkt.ecn_marked,
                        cwr: pkt.cwr,
                        round: pkt.round,
                        sent_at: pkt.timestamp,
                        retransmit: pkt.retransmit,
                    },
                    now,
                );
                if !was_done
                    && self.flows[i].receiver.completed_at().is_some()
                    && self.flows[i].spec.group != FlowGroup::Background
                {
                    self.unfinished -= 1;
                }
                match ack {
                    Some(a) => {
                        if let Some(h) = self.flows[i].delack.take() {
                            self.queue.cancel(h);
                        }
                        self.send_ack(i, a, now);
                    }
                    None => {
                        if self.flows[i].delack.is_none() && self.flows[i].receiver.has_held_ack() {
                            let h = self.queue.schedule_in(
                                self.delayed_ack_timeout,
                                Event::TimerExpiry {
                                    flow: i,
                                    kind: TimerKind::DelayedAck,
                                },
                            );
                            self.flows[i].delack = Some(h);
                        }
                    }
                }
            }
            PacketKind::Ack { ack } => {
                let out = self.flows[i].sender.on_ack(
                    AckInfo {
                        ack,
                        ece: pkt.ece,
                        round: pkt.round,
                        echo_time: pkt.timestamp,
                        echo_retransmit: pkt.retransmit,
                    },
                    now,
                );
                self.apply(i, out, now);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scenarios::FlowSpec;

    fn one_flow(bytes: ByteCount, src: u32, dst: u32) -> FlowSchedule {
        FlowSchedule {
            flows: vec![FlowSpec {
                id: FlowId(0),
                src: HostId(src),
                dst: HostId(dst),
                bytes,
                start: SimTime::ZERO,
                group: FlowGroup::FanIn,
                pacing: false,
                max_cwnd: None,
                telemetry: true,
            }],
            queries: Vec::new(),
        }
    }

    #[test]
    fn empty_run_has_zero_counts() {
        let mut sim = Simulation::with_seed(
            Topology::testbed(),
            &NetworkConfig::default(),
            &TransportConfig::default(),
            FlowSchedule::default(),
            1,
        )
        .unwrap();
        let s = sim.run_until(SimTime::from_millis(1));
        assert_eq!(
            s,
            RunSummary {
                end_time: SimTime::from_millis(1),
                ..RunSummary::default()
            }
        );
    }

    #[test]
    fn unloaded_inter_rack_rtt() {
        let mut sim = Simulation::with_seed(
            Topology::testbed(),
            &NetworkConfig::default(),
            &TransportConfig::default(),
            one_flow(1500, 1, 10),
            1,
        )
        .unwrap();
        sim.run_until(SimTime::from_millis(5));
        let srtt = sim.sender(FlowId(0)).unwrap().srtt().unwrap();
        // 4 store-and-forward hops of 12 µs, 4 ACK hops, 3 switch delays
        let expect = 4 * 12_000 + 4 * 512 + 8 * 100 + 6 * 1000;
        assert_eq!(srtt.as_nanos(), expect);
        assert!((45.0..=60.0).contains(&srtt.as_micros_f64()));
        assert!(sim.conserves_bytes());
    }

    #[test]
    fn lone_flow_completes_near_line_rate() {
        let mut sim = Simulation::with_seed(
            Topology::testbed(),
            &NetworkConfig::default(),
            &TransportConfig::default(),
            one_flow(1000 * KB, 1, 10),
            1,
        )
        .unwrap();
        sim.run_until_done(SimTime::from_secs(1));
        let r = &sim.flow_records()[0];
        let fct = r.fct().unwrap().as_secs_f64();
        let wire = 1000.0 * 1024.0 * 8.0 / 1e9;
        assert!(fct > wire && fct < wire + 0.002, "fct {fct}");
        assert_eq!(r.timeouts, 0);
    }

    #[test]
    fn unknown_port_rejected() {
        let net = NetworkConfig {
            port_buffers: vec![("tor9".into(), "root".into(), 1)],
            ..NetworkConfig::default()
        };
        let err = Simulation::with_seed(
            Topology::testbed(),
            &net,
            &TransportConfig::default(),
            FlowSchedule::default(),
            0,
        );
        assert!(matches!(err, Err(SimError::UnknownPort(..))));
    }
}
