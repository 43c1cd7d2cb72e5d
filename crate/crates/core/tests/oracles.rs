//! Simulator outputs against hand-derived values.

use mbsim::config::{Protocol, RunConfig};
use mbsim::net::packet::{FlowId, ACK_PACKET_BYTES, DATA_PACKET_BYTES};
use mbsim::net::topology::{HostId, Topology};
use mbsim::run::run;
use mbsim::scenarios::{
    split_evenly, FlowGroup, FlowSchedule, FlowSpec, IncastMode, IncastParams, Scenario,
};
use mbsim::sim::{NetworkConfig, Simulation, TransportConfig};
use mbsim::units::{ByteCount, SimTime, KB};

const NS_PER_BYTE: u64 = 8; // 1 Gbps
const PROP: u64 = 100;
const PROC: u64 = 1000;

fn lone_flow(bytes: ByteCount) -> Simulation {
    let schedule = FlowSchedule {
        flows: vec![FlowSpec {
            id: FlowId(0),
            src: HostId(1),
            dst: HostId(10),
            bytes,
            start: SimTime::ZERO,
            group: FlowGroup::FanIn,
            pacing: false,
            max_cwnd: None,
            telemetry: true,
        }],
        queries: Vec::new(),
    };
    Simulation::with_seed(
        Topology::testbed(),
        &NetworkConfig::default(),
        &TransportConfig::default(),
        schedule,
        7,
    )
    .unwrap()
}

/// Host 1 to host 10 crosses tor1, root and tor4: four links, three switches.
fn rtt() -> u64 {
    4 * (DATA_PACKET_BYTES + ACK_PACKET_BYTES) * NS_PER_BYTE + 8 * PROP + 6 * PROC
}

#[test]
fn unloaded_rtt_is_sum_of_hop_delays() {
    let mut sim = lone_flow(DATA_PACKET_BYTES);
    // past completion, so the ACK reaches the sender
    sim.run_until(SimTime::from_millis(10));
    let srtt = sim.sender(FlowId(0)).unwrap().srtt().unwrap();
    assert_eq!(srtt.as_nanos(), rtt());
    assert_eq!(rtt(), 56_848);
}

#[test]
fn lone_flow_fct_matches_slow_start_derivation() {
    // The initial window (3 packets) leaves the NIC idle from 36 us until
    // the first ACK at one RTT. From then on each ACK releases two packets
    // and the NIC never idles again. The short last packet queues behind
    // the final full one on every later hop, so the tail is three full
    // packet times.
    let bytes = 1000 * KB;
    let mut sim = lone_flow(bytes);
    sim.run_until_done(SimTime::from_secs(1));
    let idle = rtt() - 3 * DATA_PACKET_BYTES * NS_PER_BYTE;
    let expect =
        bytes * NS_PER_BYTE + idle + 3 * DATA_PACKET_BYTES * NS_PER_BYTE + 4 * PROP + 3 * PROC;
    let r = &sim.flow_records()[0];
    assert_eq!(r.fct().unwrap().as_nanos(), expect);
    assert_eq!(r.retransmits, 0);
    assert!(sim.conserves_bytes());
}

#[test]
fn single_packet_flow_takes_half_an_rtt_of_data_hops() {
    let mut sim = lone_flow(DATA_PACKET_BYTES);
    sim.run_until_done(SimTime::from_millis(10));
    let expect = 4 * DATA_PACKET_BYTES * NS_PER_BYTE + 4 * PROP + 3 * PROC;
    assert_eq!(sim.flow_records()[0].fct().unwrap().as_nanos(), expect);
}

#[test]
fn fixed_total_incast_delivers_the_total() {
    let cfg = RunConfig::new(
        3,
        Protocol::SlEcn,
        Scenario::Incast(IncastParams {
            senders: 7,
            mode: IncastMode::FixedTotal,
            response_kb: Some(1024),
            ..IncastParams::default()
        }),
    );
    let r = run(&cfg).unwrap();
    let sizes: Vec<_> = r.flows.iter().map(|f| f.bytes).collect();
    assert_eq!(sizes, split_evenly(1024 * KB, 7));
    assert_eq!(
        r.flows.iter().map(|f| f.bytes_received).sum::<u64>(),
        1024 * KB
    );
    assert_eq!(r.metrics.qct.len(), 1);
    let last = r.flows.iter().filter_map(|f| f.end).max().unwrap();
    assert_eq!(r.metrics.qct[0], (last - r.queries[0].issue).as_secs_f64());
}

#[test]
fn first_round_rate_of_sync_burst_exceeds_port_rate() {
    // 18 first-round windows of 3 packets land within a few hundred us
    let r = run(&RunConfig::new(
        1,
        Protocol::Tcp,
        Scenario::SyncFanIn(Default::default()),
    ))
    .unwrap();
    let p = r.phases.unwrap();
    assert_eq!(
        r.queue.fanin_arrivals.iter().filter(|a| a.1 == 1).count(),
        18 * 3
    );
    assert_eq!(p.phase1.height % DATA_PACKET_BYTES, 0);
    assert!(r.queue.first_round_rate().unwrap() > 2e9);
    assert!(p.phase1.end < p.phase2.unwrap().end);
}
