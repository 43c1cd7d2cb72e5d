//! Invariants over randomly drawn small runs.

use mbsim::config::{Protocol, RunConfig};
use mbsim::net::telemetry::TraceEvent;
use mbsim::output;
use mbsim::run::run;
use mbsim::scenarios::{AsyncParams, IncastMode, IncastParams, Scenario, SyncParams};
use proptest::prelude::*;

fn protocol() -> impl Strategy<Value = Protocol> {
    prop::sample::select(Protocol::ALL.to_vec())
}

fn scenario() -> impl Strategy<Value = Scenario> {
    prop_oneof![
        (1u32..24, 1u64..400).prop_map(|(flows, response_kb)| Scenario::SyncFanIn(SyncParams {
            flows,
            response_kb,
            ..SyncParams::default()
        })),
        (1u32..24, 1u64..400, 1u64..3000).prop_map(|(flows, response_kb, window_us)| {
            Scenario::AsyncFanIn(AsyncParams {
                flows,
                response_kb,
                window_us,
                ..AsyncParams::default()
            })
        }),
        (2u32..40, 8u64..128).prop_map(|(senders, kb)| Scenario::Incast(IncastParams {
            senders,
            mode: IncastMode::FixedResponse,
            response_kb: Some(kb),
            ..IncastParams::default()
        })),
    ]
}

fn config() -> impl Strategy<Value = RunConfig> {
    (
        any::<u64>(),
        protocol(),
        scenario(),
        16u64..600,
        any::<bool>(),
        any::<bool>(),
    )
        .prop_map(|(seed, p, s, buffer_kb, pacing, delayed_ack)| {
            let mut c = RunConfig::new(seed, p, s);
            c.network.buffer_kb = Some(buffer_kb);
            c.transport.pacing = pacing;
            c.transport.delayed_ack = delayed_ack;
            c
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn every_flow_completes_and_bytes_are_conserved(cfg in config()) {
        let r = run(&cfg).unwrap();
        prop_assert!(r.conserves_bytes);
        prop_assert_eq!(r.metrics.incomplete_flows, 0);
        for f in &r.flows {
            prop_assert_eq!(f.bytes_received, f.bytes);
            prop_assert!(f.end.unwrap() > f.start);
        }
        // the bottleneck never holds more than its buffer
        let buffer = cfg.buffer();
        prop_assert!(r.metrics.max_queue <= buffer);
        for (_, st) in &r.port_stats {
            // packets still queued when the last flow completes
            prop_assert!(st.packets_in >= st.packets_out + st.packets_dropped);
        }
        if cfg.protocol == Protocol::Tcp {
            prop_assert_eq!(r.metrics.marked, 0);
        }
    }

    #[test]
    fn trace_is_time_ordered_and_consistent(cfg in config()) {
        let r = run(&cfg).unwrap();
        let recs = r.trace.records();
        prop_assert!(recs.windows(2).all(|w| w[0].time <= w[1].time));
        let marks = recs.iter().filter(|x| x.event == TraceEvent::Mark).count() as u64;
        let port = r.monitored[0].1.clone();
        let st = r.port_stats.iter().find(|(n, _)| *n == port).unwrap().1;
        prop_assert_eq!(marks, st.packets_marked);
        prop_assert_eq!(r.queue.samples.len() as u64, st.packets_in);
    }

    #[test]
    fn same_seed_same_bytes(cfg in config()) {
        let render = |c: &RunConfig| {
            let r = run(c).unwrap();
            let mut t = Vec::new();
            r.trace.write_csv(&mut t).unwrap();
            let mut m = Vec::new();
            output::write_metrics(&r, &mut m).unwrap();
            let mut f = Vec::new();
            output::write_flows(&r, &mut f).unwrap();
            (t, m, f)
        };
        prop_assert_eq!(render(&cfg), render(&cfg));
    }
}
