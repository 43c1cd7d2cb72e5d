//! Flow, query and queue metrics of a finished run.

use crate::scenarios::QuerySpec;
use crate::sim::FlowRecord;
use crate::units::{ByteCount, SimTime};

use super::stats;
use super::QueueTrace;

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    /// Seconds, completed flows only.
    pub fct: Vec<f64>,
    /// Seconds, completed queries only.
    pub qct: Vec<f64>,
    pub incomplete_flows: usize,
    pub incomplete_queries: usize,
    pub goodput_bps: f64,
    pub max_queue: ByteCount,
    pub queue_stddev: Option<f64>,
    pub marked: u64,
    pub dropped: u64,
    pub timeouts: u64,
}

/// QCT of each fully completed query: last member completion − issue.
pub fn query_completion_times(queries: &[QuerySpec], flows: &[FlowRecord]) -> Vec<Option<SimTime>> {
    queries
        .iter()
        .map(|q| {
            let mut last = q.issue;
            for id in &q.flows {
                let end = flows.get(id.0 as usize).and_then(|f| f.end)?;
                last = last.max(end);
            }
            Some(last - q.issue)
        })
        .collect()
}

pub fn goodput_bps(bytes: ByteCount, interval: SimTime) -> f64 {
    if interval == SimTime::ZERO {
        return 0.0;
    }
    bytes as f64 * 8.0 / interval.as_secs_f64()
}

/// Standard deviation of the sampled queue length in `[from, to]`.
pub fn queue_stddev(trace: &QueueTrace, from: SimTime, to: SimTime) -> Option<f64> {
    let v: Vec<f64> = trace
        .samples
        .iter()
        .filter(|s| s.time >= from && s.time <= to)
        .map(|s| s.queue_bytes as f64)
        .collect();
    stats::std_dev(&v)
}

/// `goodput_window` defaults to first start .. last completion.
pub fn compute_metrics(
    flows: &[FlowRecord],
    queries: &[QuerySpec],
    trace: &QueueTrace,
    stddev_window: Option<(SimTime, SimTime)>,
    goodput_window: Option<(SimTime, SimTime)>,
    marked: u64,
    dropped: u64,
) -> MetricsReport {
    let fct: Vec<f64> = flows
        .iter()
        .filter_map(|f| f.fct())
        .map(SimTime::as_secs_f64)
        .collect();
    let qcts = query_completion_times(queries, flows);
    let qct: Vec<f64> = qcts.iter().flatten().map(|t| t.as_secs_f64()).collect();
    let delivered: ByteCount = flows.iter().map(|f| f.bytes_received).sum();
    let (g0, g1) = goodput_window.unwrap_or_else(|| {
        let start = flows.iter().map(|f| f.start).min().unwrap_or(SimTime::ZERO);
        let end = flows.iter().filter_map(|f| f.end).max().unwrap_or(start);
        (start, end)
    });
    MetricsReport {
        incomplete_flows: flows.len() - fct.len(),
        incomplete_queries: qcts.len() - qct.len(),
        fct,
        qct,
        goodput_bps: goodput_bps(delivered, g1.saturating_sub(g0)),
        max_queue: trace.max_queue(),
        queue_stddev: stddev_window.and_then(|(a, b)| queue_stddev(trace, a, b)),
        marked,
        dropped,
        timeouts: flows.iter().map(|f| f.timeouts).sum(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::net::packet::FlowId;
    use crate::net::topology::HostId;
    use crate::scenarios::FlowGroup;

    fn rec(id: u32, start: u64, end: Option<u64>) -> FlowRecord {
        FlowRecord {
            id: FlowId(id),
            src: HostId(1),
            dst: HostId(10),
            bytes: 1000,
            group: FlowGroup::Query(0),
            start: SimTime(start),
            end: end.map(SimTime),
            bytes_received: if end.is_some() { 1000 } else { 0 },
            retransmits: 0,
            timeouts: 0,
        }
    }

    #[test]
    fn qct_is_max_member_fct() {
        let flows = vec![
            rec(0, 10, Some(50)),
            rec(1, 10, Some(90)),
            rec(2, 10, Some(70)),
        ];
        let q = QuerySpec {
            id: 0,
            issue: SimTime(10),
            flows: vec![FlowId(0), FlowId(1), FlowId(2)],
        };
        assert_eq!(
            query_completion_times(&[q], &flows),
            vec![Some(SimTime(80))]
        );
    }

    #[test]
    fn incomplete_query_has_no_qct() {
        let flows = vec![rec(0, 10, Some(50)), rec(1, 10, None)];
        let q = QuerySpec {
            id: 0,
            issue: SimTime(10),
            flows: vec![FlowId(0), FlowId(1)],
        };
        let m = compute_metrics(&flows, &[q], &QueueTrace::default(), None, None, 0, 0);
        assert_eq!(m.incomplete_queries, 1);
        assert_eq!(m.incomplete_flows, 1);
        assert_eq!(m.fct, vec![40e-9]);
    }

    #[test]
    fn goodput_units() {
        assert_eq!(goodput_bps(125_000_000, SimTime::from_secs(1)), 1e9);
        assert_eq!(goodput_bps(1, SimTime::ZERO), 0.0);
    }
}
