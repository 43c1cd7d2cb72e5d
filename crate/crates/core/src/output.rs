//! Writes a run's `trace.csv`, `flows.csv`, `metrics.csv` and `summary.txt`.

use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::Path;

use crate::analysis::stats;
use crate::net::telemetry::TelemetryLog;
use crate::run::RunResult;

pub const FLOWS_HEADER: &str = "flow_id,bytes,start_ns,end_ns,retransmits,timeouts";

pub fn write_flows<W: Write>(r: &RunResult, mut w: W) -> io::Result<()> {
    writeln!(w, "{FLOWS_HEADER}")?;
    for f in &r.flows {
        let end = f.end.map(|e| e.0.to_string()).unwrap_or_default();
        writeln!(
            w,
            "{},{},{},{},{},{}",
            f.id.0, f.bytes, f.start.0, end, f.retransmits, f.timeouts
        )?;
    }
    Ok(())
}

fn gbps(bps: f64) -> String {
    format!("{:.3}", bps / 1e9)
}

/// `metric,value` rows. Slopes are Gbps with three decimals.
pub fn metric_rows(r: &RunResult) -> Vec<(String, String)> {
    let m = &r.metrics;
    let mut rows: Vec<(String, String)> = Vec::new();
    let mut put = |k: &str, v: String| rows.push((k.to_string(), v));
    put("flows", r.flows.len().to_string());
    put("flows_incomplete", m.incomplete_flows.to_string());
    put("queries", r.queries.len().to_string());
    put("queries_incomplete", m.incomplete_queries.to_string());
    if let Some(v) = stats::mean(&m.fct) {
        put("fct_mean_s", format!("{v:.9}"));
        put(
            "fct_p99_s",
            format!("{:.9}", stats::percentile(&m.fct, 99.0).unwrap()),
        );
    }
    if let Some(v) = stats::mean(&m.qct) {
        put("qct_mean_s", format!("{v:.9}"));
        put(
            "qct_p99_s",
            format!("{:.9}", stats::percentile(&m.qct, 99.0).unwrap()),
        );
    }
    put("goodput_mbps", format!("{:.3}", m.goodput_bps / 1e6));
    put("max_queue_bytes", m.max_queue.to_string());
    if let Some(sd) = m.queue_stddev {
        put("queue_stddev_bytes", format!("{sd:.1}"));
    }
    put("marked", m.marked.to_string());
    put("dropped", m.dropped.to_string());
    put("timeouts", m.timeouts.to_string());
    if let Some(a) = r.queue.first_round_rate() {
        put("first_round_rate_gbps", gbps(a));
    }
    if let Some(p) = &r.phases {
        put("phase1_start_ns", p.phase1.start.0.to_string());
        put("phase1_end_ns", p.phase1.end.0.to_string());
        put("phase1_height_bytes", p.phase1.height.to_string());
        put("phase1_slope_gbps", gbps(p.phase1.slope));
        if let Some(p2) = &p.phase2 {
            put("phase2_end_ns", p2.end.0.to_string());
            put("phase2_height_bytes", p2.height.to_string());
            put("phase2_slope_gbps", gbps(p2.slope));
        }
        put("later_phases", p.later_phases.len().to_string());
    }
    rows
}

pub fn write_metrics<W: Write>(r: &RunResult, mut w: W) -> io::Result<()> {
    writeln!(w, "metric,value")?;
    for (k, v) in metric_rows(r) {
        writeln!(w, "{k},{v}")?;
    }
    Ok(())
}

pub fn summary_text(r: &RunResult) -> String {
    let mut s = String::new();
    let c = &r.config;
    let _ = writeln!(s, "scenario: {}", c.scenario.name());
    let _ = writeln!(s, "protocol: {}", c.protocol);
    let _ = writeln!(s, "seed: {}", c.seed);
    let _ = writeln!(s, "end_time_ns: {}", r.summary.end_time.0);
    let _ = writeln!(s, "events: {}", r.summary.events_dispatched);
    let _ = writeln!(s, "packets_sent: {}", r.summary.packets_sent);
    let _ = writeln!(s, "packets_dropped: {}", r.summary.packets_dropped);
    let _ = writeln!(s, "packets_marked: {}", r.summary.packets_marked);
    let _ = writeln!(s, "bytes_conserved: {}", r.conserves_bytes);
    let names: Vec<_> = r
        .monitored
        .iter()
        .map(|(id, n)| format!("{n} (port {})", id.0))
        .collect();
    let _ = writeln!(s, "monitored: {}", names.join(", "));
    let _ = writeln!(s, "\n[metrics]");
    for (k, v) in metric_rows(r) {
        let _ = writeln!(s, "{k} = {v}");
    }
    let _ = writeln!(s, "\n[switch ports]");
    for (name, st) in &r.port_stats {
        if st.packets_in == 0 || name.starts_with('h') {
            continue;
        }
        let _ = writeln!(
            s,
            "{name}: in={} out={} dropped={} marked={} max_queue={}",
            st.packets_in,
            st.packets_out,
            st.packets_dropped,
            st.packets_marked,
            st.max_queue_bytes
        );
    }
    let _ = writeln!(s, "\n# effective config\n{}", c.to_toml());
    s
}

/// Writes the four output files into `dir`, creating it if needed.
pub fn write_all(r: &RunResult, dir: &Path) -> io::Result<()> {
    fs::create_dir_all(dir)?;
    let mut w = BufWriter::new(File::create(dir.join("trace.csv"))?);
    if r.config.output.trace {
        r.trace.write_csv(&mut w)?;
    } else {
        writeln!(w, "{}", TelemetryLog::CSV_HEADER)?;
    }
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("flows.csv"))?);
    write_flows(r, &mut w)?;
    w.flush()?;
    let mut w = BufWriter::new(File::create(dir.join("metrics.csv"))?);
    write_metrics(r, &mut w)?;
    w.flush()?;
    fs::write(dir.join("summary.txt"), summary_text(r))
}
