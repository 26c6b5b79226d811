//! Trace, event and report files.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Read, Write};
use std::path::{Path, PathBuf};

use crate::analysis::AnalysisReport;
use crate::error::{Error, Result};
use crate::sim::{inter_event_stats, Series, SimTrace, SweepRow, TraceComparison};

/// Shortest round-trip decimal, switching to exponent form for very small or
/// large magnitudes.
pub fn fmt_num(x: f64) -> String {
    let a = x.abs();
    if a == 0.0 || (1e-4..1e9).contains(&a) || !a.is_finite() {
        x.to_string()
    } else {
        format!("{x:e}")
    }
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.display().to_string(), source }
}

pub fn trace_header(n: usize) -> Vec<String> {
    let mut h = vec!["t".to_string()];
    for prefix in ["theta", "theta_hat", "g", "u", "J", "event"] {
        h.extend((1..=n).map(|i| format!("{prefix}_{i}")));
    }
    h
}

pub fn write_trace_csv<W: Write>(out: W, trace: &SimTrace<f64>) -> Result<()> {
    let n = trace.players();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(trace_header(n))?;
    let mut row: Vec<String> = Vec::with_capacity(1 + 6 * n);
    for k in 0..trace.len() {
        row.clear();
        row.push(fmt_num(trace.times[k]));
        for s in [&trace.theta, &trace.theta_hat, &trace.g_est, &trace.u, &trace.payoffs] {
            row.extend(s.row(k).iter().copied().map(fmt_num));
        }
        row.extend(trace.event_flags.row(k).iter().map(u8::to_string));
        w.write_record(&row)?;
    }
    w.flush().map_err(|source| Error::Io { path: "trace".into(), source })?;
    Ok(())
}

pub fn write_events_csv<W: Write>(out: W, trace: &SimTrace<f64>) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["player", "t"])?;
    for (i, times) in trace.events.iter().enumerate() {
        for t in times {
            w.write_record([(i + 1).to_string(), fmt_num(*t)])?;
        }
    }
    w.flush().map_err(|source| Error::Io { path: "events".into(), source })?;
    Ok(())
}

/// Times and `θ̂` columns read back from a trace CSV.
#[derive(Debug, Clone, PartialEq)]
pub struct TraceColumns {
    pub times: Vec<f64>,
    pub theta_hat: Series<f64>,
}

pub fn read_trace_csv<R: Read>(input: R, source_name: &str) -> Result<TraceColumns> {
    let parse_err = |message: String| Error::Parse { source_name: source_name.into(), message };
    let mut r = csv::Reader::from_reader(input);
    let header = r.headers()?.clone();
    let cols = header.len();
    if cols < 7 || (cols - 1) % 6 != 0 {
        return Err(parse_err(format!("{cols} columns is not 1 + 6n")));
    }
    let n = (cols - 1) / 6;
    if header.iter().collect::<Vec<_>>() != trace_header(n) {
        return Err(parse_err("unexpected trace header".into()));
    }
    let mut times = Vec::new();
    let mut theta_hat = Series::new(n);
    let mut buf = vec![0.0; n];
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        let num = |j: usize| -> Result<f64> {
            rec[j].parse().map_err(|_| parse_err(format!("line {}: bad number {:?}", line + 2, &rec[j])))
        };
        times.push(num(0)?);
        for (i, b) in buf.iter_mut().enumerate() {
            *b = num(1 + n + i)?;
        }
        theta_hat.push(&buf);
    }
    Ok(TraceColumns { times, theta_hat })
}

pub fn read_trace_file(path: &Path) -> Result<TraceColumns> {
    let f = File::open(path).map_err(io_err(path))?;
    read_trace_csv(f, &path.display().to_string())
}

fn join(v: &[f64]) -> String {
    v.iter().copied().map(fmt_num).collect::<Vec<_>>().join(",")
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "none".to_string(), fmt_num)
}

/// Outcome of a run as shown in the report.
#[derive(Debug, Clone, PartialEq)]
pub enum RunStatus {
    Completed,
    Diverged(String),
}

pub struct ReportInput<'a> {
    pub scenario: &'a str,
    pub trace: &'a SimTrace<f64>,
    pub theta_star: &'a [f64],
    pub analysis: &'a AnalysisReport<f64>,
    pub status: &'a RunStatus,
    pub warnings: &'a [String],
}

/// `key = value` lines, one fact per line, stable order.
pub fn render_report(r: &ReportInput<'_>) -> String {
    let mut s = String::new();
    let tr = r.trace;
    let a = r.analysis;
    let n = tr.players();
    let mut kv = |k: &str, v: String| {
        let _ = writeln!(s, "{k} = {v}");
    };
    kv("scenario", r.scenario.to_string());
    kv("mode", tr.mode.as_str().to_string());
    kv("status", match r.status {
        RunStatus::Completed => "completed".to_string(),
        RunStatus::Diverged(msg) => format!("diverged: {msg}"),
    });
    kv("players", n.to_string());
    kv("dt", fmt_num(tr.dt));
    kv("samples", tr.len().to_string());
    kv("final_time", fmt_num(tr.final_time()));
    kv("theta_star", join(r.theta_star));
    if let Some(last) = tr.theta_hat.last() {
        kv("theta_hat_final", join(last));
    }
    for i in 0..n {
        for j in 0..n {
            kv(&format!("lyapunov.P[{},{}]", i + 1, j + 1), fmt_num(a.p.row(i)[j]));
        }
    }
    kv("lyapunov.Q", "identity".to_string());
    kv("lyapunov.residual", fmt_num(a.lyapunov_residual));
    let b = &a.bounds;
    kv("bounds.sigma_bar", fmt_num(b.sigma_bar));
    kv("bounds.sigma_bar_max", fmt_num(b.sigma_bar_max));
    kv("bounds.sigma_hat", fmt_num(b.sigma_hat));
    kv("bounds.alpha", fmt_num(b.alpha));
    kv("bounds.decay_rate", b.decay_rate.map_or_else(|| "not certified (sigma_hat >= 1)".to_string(), fmt_num));
    kv("dwell_time.tau_star", fmt_num(a.tau_star));
    kv("dwell_time.note", "large-omega limit; O(1/omega) terms dropped".to_string());
    for (i, st) in inter_event_stats(tr).iter().enumerate() {
        let p = format!("events.player_{}", i + 1);
        kv(&format!("{p}.count"), st.count.to_string());
        kv(&format!("{p}.min_gap"), opt(st.min_gap));
        kv(&format!("{p}.max_gap"), opt(st.max_gap));
        kv(&format!("{p}.mean_gap"), opt(st.mean_gap));
    }
    if let Some(av) = &a.averaging {
        kv("averaging.period", fmt_num(av.period));
        kv("averaging.nodes", av.nodes.to_string());
        kv("averaging.h_mean", fmt_num(av.h_mean));
        kv("averaging.delta_mean", fmt_num(av.delta_mean));
        kv("averaging.h_rate_mean", fmt_num(av.h_rate_mean));
        kv("averaging.delta_rate_mean", fmt_num(av.delta_rate_mean));
    }
    match &a.convergence {
        Some(c) => {
            kv("convergence.final_residual", fmt_num(c.final_residual));
            kv("convergence.fitted_rate", opt(c.fitted_rate));
            kv("convergence.fitted_offset", fmt_num(c.fitted_offset));
        }
        None => kv("convergence", "unavailable".to_string()),
    }
    for (k, w) in r.warnings.iter().enumerate() {
        kv(&format!("warning.{}", k + 1), w.clone());
    }
    s
}

/// Paths of the three files written per run.
#[derive(Debug, Clone, PartialEq)]
pub struct RunFiles {
    pub trace: PathBuf,
    pub events: PathBuf,
    pub report: PathBuf,
}

impl RunFiles {
    pub fn new(dir: &Path, stem: &str) -> Self {
        Self {
            trace: dir.join(format!("{stem}.trace.csv")),
            events: dir.join(format!("{stem}.events.csv")),
            report: dir.join(format!("{stem}.report.txt")),
        }
    }
}

pub fn write_run(files: &RunFiles, trace: &SimTrace<f64>, report: &str) -> Result<()> {
    if let Some(dir) = files.trace.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    let f = File::create(&files.trace).map_err(io_err(&files.trace))?;
    write_trace_csv(BufWriter::new(f), trace)?;
    let f = File::create(&files.events).map_err(io_err(&files.events))?;
    write_events_csv(BufWriter::new(f), trace)?;
    std::fs::write(&files.report, report).map_err(io_err(&files.report))?;
    Ok(())
}

pub fn render_comparison(c: &TraceComparison<f64>) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "samples = {}", c.times.len());
    let _ = writeln!(s, "max_gap = {}", c.max_gap);
    let _ = writeln!(s, "time_of_max = {}", c.time_of_max);
    s
}

pub fn render_sweep(rows: &[SweepRow<f64>]) -> String {
    let mut s = String::from("factor,max_gap,ratio,status\n");
    for r in rows {
        let status = r.failure.as_deref().unwrap_or("ok").replace(',', ";");
        let _ = writeln!(s, "{},{},{},{}", r.factor, opt(r.max_gap), opt(r.ratio), status);
    }
    s
}
