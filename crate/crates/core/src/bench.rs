//! Repeated timed runs of several configurations on one program.

use std::fmt::Write as _;
use std::time::Duration;

use thiserror::Error;

use crate::run::{run_to_sink, RunConfig, RunError};

#[derive(Debug, Clone, PartialEq)]
pub struct BenchRow {
    pub name: String,
    pub insns: u64,
    pub median: Duration,
    pub min: Duration,
    /// Retired instructions per second at the median time.
    pub ips: f64,
    pub exit_code: i32,
}

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("at least 3 repeats are needed, got {0}")]
    TooFewRepeats(usize),
    #[error("config `{name}` failed: {source}")]
    Run { name: String, source: RunError },
}

/// Runs every config `repeats` times (untraced) and reports median and
/// minimum wall time of the execution loop.
pub fn bench(cfgs: &[(String, RunConfig)], repeats: usize) -> Result<Vec<BenchRow>, BenchError> {
    if repeats < 3 {
        return Err(BenchError::TooFewRepeats(repeats));
    }
    cfgs.iter()
        .map(|(name, cfg)| {
            let mut times = Vec::with_capacity(repeats);
            let mut last = None;
            for _ in 0..repeats {
                let r = run_to_sink(cfg, None).map_err(|source| BenchError::Run { name: name.clone(), source })?;
                times.push(r.elapsed);
                last = Some(r);
            }
            let last = last.expect("repeats >= 3");
            times.sort();
            let median = times[times.len() / 2];
            Ok(BenchRow {
                name: name.clone(),
                insns: last.retired,
                median,
                min: times[0],
                ips: last.retired as f64 / median.as_secs_f64().max(1e-9),
                exit_code: last.exit_code,
            })
        })
        .collect()
}

/// One tab-separated record per row: `name insns median_ns ips`.
pub fn format_records(rows: &[BenchRow]) -> String {
    let mut out = String::new();
    for r in rows {
        let _ = writeln!(out, "{}\t{}\t{}\t{:.0}", r.name, r.insns, r.median.as_nanos(), r.ips);
    }
    out
}

/// Human-readable table with a header line.
pub fn format_table(rows: &[BenchRow]) -> String {
    let width = rows.iter().map(|r| r.name.len()).max().unwrap_or(0).max(6);
    let mut out =
        format!("{:<width$}  {:>12}  {:>12}  {:>12}  {:>14}\n", "config", "insns", "median_ms", "min_ms", "ips");
    for r in rows {
        let _ = writeln!(
            out,
            "{:<width$}  {:>12}  {:>12.3}  {:>12.3}  {:>14.0}",
            r.name,
            r.insns,
            r.median.as_secs_f64() * 1e3,
            r.min.as_secs_f64() * 1e3,
            r.ips
        );
    }
    out
}
