//! Differential runs: two configurations, one program, byte-exact traces.

use std::fmt;

use thiserror::Error;

use crate::arch::StateDigest;
use crate::run::{run_to_sink, RunConfig, RunError, RunResult};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Verdict {
    Equal,
    /// First trace line that differs. A missing line shows as `<end of trace>`.
    FirstDivergence {
        seq: u64,
        ref_line: String,
        dut_line: String,
    },
    /// Traces agree but the final states do not.
    DigestMismatch {
        ref_digest: StateDigest,
        dut_digest: StateDigest,
    },
    /// Traces and states agree but the exit codes do not.
    ExitMismatch {
        ref_code: i32,
        dut_code: i32,
    },
}

impl Verdict {
    pub fn is_equal(&self) -> bool {
        *self == Verdict::Equal
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Verdict::Equal => f.write_str("equal"),
            Verdict::FirstDivergence { seq, ref_line, dut_line } => {
                write!(f, "first divergence at step {seq}\n  ref: {ref_line}\n  dut: {dut_line}")
            }
            Verdict::DigestMismatch { ref_digest, dut_digest } => {
                write!(f, "final state differs\n  ref: {ref_digest}\n  dut: {dut_digest}")
            }
            Verdict::ExitMismatch { ref_code, dut_code } => {
                write!(f, "exit code differs (ref {ref_code}, dut {dut_code})")
            }
        }
    }
}

#[derive(Debug, Error)]
#[error("{side} run failed: {source}")]
pub struct DiffError {
    pub side: &'static str,
    #[source]
    pub source: RunError,
}

#[derive(Debug)]
pub struct DiffReport {
    pub verdict: Verdict,
    pub ref_result: RunResult,
    pub dut_result: RunResult,
}

/// Compares two trace byte streams line by line.
pub fn compare_traces(ref_trace: &[u8], dut_trace: &[u8]) -> Option<(u64, String, String)> {
    if ref_trace == dut_trace {
        return None;
    }
    let mut r = ref_trace.split_inclusive(|&b| b == b'\n');
    let mut d = dut_trace.split_inclusive(|&b| b == b'\n');
    let text = |l: Option<&[u8]>| match l {
        Some(l) => String::from_utf8_lossy(l.strip_suffix(b"\n").unwrap_or(l)).into_owned(),
        None => "<end of trace>".to_string(),
    };
    for seq in 0.. {
        let (a, b) = (r.next(), d.next());
        if a != b {
            return Some((seq, text(a), text(b)));
        }
    }
    unreachable!()
}

fn traced_run(cfg: &RunConfig, side: &'static str) -> Result<(RunResult, Vec<u8>), DiffError> {
    let mut trace = Vec::new();
    let result = run_to_sink(cfg, Some(&mut trace)).map_err(|source| DiffError { side, source })?;
    Ok((result, trace))
}

/// Runs both configurations concurrently and compares traces, then final
/// state digests, then exit codes. The configs' own trace settings are
/// ignored.
pub fn difftest(ref_cfg: &RunConfig, dut_cfg: &RunConfig) -> Result<DiffReport, DiffError> {
    let (r, d) = std::thread::scope(|s| {
        let dut = s.spawn(|| traced_run(dut_cfg, "dut"));
        let r = traced_run(ref_cfg, "ref");
        (r, dut.join().expect("dut run panicked"))
    });
    let (ref_result, ref_trace) = r?;
    let (dut_result, dut_trace) = d?;
    let verdict = if let Some((seq, ref_line, dut_line)) = compare_traces(&ref_trace, &dut_trace) {
        Verdict::FirstDivergence { seq, ref_line, dut_line }
    } else if ref_result.digest != dut_result.digest {
        Verdict::DigestMismatch { ref_digest: ref_result.digest, dut_digest: dut_result.digest }
    } else if ref_result.exit_code != dut_result.exit_code {
        Verdict::ExitMismatch { ref_code: ref_result.exit_code, dut_code: dut_result.exit_code }
    } else {
        Verdict::Equal
    };
    Ok(DiffReport { verdict, ref_result, dut_result })
}
