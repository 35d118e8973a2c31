//! Text form of trace records. One line per step, fixed-width lowercase hex.

use std::fmt::Write as _;
use std::io::{self, Write};

use crate::engine::{StepOutcome, TraceRecord};

/// Formats `rec` as a single line without the trailing newline.
pub fn format_record(rec: &TraceRecord) -> String {
    let mut line = String::with_capacity(96);
    write_record(&mut line, rec);
    line
}

fn write_record(out: &mut String, rec: &TraceRecord) {
    let _ = write!(out, "S {} PC 0x{:016x} I 0x{:08x} \"{}\"", rec.seq, rec.pc, rec.raw, rec.disasm);
    if let Some(t) = rec.trap {
        let _ = write!(out, " T cause={} tval=0x{:016x}", t.cause.code(), t.tval);
    } else if let Some((rd, v)) = rec.writeback {
        let _ = write!(out, " W x{rd}=0x{v:016x}");
    }
}

/// Writes one newline-terminated line for a retired or trapped step.
/// Halted outcomes produce nothing.
pub fn emit_trace<W: Write + ?Sized>(outcome: &StepOutcome, sink: &mut W) -> io::Result<()> {
    let rec = match outcome {
        StepOutcome::Retired(r) | StepOutcome::Trapped(r) => r,
        StepOutcome::Halted(_) => return Ok(()),
    };
    let mut line = String::with_capacity(96);
    write_record(&mut line, rec);
    line.push('\n');
    sink.write_all(line.as_bytes())
}
