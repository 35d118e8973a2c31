//! Differential run of one ELF under two `modsim` configurations.
//!
//! ```text
//! cargo run --example moddiff -- --ref "--monolithic" \
//!     --dut "--module libmodsim_plugin_m.so --module libmodsim_plugin_zbb.so" prog.elf
//! ```
//!
//! Exit status: 0 when the traces, exit codes and final states agree, 1 on
//! a divergence, 64 for usage or load errors.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use modsim::difftest::difftest;
use modsim::run::{RunConfig, EXIT_USAGE};

#[derive(Parser)]
struct Args {
    /// modsim flags for the reference run.
    #[arg(long = "ref", allow_hyphen_values = true, value_name = "FLAGS")]
    reference: String,
    /// modsim flags for the run under test.
    #[arg(long, allow_hyphen_values = true, value_name = "FLAGS")]
    dut: String,
    elf: PathBuf,
}

fn main() -> ExitCode {
    let args = Args::try_parse().unwrap_or_else(|e| {
        let _ = e.print();
        std::process::exit(if e.use_stderr() { EXIT_USAGE } else { 0 })
    });
    let cfgs = RunConfig::from_flags(&args.reference, &args.elf)
        .and_then(|r| Ok((r, RunConfig::from_flags(&args.dut, &args.elf)?)));
    let (reference, dut) = match cfgs {
        Ok(c) => c,
        Err(e) => {
            eprintln!("moddiff: {e}");
            return ExitCode::from(EXIT_USAGE as u8);
        }
    };
    match difftest(&reference, &dut) {
        Ok(report) => {
            println!("{}", report.verdict);
            eprintln!(
                "ref: exit {} after {} steps; dut: exit {} after {} steps",
                report.ref_result.exit_code,
                report.ref_result.steps,
                report.dut_result.exit_code,
                report.dut_result.steps
            );
            if report.verdict.is_equal() {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(e) => {
            eprintln!("moddiff: {e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
