//! Times named `modsim` configurations on one ELF, or on a generated
//! 10M-instruction workload.
//!
//! ```text
//! cargo run --release --example modbench -- \
//!     --config mono="--monolithic" --config dyn="--module libmodsim_plugin_m.so" \
//!     --repeats 5 --workload m-heavy
//! ```
//!
//! Machine-readable records (`name  insns  median_ns  ips`, tab separated)
//! go to stdout and a table to stderr.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;
use modsim::bench::{bench, format_records, format_table};
use modsim::programs::{Workload, BENCH_RETIREMENTS};
use modsim::run::RunConfig;

#[derive(Parser)]
struct Args {
    /// NAME="<modsim flags>", repeatable.
    #[arg(long = "config", value_name = "NAME=FLAGS", allow_hyphen_values = true)]
    configs: Vec<String>,
    #[arg(long, default_value_t = 5)]
    repeats: usize,
    /// Generate a workload (base-alu, m-heavy, zbb-heavy) instead of reading ELF.
    #[arg(long, conflicts_with = "elf")]
    workload: Option<String>,
    /// Retirements for a generated workload.
    #[arg(long, default_value_t = BENCH_RETIREMENTS)]
    retirements: u64,
    #[arg(required_unless_present = "workload")]
    elf: Option<PathBuf>,
}

fn main() -> ExitCode {
    let args = Args::parse();
    let _scratch;
    let elf = match (&args.elf, &args.workload) {
        (Some(elf), _) => elf.clone(),
        (None, Some(name)) => {
            let Some(w) = Workload::ALL.into_iter().find(|w| w.name() == name) else {
                eprintln!("modbench: unknown workload `{name}`");
                return ExitCode::from(64);
            };
            _scratch = tempfile::tempdir().expect("temp dir");
            w.program(args.retirements).write_to(_scratch.path()).expect("write workload")
        }
        (None, None) => unreachable!("clap requires one of them"),
    };

    let mut cfgs = Vec::new();
    for c in &args.configs {
        let Some((name, flags)) = c.split_once('=') else {
            eprintln!("modbench: --config expects NAME=FLAGS, got `{c}`");
            return ExitCode::from(64);
        };
        match RunConfig::from_flags(flags, &elf) {
            Ok(cfg) => cfgs.push((name.to_string(), cfg)),
            Err(e) => {
                eprintln!("modbench: {name}: {e}");
                return ExitCode::from(64);
            }
        }
    }
    match bench(&cfgs, args.repeats) {
        Ok(rows) => {
            print!("{}", format_records(&rows));
            eprint!("{}", format_table(&rows));
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("modbench: {e}");
            ExitCode::FAILURE
        }
    }
}
