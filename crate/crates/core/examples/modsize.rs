//! Size report for emulator binaries and module libraries.
//!
//! ```text
//! cargo run --example modsize -- target/release/modsim target/release/libmodsim_plugin_m.so
//! ```
//!
//! Exits non-zero if any path could not be read.

use std::process::ExitCode;

use modsim::size::{format_table, size_report};

fn main() -> ExitCode {
    let paths: Vec<String> = std::env::args().skip(1).collect();
    let rows = size_report(&paths);
    print!("{}", format_table(&rows));
    if rows.iter().any(|r| r.result.is_err()) {
        ExitCode::FAILURE
    } else {
        ExitCode::SUCCESS
    }
}
