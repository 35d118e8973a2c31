//! Writes the generated test programs to a directory and runs each one on a
//! monolithic host, printing exit code and retired count.
//!
//! ```text
//! cargo run --example run_program -- [OUT_DIR]
//! ```

use std::path::PathBuf;

use modsim::programs::suite;
use modsim::run::{run_to_sink, RunConfig};

fn main() {
    let dir = std::env::args().nth(1).map(PathBuf::from).unwrap_or_else(std::env::temp_dir);
    std::fs::create_dir_all(&dir).expect("create output directory");
    for p in suite() {
        let path = p.write_to(&dir).expect("write ELF");
        let r = run_to_sink(&RunConfig::new(&path).monolithic(), None).expect("run");
        println!("{:<16} {:<4} exit={} retired={}", p.name, p.kind.to_string(), r.exit_code, r.retired);
    }
}
