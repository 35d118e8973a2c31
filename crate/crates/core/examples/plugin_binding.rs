//! Runs the same M/Zbb program with the extensions bound three ways and
//! shows that the traces agree.
//!
//! ```text
//! cargo build -p modsim-plugin-m -p modsim-plugin-zbb
//! cargo run --example plugin_binding -- target/debug/libmodsim_plugin_m.so target/debug/libmodsim_plugin_zbb.so
//! ```
//!
//! Without library paths only the monolithic and static bindings run.

use modsim::difftest::difftest;
use modsim::loader::LoadRequest;
use modsim::programs::suite;
use modsim::run::{run_to_sink, RunConfig};

fn main() {
    let plugins: Vec<LoadRequest> = std::env::args().skip(1).map(|p| LoadRequest::Dynamic(p.into())).collect();
    let dir = tempfile::tempdir().expect("temp dir");
    let program = suite().into_iter().find(|p| p.name == "m-modexp").expect("suite program");
    let elf = program.write_to(dir.path()).expect("write ELF");

    let mono = RunConfig::new(&elf).monolithic();
    let mut modes = vec![(
        "static",
        RunConfig::new(&elf)
            .with_module(LoadRequest::Builtin("m".into()))
            .with_module(LoadRequest::Builtin("zbb".into())),
    )];
    if !plugins.is_empty() {
        modes.push(("dynamic", RunConfig { modules: plugins, ..RunConfig::new(&elf) }));
    }

    let mut trace = Vec::new();
    let r = run_to_sink(&mono, Some(&mut trace)).expect("monolithic run");
    println!("monolithic: exit {} after {} instructions, digest {}", r.exit_code, r.retired, r.digest);
    let trace = String::from_utf8(trace).unwrap();
    for line in trace.lines().filter(|l| l.contains("\"mul") || l.contains("\"rem")).take(3) {
        println!("  {line}");
    }

    for (mode, cfg) in modes {
        match difftest(&mono, &cfg) {
            Ok(report) => println!("{mode:>10}: {} (digest {})", report.verdict, report.dut_result.digest),
            Err(e) => println!("{mode:>10}: {e}"),
        }
    }
}
