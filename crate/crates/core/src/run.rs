//! Run configuration, the command line, and the run loop with HTIF exit.

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use clap::Parser;
use thiserror::Error;

use crate::arch::{ArchState, StateDigest, DEFAULT_MEM_BASE, DEFAULT_MEM_SIZE};
use crate::elf::{load_elf_file, ElfError};
use crate::engine::{builtin_letters, Emulator, StepError, StepOutcome};
use crate::loader::{register_all, LoadError, LoadRequest};
use crate::trace::emit_trace;

pub const EXIT_INSN_LIMIT: i32 = 134;
pub const EXIT_TRACE_IO: i32 = 135;
pub const EXIT_USAGE: i32 = 64;
/// A module broke the ABI contract or strict-overlap mode found a clash.
pub const EXIT_STEP_ERROR: i32 = 70;

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum TraceSink {
    #[default]
    Off,
    Stdout,
    File(PathBuf),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunConfig {
    pub elf_path: PathBuf,
    /// Ordered load requests; also the dispatch order.
    pub modules: Vec<LoadRequest>,
    /// Use the extensions compiled into the host directly.
    pub monolithic: bool,
    pub max_insns: u64,
    pub trace: TraceSink,
    pub strict_overlap: bool,
    pub mem_base: u64,
    pub mem_size: u64,
}

/// Default step cap: large enough never to matter for real programs.
pub const DEFAULT_MAX_INSNS: u64 = 1 << 40;

impl RunConfig {
    pub fn new(elf_path: impl Into<PathBuf>) -> Self {
        RunConfig {
            elf_path: elf_path.into(),
            modules: Vec::new(),
            monolithic: false,
            max_insns: DEFAULT_MAX_INSNS,
            trace: TraceSink::Off,
            strict_overlap: false,
            mem_base: DEFAULT_MEM_BASE,
            mem_size: DEFAULT_MEM_SIZE,
        }
    }

    pub fn monolithic(mut self) -> Self {
        self.monolithic = true;
        self
    }

    pub fn with_module(mut self, req: LoadRequest) -> Self {
        self.modules.push(req);
        self
    }

    /// Builds a config from a string of `modsim` flags, as used by the
    /// difftest and benchmark drivers. Flags are split on whitespace.
    pub fn from_flags(flags: &str, elf: &Path) -> Result<Self, RunError> {
        let mut argv: Vec<String> = vec!["modsim".into()];
        argv.extend(flags.split_whitespace().map(str::to_owned));
        argv.push(elf.display().to_string());
        let cli = Cli::try_parse_from(argv).map_err(|e| RunError::Usage(e.to_string()))?;
        match cli.into_command()? {
            Command::Run(cfg) => Ok(cfg),
            Command::ListModules(_) => Err(RunError::Usage("--list-modules is not a run configuration".into())),
        }
    }

    fn validate(&self) -> Result<(), RunError> {
        if self.max_insns == 0 {
            return Err(RunError::Usage("--max-insns must be positive".into()));
        }
        if self.monolithic && !self.modules.is_empty() {
            return Err(RunError::Usage("--monolithic cannot be combined with --module".into()));
        }
        if self.mem_size == 0 || self.mem_base.checked_add(self.mem_size).is_none() {
            return Err(RunError::Usage("memory region is empty or wraps around".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum RunError {
    #[error("usage: {0}")]
    Usage(String),
    #[error("module load failed: {0}")]
    Load(#[from] LoadError),
    #[error("cannot load program: {0}")]
    Elf(#[from] ElfError),
    #[error("trace output failed: {0}")]
    TraceIo(io::Error),
    #[error(transparent)]
    Step(#[from] StepError),
}

impl RunError {
    pub fn exit_code(&self) -> i32 {
        match self {
            RunError::Usage(_) | RunError::Load(_) | RunError::Elf(_) => EXIT_USAGE,
            RunError::TraceIo(_) => EXIT_TRACE_IO,
            RunError::Step(_) => EXIT_STEP_ERROR,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RunResult {
    pub exit_code: i32,
    /// Steps taken, trapped ones included.
    pub steps: u64,
    pub retired: u64,
    pub digest: StateDigest,
    pub elapsed: Duration,
}

impl RunResult {
    pub fn ips(&self) -> f64 {
        self.retired as f64 / self.elapsed.as_secs_f64().max(1e-9)
    }
}

/// Creates the hart, registers modules and loads the program.
pub fn build_emulator(cfg: &RunConfig) -> Result<Emulator, RunError> {
    cfg.validate()?;
    let state = ArchState::new(cfg.mem_base, cfg.mem_size);
    let mut emu = if cfg.monolithic { Emulator::monolithic(state) } else { Emulator::modular(state) };
    if !cfg.monolithic {
        register_all(&mut emu, &cfg.modules)?;
        emu.set_strict_overlap(cfg.strict_overlap);
    }
    load_elf_file(&cfg.elf_path, &mut emu.state)?;
    Ok(emu)
}

/// Steps until the hart halts or `max_insns` steps have been taken, writing
/// one trace line per step to `sink` if given. Returns the exit code.
pub fn run_loop(emu: &mut Emulator, max_insns: u64, mut sink: Option<&mut dyn Write>) -> Result<i32, RunError> {
    let tracing = sink.is_some();
    let mut taken = 0;
    while taken < max_insns {
        let out = emu.step(tracing)?;
        if let StepOutcome::Halted(code) = out {
            return Ok(code);
        }
        taken += 1;
        if let Some(w) = sink.as_deref_mut() {
            emit_trace(&out, w).map_err(RunError::TraceIo)?;
        }
        if let Some(h) = emu.state.halted {
            return Ok(h.exit_code());
        }
    }
    Ok(match emu.state.halted {
        Some(h) => h.exit_code(),
        None => EXIT_INSN_LIMIT,
    })
}

/// Runs a configuration with the trace going to `sink` instead of the
/// configured destination.
pub fn run_to_sink(cfg: &RunConfig, sink: Option<&mut dyn Write>) -> Result<RunResult, RunError> {
    let mut emu = build_emulator(cfg)?;
    let start = Instant::now();
    let exit_code = run_loop(&mut emu, cfg.max_insns, sink)?;
    let elapsed = start.elapsed();
    let result =
        RunResult { exit_code, steps: emu.steps(), retired: emu.state.minstret, digest: emu.state.snapshot(), elapsed };
    emu.shutdown();
    Ok(result)
}

/// Runs a configuration, sending the trace where it asks.
pub fn run_config(cfg: &RunConfig) -> Result<RunResult, RunError> {
    match &cfg.trace {
        TraceSink::Off => run_to_sink(cfg, None),
        TraceSink::Stdout => {
            let mut w = BufWriter::new(io::stdout().lock());
            let r = run_to_sink(cfg, Some(&mut w))?;
            w.flush().map_err(RunError::TraceIo)?;
            Ok(r)
        }
        TraceSink::File(path) => {
            let f = File::create(path).map_err(RunError::TraceIo)?;
            let mut w = BufWriter::with_capacity(1 << 16, f);
            let r = run_to_sink(cfg, Some(&mut w))?;
            w.flush().map_err(RunError::TraceIo)?;
            Ok(r)
        }
    }
}

/// The whole `modsim` invocation: run, print the summary to stderr, and
/// return the process exit code.
pub fn run(cfg: &RunConfig) -> i32 {
    match run_config(cfg) {
        Ok(r) => {
            eprintln!(
                "modsim: exit {} after {} retired instructions in {:.3} s ({:.0} ips)",
                r.exit_code,
                r.retired,
                r.elapsed.as_secs_f64(),
                r.ips()
            );
            r.exit_code
        }
        Err(e) => {
            eprintln!("modsim: {e}");
            e.exit_code()
        }
    }
}

fn parse_u64(s: &str) -> Result<u64, String> {
    let s = s.replace('_', "");
    match s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")) {
        Some(hex) => u64::from_str_radix(hex, 16),
        None => s.parse(),
    }
    .map_err(|e| e.to_string())
}

fn parse_hex(s: &str) -> Result<u64, String> {
    let digits = s.strip_prefix("0x").or_else(|| s.strip_prefix("0X")).unwrap_or(s);
    u64::from_str_radix(&digits.replace('_', ""), 16).map_err(|e| e.to_string())
}

/// Command line of the `modsim` executable.
#[derive(Debug, Parser)]
#[command(name = "modsim", version, about = "RV64 emulator with pluggable ISA extension modules")]
pub struct Cli {
    /// Extension module to register: `builtin:NAME` or a library path.
    /// Repeatable; decoders are consulted in the order given.
    #[arg(long = "module", value_name = "builtin:NAME|PATH")]
    pub modules: Vec<String>,
    /// Call the compiled-in extensions directly instead of through the
    /// module interface.
    #[arg(long)]
    pub monolithic: bool,
    /// Write an execution trace to PATH, or to standard output with `-`.
    #[arg(long, value_name = "PATH|-")]
    pub trace: Option<String>,
    /// Stop with exit code 134 after N steps.
    #[arg(long, value_name = "N", value_parser = parse_u64, default_value_t = DEFAULT_MAX_INSNS)]
    pub max_insns: u64,
    /// Probe every decoder and fail when more than one claims a word.
    #[arg(long)]
    pub strict_overlap: bool,
    #[arg(long, value_name = "HEX", value_parser = parse_hex, default_value = "0x80000000")]
    pub mem_base: u64,
    #[arg(long, value_name = "BYTES", value_parser = parse_u64, default_value_t = DEFAULT_MEM_SIZE)]
    pub mem_size: u64,
    /// Print the registered modules and exit.
    #[arg(long)]
    pub list_modules: bool,
    /// Program to run.
    #[arg(value_name = "ELF", required_unless_present = "list_modules")]
    pub elf: Option<PathBuf>,
}

pub enum Command {
    Run(RunConfig),
    ListModules(RunConfig),
}

impl Cli {
    pub fn into_command(self) -> Result<Command, RunError> {
        let modules = self
            .modules
            .iter()
            .map(|v| LoadRequest::parse(v))
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| RunError::Usage(e.0))?;
        let trace = match self.trace.as_deref() {
            None => TraceSink::Off,
            Some("-") => TraceSink::Stdout,
            Some(p) => TraceSink::File(PathBuf::from(p)),
        };
        let cfg = RunConfig {
            elf_path: self.elf.unwrap_or_default(),
            modules,
            monolithic: self.monolithic,
            max_insns: self.max_insns,
            trace,
            strict_overlap: self.strict_overlap,
            mem_base: self.mem_base,
            mem_size: self.mem_size,
        };
        cfg.validate()?;
        Ok(if self.list_modules { Command::ListModules(cfg) } else { Command::Run(cfg) })
    }
}

/// Lines printed by `--list-modules`: `NAME<TAB>v1<TAB>LETTERS<TAB>ORIGIN`.
pub fn list_modules(cfg: &RunConfig) -> Result<Vec<String>, RunError> {
    if cfg.monolithic {
        let names = crate::loader::builtin_names();
        return Ok(names
            .iter()
            .zip(builtin_letters())
            .map(|(n, l)| format!("{n}\tv{}\t{l}\tbuiltin", modsim_abi::ABI_VERSION))
            .collect());
    }
    let mut emu = Emulator::modular(ArchState::new(cfg.mem_base, cfg.mem_size));
    register_all(&mut emu, &cfg.modules)?;
    Ok(emu.registry().unwrap().modules().iter().map(|m| m.list_line()).collect())
}

/// Entry point shared by the `modsim` binary: parses `args` (program name
/// first) and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_USAGE } else { 0 };
            let _ = e.print();
            return code;
        }
    };
    let command = match cli.into_command() {
        Ok(c) => c,
        Err(e) => {
            eprintln!("modsim: {e}");
            return e.exit_code();
        }
    };
    match command {
        Command::Run(cfg) => run(&cfg),
        Command::ListModules(cfg) => match list_modules(&cfg) {
            Ok(lines) => {
                let mut out = io::stdout().lock();
                for l in lines {
                    if writeln!(out, "{l}").is_err() {
                        return EXIT_TRACE_IO;
                    }
                }
                0
            }
            Err(e) => {
                eprintln!("modsim: {e}");
                e.exit_code()
            }
        },
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn flags_build_configs() {
        let cfg = RunConfig::from_flags("--module builtin:m --max-insns 0x10 --trace -", Path::new("p.elf")).unwrap();
        assert_eq!(cfg.modules, vec![LoadRequest::Builtin("m".into())]);
        assert_eq!(cfg.max_insns, 16);
        assert_eq!(cfg.trace, TraceSink::Stdout);
        assert_eq!(cfg.elf_path, PathBuf::from("p.elf"));
        assert_eq!(cfg.mem_base, DEFAULT_MEM_BASE);
    }

    #[test]
    fn bad_flags_are_usage_errors() {
        for flags in ["--module", "--max-insns 0", "--monolithic --module builtin:m", "--mem-base zz"] {
            let err = RunConfig::from_flags(flags, Path::new("p.elf")).unwrap_err();
            assert_eq!(err.exit_code(), EXIT_USAGE, "{flags}");
        }
    }

    #[test]
    fn numbers() {
        assert_eq!(parse_hex("80000000"), Ok(0x8000_0000));
        assert_eq!(parse_hex("0x1000"), Ok(0x1000));
        assert_eq!(parse_u64("4096"), Ok(4096));
        assert_eq!(parse_u64("0x1_0000"), Ok(0x10000));
    }

    #[test]
    fn listing() {
        let cfg = RunConfig::new("")
            .with_module(LoadRequest::Builtin("zbb".into()))
            .with_module(LoadRequest::Builtin("m".into()));
        assert_eq!(list_modules(&cfg).unwrap(), vec!["zbb\tv1\tB\tstatic", "m\tv1\tM\tstatic"]);
        assert_eq!(
            list_modules(&RunConfig::new("").monolithic()).unwrap(),
            vec!["m\tv1\tM\tbuiltin", "zbb\tv1\tB\tbuiltin"]
        );
    }
}
