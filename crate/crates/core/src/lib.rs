//! A modular RV64 emulator.
//!
//! The base core (RV64I plus Zicsr) lives in this crate. ISA extensions are
//! separate modules behind a small C ABI ([`modsim_abi`]) and can be bound
//! three ways:
//!
//! * monolithic: compiled in and called directly ([`Emulator::monolithic`]),
//! * static-modular: compiled in but registered through the ABI
//!   ([`loader::load_static`]),
//! * dynamic: loaded from a shared library at startup
//!   ([`loader::load_dynamic`]).
//!
//! [`difftest`] checks that binding mode never changes a trace, and
//! [`bench`] measures what it costs.

pub mod arch;
pub mod asm;
pub mod base;
pub mod bench;
pub mod difftest;
pub mod elf;
pub mod engine;
pub mod ext;
pub mod loader;
pub mod programs;
pub mod run;
pub mod size;
pub mod trace;

pub use arch::{ArchState, Halt, StateDigest, Trap};
pub use engine::{Emulator, StepOutcome, TraceRecord};
pub use ext::{ModuleDescriptor, Registry};
pub use modsim_abi::{TrapCause, ABI_VERSION};
pub use run::{RunConfig, RunResult};
