//! The fetch, dispatch, execute and retire loop for one hart.

use modsim_abi::{Retired, TrapCause};
use thiserror::Error;

use crate::arch::{misa_bit, ArchState, Trap};
use crate::base::{decode_base, disasm_base, execute_base, BaseInsn};
use crate::ext::{Claim, ContractViolation, ModuleAst, ModuleDescriptor, OverlapError, RegisterError, Registry};

/// One line of the execution trace.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TraceRecord {
    pub seq: u64,
    pub pc: u64,
    pub raw: u32,
    /// Empty when the step ran without tracing.
    pub disasm: String,
    pub writeback: Option<(u8, u64)>,
    pub trap: Option<Trap>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum StepOutcome {
    Retired(TraceRecord),
    Trapped(TraceRecord),
    /// The hart had already stopped; carries the process exit code.
    Halted(i32),
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum StepError {
    // Boxed so the per-step `Result` stays small.
    #[error(transparent)]
    Overlap(Box<OverlapError>),
    #[error(transparent)]
    Contract(Box<ContractViolation>),
}

impl From<OverlapError> for StepError {
    fn from(e: OverlapError) -> Self {
        StepError::Overlap(Box::new(e))
    }
}

impl From<ContractViolation> for StepError {
    fn from(e: ContractViolation) -> Self {
        StepError::Contract(Box::new(e))
    }
}

/// How extensions are bound into the step function.
pub enum Dispatch {
    /// Extensions compiled into the host are called directly.
    Monolithic,
    /// Extensions are reached through the module registry.
    Modular(Registry),
}

/// Letters of the extensions compiled directly into this host.
pub fn builtin_letters() -> &'static [char] {
    &[
        #[cfg(feature = "builtin-m")]
        'M',
        #[cfg(feature = "builtin-zbb")]
        'B',
    ]
}

pub struct Emulator {
    pub state: ArchState,
    dispatch: Dispatch,
    strict_overlap: bool,
    seq: u64,
}

impl Emulator {
    /// Host with the compiled-in extensions wired straight into the decoder.
    pub fn monolithic(mut state: ArchState) -> Self {
        for &l in builtin_letters() {
            state.csrs.misa |= misa_bit(l);
        }
        Emulator { state, dispatch: Dispatch::Monolithic, strict_overlap: false, seq: 0 }
    }

    /// Host with an empty registry; add modules with [`Emulator::register`].
    pub fn modular(state: ArchState) -> Self {
        Emulator { state, dispatch: Dispatch::Modular(Registry::new()), strict_overlap: false, seq: 0 }
    }

    /// Registers a module. Panics on a monolithic host.
    pub fn register(&mut self, d: ModuleDescriptor) -> Result<(), RegisterError> {
        match &mut self.dispatch {
            Dispatch::Modular(reg) => reg.register(d, &mut self.state),
            Dispatch::Monolithic => panic!("monolithic hosts have no module registry"),
        }
    }

    pub fn registry(&self) -> Option<&Registry> {
        match &self.dispatch {
            Dispatch::Modular(reg) => Some(reg),
            Dispatch::Monolithic => None,
        }
    }

    pub fn is_monolithic(&self) -> bool {
        matches!(self.dispatch, Dispatch::Monolithic)
    }

    /// Probe every decoder and refuse words claimed more than once. Only
    /// meaningful for modular hosts.
    pub fn set_strict_overlap(&mut self, on: bool) {
        self.strict_overlap = on;
    }

    /// Whether `letter` is implemented by this host.
    pub fn isa_query(&self, letter: char) -> bool {
        match &self.dispatch {
            Dispatch::Modular(reg) => reg.isa_query(letter),
            Dispatch::Monolithic => letter == 'I' || builtin_letters().contains(&letter),
        }
    }

    /// Number of trace records produced so far.
    pub fn steps(&self) -> u64 {
        self.seq
    }

    /// Runs module finalizers. Also happens on drop.
    pub fn shutdown(&mut self) {
        if let Dispatch::Modular(reg) = &mut self.dispatch {
            reg.host_fini();
        }
    }

    /// Executes one instruction. With `disasm` set the record carries the
    /// owner's printed form of the instruction.
    pub fn step(&mut self, disasm: bool) -> Result<StepOutcome, StepError> {
        if let Some(h) = self.state.halted {
            return Ok(StepOutcome::Halted(h.exit_code()));
        }
        let s = &mut self.state;
        s.begin_step();
        let pc = s.pc;
        let seq = self.seq;

        let (raw, text, retired) = match s.fetch(pc) {
            Err(trap) => {
                s.raise_trap(trap);
                let text = if disasm { "<fetch-fault>".to_string() } else { String::new() };
                (0, text, Retired::Trap)
            }
            Ok(word) => {
                let (text, retired) = match &self.dispatch {
                    Dispatch::Monolithic => step_monolithic(s, word, disasm),
                    Dispatch::Modular(reg) => step_modular(reg, self.strict_overlap, s, word, disasm)?,
                };
                (word, text, retired)
            }
        };

        self.seq += 1;
        let mut rec = TraceRecord { seq, pc, raw, disasm: text, writeback: None, trap: None };
        Ok(match retired {
            Retired::Success => {
                self.state.minstret += 1;
                rec.writeback = self.state.last_write;
                StepOutcome::Retired(rec)
            }
            Retired::Trap => {
                rec.trap = self.state.last_trap;
                StepOutcome::Trapped(rec)
            }
        })
    }
}

impl Drop for Emulator {
    fn drop(&mut self) {
        self.shutdown();
    }
}

fn illegal(s: &mut ArchState, word: u32, disasm: bool) -> (String, Retired) {
    s.raise_trap(Trap::illegal(word));
    let text = if disasm { modsim_abi::illegal_word(word) } else { String::new() };
    (text, Retired::Trap)
}

fn run_base(s: &mut ArchState, insn: BaseInsn, word: u32, disasm: bool) -> (String, Retired) {
    let text = if disasm { disasm_base(insn) } else { String::new() };
    (text, execute_base(insn, s, word))
}

/// Applies the host's retire rule after an extension's execute: the pc moves
/// to the module's requested target, or falls through.
#[inline]
fn finish_extension(s: &mut ArchState, pc: u64, retired: Retired) {
    if retired == Retired::Success {
        s.pc = s.next_pc.unwrap_or(pc.wrapping_add(4));
    }
}

#[inline]
fn step_monolithic(s: &mut ArchState, word: u32, disasm: bool) -> (String, Retired) {
    let pc = s.pc;
    #[cfg(feature = "builtin-m")]
    if let Some(insn) = modsim_ext_m::decode(word) {
        let r = modsim_ext_m::execute(insn, s);
        finish_extension(s, pc, r);
        return (if disasm { modsim_ext_m::disasm(insn) } else { String::new() }, r);
    }
    #[cfg(feature = "builtin-zbb")]
    if let Some(insn) = modsim_ext_zbb::decode(word) {
        let r = modsim_ext_zbb::execute(insn, s);
        finish_extension(s, pc, r);
        return (if disasm { modsim_ext_zbb::disasm(insn) } else { String::new() }, r);
    }
    let _ = pc;
    match decode_base(word) {
        BaseInsn::Illegal(_) => illegal(s, word, disasm),
        insn => run_base(s, insn, word, disasm),
    }
}

#[inline]
fn step_modular(
    reg: &Registry,
    strict: bool,
    s: &mut ArchState,
    word: u32,
    disasm: bool,
) -> Result<(String, Retired), StepError> {
    if strict {
        return Ok(match reg.dispatch_decode(word, true)? {
            Claim::Module(ast) => run_module(s, ast, disasm)?,
            Claim::Base(insn) => run_base(s, insn, word, disasm),
            Claim::None => illegal(s, word, disasm),
        });
    }
    // Same chain as `Registry::dispatch_decode`, without routing the base
    // instruction through `Claim`; that extra hop is measurable per step.
    if let Some(ast) = reg.first_claim(word) {
        return Ok(run_module(s, ast, disasm)?);
    }
    Ok(match decode_base(word) {
        BaseInsn::Illegal(_) => illegal(s, word, disasm),
        insn => run_base(s, insn, word, disasm),
    })
}

fn run_module(s: &mut ArchState, ast: ModuleAst<'_>, disasm: bool) -> Result<(String, Retired), ContractViolation> {
    let pc = s.pc;
    let r = ast.execute(s)?;
    let traps = s.traps_this_step;
    let expected = (r == Retired::Trap) as u32;
    if traps != expected {
        return Err(ContractViolation {
            module: ast.module().name.clone(),
            detail: format!("execute returned {r:?} after raising {traps} trap(s)"),
        });
    }
    finish_extension(s, pc, r);
    Ok((if disasm { ast.print() } else { String::new() }, r))
}

/// Cause recorded for a trapped step, if any.
pub fn trap_cause(outcome: &StepOutcome) -> Option<TrapCause> {
    match outcome {
        StepOutcome::Trapped(rec) => rec.trap.map(|t| t.cause),
        _ => None,
    }
}
