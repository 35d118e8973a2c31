//! Binary interface between the modsim host and ISA extension modules.
//!
//! An extension module is a set of eight C-ABI entry points (decode, execute,
//! print, AST create/kill, init, fini and an ISA-letter query) reachable from a
//! single [`ModuleEntry`] record. Dynamic libraries export the record through
//! the symbol named by [`ENTRY_SYMBOL`]; modules compiled into the host hand the
//! same record to the registry directly, so both binding modes run identical
//! code behind identical function pointers.
//!
//! Modules never touch host memory layout. Every read or write of
//! architectural state goes through the [`StateAccess`] accessor table that
//! the host passes to `execute` and `init`.
//!
//! Module authors normally implement [`Extension`] and let
//! [`ModuleEntry::for_extension`] generate the thunks:
//!
//! ```
//! use modsim_abi::{Extension, Hart, ModuleEntry, Retired, ABI_VERSION};
//! use std::ffi::CStr;
//!
//! struct Nop;
//!
//! impl Extension for Nop {
//!     const NAME: &'static CStr = c"nop";
//!     const ISA_LETTERS: &'static CStr = c"X";
//!     type Ast = ();
//!
//!     fn decode(word: u32) -> Option<()> {
//!         (word == 0x0000_000b).then_some(())
//!     }
//!     fn execute<H: Hart + ?Sized>(_: (), _: &mut H) -> Retired {
//!         Retired::Success
//!     }
//!     fn disasm(_: ()) -> String {
//!         "custom.nop".into()
//!     }
//!     fn pack(_: ()) -> u64 {
//!         0
//!     }
//!     fn unpack(_: u64) {}
//! }
//!
//! static ENTRY: ModuleEntry = ModuleEntry::for_extension::<Nop>(ABI_VERSION);
//! assert_eq!(ENTRY.abi_version, 1);
//! ```

use std::ffi::{c_char, c_void, CStr};
use std::fmt;

mod disasm;

pub use disasm::*;

/// The only ABI version this host accepts.
pub const ABI_VERSION: u32 = 1;

/// Name of the symbol every dynamic module exports. Its type is [`EntryFn`].
pub const ENTRY_SYMBOL: &str = "modriscv_ext_entry";

pub const RETIRE_SUCCESS: u32 = 0;
pub const RETIRE_TRAP: u32 = 1;

/// Return value of an `execute` entry point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Retired {
    Success,
    /// The instruction raised a trap; the module called `raise_trap` exactly once.
    Trap,
}

impl Retired {
    pub const fn to_raw(self) -> u32 {
        match self {
            Retired::Success => RETIRE_SUCCESS,
            Retired::Trap => RETIRE_TRAP,
        }
    }

    pub const fn from_raw(raw: u32) -> Option<Self> {
        match raw {
            RETIRE_SUCCESS => Some(Retired::Success),
            RETIRE_TRAP => Some(Retired::Trap),
            _ => None,
        }
    }
}

/// Machine trap causes (ratified mcause encodings).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u32)]
pub enum TrapCause {
    IllegalInstruction = 2,
    Breakpoint = 3,
    LoadAccessFault = 5,
    StoreAccessFault = 7,
    EnvCallFromM = 11,
}

impl TrapCause {
    pub const fn code(self) -> u32 {
        self as u32
    }

    pub const fn from_code(code: u32) -> Option<Self> {
        Some(match code {
            2 => TrapCause::IllegalInstruction,
            3 => TrapCause::Breakpoint,
            5 => TrapCause::LoadAccessFault,
            7 => TrapCause::StoreAccessFault,
            11 => TrapCause::EnvCallFromM,
            _ => return None,
        })
    }
}

impl fmt::Display for TrapCause {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            TrapCause::IllegalInstruction => "illegal instruction",
            TrapCause::Breakpoint => "breakpoint",
            TrapCause::LoadAccessFault => "load access fault",
            TrapCause::StoreAccessFault => "store access fault",
            TrapCause::EnvCallFromM => "environment call from M-mode",
        };
        f.write_str(name)
    }
}

/// Opaque per-step AST storage owned by one module.
///
/// The host only moves a handle between entry points of the module that
/// created it. The bit layout is private to the module.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
#[repr(transparent)]
pub struct AstHandle(pub u64);

/// `decode(ast, word)`: fills `ast` and returns 1 if the module claims `word`, 0 otherwise.
pub type DecodeFn = unsafe extern "C" fn(ast: *mut AstHandle, word: u32) -> u32;
/// `execute(ast, state)`: returns [`RETIRE_SUCCESS`] or [`RETIRE_TRAP`].
pub type ExecuteFn = unsafe extern "C" fn(ast: *const AstHandle, state: *const StateAccess) -> u32;
/// `print_insn(ast, buf, cap)`: writes up to `cap` bytes of UTF-8 and returns the full length.
pub type PrintInsnFn = unsafe extern "C" fn(ast: *const AstHandle, buf: *mut u8, cap: usize) -> usize;
pub type AstCreateFn = unsafe extern "C" fn() -> AstHandle;
pub type AstKillFn = unsafe extern "C" fn(ast: AstHandle);
pub type InitFn = unsafe extern "C" fn(state: *const StateAccess);
pub type FiniFn = unsafe extern "C" fn();
pub type IsaLettersFn = unsafe extern "C" fn() -> *const c_char;

/// The eight module entry points. A null entry makes the module unloadable.
#[derive(Clone, Copy)]
#[repr(C)]
pub struct EntryPointTable {
    pub decode: Option<DecodeFn>,
    pub execute: Option<ExecuteFn>,
    pub print_insn: Option<PrintInsnFn>,
    pub ast_create: Option<AstCreateFn>,
    pub ast_kill: Option<AstKillFn>,
    pub init: Option<InitFn>,
    pub fini: Option<FiniFn>,
    pub isa_letters: Option<IsaLettersFn>,
}

impl EntryPointTable {
    /// Names of the entries that are null.
    pub fn missing(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if self.decode.is_none() {
            out.push("decode");
        }
        if self.execute.is_none() {
            out.push("execute");
        }
        if self.print_insn.is_none() {
            out.push("print_insn");
        }
        if self.ast_create.is_none() {
            out.push("ast_create");
        }
        if self.ast_kill.is_none() {
            out.push("ast_kill");
        }
        if self.init.is_none() {
            out.push("init");
        }
        if self.fini.is_none() {
            out.push("fini");
        }
        if self.isa_letters.is_none() {
            out.push("isa_letters");
        }
        out
    }

    pub const fn for_extension<E: Extension>() -> Self {
        EntryPointTable {
            decode: Some(thunk::decode::<E> as DecodeFn),
            execute: Some(thunk::execute::<E> as ExecuteFn),
            print_insn: Some(thunk::print_insn::<E> as PrintInsnFn),
            ast_create: Some(thunk::ast_create::<E> as AstCreateFn),
            ast_kill: Some(thunk::ast_kill::<E> as AstKillFn),
            init: Some(thunk::init::<E> as InitFn),
            fini: Some(thunk::fini::<E> as FiniFn),
            isa_letters: Some(thunk::isa_letters::<E> as IsaLettersFn),
        }
    }
}

/// Record returned by a module's entry symbol.
///
/// Layout: `u32` version, two NUL-terminated string pointers, then the
/// eight-pointer [`EntryPointTable`]. The host reads `abi_version` before
/// anything else and refuses the record on mismatch.
#[repr(C)]
pub struct ModuleEntry {
    pub abi_version: u32,
    pub name: *const c_char,
    pub isa_letters: *const c_char,
    pub entry_points: EntryPointTable,
}

// Only ever points at 'static string literals and functions.
unsafe impl Sync for ModuleEntry {}

impl ModuleEntry {
    pub const fn for_extension<E: Extension>(abi_version: u32) -> Self {
        ModuleEntry {
            abi_version,
            name: E::NAME.as_ptr(),
            isa_letters: E::ISA_LETTERS.as_ptr(),
            entry_points: EntryPointTable::for_extension::<E>(),
        }
    }
}

/// Type of the [`ENTRY_SYMBOL`] export.
pub type EntryFn = unsafe extern "C" fn() -> *const ModuleEntry;

/// Accessor table through which a module reads and mutates the host's
/// architectural state. `ctx` is opaque and only valid for the duration of
/// the call that received the table.
///
/// `mem_load`/`mem_store` return 0 on success or a trap cause code; they do
/// not raise the trap themselves. `read_csr`/`write_csr` return 0 on success
/// and nonzero for an unimplemented or read-only CSR.
#[repr(C)]
pub struct StateAccess {
    pub ctx: *mut c_void,
    pub read_gpr: unsafe extern "C" fn(ctx: *mut c_void, idx: u32) -> u64,
    pub write_gpr: unsafe extern "C" fn(ctx: *mut c_void, idx: u32, value: u64),
    pub read_pc: unsafe extern "C" fn(ctx: *mut c_void) -> u64,
    pub write_pc: unsafe extern "C" fn(ctx: *mut c_void, pc: u64),
    pub mem_load: unsafe extern "C" fn(ctx: *mut c_void, addr: u64, size: u32, out: *mut u64) -> u32,
    pub mem_store: unsafe extern "C" fn(ctx: *mut c_void, addr: u64, size: u32, value: u64) -> u32,
    pub raise_trap: unsafe extern "C" fn(ctx: *mut c_void, cause: u32, tval: u64),
    pub read_csr: unsafe extern "C" fn(ctx: *mut c_void, csr: u32, out: *mut u64) -> u32,
    pub write_csr: unsafe extern "C" fn(ctx: *mut c_void, csr: u32, value: u64) -> u32,
}

/// Architectural state as seen by instruction semantics.
///
/// The host implements this directly on its state for compiled-in execution;
/// [`StateAccessHart`] implements it over a [`StateAccess`] table for
/// execution behind the binary interface.
pub trait Hart {
    fn read_gpr(&self, idx: u8) -> u64;
    /// Writes to `x0` are discarded.
    fn write_gpr(&mut self, idx: u8, value: u64);
    fn read_pc(&self) -> u64;
    fn write_pc(&mut self, pc: u64);
    /// Little-endian, zero-extended.
    fn load(&mut self, addr: u64, size: u8) -> Result<u64, TrapCause>;
    fn store(&mut self, addr: u64, size: u8, value: u64) -> Result<(), TrapCause>;
    fn raise_trap(&mut self, cause: TrapCause, tval: u64);
    fn read_csr(&mut self, csr: u16) -> Option<u64>;
    /// Returns false for an unimplemented or read-only CSR.
    fn write_csr(&mut self, csr: u16, value: u64) -> bool;
}

/// [`Hart`] view over a host-provided accessor table.
pub struct StateAccessHart<'a> {
    table: &'a StateAccess,
}

impl<'a> StateAccessHart<'a> {
    /// # Safety
    ///
    /// `table` must be a live table handed to the module by the host for the
    /// current call.
    pub unsafe fn new(table: &'a StateAccess) -> Self {
        StateAccessHart { table }
    }
}

impl Hart for StateAccessHart<'_> {
    #[inline]
    fn read_gpr(&self, idx: u8) -> u64 {
        unsafe { (self.table.read_gpr)(self.table.ctx, idx as u32) }
    }

    #[inline]
    fn write_gpr(&mut self, idx: u8, value: u64) {
        unsafe { (self.table.write_gpr)(self.table.ctx, idx as u32, value) }
    }

    fn read_pc(&self) -> u64 {
        unsafe { (self.table.read_pc)(self.table.ctx) }
    }

    fn write_pc(&mut self, pc: u64) {
        unsafe { (self.table.write_pc)(self.table.ctx, pc) }
    }

    fn load(&mut self, addr: u64, size: u8) -> Result<u64, TrapCause> {
        let mut out = 0u64;
        let rc = unsafe { (self.table.mem_load)(self.table.ctx, addr, size as u32, &mut out) };
        match rc {
            0 => Ok(out),
            code => Err(TrapCause::from_code(code).unwrap_or(TrapCause::LoadAccessFault)),
        }
    }

    fn store(&mut self, addr: u64, size: u8, value: u64) -> Result<(), TrapCause> {
        let rc = unsafe { (self.table.mem_store)(self.table.ctx, addr, size as u32, value) };
        match rc {
            0 => Ok(()),
            code => Err(TrapCause::from_code(code).unwrap_or(TrapCause::StoreAccessFault)),
        }
    }

    fn raise_trap(&mut self, cause: TrapCause, tval: u64) {
        unsafe { (self.table.raise_trap)(self.table.ctx, cause.code(), tval) }
    }

    fn read_csr(&mut self, csr: u16) -> Option<u64> {
        let mut out = 0u64;
        let rc = unsafe { (self.table.read_csr)(self.table.ctx, csr as u32, &mut out) };
        (rc == 0).then_some(out)
    }

    fn write_csr(&mut self, csr: u16, value: u64) -> bool {
        unsafe { (self.table.write_csr)(self.table.ctx, csr as u32, value) == 0 }
    }
}

/// Instruction semantics of one extension, written once and exported either
/// as a compiled-in builtin or from a dynamic library.
pub trait Extension: 'static {
    const NAME: &'static CStr;
    /// One or more uppercase letters, e.g. `c"M"`.
    const ISA_LETTERS: &'static CStr;

    type Ast: Copy;

    /// Returns `None` for every word this extension does not define.
    fn decode(word: u32) -> Option<Self::Ast>;
    /// The host advances pc by 4 after [`Retired::Success`] unless the
    /// extension wrote pc itself.
    fn execute<H: Hart + ?Sized>(ast: Self::Ast, hart: &mut H) -> Retired;
    fn disasm(ast: Self::Ast) -> String;

    /// Packs a decoded AST into 63 bits.
    fn pack(ast: Self::Ast) -> u64;
    fn unpack(bits: u64) -> Self::Ast;

    fn init<H: Hart + ?Sized>(_hart: &mut H) {}
    fn fini() {}
}

/// Generic C-ABI wrappers around an [`Extension`].
///
/// Handle layout: bit 63 set means claimed and bits 0..63 hold the packed
/// AST; bit 63 clear means illegal and bits 0..32 hold the raw word.
mod thunk {
    use super::*;

    const CLAIMED: u64 = 1 << 63;

    pub unsafe extern "C" fn decode<E: Extension>(ast: *mut AstHandle, word: u32) -> u32 {
        let handle = match E::decode(word) {
            Some(decoded) => {
                let bits = E::pack(decoded);
                debug_assert_eq!(bits & CLAIMED, 0, "packed AST exceeds 63 bits");
                AstHandle(bits | CLAIMED)
            }
            None => AstHandle(word as u64),
        };
        *ast = handle;
        (handle.0 & CLAIMED != 0) as u32
    }

    pub unsafe extern "C" fn execute<E: Extension>(ast: *const AstHandle, state: *const StateAccess) -> u32 {
        let handle = *ast;
        let mut hart = StateAccessHart::new(&*state);
        if handle.0 & CLAIMED == 0 {
            hart.raise_trap(TrapCause::IllegalInstruction, handle.0 & 0xffff_ffff);
            return RETIRE_TRAP;
        }
        E::execute(E::unpack(handle.0 & !CLAIMED), &mut hart).to_raw()
    }

    pub unsafe extern "C" fn print_insn<E: Extension>(ast: *const AstHandle, buf: *mut u8, cap: usize) -> usize {
        let handle = *ast;
        let text = if handle.0 & CLAIMED == 0 {
            illegal_word(handle.0 as u32)
        } else {
            E::disasm(E::unpack(handle.0 & !CLAIMED))
        };
        let n = text.len().min(cap);
        if n > 0 {
            std::ptr::copy_nonoverlapping(text.as_ptr(), buf, n);
        }
        text.len()
    }

    // `E` gives every module its own instantiation and symbol.
    #[allow(clippy::extra_unused_type_parameters)]
    pub unsafe extern "C" fn ast_create<E: Extension>() -> AstHandle {
        AstHandle(0)
    }

    pub unsafe extern "C" fn ast_kill<E: Extension>(_ast: AstHandle) {}

    pub unsafe extern "C" fn init<E: Extension>(state: *const StateAccess) {
        if state.is_null() {
            return;
        }
        let mut hart = StateAccessHart::new(&*state);
        E::init(&mut hart);
    }

    pub unsafe extern "C" fn fini<E: Extension>() {
        E::fini();
    }

    pub unsafe extern "C" fn isa_letters<E: Extension>() -> *const c_char {
        E::ISA_LETTERS.as_ptr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn trap_codes_round_trip() {
        for cause in [
            TrapCause::IllegalInstruction,
            TrapCause::Breakpoint,
            TrapCause::LoadAccessFault,
            TrapCause::StoreAccessFault,
            TrapCause::EnvCallFromM,
        ] {
            assert_eq!(TrapCause::from_code(cause.code()), Some(cause));
        }
        assert_eq!(TrapCause::from_code(0), None);
        assert_eq!(TrapCause::EnvCallFromM.code(), 11);
    }

    #[test]
    fn retired_raw_values() {
        assert_eq!(Retired::from_raw(RETIRE_SUCCESS), Some(Retired::Success));
        assert_eq!(Retired::from_raw(RETIRE_TRAP), Some(Retired::Trap));
        assert_eq!(Retired::from_raw(7), None);
    }

    #[test]
    fn empty_table_reports_every_entry() {
        let table = EntryPointTable {
            decode: None,
            execute: None,
            print_insn: None,
            ast_create: None,
            ast_kill: None,
            init: None,
            fini: None,
            isa_letters: None,
        };
        assert_eq!(table.missing().len(), 8);
    }
}
