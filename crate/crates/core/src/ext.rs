//! Host side of the extension-module interface: descriptor validation, the
//! ordered module registry, the decode dispatch chain and the accessor table
//! handed to module code.

use std::ffi::{c_char, c_void, CStr};
use std::fmt;
use std::path::PathBuf;
use std::sync::Arc;

use modsim_abi::{
    AstCreateFn, AstHandle, AstKillFn, DecodeFn, ExecuteFn, Extension, FiniFn, InitFn, IsaLettersFn, ModuleEntry,
    PrintInsnFn, Retired, StateAccess, TrapCause, ABI_VERSION,
};
use thiserror::Error;

use crate::arch::{misa_bit, ArchState, Trap};
use crate::base::{decode_base, BaseInsn};

/// How a module reached the registry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Origin {
    /// Compiled in and called directly, without the registry.
    Builtin,
    /// Compiled in and registered through its entry record.
    StaticRegistered,
    Dynamic(PathBuf),
}

impl fmt::Display for Origin {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Origin::Builtin => f.write_str("builtin"),
            Origin::StaticRegistered => f.write_str("static"),
            Origin::Dynamic(p) => write!(f, "dynamic:{}", p.display()),
        }
    }
}

/// Entry points with null-ness already checked.
#[derive(Clone, Copy)]
struct Entries {
    decode: DecodeFn,
    execute: ExecuteFn,
    print_insn: PrintInsnFn,
    ast_create: AstCreateFn,
    ast_kill: AstKillFn,
    init: InitFn,
    fini: FiniFn,
    isa_letters: IsaLettersFn,
}

/// Why a module record was rejected.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum InvalidModule {
    #[error("entry function returned a null record")]
    NullRecord,
    #[error("ABI version mismatch (found {found}, expected {expected})")]
    VersionMismatch { found: u32, expected: u32 },
    #[error("incomplete entry-point table (missing {})", .0.join(", "))]
    IncompleteTable(Vec<&'static str>),
    #[error("module name is null, empty or not UTF-8")]
    BadName,
    #[error("invalid ISA letters {0:?} (need one or more of A-Z)")]
    BadLetters(String),
    #[error("ISA letters in record ({record:?}) disagree with isa_letters() ({query:?})")]
    LettersDisagree { record: String, query: String },
}

/// A validated extension module.
pub struct ModuleDescriptor {
    pub name: String,
    pub abi_version: u32,
    pub isa_letters: String,
    pub origin: Origin,
    entries: Entries,
    // Keeps a dynamic library mapped for as long as the descriptor lives.
    _library: Option<Arc<libloading::Library>>,
}

impl fmt::Debug for ModuleDescriptor {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ModuleDescriptor")
            .field("name", &self.name)
            .field("abi_version", &self.abi_version)
            .field("isa_letters", &self.isa_letters)
            .field("origin", &self.origin)
            .finish_non_exhaustive()
    }
}

unsafe fn c_string(ptr: *const c_char) -> Option<String> {
    if ptr.is_null() {
        return None;
    }
    CStr::from_ptr(ptr).to_str().ok().map(str::to_owned)
}

impl ModuleDescriptor {
    /// Validates a module record. The version is checked before any other
    /// field is read.
    ///
    /// # Safety
    ///
    /// `entry` must be null or point to a record that stays valid while
    /// `library` (if any) is mapped, and its function pointers must follow
    /// the module ABI.
    pub unsafe fn from_entry(
        entry: *const ModuleEntry,
        origin: Origin,
        library: Option<Arc<libloading::Library>>,
    ) -> Result<Self, InvalidModule> {
        if entry.is_null() {
            return Err(InvalidModule::NullRecord);
        }
        let found = std::ptr::read(std::ptr::addr_of!((*entry).abi_version));
        if found != ABI_VERSION {
            return Err(InvalidModule::VersionMismatch { found, expected: ABI_VERSION });
        }
        let entry = &*entry;
        let t = &entry.entry_points;
        let missing = t.missing();
        if !missing.is_empty() {
            return Err(InvalidModule::IncompleteTable(missing));
        }
        let entries = Entries {
            decode: t.decode.unwrap(),
            execute: t.execute.unwrap(),
            print_insn: t.print_insn.unwrap(),
            ast_create: t.ast_create.unwrap(),
            ast_kill: t.ast_kill.unwrap(),
            init: t.init.unwrap(),
            fini: t.fini.unwrap(),
            isa_letters: t.isa_letters.unwrap(),
        };
        let name = c_string(entry.name).filter(|n| !n.is_empty()).ok_or(InvalidModule::BadName)?;
        let letters = c_string(entry.isa_letters).unwrap_or_default();
        if letters.is_empty() || !letters.chars().all(|c| c.is_ascii_uppercase()) {
            return Err(InvalidModule::BadLetters(letters));
        }
        let query = c_string((entries.isa_letters)()).unwrap_or_default();
        if query != letters {
            return Err(InvalidModule::LettersDisagree { record: letters, query });
        }
        Ok(ModuleDescriptor { name, abi_version: found, isa_letters: letters, origin, entries, _library: library })
    }

    /// Registers an [`Extension`] defined in the host program itself. It
    /// goes through the same entry record and validation as a plugin.
    pub fn in_process<E: Extension>() -> Result<Self, InvalidModule> {
        // One small record per call; statics cannot be generic.
        let entry: &'static ModuleEntry = Box::leak(Box::new(ModuleEntry::for_extension::<E>(ABI_VERSION)));
        // SAFETY: the record is 'static and its entries are the generic thunks.
        unsafe { Self::from_entry(entry, Origin::StaticRegistered, None) }
    }

    /// `NAME<TAB>v1<TAB>LETTERS<TAB>ORIGIN`
    pub fn list_line(&self) -> String {
        format!("{}\tv{}\t{}\t{}", self.name, self.abi_version, self.isa_letters, self.origin)
    }

    fn print(&self, ast: &AstHandle) -> String {
        let mut buf = [0u8; 96];
        let n = unsafe { (self.entries.print_insn)(ast, buf.as_mut_ptr(), buf.len()) };
        let bytes = if n <= buf.len() {
            buf[..n].to_vec()
        } else {
            let mut big = vec![0u8; n];
            let m = unsafe { (self.entries.print_insn)(ast, big.as_mut_ptr(), big.len()) };
            big.truncate(m.min(n));
            big
        };
        String::from_utf8_lossy(&bytes).into_owned()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RegisterError {
    #[error("a module named `{0}` is already registered")]
    DuplicateName(String),
    #[error("module `{module}` claims ISA letter {letter} already provided by `{holder}`")]
    LetterConflict { module: String, letter: char, holder: String },
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("word {word:#010x} claimed by more than one decoder: {}", .claimants.join(", "))]
pub struct OverlapError {
    pub word: u32,
    pub claimants: Vec<String>,
}

/// Refuses `d` if any of `present` has the same name or shares an ISA letter.
pub fn check_against<'a>(
    present: impl IntoIterator<Item = &'a ModuleDescriptor>,
    d: &ModuleDescriptor,
) -> Result<(), RegisterError> {
    for m in present {
        if m.name == d.name {
            return Err(RegisterError::DuplicateName(d.name.clone()));
        }
        if let Some(letter) = d.isa_letters.chars().find(|&l| m.isa_letters.contains(l)) {
            return Err(RegisterError::LetterConflict { module: d.name.clone(), letter, holder: m.name.clone() });
        }
    }
    Ok(())
}

/// Per-step context behind the accessor table's `ctx` pointer.
struct StepCtx<'a> {
    state: &'a mut ArchState,
}

mod accessors {
    use super::*;

    #[inline]
    unsafe fn state<'a>(ctx: *mut c_void) -> &'a mut ArchState {
        (*(ctx as *mut StepCtx<'a>)).state
    }

    pub unsafe extern "C" fn read_gpr(ctx: *mut c_void, idx: u32) -> u64 {
        state(ctx).gpr(idx as u8)
    }
    pub unsafe extern "C" fn write_gpr(ctx: *mut c_void, idx: u32, value: u64) {
        state(ctx).set_gpr(idx as u8, value)
    }
    pub unsafe extern "C" fn read_pc(ctx: *mut c_void) -> u64 {
        state(ctx).pc
    }
    pub unsafe extern "C" fn write_pc(ctx: *mut c_void, pc: u64) {
        state(ctx).next_pc = Some(pc);
    }
    pub unsafe extern "C" fn mem_load(ctx: *mut c_void, addr: u64, size: u32, out: *mut u64) -> u32 {
        if !matches!(size, 1 | 2 | 4 | 8) || out.is_null() {
            return TrapCause::LoadAccessFault.code();
        }
        match state(ctx).load_mem(addr, size as u8) {
            Ok(v) => {
                *out = v;
                0
            }
            Err(t) => t.cause.code(),
        }
    }
    pub unsafe extern "C" fn mem_store(ctx: *mut c_void, addr: u64, size: u32, value: u64) -> u32 {
        if !matches!(size, 1 | 2 | 4 | 8) {
            return TrapCause::StoreAccessFault.code();
        }
        match state(ctx).store_mem(addr, size as u8, value) {
            Ok(()) => 0,
            Err(t) => t.cause.code(),
        }
    }
    pub unsafe extern "C" fn raise_trap(ctx: *mut c_void, cause: u32, tval: u64) {
        // Unknown causes from a module are reported as illegal instructions.
        let cause = TrapCause::from_code(cause).unwrap_or(TrapCause::IllegalInstruction);
        state(ctx).raise_trap(Trap::new(cause, tval))
    }
    pub unsafe extern "C" fn read_csr(ctx: *mut c_void, csr: u32, out: *mut u64) -> u32 {
        match (u16::try_from(csr).ok().and_then(|c| state(ctx).read_csr(c)), out.is_null()) {
            (Some(v), false) => {
                *out = v;
                0
            }
            _ => 1,
        }
    }
    pub unsafe extern "C" fn write_csr(ctx: *mut c_void, csr: u32, value: u64) -> u32 {
        match u16::try_from(csr) {
            Ok(c) if state(ctx).write_csr(c, value) => 0,
            _ => 1,
        }
    }
}

/// Runs `f` with an accessor table bound to `state`.
fn with_state_access<R>(state: &mut ArchState, f: impl FnOnce(&StateAccess) -> R) -> R {
    let mut ctx = StepCtx { state };
    let table = StateAccess {
        ctx: &mut ctx as *mut StepCtx<'_> as *mut c_void,
        read_gpr: accessors::read_gpr,
        write_gpr: accessors::write_gpr,
        read_pc: accessors::read_pc,
        write_pc: accessors::write_pc,
        mem_load: accessors::mem_load,
        mem_store: accessors::mem_store,
        raise_trap: accessors::raise_trap,
        read_csr: accessors::read_csr,
        write_csr: accessors::write_csr,
    };
    f(&table)
}

/// A module's decoded AST for one word. The handle is killed on drop, so it
/// never outlives the step that created it.
pub struct ModuleAst<'r> {
    module: &'r ModuleDescriptor,
    handle: AstHandle,
}

impl<'r> ModuleAst<'r> {
    pub fn module(&self) -> &'r ModuleDescriptor {
        self.module
    }

    pub fn print(&self) -> String {
        self.module.print(&self.handle)
    }

    pub fn execute(&self, state: &mut ArchState) -> Result<Retired, ContractViolation> {
        let raw = with_state_access(state, |sa| unsafe { (self.module.entries.execute)(&self.handle, sa) });
        Retired::from_raw(raw).ok_or_else(|| ContractViolation {
            module: self.module.name.clone(),
            detail: format!("execute returned {raw}"),
        })
    }
}

impl Drop for ModuleAst<'_> {
    fn drop(&mut self) {
        unsafe { (self.module.entries.ast_kill)(self.handle) }
    }
}

/// A module broke the ABI contract during a step.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("module `{module}` violated the ABI: {detail}")]
pub struct ContractViolation {
    pub module: String,
    pub detail: String,
}

/// Result of running a word through the dispatch chain.
pub enum Claim<'r> {
    Module(ModuleAst<'r>),
    Base(BaseInsn),
    /// Nobody decodes the word.
    None,
}

impl Claim<'_> {
    /// Name of the owner: module name, `base`, or `none`.
    pub fn owner(&self) -> &str {
        match self {
            Claim::Module(ast) => &ast.module.name,
            Claim::Base(_) => "base",
            Claim::None => "none",
        }
    }
}

/// Ordered set of registered modules. Extension decoders are consulted in
/// registration order before the base decoder.
#[derive(Default)]
pub struct Registry {
    modules: Vec<ModuleDescriptor>,
    finalized: bool,
}

impl fmt::Debug for Registry {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_list().entries(self.modules.iter().map(|m| &m.name)).finish()
    }
}

impl Registry {
    pub fn new() -> Self {
        Registry::default()
    }

    pub fn modules(&self) -> &[ModuleDescriptor] {
        &self.modules
    }

    pub fn is_empty(&self) -> bool {
        self.modules.is_empty()
    }

    /// Checks a descriptor against the registry without registering it.
    pub fn check(&self, d: &ModuleDescriptor) -> Result<(), RegisterError> {
        check_against(&self.modules, d)
    }

    /// Appends a module, sets its misa bits and runs its `init`.
    pub fn register(&mut self, d: ModuleDescriptor, state: &mut ArchState) -> Result<(), RegisterError> {
        self.check(&d)?;
        for letter in d.isa_letters.chars() {
            state.csrs.misa |= misa_bit(letter);
        }
        let init = d.entries.init;
        self.modules.push(d);
        self.finalized = false;
        with_state_access(state, |sa| unsafe { init(sa) });
        Ok(())
    }

    /// True for `'I'` and for any letter a registered module claims.
    pub fn isa_query(&self, letter: char) -> bool {
        letter == 'I' || self.modules.iter().any(|m| m.isa_letters.contains(letter))
    }

    /// Finds the owner of `word`: the first module (in registration order)
    /// whose decoder claims it, else the base decoder, else nobody.
    ///
    /// With `strict`, every decoder is probed and more than one claimant is
    /// an error.
    #[inline]
    pub fn dispatch_decode(&self, word: u32, strict: bool) -> Result<Claim<'_>, OverlapError> {
        if strict {
            return self.dispatch_strict(word);
        }
        if let Some(ast) = self.first_claim(word) {
            return Ok(Claim::Module(ast));
        }
        Ok(match decode_base(word) {
            BaseInsn::Illegal(_) => Claim::None,
            insn => Claim::Base(insn),
        })
    }

    /// The first module, in registration order, that claims `word`.
    #[inline]
    pub fn first_claim(&self, word: u32) -> Option<ModuleAst<'_>> {
        self.modules.iter().find_map(|m| probe(m, word))
    }

    fn dispatch_strict(&self, word: u32) -> Result<Claim<'_>, OverlapError> {
        let mut claims: Vec<ModuleAst<'_>> = self.modules.iter().filter_map(|m| probe(m, word)).collect();
        let base = match decode_base(word) {
            BaseInsn::Illegal(_) => None,
            insn => Some(insn),
        };
        if claims.len() + base.is_some() as usize > 1 {
            let mut claimants: Vec<String> = claims.iter().map(|c| c.module.name.clone()).collect();
            if base.is_some() {
                claimants.push("base".into());
            }
            return Err(OverlapError { word, claimants });
        }
        Ok(match (claims.pop(), base) {
            (Some(ast), _) => Claim::Module(ast),
            (None, Some(insn)) => Claim::Base(insn),
            (None, None) => Claim::None,
        })
    }

    /// Calls every module's `fini` in reverse registration order and empties
    /// the registry. Further calls do nothing.
    pub fn host_fini(&mut self) {
        if self.finalized {
            return;
        }
        self.finalized = true;
        while let Some(m) = self.modules.pop() {
            unsafe { (m.entries.fini)() };
        }
    }
}

impl Drop for Registry {
    fn drop(&mut self) {
        self.host_fini();
    }
}

#[inline]
fn probe(m: &ModuleDescriptor, word: u32) -> Option<ModuleAst<'_>> {
    let mut handle = unsafe { (m.entries.ast_create)() };
    let claimed = unsafe { (m.entries.decode)(&mut handle, word) } != 0;
    let ast = ModuleAst { module: m, handle };
    // Dropping an unclaimed AST kills its handle.
    claimed.then_some(ast)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::DEFAULT_MEM_BASE;
    use modsim_abi::{Extension, Hart, ABI_VERSION};
    use std::sync::Mutex;

    fn state() -> ArchState {
        ArchState::new(DEFAULT_MEM_BASE, 4096)
    }

    static LOG: Mutex<Vec<&'static str>> = Mutex::new(Vec::new());

    macro_rules! test_ext {
        ($ty:ident, $name:literal, $letters:literal, $word:expr) => {
            struct $ty;
            impl Extension for $ty {
                const NAME: &'static CStr = $name;
                const ISA_LETTERS: &'static CStr = $letters;
                type Ast = ();
                fn decode(word: u32) -> Option<()> {
                    (word == $word).then_some(())
                }
                fn execute<H: Hart + ?Sized>(_: (), h: &mut H) -> Retired {
                    h.write_gpr(1, 0xAB);
                    Retired::Success
                }
                fn disasm(_: ()) -> String {
                    stringify!($ty).to_lowercase()
                }
                fn pack(_: ()) -> u64 {
                    0
                }
                fn unpack(_: u64) {}
                fn fini() {
                    LOG.lock().unwrap().push(stringify!($ty));
                }
            }
        };
    }

    test_ext!(Alpha, c"alpha", c"X", 0x0000_000B);
    test_ext!(Beta, c"beta", c"Y", 0x0000_000B);
    test_ext!(AlphaTwin, c"alpha", c"Z", 0x0000_002B);
    test_ext!(XClaimer, c"xclaimer", c"XQ", 0x0000_002B);

    static ALPHA: ModuleEntry = ModuleEntry::for_extension::<Alpha>(ABI_VERSION);
    static BETA: ModuleEntry = ModuleEntry::for_extension::<Beta>(ABI_VERSION);
    static ALPHA_TWIN: ModuleEntry = ModuleEntry::for_extension::<AlphaTwin>(ABI_VERSION);
    static X_CLAIMER: ModuleEntry = ModuleEntry::for_extension::<XClaimer>(ABI_VERSION);
    static ALPHA_V2: ModuleEntry = ModuleEntry::for_extension::<Alpha>(2);

    fn desc(e: &'static ModuleEntry) -> ModuleDescriptor {
        unsafe { ModuleDescriptor::from_entry(e, Origin::StaticRegistered, None).unwrap() }
    }

    #[test]
    fn register_sets_misa_and_queries() {
        let mut s = state();
        let mut reg = Registry::new();
        assert!(reg.isa_query('I'));
        assert!(!reg.isa_query('X'));
        reg.register(desc(&ALPHA), &mut s).unwrap();
        assert!(reg.isa_query('X'));
        assert!(!reg.isa_query('V'));
        assert_ne!(s.csrs.misa & misa_bit('X'), 0);
    }

    #[test]
    fn in_process_matches_static_record() {
        let d = ModuleDescriptor::in_process::<Beta>().unwrap();
        assert_eq!(d.list_line(), desc(&BETA).list_line());
        let mut reg = Registry::new();
        reg.register(d, &mut state()).unwrap();
        assert_eq!(reg.dispatch_decode(0x0000_000B, false).unwrap().owner(), "beta");
    }

    #[test]
    fn duplicate_and_conflicting_modules_are_refused() {
        let mut s = state();
        let mut reg = Registry::new();
        reg.register(desc(&ALPHA), &mut s).unwrap();
        assert_eq!(reg.register(desc(&ALPHA_TWIN), &mut s), Err(RegisterError::DuplicateName("alpha".into())));
        assert!(matches!(
            reg.register(desc(&X_CLAIMER), &mut s),
            Err(RegisterError::LetterConflict { letter: 'X', .. })
        ));
        assert_eq!(reg.modules().len(), 1);
    }

    #[test]
    fn first_registered_claimant_wins() {
        let mut s = state();
        let mut reg = Registry::new();
        reg.register(desc(&BETA), &mut s).unwrap();
        reg.register(desc(&ALPHA), &mut s).unwrap();
        let claim = reg.dispatch_decode(0xB, false).unwrap();
        assert_eq!(claim.owner(), "beta");
        drop(claim);
        assert_eq!(reg.dispatch_decode(0x0050_0093, false).unwrap().owner(), "base");
        assert_eq!(reg.dispatch_decode(0xFFFF_FFFF, false).unwrap().owner(), "none");
    }

    #[test]
    fn strict_mode_reports_every_claimant() {
        let mut s = state();
        let mut reg = Registry::new();
        reg.register(desc(&ALPHA), &mut s).unwrap();
        reg.register(desc(&BETA), &mut s).unwrap();
        let err = reg.dispatch_decode(0xB, true).err().unwrap();
        assert_eq!(err.claimants, vec!["alpha".to_string(), "beta".to_string()]);
        assert_eq!(reg.dispatch_decode(0x0050_0093, true).unwrap().owner(), "base");
    }

    #[test]
    fn version_is_checked_first() {
        let err = unsafe { ModuleDescriptor::from_entry(&ALPHA_V2, Origin::StaticRegistered, None) }.unwrap_err();
        assert_eq!(err, InvalidModule::VersionMismatch { found: 2, expected: 1 });
        assert_eq!(err.to_string(), "ABI version mismatch (found 2, expected 1)");
    }

    #[test]
    fn incomplete_table_is_refused() {
        let mut table = ModuleEntry::for_extension::<Alpha>(ABI_VERSION);
        table.entry_points.print_insn = None;
        table.entry_points.fini = None;
        let err = unsafe { ModuleDescriptor::from_entry(&table, Origin::StaticRegistered, None) }.unwrap_err();
        assert_eq!(err, InvalidModule::IncompleteTable(vec!["print_insn", "fini"]));
    }

    #[test]
    fn fini_runs_in_reverse_order_once() {
        LOG.lock().unwrap().clear();
        let mut s = state();
        let mut reg = Registry::new();
        reg.register(desc(&ALPHA), &mut s).unwrap();
        reg.register(desc(&BETA), &mut s).unwrap();
        reg.host_fini();
        reg.host_fini();
        drop(reg);
        let log = LOG.lock().unwrap().clone();
        let ours: Vec<_> = log.into_iter().filter(|n| *n == "Alpha" || *n == "Beta").collect();
        assert_eq!(ours, vec!["Beta", "Alpha"]);
        Registry::new().host_fini();
    }

    #[test]
    fn module_execution_goes_through_accessors() {
        let mut s = state();
        let mut reg = Registry::new();
        reg.register(desc(&ALPHA), &mut s).unwrap();
        let Claim::Module(ast) = reg.dispatch_decode(0xB, false).unwrap() else {
            panic!("alpha should claim");
        };
        assert_eq!(ast.print(), "alpha");
        assert_eq!(ast.execute(&mut s), Ok(Retired::Success));
        assert_eq!(s.gpr(1), 0xAB);
    }
}
