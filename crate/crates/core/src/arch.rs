//! Shared architectural state: pc, integer registers, the machine CSR subset,
//! flat memory and trap entry.
//!
//! Base instructions operate on [`ArchState`] directly. Extension modules see
//! it through [`Hart`], either implemented here (compiled-in execution) or
//! through the accessor table built in [`crate::ext`].

use std::fmt;

use modsim_abi::{Hart, TrapCause};
use sha2::{Digest, Sha256};

pub const DEFAULT_MEM_BASE: u64 = 0x8000_0000;
pub const DEFAULT_MEM_SIZE: u64 = 64 << 20;

/// Exit status reported when a trap is taken with `mtvec == 0`.
pub const FATAL_TRAP_EXIT: i32 = 133;

pub mod csr {
    pub const MISA: u16 = 0x301;
    pub const MTVEC: u16 = 0x305;
    pub const MEPC: u16 = 0x341;
    pub const MCAUSE: u16 = 0x342;
    pub const MTVAL: u16 = 0x343;
    pub const MCYCLE: u16 = 0xB00;
    pub const MINSTRET: u16 = 0xB02;
    pub const MHARTID: u16 = 0xF14;
}

/// MXL = 2 (64-bit) in misa[63:62].
const MISA_MXL_64: u64 = 2 << 62;

/// misa bit for an ISA letter (`'A'` is bit 0).
pub fn misa_bit(letter: char) -> u64 {
    debug_assert!(letter.is_ascii_uppercase());
    1 << (letter as u8 - b'A')
}

/// misa value for the base plus the given extension letters.
pub fn misa_for<I: IntoIterator<Item = char>>(letters: I) -> u64 {
    letters.into_iter().fold(MISA_MXL_64 | misa_bit('I'), |acc, l| acc | misa_bit(l))
}

/// A trap to be taken: cause plus the value written to mtval.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Trap {
    pub cause: TrapCause,
    pub tval: u64,
}

impl Trap {
    pub fn new(cause: TrapCause, tval: u64) -> Self {
        Trap { cause, tval }
    }

    pub fn illegal(word: u32) -> Self {
        Trap::new(TrapCause::IllegalInstruction, word as u64)
    }
}

/// Why the hart stopped.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Halt {
    /// Exit requested through tohost; the payload is `value >> 1`.
    Exit(u64),
    /// A trap was taken with no handler installed.
    FatalTrap,
}

impl Halt {
    pub fn exit_code(self) -> i32 {
        match self {
            Halt::Exit(code) => code as i32,
            Halt::FatalTrap => FATAL_TRAP_EXIT,
        }
    }
}

/// Machine CSRs. `mcycle` and `minstret` are not stored here: both read the
/// retired-instruction counter on [`ArchState`].
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct CsrFile {
    pub misa: u64,
    pub mhartid: u64,
    pub mtvec: u64,
    pub mepc: u64,
    pub mcause: u64,
    pub mtval: u64,
}

/// Byte-addressable flat memory `[base, base + len)`.
#[derive(Clone)]
pub struct Memory {
    base: u64,
    bytes: Vec<u8>,
}

impl fmt::Debug for Memory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Memory")
            .field("base", &format_args!("{:#x}", self.base))
            .field("len", &self.bytes.len())
            .finish()
    }
}

impl Memory {
    pub fn new(base: u64, len: u64) -> Self {
        Memory { base, bytes: vec![0; len as usize] }
    }

    pub fn base(&self) -> u64 {
        self.base
    }

    pub fn len(&self) -> u64 {
        self.bytes.len() as u64
    }

    pub fn is_empty(&self) -> bool {
        self.bytes.is_empty()
    }

    pub fn contains(&self, addr: u64, size: u64) -> bool {
        self.offset(addr, size).is_some()
    }

    #[inline]
    fn offset(&self, addr: u64, size: u64) -> Option<usize> {
        let off = addr.checked_sub(self.base)?;
        let end = off.checked_add(size)?;
        (end <= self.bytes.len() as u64).then_some(off as usize)
    }

    #[inline]
    pub fn read(&self, addr: u64, size: u8) -> Option<u64> {
        let off = self.offset(addr, size as u64)?;
        let b = &self.bytes[off..off + size as usize];
        Some(match size {
            1 => b[0] as u64,
            2 => u16::from_le_bytes([b[0], b[1]]) as u64,
            4 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as u64,
            8 => u64::from_le_bytes(b.try_into().unwrap()),
            _ => unreachable!("access size {size}"),
        })
    }

    #[inline]
    pub fn write(&mut self, addr: u64, size: u8, value: u64) -> bool {
        match self.offset(addr, size as u64) {
            Some(off) => {
                self.bytes[off..off + size as usize].copy_from_slice(&value.to_le_bytes()[..size as usize]);
                true
            }
            None => false,
        }
    }

    /// Copies `data` in at `addr`; false if any byte falls outside.
    pub fn write_bytes(&mut self, addr: u64, data: &[u8]) -> bool {
        match self.offset(addr, data.len() as u64) {
            Some(off) => {
                self.bytes[off..off + data.len()].copy_from_slice(data);
                true
            }
            None => false,
        }
    }

    pub fn read_bytes(&self, addr: u64, len: usize) -> Option<&[u8]> {
        let off = self.offset(addr, len as u64)?;
        Some(&self.bytes[off..off + len])
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum AccessKind {
    Load,
    Store,
}

/// SHA-256 over pc, x0..x31, the CSR file, mcycle and minstret (little-endian,
/// in that order). Memory is not included.
#[derive(Clone, Copy, PartialEq, Eq, Hash)]
pub struct StateDigest(pub [u8; 32]);

impl fmt::Display for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for b in self.0 {
            write!(f, "{b:02x}")?;
        }
        Ok(())
    }
}

impl fmt::Debug for StateDigest {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "StateDigest({self})")
    }
}

#[derive(Debug, Clone)]
pub struct ArchState {
    pub pc: u64,
    gprs: [u64; 32],
    pub mem: Memory,
    pub csrs: CsrFile,
    /// Retired-instruction counter, also visible as mcycle.
    pub minstret: u64,
    pub halted: Option<Halt>,
    /// Address whose 8-byte odd-valued stores stop the run.
    pub tohost: Option<u64>,

    // Per-step bookkeeping, reset by `begin_step`.
    pub(crate) next_pc: Option<u64>,
    pub(crate) last_write: Option<(u8, u64)>,
    pub(crate) traps_this_step: u32,
    pub(crate) last_trap: Option<Trap>,
}

impl ArchState {
    /// Reset state: all registers and CSRs zero except misa (base only).
    pub fn new(mem_base: u64, mem_size: u64) -> Self {
        ArchState {
            pc: mem_base,
            gprs: [0; 32],
            mem: Memory::new(mem_base, mem_size),
            csrs: CsrFile { misa: misa_for([]), ..CsrFile::default() },
            minstret: 0,
            halted: None,
            tohost: None,
            next_pc: None,
            last_write: None,
            traps_this_step: 0,
            last_trap: None,
        }
    }

    #[inline]
    pub fn gpr(&self, idx: u8) -> u64 {
        // x0 is never written, so it always reads 0.
        self.gprs[idx as usize & 31]
    }

    #[inline]
    pub fn set_gpr(&mut self, idx: u8, value: u64) {
        if idx != 0 {
            self.gprs[idx as usize & 31] = value;
            self.last_write = Some((idx, value));
        }
    }

    pub fn gprs(&self) -> &[u64; 32] {
        &self.gprs
    }

    /// Load or store of `size` bytes. Loads return the zero-extended value;
    /// stores return 0. Misaligned addresses are fine; anything not fully
    /// inside memory is an access fault with `tval = addr`.
    pub fn mem_access(&mut self, addr: u64, size: u8, kind: AccessKind, value: u64) -> Result<u64, Trap> {
        assert!(matches!(size, 1 | 2 | 4 | 8), "access size {size}");
        match kind {
            AccessKind::Load => self.load_mem(addr, size),
            AccessKind::Store => self.store_mem(addr, size, value).map(|()| 0),
        }
    }

    #[inline]
    pub fn load_mem(&self, addr: u64, size: u8) -> Result<u64, Trap> {
        self.mem.read(addr, size).ok_or(Trap::new(TrapCause::LoadAccessFault, addr))
    }

    #[inline]
    pub fn store_mem(&mut self, addr: u64, size: u8, value: u64) -> Result<(), Trap> {
        if !self.mem.write(addr, size, value) {
            return Err(Trap::new(TrapCause::StoreAccessFault, addr));
        }
        if size == 8 && Some(addr) == self.tohost && value & 1 == 1 {
            self.halted = Some(Halt::Exit(value >> 1));
        }
        Ok(())
    }

    #[inline]
    pub fn fetch(&self, pc: u64) -> Result<u32, Trap> {
        self.mem.read(pc, 4).map(|w| w as u32).ok_or(Trap::new(TrapCause::LoadAccessFault, pc))
    }

    /// Direct-mode trap entry. With no handler (`mtvec == 0`) the hart halts
    /// with [`Halt::FatalTrap`] after recording the cause.
    pub fn raise_trap(&mut self, trap: Trap) {
        self.csrs.mepc = self.pc;
        self.csrs.mcause = trap.cause.code() as u64;
        self.csrs.mtval = trap.tval;
        self.traps_this_step += 1;
        self.last_trap = Some(trap);
        let target = self.csrs.mtvec & !3;
        if target == 0 {
            self.halted = Some(Halt::FatalTrap);
        } else {
            self.pc = target;
        }
    }

    pub fn read_csr(&self, addr: u16) -> Option<u64> {
        Some(match addr {
            csr::MISA => self.csrs.misa,
            csr::MHARTID => self.csrs.mhartid,
            csr::MTVEC => self.csrs.mtvec,
            csr::MEPC => self.csrs.mepc,
            csr::MCAUSE => self.csrs.mcause,
            csr::MTVAL => self.csrs.mtval,
            csr::MCYCLE | csr::MINSTRET => self.minstret,
            _ => return None,
        })
    }

    /// False for unimplemented and read-only CSRs. Writes to misa and the
    /// counters are accepted and ignored.
    pub fn write_csr(&mut self, addr: u16, value: u64) -> bool {
        match addr {
            csr::MISA | csr::MCYCLE | csr::MINSTRET => {}
            csr::MTVEC => self.csrs.mtvec = value & !3,
            csr::MEPC => self.csrs.mepc = value & !3,
            csr::MCAUSE => self.csrs.mcause = value,
            csr::MTVAL => self.csrs.mtval = value,
            _ => return false,
        }
        true
    }

    pub fn snapshot(&self) -> StateDigest {
        let mut h = Sha256::new();
        h.update(self.pc.to_le_bytes());
        for r in &self.gprs {
            h.update(r.to_le_bytes());
        }
        let c = &self.csrs;
        for v in [c.misa, c.mhartid, c.mtvec, c.mepc, c.mcause, c.mtval, self.minstret, self.minstret] {
            h.update(v.to_le_bytes());
        }
        StateDigest(h.finalize().into())
    }

    #[inline]
    pub(crate) fn begin_step(&mut self) {
        self.next_pc = None;
        self.last_write = None;
        self.traps_this_step = 0;
        self.last_trap = None;
    }
}

impl Hart for ArchState {
    #[inline]
    fn read_gpr(&self, idx: u8) -> u64 {
        self.gpr(idx)
    }

    #[inline]
    fn write_gpr(&mut self, idx: u8, value: u64) {
        self.set_gpr(idx, value)
    }

    fn read_pc(&self) -> u64 {
        self.pc
    }

    /// Takes effect when the instruction retires.
    fn write_pc(&mut self, pc: u64) {
        self.next_pc = Some(pc);
    }

    fn load(&mut self, addr: u64, size: u8) -> Result<u64, TrapCause> {
        self.load_mem(addr, size).map_err(|t| t.cause)
    }

    fn store(&mut self, addr: u64, size: u8, value: u64) -> Result<(), TrapCause> {
        self.store_mem(addr, size, value).map_err(|t| t.cause)
    }

    fn raise_trap(&mut self, cause: TrapCause, tval: u64) {
        ArchState::raise_trap(self, Trap::new(cause, tval))
    }

    fn read_csr(&mut self, csr: u16) -> Option<u64> {
        ArchState::read_csr(self, csr)
    }

    fn write_csr(&mut self, csr: u16, value: u64) -> bool {
        ArchState::write_csr(self, csr, value)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn state() -> ArchState {
        ArchState::new(DEFAULT_MEM_BASE, 1 << 16)
    }

    #[test]
    fn x0_is_hardwired() {
        let mut s = state();
        s.set_gpr(0, 42);
        assert_eq!(s.gpr(0), 0);
        assert_eq!(s.last_write, None);
    }

    #[test]
    fn gpr_read_after_write() {
        let mut s = state();
        assert_eq!(s.gpr(17), 0);
        s.set_gpr(5, 0xDEAD_BEEF);
        assert_eq!(s.gpr(5), 0x0000_0000_DEAD_BEEF);
        s.set_gpr(31, u64::MAX);
        assert_eq!(s.gpr(31), 0xFFFF_FFFF_FFFF_FFFF);
    }

    #[test]
    fn memory_round_trips_and_bounds() {
        let mut s = state();
        s.mem_access(0x8000_0000, 4, AccessKind::Store, 0x0220_8233).unwrap();
        assert_eq!(s.mem_access(0x8000_0000, 4, AccessKind::Load, 0), Ok(0x0220_8233));

        s.mem_access(0x8000_0001, 4, AccessKind::Store, 0xAABB_CCDD).unwrap();
        assert_eq!(s.mem_access(0x8000_0001, 4, AccessKind::Load, 0), Ok(0xAABB_CCDD));

        let end = s.mem.base() + s.mem.len();
        assert_eq!(s.mem_access(end, 1, AccessKind::Load, 0), Err(Trap::new(TrapCause::LoadAccessFault, end)));
        assert_eq!(
            s.mem_access(end - 4, 8, AccessKind::Store, 0),
            Err(Trap::new(TrapCause::StoreAccessFault, end - 4))
        );
        assert_eq!(
            s.mem_access(0x7FFF_FFFF, 2, AccessKind::Load, 0),
            Err(Trap::new(TrapCause::LoadAccessFault, 0x7FFF_FFFF))
        );
        assert!(s.load_mem(u64::MAX, 8).is_err());
    }

    #[test]
    fn trap_with_handler_sets_csrs_and_redirects() {
        let mut s = state();
        s.csrs.mtvec = 0x8000_1000;
        s.pc = 0x8000_0004;
        s.raise_trap(Trap::illegal(0xFFFF_FFFF));
        assert_eq!(s.csrs.mepc, 0x8000_0004);
        assert_eq!(s.csrs.mcause, 2);
        assert_eq!(s.csrs.mtval, 0xFFFF_FFFF);
        assert_eq!(s.pc, 0x8000_1000);
        assert_eq!(s.halted, None);

        // No nesting: a second trap overwrites.
        s.raise_trap(Trap::new(TrapCause::Breakpoint, 7));
        assert_eq!(s.csrs.mepc, 0x8000_1000);
        assert_eq!(s.csrs.mcause, 3);
        assert_eq!(s.csrs.mtval, 7);
    }

    #[test]
    fn trap_without_handler_is_fatal() {
        let mut s = state();
        s.pc = 0x8000_0010;
        s.raise_trap(Trap::new(TrapCause::EnvCallFromM, 0));
        assert_eq!(s.halted, Some(Halt::FatalTrap));
        assert_eq!(s.halted.unwrap().exit_code(), 133);
        assert_eq!(s.csrs.mcause, 11);
        assert_eq!(s.pc, 0x8000_0010);
    }

    #[test]
    fn tohost_store_halts() {
        let mut s = state();
        s.tohost = Some(0x8000_0100);
        s.store_mem(0x8000_0100, 4, 1).unwrap();
        assert_eq!(s.halted, None);
        s.store_mem(0x8000_0100, 8, 2).unwrap();
        assert_eq!(s.halted, None);
        s.store_mem(0x8000_0100, 8, 15).unwrap();
        assert_eq!(s.halted, Some(Halt::Exit(7)));
    }

    #[test]
    fn misa_layout() {
        let base = misa_for([]);
        assert_eq!(base >> 62, 2);
        assert_eq!(base & (1 << 8), 1 << 8);
        assert_eq!(misa_for(['M']) & (1 << 12), 1 << 12);
    }

    #[test]
    fn csr_access_rules() {
        let mut s = state();
        assert_eq!(s.read_csr(csr::MHARTID), Some(0));
        assert!(!s.write_csr(csr::MHARTID, 1));
        assert!(s.write_csr(csr::MINSTRET, 99));
        assert_eq!(s.read_csr(csr::MINSTRET), Some(0));
        assert_eq!(s.read_csr(0x340), None);
        assert!(!s.write_csr(0x340, 1));
    }

    #[test]
    fn snapshot_is_deterministic_and_sensitive() {
        let a = state();
        let mut b = state();
        assert_eq!(a.snapshot(), b.snapshot());
        b.set_gpr(1, 1);
        assert_ne!(a.snapshot(), b.snapshot());
    }

    proptest! {
        #[test]
        fn gpr_write_read(idx in 0u8..32, v: u64) {
            let mut s = state();
            s.set_gpr(idx, v);
            prop_assert_eq!(s.gpr(idx), if idx == 0 { 0 } else { v });
        }

        #[test]
        fn store_then_load(off in 0u64..(1 << 16) - 8, size in prop::sample::select(vec![1u8, 2, 4, 8]), v: u64) {
            let mut s = state();
            let addr = DEFAULT_MEM_BASE + off;
            s.store_mem(addr, size, v).unwrap();
            let mask = if size == 8 { u64::MAX } else { (1u64 << (8 * size as u32)) - 1 };
            prop_assert_eq!(s.load_mem(addr, size).unwrap(), v & mask);
        }

        #[test]
        fn trap_leaves_registers_and_memory(v: u64, cause in prop::sample::select(vec![2u32, 3, 5, 7, 11])) {
            let mut s = state();
            s.set_gpr(3, v);
            s.store_mem(DEFAULT_MEM_BASE, 8, v).unwrap();
            let before = *s.gprs();
            s.raise_trap(Trap::new(TrapCause::from_code(cause).unwrap(), v));
            prop_assert_eq!(*s.gprs(), before);
            prop_assert_eq!(s.load_mem(DEFAULT_MEM_BASE, 8).unwrap(), v);
        }
    }
}
