//! Generated test programs and benchmark workloads.
//!
//! Every program is a bare-metal image that starts at the memory base and
//! exits through `tohost`. Base programs use only RV64I and Zicsr, and never
//! read `misa`, so their traces do not depend on which extensions are bound.

use std::fmt;
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::arch::{csr, DEFAULT_MEM_BASE};
use crate::asm::{self, Assembler, Image};
use crate::elf::write_elf;

// Register roles shared by all generated programs.
const RA: u8 = 1;
const SP: u8 = 2;
const GP: u8 = 3; // scratch buffer base
const LOOP: u8 = 4; // loop counter
const ACC: u8 = 10; // checksum
const TMP: u8 = 29;
const TRAP_TMP: u8 = 30;
const TRAP_COUNT: u8 = 31;

/// Registers the random generators may write.
const FREE: std::ops::RangeInclusive<u8> = 5..=28;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ProgramKind {
    Base,
    M,
    Zbb,
}

impl fmt::Display for ProgramKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProgramKind::Base => "base",
            ProgramKind::M => "m",
            ProgramKind::Zbb => "zbb",
        })
    }
}

#[derive(Debug, Clone)]
pub struct Program {
    pub name: String,
    pub kind: ProgramKind,
    pub image: Image,
}

impl Program {
    pub fn elf(&self) -> Vec<u8> {
        write_elf(&self.image)
    }

    /// Writes `<dir>/<name>.elf` and returns its path.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<PathBuf> {
        let path = dir.join(format!("{}.elf", self.name));
        std::fs::write(&path, self.elf())?;
        Ok(path)
    }
}

fn program(name: impl Into<String>, kind: ProgramKind, a: Assembler) -> Program {
    let image = a.finish().unwrap_or_else(|e| panic!("generated program does not assemble: {e}"));
    Program { name: name.into(), kind, image }
}

/// Stack, scratch buffer, and optionally a trap handler that counts traps in
/// x31 and resumes after the faulting instruction.
fn prologue(a: &mut Assembler, with_handler: bool) {
    a.la(SP, "stack_top").la(GP, "scratch");
    if with_handler {
        a.la(TRAP_TMP, "trap_handler").emit(asm::csrrw(0, csr::MTVEC, TRAP_TMP));
    }
}

/// Folds every register in `regs` into the checksum, stores it and exits.
fn epilogue(a: &mut Assembler, regs: impl IntoIterator<Item = u8>) {
    for r in regs {
        fold(a, r);
    }
    a.emit(asm::sd(ACC, GP, 0));
    a.exit(0, TMP, 28);
}

/// acc = acc * 31 + r, with shifts only.
fn fold(a: &mut Assembler, r: u8) {
    a.emit(asm::slli(TMP, ACC, 5)).emit(asm::sub(ACC, TMP, ACC)).emit(asm::add(ACC, ACC, r));
}

fn trap_handler(a: &mut Assembler) {
    a.label("trap_handler")
        .emit(asm::addi(TRAP_COUNT, TRAP_COUNT, 1))
        .emit(asm::csrrs(TRAP_TMP, csr::MEPC, 0))
        .emit(asm::addi(TRAP_TMP, TRAP_TMP, 4))
        .emit(asm::jalr(0, TRAP_TMP, 0));
}

fn data(a: &mut Assembler) {
    a.align_data(8).data_label("scratch").zeros(4096);
    a.align_data(16).zeros(4096).data_label("stack_top").dwords(&[0]);
}

fn new_asm() -> Assembler {
    Assembler::new(DEFAULT_MEM_BASE)
}

const SPECIALS: [u64; 10] =
    [0, 1, 2, u64::MAX, i64::MIN as u64, i64::MAX as u64, 0x8000_0000, 0xFFFF_FFFF, 0x7FFF_FFFF, 0xDEAD_BEEF_0BAD_F00D];

// Base programs.

fn base_arith() -> Program {
    let mut a = new_asm();
    prologue(&mut a, false);
    a.li(5, 0x1234_5678_9ABC_DEF0).li(6, 0x0FED_CBA9_8765_4321).li(LOOP, 200);
    a.label("loop")
        .emit(asm::add(7, 5, 6))
        .emit(asm::sub(8, 5, 6))
        .emit(asm::xor(9, 7, 8))
        .emit(asm::or(11, 9, 5))
        .emit(asm::and(12, 11, 6))
        .emit(asm::slt(13, 8, 7))
        .emit(asm::sltu(14, 8, 7))
        .emit(asm::addw(15, 7, 8))
        .emit(asm::subw(16, 8, 9))
        .emit(asm::addiw(17, 16, -2048))
        .emit(asm::slti(18, 17, 0))
        .emit(asm::sltiu(19, 17, -1))
        .emit(asm::xori(20, 12, 0x5A5))
        .emit(asm::ori(21, 20, -16))
        .emit(asm::andi(22, 21, 0x7F0))
        .emit(asm::lui(23, 0x7FFF_F000))
        .emit(asm::auipc(24, 0x1000))
        .emit(asm::add(5, 12, 22))
        .emit(asm::xor(6, 6, 15))
        .emit(asm::addi(LOOP, LOOP, -1))
        .bne(LOOP, 0, "loop");
    epilogue(&mut a, 5..=23);
    data(&mut a);
    program("base-arith", ProgramKind::Base, a)
}

fn base_shifts() -> Program {
    let mut a = new_asm();
    prologue(&mut a, false);
    a.li(5, 0x8123_4567_89AB_CDEF).li(6, 0).li(7, 64);
    a.label("loop")
        .emit(asm::sll(8, 5, 6))
        .emit(asm::srl(9, 5, 6))
        .emit(asm::sra(11, 5, 6))
        .emit(asm::sllw(12, 5, 6))
        .emit(asm::srlw(13, 5, 6))
        .emit(asm::sraw(14, 5, 6))
        .emit(asm::add(ACC, ACC, 8))
        .emit(asm::xor(ACC, ACC, 9))
        .emit(asm::add(ACC, ACC, 11))
        .emit(asm::xor(ACC, ACC, 12))
        .emit(asm::add(ACC, ACC, 13))
        .emit(asm::xor(ACC, ACC, 14))
        .emit(asm::addi(6, 6, 1))
        .blt(6, 7, "loop");
    for sh in [0, 1, 7, 31, 32, 33, 63] {
        a.emit(asm::slli(15, 5, sh))
            .emit(asm::srli(16, 5, sh))
            .emit(asm::srai(17, 5, sh))
            .emit(asm::slliw(18, 5, sh))
            .emit(asm::srliw(19, 5, sh))
            .emit(asm::sraiw(20, 5, sh));
        for r in 15..=20 {
            fold(&mut a, r);
        }
    }
    epilogue(&mut a, [8, 9, 11, 12]);
    data(&mut a);
    program("base-shifts", ProgramKind::Base, a)
}

fn base_branches() -> Program {
    let mut a = new_asm();
    prologue(&mut a, false);
    // Walk pairs from a small table and count outcomes of each comparison.
    let vals: Vec<u64> = SPECIALS.iter().copied().chain([3, 0xFFFF_FFFF_FFFF_FFFE]).collect();
    a.la(5, "vals").li(6, vals.len() as u64).li(7, 0);
    a.label("outer").li(8, 0);
    a.label("inner")
        .emit(asm::slli(TMP, 7, 3))
        .emit(asm::add(TMP, TMP, 5))
        .emit(asm::ld(11, TMP, 0))
        .emit(asm::slli(TMP, 8, 3))
        .emit(asm::add(TMP, TMP, 5))
        .emit(asm::ld(12, TMP, 0));
    for (i, br) in ["beq", "bne", "blt", "bge", "bltu", "bgeu"].iter().enumerate() {
        let skip = format!("skip{i}");
        match *br {
            "beq" => a.beq(11, 12, &skip),
            "bne" => a.bne(11, 12, &skip),
            "blt" => a.blt(11, 12, &skip),
            "bge" => a.bge(11, 12, &skip),
            "bltu" => a.bltu(11, 12, &skip),
            _ => a.bgeu(11, 12, &skip),
        };
        a.emit(asm::addi(13 + i as u8, 13 + i as u8, 1)).label(&skip);
    }
    a.emit(asm::addi(8, 8, 1)).blt(8, 6, "inner").emit(asm::addi(7, 7, 1)).blt(7, 6, "outer");
    epilogue(&mut a, 13..=18);
    data(&mut a);
    a.data_label("vals").dwords(&vals);
    program("base-branches", ProgramKind::Base, a)
}

fn base_memory() -> Program {
    let mut a = new_asm();
    prologue(&mut a, false);
    a.li(5, 0x8081_8283_8485_8687).li(6, 0).li(7, 200);
    // Stores at every alignment, then every load width back.
    a.label("loop")
        .emit(asm::add(8, GP, 6))
        .emit(asm::sd(5, 8, 8))
        .emit(asm::sw(5, 8, 24))
        .emit(asm::sh(5, 8, 40))
        .emit(asm::sb(5, 8, 56))
        .emit(asm::lb(11, 8, 8))
        .emit(asm::lbu(12, 8, 9))
        .emit(asm::lh(13, 8, 10))
        .emit(asm::lhu(14, 8, 11))
        .emit(asm::lw(15, 8, 12))
        .emit(asm::lwu(16, 8, 13))
        .emit(asm::ld(17, 8, 24))
        .emit(asm::ld(18, 8, 37))
        .emit(asm::add(ACC, ACC, 11))
        .emit(asm::xor(ACC, ACC, 12))
        .emit(asm::add(ACC, ACC, 13))
        .emit(asm::xor(ACC, ACC, 14))
        .emit(asm::add(ACC, ACC, 15))
        .emit(asm::xor(ACC, ACC, 16))
        .emit(asm::add(ACC, ACC, 17))
        .emit(asm::xor(ACC, ACC, 18))
        .emit(asm::addi(5, 5, 0x1F3))
        .emit(asm::addi(6, 6, 1))
        .blt(6, 7, "loop");
    epilogue(&mut a, [11, 12, 13, 14, 15, 16, 17, 18]);
    data(&mut a);
    program("base-memory", ProgramKind::Base, a)
}

fn base_calls() -> Program {
    // Recursive fib(16) through a real stack frame.
    let mut a = new_asm();
    prologue(&mut a, false);
    a.li(ACC, 16).call("fib").emit(asm::addi(5, ACC, 0)).li(ACC, 0);
    epilogue(&mut a, [5]);
    a.label("fib")
        .li(TMP, 2)
        .blt(ACC, TMP, "fib_base")
        .emit(asm::addi(SP, SP, -24))
        .emit(asm::sd(RA, SP, 0))
        .emit(asm::sd(ACC, SP, 8))
        .emit(asm::addi(ACC, ACC, -1))
        .call("fib")
        .emit(asm::sd(ACC, SP, 16))
        .emit(asm::ld(ACC, SP, 8))
        .emit(asm::addi(ACC, ACC, -2))
        .call("fib")
        .emit(asm::ld(TMP, SP, 16))
        .emit(asm::add(ACC, ACC, TMP))
        .emit(asm::ld(RA, SP, 0))
        .emit(asm::addi(SP, SP, 24))
        .label("fib_base")
        .ret();
    data(&mut a);
    program("base-calls", ProgramKind::Base, a)
}

fn base_csr() -> Program {
    let mut a = new_asm();
    prologue(&mut a, true);
    a.li(5, 0x8000_1237)
        .emit(asm::csrrw(6, csr::MEPC, 5))
        .emit(asm::csrrs(7, csr::MEPC, 0))
        .emit(asm::csrrwi(8, csr::MCAUSE, 17))
        .emit(asm::csrrsi(9, csr::MCAUSE, 8))
        .emit(asm::csrrci(11, csr::MCAUSE, 1))
        .emit(asm::csrrs(12, csr::MCAUSE, 0))
        .emit(asm::csrrw(13, csr::MTVAL, 5))
        .emit(asm::csrrc(14, csr::MTVAL, 5))
        .emit(asm::csrrs(15, csr::MINSTRET, 0))
        .emit(asm::csrrs(16, csr::MCYCLE, 0))
        .emit(asm::csrrw(0, csr::MINSTRET, 5))
        .emit(asm::csrrs(17, csr::MINSTRET, 0))
        .emit(asm::csrrs(18, csr::MHARTID, 0))
        .emit(asm::csrrs(19, csr::MTVEC, 0))
        // Writing mhartid and touching an unimplemented CSR both trap.
        .emit(asm::csrrw(0, csr::MHARTID, 5))
        .emit(asm::csrrs(20, 0x7C0, 0))
        .emit(asm::csrrs(21, csr::MCAUSE, 0))
        .emit(asm::csrrs(22, csr::MTVAL, 0));
    epilogue(&mut a, (6..=9).chain(11..=22).chain([TRAP_COUNT]));
    trap_handler(&mut a);
    data(&mut a);
    program("base-csr", ProgramKind::Base, a)
}

fn base_traps() -> Program {
    let mut a = new_asm();
    prologue(&mut a, true);
    a.li(5, 0x10).li(LOOP, 20);
    a.label("loop")
        .emit(asm::ECALL)
        .emit(asm::EBREAK)
        .emit(0xFFFF_FFFF)
        .emit(0x0000_0000)
        // A compressed-looking word and a load/store outside memory.
        .emit(0x0000_4501)
        .emit(asm::ld(6, 5, 0))
        .emit(asm::sw(6, 5, 4))
        .emit(asm::FENCE)
        .emit(asm::FENCE_I)
        .emit(asm::csrrs(7, csr::MCAUSE, 0))
        .emit(asm::csrrs(8, csr::MTVAL, 0))
        .emit(asm::add(ACC, ACC, 7))
        .emit(asm::xor(ACC, ACC, 8))
        .emit(asm::addi(LOOP, LOOP, -1))
        .bne(LOOP, 0, "loop");
    epilogue(&mut a, [TRAP_COUNT]);
    trap_handler(&mut a);
    data(&mut a);
    program("base-traps", ProgramKind::Base, a)
}

fn base_sort() -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0001);
    let vals: Vec<u64> = (0..48).map(|_| rng.gen()).collect();
    let mut a = new_asm();
    prologue(&mut a, false);
    // Bubble sort, signed, in place.
    a.la(5, "vals").li(6, vals.len() as u64);
    a.label("outer").li(7, 0).li(8, 1).emit(asm::addi(9, 6, -1));
    a.label("inner")
        .emit(asm::slli(TMP, 8, 3))
        .emit(asm::add(TMP, TMP, 5))
        .emit(asm::ld(11, TMP, -8))
        .emit(asm::ld(12, TMP, 0))
        .bge(12, 11, "ordered")
        .emit(asm::sd(12, TMP, -8))
        .emit(asm::sd(11, TMP, 0))
        .li(7, 1)
        .label("ordered")
        .emit(asm::addi(8, 8, 1))
        .bge(9, 8, "inner")
        .bne(7, 0, "outer");
    // Checksum the sorted array.
    a.li(8, 0);
    a.label("sum").emit(asm::slli(TMP, 8, 3)).emit(asm::add(TMP, TMP, 5)).emit(asm::ld(11, TMP, 0));
    fold(&mut a, 11);
    a.emit(asm::addi(8, 8, 1)).blt(8, 6, "sum");
    epilogue(&mut a, []);
    data(&mut a);
    a.data_label("vals").dwords(&vals);
    program("base-sort", ProgramKind::Base, a)
}

fn base_memcpy() -> Program {
    let mut a = new_asm();
    prologue(&mut a, false);
    // Fill 1 KiB with a pattern, copy it byte-wise to an odd offset, then
    // sum it back as misaligned words.
    a.li(5, 0).li(6, 1024).li(7, 0x9E37_79B9);
    a.label("fill")
        .emit(asm::add(TMP, GP, 5))
        .emit(asm::sd(7, TMP, 0))
        .emit(asm::slli(8, 7, 13))
        .emit(asm::xor(7, 7, 8))
        .emit(asm::srli(8, 7, 7))
        .emit(asm::xor(7, 7, 8))
        .emit(asm::addi(5, 5, 8))
        .blt(5, 6, "fill");
    a.li(5, 0);
    a.label("copy")
        .emit(asm::add(TMP, GP, 5))
        .emit(asm::lbu(8, TMP, 0))
        .emit(asm::sb(8, TMP, 1027))
        .emit(asm::addi(5, 5, 1))
        .blt(5, 6, "copy");
    a.li(5, 0);
    a.label("sum")
        .emit(asm::add(TMP, GP, 5))
        .emit(asm::lw(8, TMP, 1027))
        .emit(asm::add(ACC, ACC, 8))
        .emit(asm::addi(5, 5, 4))
        .blt(5, 6, "sum");
    epilogue(&mut a, []);
    data(&mut a);
    program("base-memcpy", ProgramKind::Base, a)
}

// M programs.

/// Loads each pair of special values and applies `ops` to it.
fn m_table(name: &str, ops: &[fn(u8, u8, u8) -> u32]) -> Program {
    let mut a = new_asm();
    prologue(&mut a, false);
    let vals: Vec<u64> = SPECIALS.iter().copied().chain([3, u64::MAX - 1, 0x1_0000_0001]).collect();
    a.la(5, "vals").li(6, vals.len() as u64).li(7, 0);
    a.label("outer").li(8, 0);
    a.label("inner")
        .emit(asm::slli(TMP, 7, 3))
        .emit(asm::add(TMP, TMP, 5))
        .emit(asm::ld(11, TMP, 0))
        .emit(asm::slli(TMP, 8, 3))
        .emit(asm::add(TMP, TMP, 5))
        .emit(asm::ld(12, TMP, 0));
    for (i, op) in ops.iter().enumerate() {
        let rd = 13 + i as u8;
        a.emit(op(rd, 11, 12));
        fold(&mut a, rd);
    }
    a.emit(asm::addi(8, 8, 1)).blt(8, 6, "inner").emit(asm::addi(7, 7, 1)).blt(7, 6, "outer");
    epilogue(&mut a, []);
    data(&mut a);
    a.data_label("vals").dwords(&vals);
    program(name, ProgramKind::M, a)
}

fn m_factorial() -> Program {
    // n! mod p for n up to 2000, using mul and remu.
    let mut a = new_asm();
    prologue(&mut a, false);
    a.li(5, 1).li(6, 1).li(7, 2000).li(8, 1_000_000_007);
    a.label("loop").emit(asm::mul(5, 5, 6)).emit(asm::remu(5, 5, 8)).emit(asm::addi(6, 6, 1)).bge(7, 6, "loop");
    epilogue(&mut a, [5]);
    data(&mut a);
    program("m-factorial", ProgramKind::M, a)
}

fn m_gcd() -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0002);
    let mut a = new_asm();
    prologue(&mut a, false);
    for i in 0..40 {
        let (x, y): (u64, u64) = (rng.gen(), rng.gen_range(1..u64::MAX));
        let (top, done) = (format!("gcd{i}"), format!("gcd_done{i}"));
        a.li(5, x).li(6, y);
        a.label(&top)
            .beq(6, 0, &done)
            .emit(asm::remu(7, 5, 6))
            .emit(asm::addi(5, 6, 0))
            .emit(asm::addi(6, 7, 0))
            .j(&top)
            .label(&done);
        fold(&mut a, 5);
    }
    epilogue(&mut a, []);
    data(&mut a);
    program("m-gcd", ProgramKind::M, a)
}

fn m_modexp() -> Program {
    // Square-and-multiply modulo a 61-bit prime with 128-bit products
    // reduced through mulhu/mul/remu on the halves.
    let mut a = new_asm();
    prologue(&mut a, false);
    a.li(5, 3).li(6, 0x1234_5678_9ABC).li(7, 1).li(8, (1u64 << 61) - 1);
    a.label("loop")
        .emit(asm::andi(TMP, 6, 1))
        .beq(TMP, 0, "square")
        .emit(asm::mul(9, 7, 5))
        .emit(asm::mulhu(11, 7, 5))
        .emit(asm::remu(11, 11, 8))
        .emit(asm::slli(11, 11, 3))
        .emit(asm::remu(9, 9, 8))
        .emit(asm::add(7, 9, 11))
        .emit(asm::remu(7, 7, 8))
        .label("square")
        .emit(asm::mul(9, 5, 5))
        .emit(asm::mulhu(11, 5, 5))
        .emit(asm::remu(11, 11, 8))
        .emit(asm::slli(11, 11, 3))
        .emit(asm::remu(9, 9, 8))
        .emit(asm::add(5, 9, 11))
        .emit(asm::remu(5, 5, 8))
        .emit(asm::srli(6, 6, 1))
        .bne(6, 0, "loop");
    epilogue(&mut a, [5, 7]);
    data(&mut a);
    program("m-modexp", ProgramKind::M, a)
}

fn m_matmul() -> Program {
    const N: u64 = 8;
    let mut rng = ChaCha8Rng::seed_from_u64(0x5EED_0003);
    let lhs: Vec<u64> = (0..N * N).map(|_| rng.gen_range(0..1000u64).wrapping_sub(500)).collect();
    let rhs: Vec<u64> = (0..N * N).map(|_| rng.gen()).collect();
    let mut a = new_asm();
    prologue(&mut a, false);
    a.la(5, "lhs").la(6, "rhs").li(7, N).li(8, 0);
    a.label("row").li(9, 0);
    a.label("col").li(11, 0).li(12, 0);
    a.label("dot")
        // lhs[row][k]
        .emit(asm::mul(TMP, 8, 7))
        .emit(asm::add(TMP, TMP, 12))
        .emit(asm::slli(TMP, TMP, 3))
        .emit(asm::add(TMP, TMP, 5))
        .emit(asm::ld(13, TMP, 0))
        // rhs[k][col]
        .emit(asm::mul(TMP, 12, 7))
        .emit(asm::add(TMP, TMP, 9))
        .emit(asm::slli(TMP, TMP, 3))
        .emit(asm::add(TMP, TMP, 6))
        .emit(asm::ld(14, TMP, 0))
        .emit(asm::mul(15, 13, 14))
        .emit(asm::mulh(16, 13, 14))
        .emit(asm::add(11, 11, 15))
        .emit(asm::xor(11, 11, 16))
        .emit(asm::addi(12, 12, 1))
        .blt(12, 7, "dot");
    fold(&mut a, 11);
    a.emit(asm::addi(9, 9, 1)).blt(9, 7, "col").emit(asm::addi(8, 8, 1)).blt(8, 7, "row");
    epilogue(&mut a, []);
    data(&mut a);
    a.data_label("lhs").dwords(&lhs).data_label("rhs").dwords(&rhs);
    program("m-matmul", ProgramKind::M, a)
}

// Zbb programs.

fn zbb_table(name: &str, ops: &[fn(u8, u8, u8) -> u32]) -> Program {
    let mut p = m_table(name, ops);
    p.kind = ProgramKind::Zbb;
    p
}

fn zbb_unary() -> Program {
    let mut a = new_asm();
    prologue(&mut a, false);
    let unary: [fn(u8, u8) -> u32; 8] =
        [asm::clz, asm::ctz, asm::cpop, asm::sext_b, asm::sext_h, asm::zext_h, asm::rev8, asm::orc_b];
    a.li(5, 1).li(6, 0x9E37_79B9_7F4A_7C15).li(LOOP, 128);
    a.label("loop");
    for (i, op) in unary.iter().enumerate() {
        let rd = 11 + i as u8;
        a.emit(op(rd, 5));
        fold(&mut a, rd);
    }
    a.emit(asm::rori(5, 5, 1))
        .emit(asm::xor(5, 5, 6))
        .emit(asm::rori(6, 6, 7))
        .emit(asm::addi(LOOP, LOOP, -1))
        .bne(LOOP, 0, "loop");
    // Corner values: zero and all ones.
    for v in [0, u64::MAX, 0x80, 0x8000] {
        a.li(5, v);
        for (i, op) in unary.iter().enumerate() {
            let rd = 11 + i as u8;
            a.emit(op(rd, 5));
            fold(&mut a, rd);
        }
    }
    epilogue(&mut a, []);
    data(&mut a);
    program("zbb-unary", ProgramKind::Zbb, a)
}

fn zbb_rotate() -> Program {
    let mut a = new_asm();
    prologue(&mut a, false);
    a.li(5, 0x0123_4567_89AB_CDEF).li(6, 0).li(7, 70);
    a.label("loop").emit(asm::rol(8, 5, 6)).emit(asm::ror(9, 5, 6)).emit(asm::rev8(11, 8)).emit(asm::orc_b(12, 9));
    for r in [8, 9, 11, 12] {
        fold(&mut a, r);
    }
    a.emit(asm::addi(6, 6, 1)).blt(6, 7, "loop");
    for sh in [0, 1, 13, 31, 32, 63] {
        a.emit(asm::rori(8, 5, sh));
        fold(&mut a, 8);
    }
    epilogue(&mut a, []);
    data(&mut a);
    program("zbb-rotate", ProgramKind::Zbb, a)
}

// Random programs.

type Gen = fn(&mut ChaCha8Rng) -> u32;

fn rd(rng: &mut ChaCha8Rng) -> u8 {
    rng.gen_range(FREE)
}

fn rs(rng: &mut ChaCha8Rng) -> u8 {
    // x0 shows up often enough to exercise zero operands.
    if rng.gen_ratio(1, 10) {
        0
    } else {
        rng.gen_range(FREE)
    }
}

fn gen_rrr(rng: &mut ChaCha8Rng, ops: &[fn(u8, u8, u8) -> u32]) -> u32 {
    let op = ops[rng.gen_range(0..ops.len())];
    op(rd(rng), rs(rng), rs(rng))
}

const BASE_RRR: [fn(u8, u8, u8) -> u32; 15] = [
    asm::add,
    asm::sub,
    asm::sll,
    asm::slt,
    asm::sltu,
    asm::xor,
    asm::srl,
    asm::sra,
    asm::or,
    asm::and,
    asm::addw,
    asm::subw,
    asm::sllw,
    asm::srlw,
    asm::sraw,
];
const M_RRR: [fn(u8, u8, u8) -> u32; 13] = [
    asm::mul,
    asm::mulh,
    asm::mulhsu,
    asm::mulhu,
    asm::div,
    asm::divu,
    asm::rem,
    asm::remu,
    asm::mulw,
    asm::divw,
    asm::divuw,
    asm::remw,
    asm::remuw,
];
const ZBB_RRR: [fn(u8, u8, u8) -> u32; 9] =
    [asm::andn, asm::orn, asm::xnor, asm::min, asm::max, asm::minu, asm::maxu, asm::rol, asm::ror];
const ZBB_RR: [fn(u8, u8) -> u32; 8] =
    [asm::clz, asm::ctz, asm::cpop, asm::sext_b, asm::sext_h, asm::zext_h, asm::rev8, asm::orc_b];

fn gen_base(rng: &mut ChaCha8Rng) -> u32 {
    match rng.gen_range(0..10) {
        0..=3 => gen_rrr(rng, &BASE_RRR),
        4 => {
            let imm = rng.gen_range(-2048..2048);
            let ops: [fn(u8, u8, i64) -> u32; 7] =
                [asm::addi, asm::slti, asm::sltiu, asm::xori, asm::ori, asm::andi, asm::addiw];
            ops[rng.gen_range(0..7)](rd(rng), rs(rng), imm)
        }
        5 => {
            let ops: [fn(u8, u8, u32) -> u32; 6] =
                [asm::slli, asm::srli, asm::srai, asm::slliw, asm::srliw, asm::sraiw];
            ops[rng.gen_range(0..6)](rd(rng), rs(rng), rng.gen_range(0..64))
        }
        6 => asm::lui(rd(rng), rng.gen::<i32>() as i64),
        7 => {
            let ops: [fn(u8, u8, i64) -> u32; 7] = [asm::lb, asm::lh, asm::lw, asm::ld, asm::lbu, asm::lhu, asm::lwu];
            ops[rng.gen_range(0..7)](rd(rng), GP, rng.gen_range(0..2040))
        }
        8 => {
            let ops: [fn(u8, u8, i64) -> u32; 4] = [asm::sb, asm::sh, asm::sw, asm::sd];
            ops[rng.gen_range(0..4)](rs(rng), GP, rng.gen_range(0..2040))
        }
        _ => asm::auipc(rd(rng), (rng.gen_range(0..16) as i64) << 12),
    }
}

fn gen_m(rng: &mut ChaCha8Rng) -> u32 {
    if rng.gen_ratio(1, 2) {
        gen_rrr(rng, &M_RRR)
    } else {
        gen_base(rng)
    }
}

fn gen_zbb(rng: &mut ChaCha8Rng) -> u32 {
    match rng.gen_range(0..6) {
        0 | 1 => gen_rrr(rng, &ZBB_RRR),
        2 => ZBB_RR[rng.gen_range(0..ZBB_RR.len())](rd(rng), rs(rng)),
        3 => asm::rori(rd(rng), rs(rng), rng.gen_range(0..64)),
        _ => gen_base(rng),
    }
}

/// A straight-line random body, seeded registers, run `iters` times.
fn random_program(name: String, kind: ProgramKind, seed: u64, gen: Gen, body: usize, iters: u64) -> Program {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut a = new_asm();
    prologue(&mut a, false);
    for r in FREE {
        let v = if rng.gen_ratio(1, 3) { SPECIALS[rng.gen_range(0..SPECIALS.len())] } else { rng.gen() };
        a.li(r, v);
    }
    a.li(LOOP, iters).label("loop");
    for _ in 0..body {
        a.emit(gen(&mut rng));
    }
    a.emit(asm::addi(LOOP, LOOP, -1)).bne(LOOP, 0, "loop");
    epilogue(&mut a, FREE);
    data(&mut a);
    program(name, kind, a)
}

/// The differential test suite: 10 base, 10 M and 6 Zbb programs.
pub fn suite() -> Vec<Program> {
    let mut v = vec![
        base_arith(),
        base_shifts(),
        base_branches(),
        base_memory(),
        base_calls(),
        base_csr(),
        base_traps(),
        base_sort(),
        base_memcpy(),
    ];
    v.push(random_program("base-random-1".into(), ProgramKind::Base, 101, gen_base, 400, 20));
    v.extend([
        m_table("m-mul", &[asm::mul, asm::mulh, asm::mulhsu, asm::mulhu]),
        m_table("m-div", &[asm::div, asm::divu, asm::rem, asm::remu]),
        m_table("m-word", &[asm::mulw, asm::divw, asm::divuw, asm::remw, asm::remuw]),
        m_factorial(),
        m_gcd(),
        m_modexp(),
        m_matmul(),
    ]);
    for seed in 1..=3 {
        v.push(random_program(format!("m-random-{seed}"), ProgramKind::M, 200 + seed, gen_m, 400, 20));
    }
    v.extend([
        zbb_table("zbb-logic", &[asm::andn, asm::orn, asm::xnor]),
        zbb_table("zbb-minmax", &[asm::min, asm::max, asm::minu, asm::maxu]),
        zbb_unary(),
        zbb_rotate(),
    ]);
    for seed in 1..=2 {
        v.push(random_program(format!("zbb-random-{seed}"), ProgramKind::Zbb, 300 + seed, gen_zbb, 400, 20));
    }
    v
}

/// Benchmark workload categories.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Workload {
    BaseAlu,
    MHeavy,
    ZbbHeavy,
}

impl Workload {
    pub const ALL: [Workload; 3] = [Workload::BaseAlu, Workload::MHeavy, Workload::ZbbHeavy];

    pub fn name(self) -> &'static str {
        match self {
            Workload::BaseAlu => "base-alu",
            Workload::MHeavy => "m-heavy",
            Workload::ZbbHeavy => "zbb-heavy",
        }
    }

    fn body(self) -> Vec<u32> {
        let base = [
            asm::add(5, 5, 6),
            asm::xor(6, 6, 7),
            asm::slli(7, 5, 3),
            asm::srli(8, 6, 5),
            asm::sub(9, 7, 8),
            asm::and(11, 9, 5),
            asm::or(12, 11, 6),
            asm::addi(13, 12, 77),
            asm::sltu(14, 13, 5),
            asm::addw(15, 14, 13),
            asm::sra(16, 15, 14),
            asm::xori(17, 16, -3),
            asm::sll(18, 17, 8),
            asm::srl(19, 18, 9),
            asm::ori(20, 19, 0x101),
            asm::slt(21, 20, 12),
        ];
        let ext: [u32; 8] = match self {
            Workload::BaseAlu => return base.to_vec(),
            Workload::MHeavy => [
                asm::mul(22, 5, 6),
                asm::mulhu(23, 6, 7),
                asm::divu(24, 22, 13),
                asm::remu(25, 23, 13),
                asm::mulw(26, 24, 25),
                asm::div(27, 26, 20),
                asm::rem(28, 22, 20),
                asm::mulh(22, 27, 28),
            ],
            Workload::ZbbHeavy => [
                asm::andn(22, 5, 6),
                asm::clz(23, 7),
                asm::cpop(24, 22),
                asm::rol(25, 6, 24),
                asm::rori(26, 25, 17),
                asm::rev8(27, 26),
                asm::orc_b(28, 27),
                asm::maxu(22, 28, 23),
            ],
        };
        base[..8].iter().chain(&ext).copied().collect()
    }

    /// A loop whose run retires roughly `retirements` instructions.
    pub fn program(self, retirements: u64) -> Program {
        let body = self.body();
        let per_iter = body.len() as u64 + 2;
        let mut a = new_asm();
        prologue(&mut a, false);
        a.li(5, 0x0123_4567_89AB_CDEF).li(6, 0xFEDC_BA98_7654_3211).li(7, 12345);
        a.li(LOOP, (retirements / per_iter).max(1)).label("loop");
        for w in body {
            a.emit(w);
        }
        a.emit(asm::addi(LOOP, LOOP, -1)).bne(LOOP, 0, "loop");
        epilogue(&mut a, [5, 6, 13]);
        data(&mut a);
        let kind = match self {
            Workload::BaseAlu => ProgramKind::Base,
            Workload::MHeavy => ProgramKind::M,
            Workload::ZbbHeavy => ProgramKind::Zbb,
        };
        program(self.name(), kind, a)
    }
}

/// Retirements per benchmark run.
pub const BENCH_RETIREMENTS: u64 = 10_000_000;
