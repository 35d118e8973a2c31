//! RV64I base integer ISA plus the Zicsr instructions.
//!
//! Decoding is total: every 32-bit word maps to exactly one [`BaseInsn`],
//! with everything the base does not define (including M and Zbb encodings
//! and all compressed words) mapping to [`BaseInsn::Illegal`].

use modsim_abi::{fmt_rri, fmt_rrr, illegal_word, Retired, TrapCause};

use crate::arch::{ArchState, Trap};
use crate::asm::{self, opcode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BranchOp {
    Beq,
    Bne,
    Blt,
    Bge,
    Bltu,
    Bgeu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum LoadOp {
    Lb,
    Lh,
    Lw,
    Ld,
    Lbu,
    Lhu,
    Lwu,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum StoreOp {
    Sb,
    Sh,
    Sw,
    Sd,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImmOp {
    Addi,
    Slti,
    Sltiu,
    Xori,
    Ori,
    Andi,
    Slli,
    Srli,
    Srai,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum ImmWOp {
    Addiw,
    Slliw,
    Srliw,
    Sraiw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegOp {
    Add,
    Sub,
    Sll,
    Slt,
    Sltu,
    Xor,
    Srl,
    Sra,
    Or,
    And,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum RegWOp {
    Addw,
    Subw,
    Sllw,
    Srlw,
    Sraw,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CsrOp {
    Rw,
    Rs,
    Rc,
    Rwi,
    Rsi,
    Rci,
}

/// A decoded base instruction. Immediates are fully sign-extended; shift
/// amounts are already masked to 6 bits (5 for the word forms).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BaseInsn {
    Lui {
        rd: u8,
        imm: i64,
    },
    Auipc {
        rd: u8,
        imm: i64,
    },
    Jal {
        rd: u8,
        imm: i64,
    },
    Jalr {
        rd: u8,
        rs1: u8,
        imm: i64,
    },
    Branch {
        op: BranchOp,
        rs1: u8,
        rs2: u8,
        imm: i64,
    },
    Load {
        op: LoadOp,
        rd: u8,
        rs1: u8,
        imm: i64,
    },
    Store {
        op: StoreOp,
        rs1: u8,
        rs2: u8,
        imm: i64,
    },
    Imm {
        op: ImmOp,
        rd: u8,
        rs1: u8,
        imm: i64,
    },
    ImmW {
        op: ImmWOp,
        rd: u8,
        rs1: u8,
        imm: i64,
    },
    Reg {
        op: RegOp,
        rd: u8,
        rs1: u8,
        rs2: u8,
    },
    RegW {
        op: RegWOp,
        rd: u8,
        rs1: u8,
        rs2: u8,
    },
    /// All operand fields kept so the word can be re-encoded.
    Fence {
        fm: u8,
        pred: u8,
        succ: u8,
        rs1: u8,
        rd: u8,
    },
    FenceI,
    Ecall,
    Ebreak,
    /// `src` is rs1 for the register forms and the 5-bit immediate otherwise.
    Csr {
        op: CsrOp,
        rd: u8,
        src: u8,
        csr: u16,
    },
    Illegal(u32),
}

#[inline]
fn rd(w: u32) -> u8 {
    ((w >> 7) & 0x1F) as u8
}
#[inline]
fn rs1(w: u32) -> u8 {
    ((w >> 15) & 0x1F) as u8
}
#[inline]
fn rs2(w: u32) -> u8 {
    ((w >> 20) & 0x1F) as u8
}
#[inline]
fn funct3(w: u32) -> u32 {
    (w >> 12) & 7
}
#[inline]
fn imm_i(w: u32) -> i64 {
    (w as i32 >> 20) as i64
}
#[inline]
fn imm_s(w: u32) -> i64 {
    (((w as i32 >> 25) << 5) | ((w >> 7) & 0x1F) as i32) as i64
}
#[inline]
fn imm_b(w: u32) -> i64 {
    let v = ((w as i32 >> 31) << 12)
        | (((w >> 7) & 1) << 11) as i32
        | (((w >> 25) & 0x3F) << 5) as i32
        | (((w >> 8) & 0xF) << 1) as i32;
    v as i64
}
#[inline]
fn imm_u(w: u32) -> i64 {
    (w & 0xFFFF_F000) as i32 as i64
}
#[inline]
fn imm_j(w: u32) -> i64 {
    let v = ((w as i32 >> 31) << 20)
        | (((w >> 12) & 0xFF) << 12) as i32
        | (((w >> 20) & 1) << 11) as i32
        | (((w >> 21) & 0x3FF) << 1) as i32;
    v as i64
}

pub fn decode_base(w: u32) -> BaseInsn {
    use BaseInsn::*;
    let illegal = Illegal(w);
    if w & 3 != 3 {
        return illegal;
    }
    let f3 = funct3(w);
    let f7 = w >> 25;
    match w & 0x7F {
        opcode::LUI => Lui { rd: rd(w), imm: imm_u(w) },
        opcode::AUIPC => Auipc { rd: rd(w), imm: imm_u(w) },
        opcode::JAL => Jal { rd: rd(w), imm: imm_j(w) },
        opcode::JALR if f3 == 0 => Jalr { rd: rd(w), rs1: rs1(w), imm: imm_i(w) },
        opcode::BRANCH => {
            let op = match f3 {
                0 => BranchOp::Beq,
                1 => BranchOp::Bne,
                4 => BranchOp::Blt,
                5 => BranchOp::Bge,
                6 => BranchOp::Bltu,
                7 => BranchOp::Bgeu,
                _ => return illegal,
            };
            Branch { op, rs1: rs1(w), rs2: rs2(w), imm: imm_b(w) }
        }
        opcode::LOAD => {
            let op = match f3 {
                0 => LoadOp::Lb,
                1 => LoadOp::Lh,
                2 => LoadOp::Lw,
                3 => LoadOp::Ld,
                4 => LoadOp::Lbu,
                5 => LoadOp::Lhu,
                6 => LoadOp::Lwu,
                _ => return illegal,
            };
            Load { op, rd: rd(w), rs1: rs1(w), imm: imm_i(w) }
        }
        opcode::STORE => {
            let op = match f3 {
                0 => StoreOp::Sb,
                1 => StoreOp::Sh,
                2 => StoreOp::Sw,
                3 => StoreOp::Sd,
                _ => return illegal,
            };
            Store { op, rs1: rs1(w), rs2: rs2(w), imm: imm_s(w) }
        }
        opcode::OP_IMM => {
            let funct6 = w >> 26;
            let shamt = ((w >> 20) & 0x3F) as i64;
            let (op, imm) = match f3 {
                0 => (ImmOp::Addi, imm_i(w)),
                2 => (ImmOp::Slti, imm_i(w)),
                3 => (ImmOp::Sltiu, imm_i(w)),
                4 => (ImmOp::Xori, imm_i(w)),
                6 => (ImmOp::Ori, imm_i(w)),
                7 => (ImmOp::Andi, imm_i(w)),
                1 if funct6 == 0 => (ImmOp::Slli, shamt),
                5 if funct6 == 0 => (ImmOp::Srli, shamt),
                5 if funct6 == 0b01_0000 => (ImmOp::Srai, shamt),
                _ => return illegal,
            };
            Imm { op, rd: rd(w), rs1: rs1(w), imm }
        }
        opcode::OP_IMM_32 => {
            let shamt = ((w >> 20) & 0x1F) as i64;
            let (op, imm) = match (f3, f7) {
                (0, _) => (ImmWOp::Addiw, imm_i(w)),
                (1, 0) => (ImmWOp::Slliw, shamt),
                (5, 0) => (ImmWOp::Srliw, shamt),
                (5, 0x20) => (ImmWOp::Sraiw, shamt),
                _ => return illegal,
            };
            ImmW { op, rd: rd(w), rs1: rs1(w), imm }
        }
        opcode::OP => {
            let op = match (f7, f3) {
                (0, 0) => RegOp::Add,
                (0x20, 0) => RegOp::Sub,
                (0, 1) => RegOp::Sll,
                (0, 2) => RegOp::Slt,
                (0, 3) => RegOp::Sltu,
                (0, 4) => RegOp::Xor,
                (0, 5) => RegOp::Srl,
                (0x20, 5) => RegOp::Sra,
                (0, 6) => RegOp::Or,
                (0, 7) => RegOp::And,
                _ => return illegal,
            };
            Reg { op, rd: rd(w), rs1: rs1(w), rs2: rs2(w) }
        }
        opcode::OP_32 => {
            let op = match (f7, f3) {
                (0, 0) => RegWOp::Addw,
                (0x20, 0) => RegWOp::Subw,
                (0, 1) => RegWOp::Sllw,
                (0, 5) => RegWOp::Srlw,
                (0x20, 5) => RegWOp::Sraw,
                _ => return illegal,
            };
            RegW { op, rd: rd(w), rs1: rs1(w), rs2: rs2(w) }
        }
        opcode::MISC_MEM => match f3 {
            0 => Fence {
                fm: (w >> 28) as u8,
                pred: ((w >> 24) & 0xF) as u8,
                succ: ((w >> 20) & 0xF) as u8,
                rs1: rs1(w),
                rd: rd(w),
            },
            1 if w == asm::FENCE_I => FenceI,
            _ => illegal,
        },
        opcode::SYSTEM => {
            let csr = (w >> 20) as u16;
            let op = match f3 {
                0 => {
                    return match w {
                        asm::ECALL => Ecall,
                        asm::EBREAK => Ebreak,
                        _ => illegal,
                    }
                }
                1 => CsrOp::Rw,
                2 => CsrOp::Rs,
                3 => CsrOp::Rc,
                5 => CsrOp::Rwi,
                6 => CsrOp::Rsi,
                7 => CsrOp::Rci,
                _ => return illegal,
            };
            Csr { op, rd: rd(w), src: rs1(w), csr }
        }
        _ => illegal,
    }
}

impl BaseInsn {
    /// Re-encodes a decoded instruction. `Illegal` returns its raw word.
    pub fn encode(self) -> u32 {
        use BaseInsn::*;
        match self {
            Lui { rd, imm } => asm::lui(rd, imm),
            Auipc { rd, imm } => asm::auipc(rd, imm),
            Jal { rd, imm } => asm::jal(rd, imm),
            Jalr { rd, rs1, imm } => asm::jalr(rd, rs1, imm),
            Branch { op, rs1, rs2, imm } => {
                let f3 = match op {
                    BranchOp::Beq => 0,
                    BranchOp::Bne => 1,
                    BranchOp::Blt => 4,
                    BranchOp::Bge => 5,
                    BranchOp::Bltu => 6,
                    BranchOp::Bgeu => 7,
                };
                asm::b_type(imm, rs2, rs1, f3)
            }
            Load { op, rd, rs1, imm } => asm::i_type(imm, rs1, op as u32, rd, opcode::LOAD),
            Store { op, rs1, rs2, imm } => asm::s_type(imm, rs2, rs1, op as u32, opcode::STORE),
            Imm { op, rd, rs1, imm } => match op {
                ImmOp::Addi => asm::addi(rd, rs1, imm),
                ImmOp::Slti => asm::slti(rd, rs1, imm),
                ImmOp::Sltiu => asm::sltiu(rd, rs1, imm),
                ImmOp::Xori => asm::xori(rd, rs1, imm),
                ImmOp::Ori => asm::ori(rd, rs1, imm),
                ImmOp::Andi => asm::andi(rd, rs1, imm),
                ImmOp::Slli => asm::slli(rd, rs1, imm as u32),
                ImmOp::Srli => asm::srli(rd, rs1, imm as u32),
                ImmOp::Srai => asm::srai(rd, rs1, imm as u32),
            },
            ImmW { op, rd, rs1, imm } => match op {
                ImmWOp::Addiw => asm::addiw(rd, rs1, imm),
                ImmWOp::Slliw => asm::slliw(rd, rs1, imm as u32),
                ImmWOp::Srliw => asm::srliw(rd, rs1, imm as u32),
                ImmWOp::Sraiw => asm::sraiw(rd, rs1, imm as u32),
            },
            Reg { op, rd, rs1, rs2 } => match op {
                RegOp::Add => asm::add(rd, rs1, rs2),
                RegOp::Sub => asm::sub(rd, rs1, rs2),
                RegOp::Sll => asm::sll(rd, rs1, rs2),
                RegOp::Slt => asm::slt(rd, rs1, rs2),
                RegOp::Sltu => asm::sltu(rd, rs1, rs2),
                RegOp::Xor => asm::xor(rd, rs1, rs2),
                RegOp::Srl => asm::srl(rd, rs1, rs2),
                RegOp::Sra => asm::sra(rd, rs1, rs2),
                RegOp::Or => asm::or(rd, rs1, rs2),
                RegOp::And => asm::and(rd, rs1, rs2),
            },
            RegW { op, rd, rs1, rs2 } => match op {
                RegWOp::Addw => asm::addw(rd, rs1, rs2),
                RegWOp::Subw => asm::subw(rd, rs1, rs2),
                RegWOp::Sllw => asm::sllw(rd, rs1, rs2),
                RegWOp::Srlw => asm::srlw(rd, rs1, rs2),
                RegWOp::Sraw => asm::sraw(rd, rs1, rs2),
            },
            Fence { fm, pred, succ, rs1, rd } => {
                ((fm as u32) << 28)
                    | ((pred as u32) << 24)
                    | ((succ as u32) << 20)
                    | ((rs1 as u32) << 15)
                    | ((rd as u32) << 7)
                    | opcode::MISC_MEM
            }
            FenceI => asm::FENCE_I,
            Ecall => asm::ECALL,
            Ebreak => asm::EBREAK,
            Csr { op, rd, src, csr } => match op {
                CsrOp::Rw => asm::csrrw(rd, csr, src),
                CsrOp::Rs => asm::csrrs(rd, csr, src),
                CsrOp::Rc => asm::csrrc(rd, csr, src),
                CsrOp::Rwi => asm::csrrwi(rd, csr, src),
                CsrOp::Rsi => asm::csrrsi(rd, csr, src),
                CsrOp::Rci => asm::csrrci(rd, csr, src),
            },
            Illegal(w) => w,
        }
    }
}

/// Executes a non-illegal base instruction, including the pc update.
///
/// Returns [`Retired::Trap`] after taking a trap (ecall, ebreak, access
/// faults, bad CSR access); in that case pc is left to the trap machinery.
#[inline]
pub fn execute_base(insn: BaseInsn, s: &mut ArchState, raw: u32) -> Retired {
    use BaseInsn::*;
    let pc = s.pc;
    let mut next = pc.wrapping_add(4);
    match insn {
        Lui { rd, imm } => s.set_gpr(rd, imm as u64),
        Auipc { rd, imm } => s.set_gpr(rd, pc.wrapping_add(imm as u64)),
        Jal { rd, imm } => {
            s.set_gpr(rd, next);
            next = pc.wrapping_add(imm as u64);
        }
        Jalr { rd, rs1, imm } => {
            let target = s.gpr(rs1).wrapping_add(imm as u64) & !1;
            s.set_gpr(rd, next);
            next = target;
        }
        Branch { op, rs1, rs2, imm } => {
            let (a, b) = (s.gpr(rs1), s.gpr(rs2));
            let taken = match op {
                BranchOp::Beq => a == b,
                BranchOp::Bne => a != b,
                BranchOp::Blt => (a as i64) < (b as i64),
                BranchOp::Bge => (a as i64) >= (b as i64),
                BranchOp::Bltu => a < b,
                BranchOp::Bgeu => a >= b,
            };
            if taken {
                next = pc.wrapping_add(imm as u64);
            }
        }
        Load { op, rd, rs1, imm } => {
            let addr = s.gpr(rs1).wrapping_add(imm as u64);
            let size = match op {
                LoadOp::Lb | LoadOp::Lbu => 1,
                LoadOp::Lh | LoadOp::Lhu => 2,
                LoadOp::Lw | LoadOp::Lwu => 4,
                LoadOp::Ld => 8,
            };
            match s.load_mem(addr, size) {
                Ok(v) => {
                    let v = match op {
                        LoadOp::Lb => v as i8 as u64,
                        LoadOp::Lh => v as i16 as u64,
                        LoadOp::Lw => v as i32 as u64,
                        _ => v,
                    };
                    s.set_gpr(rd, v);
                }
                Err(trap) => {
                    s.raise_trap(trap);
                    return Retired::Trap;
                }
            }
        }
        Store { op, rs1, rs2, imm } => {
            let addr = s.gpr(rs1).wrapping_add(imm as u64);
            let size = match op {
                StoreOp::Sb => 1,
                StoreOp::Sh => 2,
                StoreOp::Sw => 4,
                StoreOp::Sd => 8,
            };
            if let Err(trap) = s.store_mem(addr, size, s.gpr(rs2)) {
                s.raise_trap(trap);
                return Retired::Trap;
            }
        }
        Imm { op, rd, rs1, imm } => {
            let a = s.gpr(rs1);
            let b = imm as u64;
            let v = match op {
                ImmOp::Addi => a.wrapping_add(b),
                ImmOp::Slti => ((a as i64) < imm) as u64,
                ImmOp::Sltiu => (a < b) as u64,
                ImmOp::Xori => a ^ b,
                ImmOp::Ori => a | b,
                ImmOp::Andi => a & b,
                ImmOp::Slli => a << (b & 63),
                ImmOp::Srli => a >> (b & 63),
                ImmOp::Srai => ((a as i64) >> (b & 63)) as u64,
            };
            s.set_gpr(rd, v);
        }
        ImmW { op, rd, rs1, imm } => {
            let a = s.gpr(rs1) as u32;
            let v = match op {
                ImmWOp::Addiw => a.wrapping_add(imm as u32),
                ImmWOp::Slliw => a << (imm & 31),
                ImmWOp::Srliw => a >> (imm & 31),
                ImmWOp::Sraiw => ((a as i32) >> (imm & 31)) as u32,
            };
            s.set_gpr(rd, v as i32 as u64);
        }
        Reg { op, rd, rs1, rs2 } => {
            let (a, b) = (s.gpr(rs1), s.gpr(rs2));
            let v = match op {
                RegOp::Add => a.wrapping_add(b),
                RegOp::Sub => a.wrapping_sub(b),
                RegOp::Sll => a << (b & 63),
                RegOp::Slt => ((a as i64) < (b as i64)) as u64,
                RegOp::Sltu => (a < b) as u64,
                RegOp::Xor => a ^ b,
                RegOp::Srl => a >> (b & 63),
                RegOp::Sra => ((a as i64) >> (b & 63)) as u64,
                RegOp::Or => a | b,
                RegOp::And => a & b,
            };
            s.set_gpr(rd, v);
        }
        RegW { op, rd, rs1, rs2 } => {
            let (a, b) = (s.gpr(rs1) as u32, s.gpr(rs2) as u32);
            let v = match op {
                RegWOp::Addw => a.wrapping_add(b),
                RegWOp::Subw => a.wrapping_sub(b),
                RegWOp::Sllw => a << (b & 31),
                RegWOp::Srlw => a >> (b & 31),
                RegWOp::Sraw => ((a as i32) >> (b & 31)) as u32,
            };
            s.set_gpr(rd, v as i32 as u64);
        }
        Fence { .. } | FenceI => {}
        Ecall => {
            s.raise_trap(Trap::new(TrapCause::EnvCallFromM, 0));
            return Retired::Trap;
        }
        Ebreak => {
            s.raise_trap(Trap::new(TrapCause::Breakpoint, pc));
            return Retired::Trap;
        }
        Csr { op, rd, src, csr } => {
            if !execute_csr(s, op, rd, src, csr) {
                s.raise_trap(Trap::illegal(raw));
                return Retired::Trap;
            }
        }
        Illegal(w) => panic!("execute_base called on illegal word {w:#010x}"),
    }
    s.pc = next;
    Retired::Success
}

/// False if the access must trap; no state is changed in that case.
fn execute_csr(s: &mut ArchState, op: CsrOp, rd: u8, src: u8, csr: u16) -> bool {
    let Some(old) = s.read_csr(csr) else {
        return false;
    };
    let operand = match op {
        CsrOp::Rw | CsrOp::Rs | CsrOp::Rc => s.gpr(src),
        CsrOp::Rwi | CsrOp::Rsi | CsrOp::Rci => src as u64,
    };
    let new = match op {
        CsrOp::Rw | CsrOp::Rwi => Some(operand),
        // Set/clear with x0 or a zero immediate do not write.
        CsrOp::Rs | CsrOp::Rsi => (src != 0).then_some(old | operand),
        CsrOp::Rc | CsrOp::Rci => (src != 0).then_some(old & !operand),
    };
    if let Some(v) = new {
        if !s.write_csr(csr, v) {
            return false;
        }
    }
    s.set_gpr(rd, old);
    true
}

fn fence_set(bits: u8) -> String {
    let s: String =
        [(8, 'i'), (4, 'o'), (2, 'r'), (1, 'w')].iter().filter(|(b, _)| bits & b != 0).map(|&(_, c)| c).collect();
    if s.is_empty() {
        "0".into()
    } else {
        s
    }
}

pub fn disasm_base(insn: BaseInsn) -> String {
    use BaseInsn::*;
    match insn {
        Lui { rd, imm } => format!("lui x{rd}, {}", imm >> 12),
        Auipc { rd, imm } => format!("auipc x{rd}, {}", imm >> 12),
        Jal { rd, imm } => format!("jal x{rd}, {imm}"),
        Jalr { rd, rs1, imm } => format!("jalr x{rd}, {imm}(x{rs1})"),
        Branch { op, rs1, rs2, imm } => {
            let mn = match op {
                BranchOp::Beq => "beq",
                BranchOp::Bne => "bne",
                BranchOp::Blt => "blt",
                BranchOp::Bge => "bge",
                BranchOp::Bltu => "bltu",
                BranchOp::Bgeu => "bgeu",
            };
            format!("{mn} x{rs1}, x{rs2}, {imm}")
        }
        Load { op, rd, rs1, imm } => {
            let mn = match op {
                LoadOp::Lb => "lb",
                LoadOp::Lh => "lh",
                LoadOp::Lw => "lw",
                LoadOp::Ld => "ld",
                LoadOp::Lbu => "lbu",
                LoadOp::Lhu => "lhu",
                LoadOp::Lwu => "lwu",
            };
            format!("{mn} x{rd}, {imm}(x{rs1})")
        }
        Store { op, rs1, rs2, imm } => {
            let mn = match op {
                StoreOp::Sb => "sb",
                StoreOp::Sh => "sh",
                StoreOp::Sw => "sw",
                StoreOp::Sd => "sd",
            };
            format!("{mn} x{rs2}, {imm}(x{rs1})")
        }
        Imm { op, rd, rs1, imm } => {
            let mn = match op {
                ImmOp::Addi => "addi",
                ImmOp::Slti => "slti",
                ImmOp::Sltiu => "sltiu",
                ImmOp::Xori => "xori",
                ImmOp::Ori => "ori",
                ImmOp::Andi => "andi",
                ImmOp::Slli => "slli",
                ImmOp::Srli => "srli",
                ImmOp::Srai => "srai",
            };
            fmt_rri(mn, rd, rs1, imm)
        }
        ImmW { op, rd, rs1, imm } => {
            let mn = match op {
                ImmWOp::Addiw => "addiw",
                ImmWOp::Slliw => "slliw",
                ImmWOp::Srliw => "srliw",
                ImmWOp::Sraiw => "sraiw",
            };
            fmt_rri(mn, rd, rs1, imm)
        }
        Reg { op, rd, rs1, rs2 } => {
            let mn = match op {
                RegOp::Add => "add",
                RegOp::Sub => "sub",
                RegOp::Sll => "sll",
                RegOp::Slt => "slt",
                RegOp::Sltu => "sltu",
                RegOp::Xor => "xor",
                RegOp::Srl => "srl",
                RegOp::Sra => "sra",
                RegOp::Or => "or",
                RegOp::And => "and",
            };
            fmt_rrr(mn, rd, rs1, rs2)
        }
        RegW { op, rd, rs1, rs2 } => {
            let mn = match op {
                RegWOp::Addw => "addw",
                RegWOp::Subw => "subw",
                RegWOp::Sllw => "sllw",
                RegWOp::Srlw => "srlw",
                RegWOp::Sraw => "sraw",
            };
            fmt_rrr(mn, rd, rs1, rs2)
        }
        Fence { fm: 0b1000, pred: 0b0011, succ: 0b0011, .. } => "fence.tso".into(),
        Fence { pred, succ, .. } => format!("fence {}, {}", fence_set(pred), fence_set(succ)),
        FenceI => "fence.i".into(),
        Ecall => "ecall".into(),
        Ebreak => "ebreak".into(),
        Csr { op, rd, src, csr } => match op {
            CsrOp::Rw => format!("csrrw x{rd}, 0x{csr:03x}, x{src}"),
            CsrOp::Rs => format!("csrrs x{rd}, 0x{csr:03x}, x{src}"),
            CsrOp::Rc => format!("csrrc x{rd}, 0x{csr:03x}, x{src}"),
            CsrOp::Rwi => format!("csrrwi x{rd}, 0x{csr:03x}, {src}"),
            CsrOp::Rsi => format!("csrrsi x{rd}, 0x{csr:03x}, {src}"),
            CsrOp::Rci => format!("csrrci x{rd}, 0x{csr:03x}, {src}"),
        },
        Illegal(w) => illegal_word(w),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::arch::{csr, DEFAULT_MEM_BASE};
    use proptest::prelude::*;

    fn state() -> ArchState {
        ArchState::new(DEFAULT_MEM_BASE, 1 << 16)
    }

    fn run(s: &mut ArchState, w: u32) -> Retired {
        let insn = decode_base(w);
        assert!(!matches!(insn, BaseInsn::Illegal(_)), "{w:#x} decoded illegal");
        execute_base(insn, s, w)
    }

    #[test]
    fn decode_examples() {
        assert_eq!(decode_base(0x0050_0093), BaseInsn::Imm { op: ImmOp::Addi, rd: 1, rs1: 0, imm: 5 });
        assert_eq!(decode_base(0), BaseInsn::Illegal(0));
        // mul x4, x1, x2 belongs to M.
        assert_eq!(decode_base(0x0220_8233), BaseInsn::Illegal(0x0220_8233));
        // Compressed encodings.
        assert_eq!(decode_base(0x0000_4501), BaseInsn::Illegal(0x4501));
        // Zbb clz, andn, rori, rev8.
        for w in [0x6003_1293u32, 0x4073_72B3, 0x60D1_5093, 0x6B81_5093] {
            assert_eq!(decode_base(w), BaseInsn::Illegal(w), "{w:#x}");
        }
        // mret, wfi: not part of this base.
        for w in [0x3020_0073u32, 0x1050_0073] {
            assert_eq!(decode_base(w), BaseInsn::Illegal(w));
        }
    }

    #[test]
    fn disasm_examples() {
        assert_eq!(disasm_base(decode_base(0x0050_0093)), "addi x1, x0, 5");
        assert_eq!(disasm_base(BaseInsn::Illegal(0)), ".word 0x00000000");
        assert_eq!(disasm_base(decode_base(asm::jal(0, -4))), "jal x0, -4");
        assert_eq!(disasm_base(decode_base(asm::ld(3, 2, -8))), "ld x3, -8(x2)");
        assert_eq!(disasm_base(decode_base(asm::sd(5, 2, 16))), "sd x5, 16(x2)");
        assert_eq!(disasm_base(decode_base(asm::csrrw(1, csr::MTVEC, 2))), "csrrw x1, 0x305, x2");
        assert_eq!(disasm_base(decode_base(asm::csrrsi(0, csr::MHARTID, 3))), "csrrsi x0, 0xf14, 3");
        assert_eq!(disasm_base(decode_base(asm::FENCE)), "fence iorw, iorw");
        assert_eq!(disasm_base(decode_base(asm::lui(7, 0x12345 << 12))), "lui x7, 74565");
    }

    #[test]
    fn addi_on_reset_state() {
        let mut s = state();
        assert_eq!(run(&mut s, 0x0050_0093), Retired::Success);
        assert_eq!(s.gpr(1), 5);
        assert_eq!(s.pc, DEFAULT_MEM_BASE + 4);
    }

    #[test]
    fn always_taken_branch() {
        let mut s = state();
        let before = *s.gprs();
        run(&mut s, asm::beq(0, 0, 8));
        assert_eq!(s.pc, DEFAULT_MEM_BASE + 8);
        assert_eq!(*s.gprs(), before);
    }

    #[test]
    fn ecall_traps_to_handler() {
        let mut s = state();
        s.csrs.mtvec = 0x8000_1000;
        s.set_gpr(9, 99);
        let before = *s.gprs();
        assert_eq!(run(&mut s, asm::ECALL), Retired::Trap);
        assert_eq!(s.csrs.mcause, 11);
        assert_eq!(s.csrs.mepc, DEFAULT_MEM_BASE);
        assert_eq!(s.pc, 0x8000_1000);
        assert_eq!(*s.gprs(), before);
    }

    #[test]
    fn ebreak_reports_pc() {
        let mut s = state();
        s.csrs.mtvec = 0x8000_1000;
        assert_eq!(run(&mut s, asm::EBREAK), Retired::Trap);
        assert_eq!(s.csrs.mcause, 3);
        assert_eq!(s.csrs.mtval, DEFAULT_MEM_BASE);
    }

    #[test]
    fn loads_sign_and_zero_extend() {
        let mut s = state();
        s.set_gpr(2, DEFAULT_MEM_BASE + 0x100);
        s.store_mem(DEFAULT_MEM_BASE + 0x100, 8, 0x8081_8283_8485_8687).unwrap();
        run(&mut s, asm::lb(3, 2, 0));
        assert_eq!(s.gpr(3), 0xFFFF_FFFF_FFFF_FF87);
        run(&mut s, asm::lbu(3, 2, 0));
        assert_eq!(s.gpr(3), 0x87);
        run(&mut s, asm::lh(3, 2, 1));
        assert_eq!(s.gpr(3), 0xFFFF_FFFF_FFFF_8586);
        run(&mut s, asm::lwu(3, 2, 4));
        assert_eq!(s.gpr(3), 0x8081_8283);
        run(&mut s, asm::lw(3, 2, 4));
        assert_eq!(s.gpr(3), 0xFFFF_FFFF_8081_8283);
    }

    #[test]
    fn faulting_load_does_not_write_rd() {
        let mut s = state();
        s.csrs.mtvec = 0x8000_1000;
        s.set_gpr(3, 77);
        assert_eq!(run(&mut s, asm::ld(3, 0, 0)), Retired::Trap);
        assert_eq!(s.gpr(3), 77);
        assert_eq!(s.csrs.mcause, 5);
        assert_eq!(s.csrs.mtval, 0);
    }

    #[test]
    fn csr_read_modify_write() {
        let mut s = state();
        s.set_gpr(5, 0x8000_2000);
        run(&mut s, asm::csrrw(6, csr::MTVEC, 5));
        assert_eq!(s.gpr(6), 0);
        assert_eq!(s.csrs.mtvec, 0x8000_2000);
        run(&mut s, asm::csrrsi(7, csr::MTVEC, 0x10));
        assert_eq!(s.gpr(7), 0x8000_2000);
        assert_eq!(s.csrs.mtvec, 0x8000_2010);
        run(&mut s, asm::csrrci(0, csr::MTVEC, 0x10));
        assert_eq!(s.csrs.mtvec, 0x8000_2000);
        // csrrs with x0 on a read-only CSR is a pure read.
        assert_eq!(run(&mut s, asm::csrrs(8, csr::MHARTID, 0)), Retired::Success);
    }

    #[test]
    fn bad_csr_access_is_illegal() {
        let mut s = state();
        s.csrs.mtvec = 0x8000_1000;
        s.set_gpr(1, 5);
        let w = asm::csrrw(2, csr::MHARTID, 1);
        assert_eq!(run(&mut s, w), Retired::Trap);
        assert_eq!(s.csrs.mcause, 2);
        assert_eq!(s.csrs.mtval, w as u64);
        assert_eq!(s.gpr(2), 0);
        let w = asm::csrrs(2, 0x340, 0);
        assert_eq!(run(&mut s, w), Retired::Trap);
        assert_eq!(s.csrs.mtval, w as u64);
    }

    #[test]
    fn jalr_clears_low_bit_and_links() {
        let mut s = state();
        s.set_gpr(5, DEFAULT_MEM_BASE + 0x41);
        run(&mut s, asm::jalr(1, 5, 2));
        assert_eq!(s.pc, DEFAULT_MEM_BASE + 0x42);
        assert_eq!(s.gpr(1), DEFAULT_MEM_BASE + 4);
    }

    #[test]
    fn word_ops_sign_extend() {
        let mut s = state();
        s.set_gpr(1, 0x7FFF_FFFF);
        run(&mut s, asm::addiw(2, 1, 1));
        assert_eq!(s.gpr(2), 0xFFFF_FFFF_8000_0000);
        run(&mut s, asm::sraiw(3, 2, 4));
        assert_eq!(s.gpr(3), 0xFFFF_FFFF_F800_0000);
        run(&mut s, asm::srliw(3, 2, 4));
        assert_eq!(s.gpr(3), 0x0800_0000);
    }

    proptest! {
        #[test]
        fn decode_is_total_and_reencodes(w: u32) {
            let insn = decode_base(w);
            prop_assert_eq!(decode_base(w), insn);
            prop_assert_eq!(insn.encode(), w);
        }

        #[test]
        fn shift_amounts_are_masked(w: u32) {
            match decode_base(w) {
                BaseInsn::Imm { op: ImmOp::Slli | ImmOp::Srli | ImmOp::Srai, imm, .. } => prop_assert!((0..64).contains(&imm)),
                BaseInsn::ImmW { op: ImmWOp::Slliw | ImmWOp::Srliw | ImmWOp::Sraiw, imm, .. } => prop_assert!((0..32).contains(&imm)),
                _ => {}
            }
        }
    }
}
