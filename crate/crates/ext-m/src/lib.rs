//! RV64 M extension (integer multiply/divide) as a modsim extension module.
//!
//! The same code backs the compiled-in builtin and the `modsim-plugin-m`
//! dynamic library; [`m_ext_entry`] returns the record both bindings register.

use std::ffi::CStr;

use modsim_abi::{fmt_rrr, Extension, Hart, ModuleEntry, Retired, ABI_VERSION};

const OPCODE_OP: u32 = 0b011_0011;
const OPCODE_OP_32: u32 = 0b011_1011;
const FUNCT7_MULDIV: u32 = 0b000_0001;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum MOp {
    Mul,
    Mulh,
    Mulhsu,
    Mulhu,
    Div,
    Divu,
    Rem,
    Remu,
    Mulw,
    Divw,
    Divuw,
    Remw,
    Remuw,
}

impl MOp {
    pub const ALL: [MOp; 13] = [
        MOp::Mul,
        MOp::Mulh,
        MOp::Mulhsu,
        MOp::Mulhu,
        MOp::Div,
        MOp::Divu,
        MOp::Rem,
        MOp::Remu,
        MOp::Mulw,
        MOp::Divw,
        MOp::Divuw,
        MOp::Remw,
        MOp::Remuw,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            MOp::Mul => "mul",
            MOp::Mulh => "mulh",
            MOp::Mulhsu => "mulhsu",
            MOp::Mulhu => "mulhu",
            MOp::Div => "div",
            MOp::Divu => "divu",
            MOp::Rem => "rem",
            MOp::Remu => "remu",
            MOp::Mulw => "mulw",
            MOp::Divw => "divw",
            MOp::Divuw => "divuw",
            MOp::Remw => "remw",
            MOp::Remuw => "remuw",
        }
    }

    /// (opcode, funct3) of the encoding.
    pub fn encoding(self) -> (u32, u32) {
        match self {
            MOp::Mul => (OPCODE_OP, 0),
            MOp::Mulh => (OPCODE_OP, 1),
            MOp::Mulhsu => (OPCODE_OP, 2),
            MOp::Mulhu => (OPCODE_OP, 3),
            MOp::Div => (OPCODE_OP, 4),
            MOp::Divu => (OPCODE_OP, 5),
            MOp::Rem => (OPCODE_OP, 6),
            MOp::Remu => (OPCODE_OP, 7),
            MOp::Mulw => (OPCODE_OP_32, 0),
            MOp::Divw => (OPCODE_OP_32, 4),
            MOp::Divuw => (OPCODE_OP_32, 5),
            MOp::Remw => (OPCODE_OP_32, 6),
            MOp::Remuw => (OPCODE_OP_32, 7),
        }
    }

    fn from_index(idx: u8) -> MOp {
        MOp::ALL[idx as usize]
    }
}

/// A decoded M instruction. Words outside the extension decode to `None`
/// rather than to an illegal variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MInsn {
    pub op: MOp,
    pub rd: u8,
    pub rs1: u8,
    pub rs2: u8,
}

impl MInsn {
    pub fn encode(self) -> u32 {
        let (opcode, funct3) = self.op.encoding();
        (FUNCT7_MULDIV << 25)
            | ((self.rs2 as u32) << 20)
            | ((self.rs1 as u32) << 15)
            | (funct3 << 12)
            | ((self.rd as u32) << 7)
            | opcode
    }
}

pub fn decode(word: u32) -> Option<MInsn> {
    if word >> 25 != FUNCT7_MULDIV {
        return None;
    }
    let funct3 = (word >> 12) & 7;
    let op = match (word & 0x7f, funct3) {
        (OPCODE_OP, 0) => MOp::Mul,
        (OPCODE_OP, 1) => MOp::Mulh,
        (OPCODE_OP, 2) => MOp::Mulhsu,
        (OPCODE_OP, 3) => MOp::Mulhu,
        (OPCODE_OP, 4) => MOp::Div,
        (OPCODE_OP, 5) => MOp::Divu,
        (OPCODE_OP, 6) => MOp::Rem,
        (OPCODE_OP, 7) => MOp::Remu,
        (OPCODE_OP_32, 0) => MOp::Mulw,
        (OPCODE_OP_32, 4) => MOp::Divw,
        (OPCODE_OP_32, 5) => MOp::Divuw,
        (OPCODE_OP_32, 6) => MOp::Remw,
        (OPCODE_OP_32, 7) => MOp::Remuw,
        _ => return None,
    };
    Some(MInsn {
        op,
        rd: ((word >> 7) & 0x1f) as u8,
        rs1: ((word >> 15) & 0x1f) as u8,
        rs2: ((word >> 20) & 0x1f) as u8,
    })
}

#[inline]
fn sext32(v: u32) -> u64 {
    v as i32 as i64 as u64
}

/// Result written to rd for operands `a = x[rs1]`, `b = x[rs2]`.
///
/// Division never traps: x/0 is all ones, x%0 is x, and the signed overflow
/// case MIN/-1 gives MIN with remainder 0.
#[inline]
pub fn compute(op: MOp, a: u64, b: u64) -> u64 {
    match op {
        MOp::Mul => a.wrapping_mul(b),
        MOp::Mulh => ((a as i64 as i128 * b as i64 as i128) >> 64) as u64,
        MOp::Mulhsu => ((a as i64 as i128).wrapping_mul(b as i128) >> 64) as u64,
        MOp::Mulhu => ((a as u128 * b as u128) >> 64) as u64,
        MOp::Div => {
            if b == 0 {
                u64::MAX
            } else {
                (a as i64).wrapping_div(b as i64) as u64
            }
        }
        MOp::Divu => a.checked_div(b).unwrap_or(u64::MAX),
        MOp::Rem => {
            if b == 0 {
                a
            } else {
                (a as i64).wrapping_rem(b as i64) as u64
            }
        }
        MOp::Remu => a.checked_rem(b).unwrap_or(a),
        MOp::Mulw => sext32((a as u32).wrapping_mul(b as u32)),
        MOp::Divw => {
            let (a, b) = (a as i32, b as i32);
            if b == 0 {
                u64::MAX
            } else {
                a.wrapping_div(b) as i64 as u64
            }
        }
        MOp::Divuw => {
            let (a, b) = (a as u32, b as u32);
            sext32(a.checked_div(b).unwrap_or(u32::MAX))
        }
        MOp::Remw => {
            let (a, b) = (a as i32, b as i32);
            if b == 0 {
                a as i64 as u64
            } else {
                a.wrapping_rem(b) as i64 as u64
            }
        }
        MOp::Remuw => {
            let (a, b) = (a as u32, b as u32);
            sext32(a.checked_rem(b).unwrap_or(a))
        }
    }
}

pub fn execute<H: Hart + ?Sized>(insn: MInsn, hart: &mut H) -> Retired {
    let a = hart.read_gpr(insn.rs1);
    let b = hart.read_gpr(insn.rs2);
    hart.write_gpr(insn.rd, compute(insn.op, a, b));
    Retired::Success
}

pub fn disasm(insn: MInsn) -> String {
    fmt_rrr(insn.op.mnemonic(), insn.rd, insn.rs1, insn.rs2)
}

/// The M extension as an ABI module: name `m`, ISA letter `M`.
pub struct MExtension;

impl Extension for MExtension {
    const NAME: &'static CStr = c"m";
    const ISA_LETTERS: &'static CStr = c"M";

    type Ast = MInsn;

    #[inline]
    fn decode(word: u32) -> Option<MInsn> {
        decode(word)
    }

    #[inline]
    fn execute<H: Hart + ?Sized>(ast: MInsn, hart: &mut H) -> Retired {
        execute(ast, hart)
    }

    fn disasm(ast: MInsn) -> String {
        disasm(ast)
    }

    fn pack(ast: MInsn) -> u64 {
        ast.op as u64 | (ast.rd as u64) << 8 | (ast.rs1 as u64) << 16 | (ast.rs2 as u64) << 24
    }

    fn unpack(bits: u64) -> MInsn {
        MInsn {
            op: MOp::from_index(bits as u8),
            rd: (bits >> 8) as u8,
            rs1: (bits >> 16) as u8,
            rs2: (bits >> 24) as u8,
        }
    }
}

static ENTRY: ModuleEntry = ModuleEntry::for_extension::<MExtension>(ABI_VERSION);

/// Module record for the M extension. Plugin crates re-export this under the
/// well-known entry symbol.
pub extern "C" fn m_ext_entry() -> *const ModuleEntry {
    &ENTRY
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decode_reference_encodings() {
        // mul x4, x1, x2
        assert_eq!(decode(0x0220_8233), Some(MInsn { op: MOp::Mul, rd: 4, rs1: 1, rs2: 2 }));
        // divu x10, x11, x12
        assert_eq!(decode(0x02C5_D533), Some(MInsn { op: MOp::Divu, rd: 10, rs1: 11, rs2: 12 }));
        // addi x1, x0, 5
        assert_eq!(decode(0x0050_0093), None);
    }

    #[test]
    fn unused_op32_rows_are_not_claimed() {
        for funct3 in 1..=3u32 {
            let word = (1 << 25) | (funct3 << 12) | OPCODE_OP_32;
            assert_eq!(decode(word), None, "funct3={funct3}");
        }
    }

    #[test]
    fn decode_claims_exactly_thirteen_encodings() {
        // Fix register fields, sweep opcode/funct3/funct7.
        let mut claimed = 0;
        for opcode in 0..128u32 {
            for funct3 in 0..8u32 {
                for funct7 in 0..128u32 {
                    let word = (funct7 << 25) | (3 << 20) | (2 << 15) | (funct3 << 12) | (1 << 7) | opcode;
                    if decode(word).is_some() {
                        claimed += 1;
                    }
                }
            }
        }
        assert_eq!(claimed, 13);
    }

    #[test]
    fn encode_inverts_decode() {
        for op in MOp::ALL {
            let insn = MInsn { op, rd: 31, rs1: 7, rs2: 19 };
            assert_eq!(decode(insn.encode()), Some(insn));
        }
    }

    #[test]
    fn pack_round_trip() {
        for op in MOp::ALL {
            let insn = MInsn { op, rd: 1, rs1: 30, rs2: 17 };
            assert_eq!(MExtension::unpack(MExtension::pack(insn)), insn);
        }
    }

    #[test]
    fn disasm_format() {
        assert_eq!(disasm(MInsn { op: MOp::Mul, rd: 4, rs1: 1, rs2: 2 }), "mul x4, x1, x2");
        assert_eq!(disasm(MInsn { op: MOp::Divuw, rd: 10, rs1: 11, rs2: 12 }), "divuw x10, x11, x12");
    }

    #[test]
    fn edge_values() {
        let min = 0x8000_0000_0000_0000u64;
        let neg1 = u64::MAX;
        assert_eq!(compute(MOp::Mulh, neg1, neg1), 0);
        assert_eq!(compute(MOp::Div, 12345, 0), u64::MAX);
        assert_eq!(compute(MOp::Div, min, neg1), min);
        assert_eq!(compute(MOp::Rem, min, neg1), 0);
        assert_eq!(compute(MOp::Remu, 99, 0), 99);
        assert_eq!(compute(MOp::Divw, 0x8000_0000, neg1), 0xFFFF_FFFF_8000_0000);
        assert_eq!(compute(MOp::Remw, 0x8000_0000, neg1), 0);
        assert_eq!(compute(MOp::Divuw, 5, 0), u64::MAX);
        assert_eq!(compute(MOp::Remuw, 0x1_8000_0000, 0), 0xFFFF_FFFF_8000_0000);
    }
}
