//! A subset of the RV64 Zbb bit-manipulation extension as a modsim module.
//!
//! Claims ANDN, ORN, XNOR, CLZ, CTZ, CPOP, MIN[U], MAX[U], SEXT.B, SEXT.H,
//! ZEXT.H, ROL, ROR, RORI, REV8 and ORC.B. The word forms (CLZW, ROLW, ...)
//! are not part of the subset and stay illegal. Registers under ISA letter `B`.

use std::ffi::CStr;

use modsim_abi::{fmt_rr, fmt_rri, fmt_rrr, Extension, Hart, ModuleEntry, Retired, ABI_VERSION};

const OPCODE_OP_IMM: u32 = 0b001_0011;
const OPCODE_OP: u32 = 0b011_0011;
const OPCODE_OP_32: u32 = 0b011_1011;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[repr(u8)]
pub enum ZbbOp {
    Andn,
    Orn,
    Xnor,
    Clz,
    Ctz,
    Cpop,
    Min,
    Max,
    Minu,
    Maxu,
    SextB,
    SextH,
    ZextH,
    Rol,
    Ror,
    Rori,
    Rev8,
    OrcB,
}

impl ZbbOp {
    pub const ALL: [ZbbOp; 18] = [
        ZbbOp::Andn,
        ZbbOp::Orn,
        ZbbOp::Xnor,
        ZbbOp::Clz,
        ZbbOp::Ctz,
        ZbbOp::Cpop,
        ZbbOp::Min,
        ZbbOp::Max,
        ZbbOp::Minu,
        ZbbOp::Maxu,
        ZbbOp::SextB,
        ZbbOp::SextH,
        ZbbOp::ZextH,
        ZbbOp::Rol,
        ZbbOp::Ror,
        ZbbOp::Rori,
        ZbbOp::Rev8,
        ZbbOp::OrcB,
    ];

    pub fn mnemonic(self) -> &'static str {
        match self {
            ZbbOp::Andn => "andn",
            ZbbOp::Orn => "orn",
            ZbbOp::Xnor => "xnor",
            ZbbOp::Clz => "clz",
            ZbbOp::Ctz => "ctz",
            ZbbOp::Cpop => "cpop",
            ZbbOp::Min => "min",
            ZbbOp::Max => "max",
            ZbbOp::Minu => "minu",
            ZbbOp::Maxu => "maxu",
            ZbbOp::SextB => "sext.b",
            ZbbOp::SextH => "sext.h",
            ZbbOp::ZextH => "zext.h",
            ZbbOp::Rol => "rol",
            ZbbOp::Ror => "ror",
            ZbbOp::Rori => "rori",
            ZbbOp::Rev8 => "rev8",
            ZbbOp::OrcB => "orc.b",
        }
    }

    /// Single-source-register forms.
    pub fn is_unary(self) -> bool {
        matches!(
            self,
            ZbbOp::Clz
                | ZbbOp::Ctz
                | ZbbOp::Cpop
                | ZbbOp::SextB
                | ZbbOp::SextH
                | ZbbOp::ZextH
                | ZbbOp::Rev8
                | ZbbOp::OrcB
        )
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct ZbbInsn {
    pub op: ZbbOp,
    pub rd: u8,
    pub rs1: u8,
    /// Zero for unary forms and RORI.
    pub rs2: u8,
    /// RORI only.
    pub shamt: u8,
}

impl ZbbInsn {
    pub fn encode(self) -> u32 {
        let r = |funct7: u32, funct3: u32, opcode: u32| {
            (funct7 << 25)
                | ((self.rs2 as u32) << 20)
                | ((self.rs1 as u32) << 15)
                | (funct3 << 12)
                | ((self.rd as u32) << 7)
                | opcode
        };
        let i = |imm12: u32, funct3: u32| {
            (imm12 << 20) | ((self.rs1 as u32) << 15) | (funct3 << 12) | ((self.rd as u32) << 7) | OPCODE_OP_IMM
        };
        match self.op {
            ZbbOp::Andn => r(0b010_0000, 7, OPCODE_OP),
            ZbbOp::Orn => r(0b010_0000, 6, OPCODE_OP),
            ZbbOp::Xnor => r(0b010_0000, 4, OPCODE_OP),
            ZbbOp::Min => r(0b000_0101, 4, OPCODE_OP),
            ZbbOp::Minu => r(0b000_0101, 5, OPCODE_OP),
            ZbbOp::Max => r(0b000_0101, 6, OPCODE_OP),
            ZbbOp::Maxu => r(0b000_0101, 7, OPCODE_OP),
            ZbbOp::Rol => r(0b011_0000, 1, OPCODE_OP),
            ZbbOp::Ror => r(0b011_0000, 5, OPCODE_OP),
            ZbbOp::ZextH => r(0b000_0100, 4, OPCODE_OP_32),
            ZbbOp::Clz => i(0x600, 1),
            ZbbOp::Ctz => i(0x601, 1),
            ZbbOp::Cpop => i(0x602, 1),
            ZbbOp::SextB => i(0x604, 1),
            ZbbOp::SextH => i(0x605, 1),
            ZbbOp::Rori => i((0b01_1000 << 6) | self.shamt as u32, 5),
            ZbbOp::Rev8 => i(0x6B8, 5),
            ZbbOp::OrcB => i(0x287, 5),
        }
    }
}

#[inline]
pub fn decode(word: u32) -> Option<ZbbInsn> {
    // Cheap rejection of the base words that share these major opcodes.
    let plausible = match word & 0x7f {
        OPCODE_OP => matches!(word >> 25, 0b010_0000 | 0b000_0101 | 0b011_0000),
        OPCODE_OP_IMM => (word >> 12) & 3 == 1,
        OPCODE_OP_32 => word >> 25 == 0b000_0100,
        _ => false,
    };
    if !plausible {
        return None;
    }
    let rd = ((word >> 7) & 0x1f) as u8;
    let rs1 = ((word >> 15) & 0x1f) as u8;
    let rs2 = ((word >> 20) & 0x1f) as u8;
    let funct3 = (word >> 12) & 7;
    let funct7 = word >> 25;
    let imm12 = word >> 20;
    let unary = |op| Some(ZbbInsn { op, rd, rs1, rs2: 0, shamt: 0 });
    let binary = |op| Some(ZbbInsn { op, rd, rs1, rs2, shamt: 0 });
    match word & 0x7f {
        OPCODE_OP => match (funct7, funct3) {
            (0b010_0000, 7) => binary(ZbbOp::Andn),
            (0b010_0000, 6) => binary(ZbbOp::Orn),
            (0b010_0000, 4) => binary(ZbbOp::Xnor),
            (0b000_0101, 4) => binary(ZbbOp::Min),
            (0b000_0101, 5) => binary(ZbbOp::Minu),
            (0b000_0101, 6) => binary(ZbbOp::Max),
            (0b000_0101, 7) => binary(ZbbOp::Maxu),
            (0b011_0000, 1) => binary(ZbbOp::Rol),
            (0b011_0000, 5) => binary(ZbbOp::Ror),
            _ => None,
        },
        OPCODE_OP_IMM => match (funct3, imm12) {
            (1, 0x600) => unary(ZbbOp::Clz),
            (1, 0x601) => unary(ZbbOp::Ctz),
            (1, 0x602) => unary(ZbbOp::Cpop),
            (1, 0x604) => unary(ZbbOp::SextB),
            (1, 0x605) => unary(ZbbOp::SextH),
            (5, 0x6B8) => unary(ZbbOp::Rev8),
            (5, 0x287) => unary(ZbbOp::OrcB),
            (5, imm) if imm >> 6 == 0b01_1000 => {
                Some(ZbbInsn { op: ZbbOp::Rori, rd, rs1, rs2: 0, shamt: (imm & 0x3f) as u8 })
            }
            _ => None,
        },
        OPCODE_OP_32 if funct7 == 0b000_0100 && funct3 == 4 && rs2 == 0 => unary(ZbbOp::ZextH),
        _ => None,
    }
}

/// Result for `a = x[rs1]` and `b = x[rs2]` (or the shift amount for RORI).
/// Unary forms ignore `b`.
#[inline]
pub fn compute(op: ZbbOp, a: u64, b: u64) -> u64 {
    match op {
        ZbbOp::Andn => a & !b,
        ZbbOp::Orn => a | !b,
        ZbbOp::Xnor => !(a ^ b),
        ZbbOp::Clz => a.leading_zeros() as u64,
        ZbbOp::Ctz => a.trailing_zeros() as u64,
        ZbbOp::Cpop => a.count_ones() as u64,
        ZbbOp::Min => (a as i64).min(b as i64) as u64,
        ZbbOp::Max => (a as i64).max(b as i64) as u64,
        ZbbOp::Minu => a.min(b),
        ZbbOp::Maxu => a.max(b),
        ZbbOp::SextB => a as i8 as i64 as u64,
        ZbbOp::SextH => a as i16 as i64 as u64,
        ZbbOp::ZextH => a as u16 as u64,
        ZbbOp::Rol => a.rotate_left((b & 63) as u32),
        ZbbOp::Ror | ZbbOp::Rori => a.rotate_right((b & 63) as u32),
        ZbbOp::Rev8 => a.swap_bytes(),
        ZbbOp::OrcB => {
            const LOW7: u64 = 0x7F7F_7F7F_7F7F_7F7F;
            // High bit of each byte is set iff the byte is nonzero.
            let nonzero = ((a & LOW7).wrapping_add(LOW7) | a) & !LOW7;
            (nonzero >> 7) * 0xFF
        }
    }
}

pub fn execute<H: Hart + ?Sized>(insn: ZbbInsn, hart: &mut H) -> Retired {
    let a = hart.read_gpr(insn.rs1);
    let b = match insn.op {
        ZbbOp::Rori => insn.shamt as u64,
        op if op.is_unary() => 0,
        _ => hart.read_gpr(insn.rs2),
    };
    hart.write_gpr(insn.rd, compute(insn.op, a, b));
    Retired::Success
}

pub fn disasm(insn: ZbbInsn) -> String {
    let mnemonic = insn.op.mnemonic();
    match insn.op {
        ZbbOp::Rori => fmt_rri(mnemonic, insn.rd, insn.rs1, insn.shamt as i64),
        op if op.is_unary() => fmt_rr(mnemonic, insn.rd, insn.rs1),
        _ => fmt_rrr(mnemonic, insn.rd, insn.rs1, insn.rs2),
    }
}

pub struct ZbbExtension;

impl Extension for ZbbExtension {
    const NAME: &'static CStr = c"zbb";
    const ISA_LETTERS: &'static CStr = c"B";

    type Ast = ZbbInsn;

    #[inline]
    fn decode(word: u32) -> Option<ZbbInsn> {
        decode(word)
    }

    #[inline]
    fn execute<H: Hart + ?Sized>(ast: ZbbInsn, hart: &mut H) -> Retired {
        execute(ast, hart)
    }

    fn disasm(ast: ZbbInsn) -> String {
        disasm(ast)
    }

    fn pack(ast: ZbbInsn) -> u64 {
        ast.op as u64
            | (ast.rd as u64) << 8
            | (ast.rs1 as u64) << 16
            | (ast.rs2 as u64) << 24
            | (ast.shamt as u64) << 32
    }

    fn unpack(bits: u64) -> ZbbInsn {
        ZbbInsn {
            op: ZbbOp::ALL[(bits & 0xff) as usize],
            rd: (bits >> 8) as u8,
            rs1: (bits >> 16) as u8,
            rs2: (bits >> 24) as u8,
            shamt: (bits >> 32) as u8,
        }
    }
}

static ENTRY: ModuleEntry = ModuleEntry::for_extension::<ZbbExtension>(ABI_VERSION);

pub extern "C" fn zbb_ext_entry() -> *const ModuleEntry {
    &ENTRY
}

#[cfg(test)]
mod tests {
    use super::*;

    fn insn(op: ZbbOp, rd: u8, rs1: u8, rs2: u8, shamt: u8) -> ZbbInsn {
        ZbbInsn { op, rd, rs1, rs2, shamt }
    }

    #[test]
    fn decode_reference_encodings() {
        assert_eq!(decode(0x4073_72B3), Some(insn(ZbbOp::Andn, 5, 6, 7, 0)));
        assert_eq!(decode(0x6003_1293), Some(insn(ZbbOp::Clz, 5, 6, 0, 0)));
        assert_eq!(decode(0x0220_8233), None);
    }

    #[test]
    fn encode_inverts_decode() {
        for op in ZbbOp::ALL {
            let i = if op == ZbbOp::Rori {
                insn(op, 9, 10, 0, 63)
            } else if op.is_unary() {
                insn(op, 9, 10, 0, 0)
            } else {
                insn(op, 9, 10, 11, 0)
            };
            assert_eq!(decode(i.encode()), Some(i), "{op:?}");
            assert_eq!(ZbbExtension::unpack(ZbbExtension::pack(i)), i);
        }
    }

    #[test]
    fn base_shift_encodings_are_not_claimed() {
        // slli x1, x2, 3 / srli / srai
        for word in [0x0031_1093u32, 0x0031_5093, 0x4031_5093] {
            assert_eq!(decode(word), None, "{word:#x}");
        }
    }

    #[test]
    fn zext_h_requires_zero_rs2() {
        let good = insn(ZbbOp::ZextH, 1, 2, 0, 0).encode();
        assert!(decode(good).is_some());
        assert_eq!(decode(good | (1 << 20)), None);
    }

    #[test]
    fn disasm_format() {
        assert_eq!(disasm(insn(ZbbOp::Andn, 5, 6, 7, 0)), "andn x5, x6, x7");
        assert_eq!(disasm(insn(ZbbOp::Rori, 1, 2, 0, 13)), "rori x1, x2, 13");
        assert_eq!(disasm(insn(ZbbOp::SextB, 3, 4, 0, 0)), "sext.b x3, x4");
    }

    #[test]
    fn spot_values() {
        assert_eq!(compute(ZbbOp::Cpop, 0, 0), 0);
        assert_eq!(compute(ZbbOp::Clz, 0, 0), 64);
        assert_eq!(compute(ZbbOp::Ctz, 0, 0), 64);
        assert_eq!(compute(ZbbOp::Andn, 0b1100, 0b1010), 0b0100);
        assert_eq!(compute(ZbbOp::OrcB, 0x0001_0000_8000_0000, 0), 0x00FF_0000_FF00_0000);
    }
}
