//! Test fixture: a module named `mulshadow` (letter X) that claims exactly
//! the 64-bit MUL encoding. Registered next to the real M module it makes
//! every MUL word ambiguous, which strict-overlap mode must report.

use std::ffi::CStr;

use modsim_abi::{fmt_rrr, Extension, Hart, ModuleEntry, Retired, ABI_VERSION};

pub struct MulShadow;

#[derive(Clone, Copy)]
pub struct Operands {
    rd: u8,
    rs1: u8,
    rs2: u8,
}

impl Extension for MulShadow {
    const NAME: &'static CStr = c"mulshadow";
    const ISA_LETTERS: &'static CStr = c"X";
    type Ast = Operands;

    fn decode(word: u32) -> Option<Operands> {
        (word & 0xFE00_707F == 0x0200_0033).then_some(Operands {
            rd: (word >> 7 & 31) as u8,
            rs1: (word >> 15 & 31) as u8,
            rs2: (word >> 20 & 31) as u8,
        })
    }

    fn execute<H: Hart + ?Sized>(ast: Operands, hart: &mut H) -> Retired {
        let v = hart.read_gpr(ast.rs1).wrapping_mul(hart.read_gpr(ast.rs2));
        hart.write_gpr(ast.rd, v);
        Retired::Success
    }

    fn disasm(ast: Operands) -> String {
        fmt_rrr("mul", ast.rd, ast.rs1, ast.rs2)
    }

    fn pack(ast: Operands) -> u64 {
        ast.rd as u64 | (ast.rs1 as u64) << 8 | (ast.rs2 as u64) << 16
    }

    fn unpack(bits: u64) -> Operands {
        Operands { rd: bits as u8, rs1: (bits >> 8) as u8, rs2: (bits >> 16) as u8 }
    }
}

static ENTRY: ModuleEntry = ModuleEntry::for_extension::<MulShadow>(ABI_VERSION);

#[no_mangle]
pub extern "C" fn modriscv_ext_entry() -> *const ModuleEntry {
    &ENTRY
}
