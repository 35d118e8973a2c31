//! Defines a new instruction as an extension module in this program and
//! registers it next to the M module.
//!
//! `mac rd, rs1, rs2` (custom-0 opcode) computes `rd += rs1 * rs2`. The same
//! type could be exported from a cdylib with
//! `ModuleEntry::for_extension::<Mac>(ABI_VERSION)` and a
//! `modriscv_ext_entry` function.
//!
//! ```text
//! cargo run --example custom_extension
//! ```

use std::ffi::CStr;

use modsim::arch::DEFAULT_MEM_BASE;
use modsim::asm::{self, Assembler};
use modsim::engine::StepOutcome;
use modsim::ext::ModuleDescriptor;
use modsim::loader::load_static;
use modsim::trace::format_record;
use modsim::{ArchState, Emulator};
use modsim_abi::{fmt_rrr, Extension, Hart, Retired};

const CUSTOM_0: u32 = 0b000_1011;

struct Mac;

#[derive(Clone, Copy)]
struct Regs {
    rd: u8,
    rs1: u8,
    rs2: u8,
}

impl Extension for Mac {
    const NAME: &'static CStr = c"mac";
    const ISA_LETTERS: &'static CStr = c"X";
    type Ast = Regs;

    fn decode(word: u32) -> Option<Regs> {
        (word & 0xFE00_707F == CUSTOM_0).then_some(Regs {
            rd: (word >> 7 & 31) as u8,
            rs1: (word >> 15 & 31) as u8,
            rs2: (word >> 20 & 31) as u8,
        })
    }

    fn execute<H: Hart + ?Sized>(r: Regs, hart: &mut H) -> Retired {
        let acc = hart.read_gpr(r.rd);
        let v = acc.wrapping_add(hart.read_gpr(r.rs1).wrapping_mul(hart.read_gpr(r.rs2)));
        hart.write_gpr(r.rd, v);
        Retired::Success
    }

    fn disasm(r: Regs) -> String {
        fmt_rrr("mac", r.rd, r.rs1, r.rs2)
    }

    fn pack(r: Regs) -> u64 {
        r.rd as u64 | (r.rs1 as u64) << 8 | (r.rs2 as u64) << 16
    }

    fn unpack(bits: u64) -> Regs {
        Regs { rd: bits as u8, rs1: (bits >> 8) as u8, rs2: (bits >> 16) as u8 }
    }
}

fn mac(rd: u8, rs1: u8, rs2: u8) -> u32 {
    asm::r_type(0, rs2, rs1, 0, rd, CUSTOM_0)
}

fn main() {
    // Dot product of [1, 2, 3] and [4, 5, 6] with mac, then scaled with mul.
    let mut a = Assembler::new(DEFAULT_MEM_BASE);
    a.li(10, 0);
    for (x, y) in [(1, 4), (2, 5), (3, 6)] {
        a.li(5, x).li(6, y).emit(mac(10, 5, 6));
    }
    a.li(7, 2).emit(asm::mul(10, 10, 7)).exit(0, 5, 6);
    let elf = modsim::elf::write_elf(&a.finish().expect("assemble"));

    let mut emu = Emulator::modular(ArchState::new(DEFAULT_MEM_BASE, 1 << 20));
    emu.register(ModuleDescriptor::in_process::<Mac>().expect("valid module")).expect("register mac");
    emu.register(load_static("m").expect("builtin m")).expect("register m");
    modsim::elf::load_elf(&elf, &mut emu.state).expect("load");
    for m in emu.registry().unwrap().modules() {
        println!("module {}", m.list_line());
    }

    loop {
        match emu.step(true).expect("step") {
            StepOutcome::Halted(code) => {
                println!("exit {code}, x10 = {}", emu.state.gpr(10));
                break;
            }
            StepOutcome::Retired(r) | StepOutcome::Trapped(r) => {
                if r.disasm.starts_with("mac") || r.disasm.starts_with("mul") {
                    println!("{}", format_record(&r));
                }
            }
        }
    }
}
