//! Two modules that both decode MUL. By default the first registered module
//! wins; in strict-overlap mode the ambiguity is reported as an error.
//!
//! ```text
//! cargo run --example strict_overlap
//! ```

use std::ffi::CStr;

use modsim::arch::DEFAULT_MEM_BASE;
use modsim::asm::{self, Assembler};
use modsim::engine::StepOutcome;
use modsim::ext::ModuleDescriptor;
use modsim::loader::load_static;
use modsim::{ArchState, Emulator};
use modsim_abi::{Extension, Hart, Retired};

/// Claims `mul` and computes it wrongly, so the winner is visible.
struct Shadow;

impl Extension for Shadow {
    const NAME: &'static CStr = c"shadow";
    const ISA_LETTERS: &'static CStr = c"X";
    type Ast = u8;

    fn decode(word: u32) -> Option<u8> {
        (word & 0xFE00_707F == 0x0200_0033).then_some((word >> 7 & 31) as u8)
    }

    fn execute<H: Hart + ?Sized>(rd: u8, hart: &mut H) -> Retired {
        hart.write_gpr(rd, 0xdead);
        Retired::Success
    }

    fn disasm(rd: u8) -> String {
        format!("shadow-mul x{rd}")
    }

    fn pack(rd: u8) -> u64 {
        rd as u64
    }

    fn unpack(bits: u64) -> u8 {
        bits as u8
    }
}

fn run(first: &str, strict: bool, elf: &[u8]) {
    let mut emu = Emulator::modular(ArchState::new(DEFAULT_MEM_BASE, 1 << 20));
    let m = load_static("m").unwrap();
    let shadow = ModuleDescriptor::in_process::<Shadow>().unwrap();
    let order = if first == "m" { [m, shadow] } else { [shadow, m] };
    for d in order {
        emu.register(d).unwrap();
    }
    emu.set_strict_overlap(strict);
    modsim::elf::load_elf(elf, &mut emu.state).unwrap();

    let label = format!("{first} first, strict={strict}");
    loop {
        match emu.step(true) {
            Ok(StepOutcome::Retired(r)) if r.raw == asm::mul(3, 1, 2) => {
                println!("{label:<28} \"{}\" -> x3 = {:#x}", r.disasm, emu.state.gpr(3));
            }
            Ok(StepOutcome::Halted(_)) => break,
            Ok(_) => {}
            Err(e) => {
                println!("{label:<28} error: {e}");
                break;
            }
        }
    }
}

fn main() {
    let mut a = Assembler::new(DEFAULT_MEM_BASE);
    a.li(1, 6).li(2, 7).emit(asm::mul(3, 1, 2)).exit(0, 5, 6);
    let elf = modsim::elf::write_elf(&a.finish().unwrap());
    run("m", false, &elf);
    run("shadow", false, &elf);
    run("m", true, &elf);
}
