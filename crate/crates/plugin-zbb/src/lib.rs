//! The Zbb subset module as a dynamic library.

use modsim_abi::ModuleEntry;

#[no_mangle]
pub extern "C" fn modriscv_ext_entry() -> *const ModuleEntry {
    modsim_ext_zbb::zbb_ext_entry()
}
