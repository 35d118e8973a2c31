//! The M extension module as a dynamic library.

use modsim_abi::ModuleEntry;

#[no_mangle]
pub extern "C" fn modriscv_ext_entry() -> *const ModuleEntry {
    modsim_ext_m::m_ext_entry()
}
