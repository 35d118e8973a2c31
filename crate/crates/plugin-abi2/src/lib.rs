//! Test fixture: the M module re-labelled with ABI version 2. A conforming
//! host must refuse it before touching the entry-point table.

use modsim_abi::ModuleEntry;
use modsim_ext_m::MExtension;

static ENTRY: ModuleEntry = ModuleEntry::for_extension::<MExtension>(2);

#[no_mangle]
pub extern "C" fn modriscv_ext_entry() -> *const ModuleEntry {
    &ENTRY
}
