//! Loading bare-metal RV64 executables, and writing the minimal ones that
//! the program generators produce.

use std::path::Path;

use object::elf::{self, FileHeader64};
use object::read::elf::{FileHeader as _, ProgramHeader as _, Sym as _};
use object::write::elf::{FileHeader, ProgramHeader, SectionHeader, Sym, Writer};
use object::{Endianness, FileKind};
use thiserror::Error;

use crate::arch::ArchState;
use crate::asm::Image;

#[derive(Debug, Error)]
pub enum ElfError {
    #[error("cannot read {path}: {source}")]
    Io { path: String, source: std::io::Error },
    #[error("not a 64-bit ELF file")]
    WrongClass,
    #[error("not a little-endian ELF file")]
    WrongEndianness,
    #[error("ELF machine is {0}, expected RISC-V ({riscv})", riscv = elf::EM_RISCV)]
    WrongMachine(u16),
    #[error("not an executable ELF file (type {0})")]
    NotExecutable(u16),
    #[error("segment at {addr:#x} (+{len:#x}) lies outside memory")]
    SegmentOutsideMemory { addr: u64, len: u64 },
    #[error("malformed ELF: {0}")]
    Malformed(String),
}

impl From<object::Error> for ElfError {
    fn from(e: object::Error) -> Self {
        ElfError::Malformed(e.to_string())
    }
}

/// Where execution starts and where the exit mailbox lives.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct LoadedElf {
    pub entry: u64,
    pub tohost: Option<u64>,
}

pub fn load_elf_file(path: &Path, state: &mut ArchState) -> Result<LoadedElf, ElfError> {
    let data = std::fs::read(path).map_err(|source| ElfError::Io { path: path.display().to_string(), source })?;
    load_elf(&data, state)
}

/// Copies every `PT_LOAD` segment to its physical address, zero-filling the
/// part beyond the file image, and looks up the `tohost` symbol. Sets the
/// state's pc and exit mailbox.
pub fn load_elf(data: &[u8], state: &mut ArchState) -> Result<LoadedElf, ElfError> {
    match FileKind::parse(data) {
        Ok(FileKind::Elf64) => {}
        Ok(FileKind::Elf32) => return Err(ElfError::WrongClass),
        _ => return Err(ElfError::Malformed("not an ELF file".into())),
    }
    let header = FileHeader64::<Endianness>::parse(data)?;
    let endian = header.endian()?;
    if endian != Endianness::Little {
        return Err(ElfError::WrongEndianness);
    }
    let machine = header.e_machine(endian);
    if machine != elf::EM_RISCV {
        return Err(ElfError::WrongMachine(machine));
    }
    let e_type = header.e_type(endian);
    if e_type != elf::ET_EXEC {
        return Err(ElfError::NotExecutable(e_type));
    }

    for ph in header.program_headers(endian, data)? {
        if ph.p_type(endian) != elf::PT_LOAD {
            continue;
        }
        let addr = ph.p_paddr(endian);
        let memsz = ph.p_memsz(endian);
        let bytes = ph.data(endian, data).map_err(|_| ElfError::Malformed("segment data out of range".into()))?;
        if (bytes.len() as u64) > memsz {
            return Err(ElfError::Malformed("segment file size exceeds memory size".into()));
        }
        if memsz > 0 && !state.mem.contains(addr, memsz) {
            return Err(ElfError::SegmentOutsideMemory { addr, len: memsz });
        }
        state.mem.write_bytes(addr, bytes);
        let tail = memsz - bytes.len() as u64;
        if tail > 0 {
            state.mem.write_bytes(addr + bytes.len() as u64, &vec![0; tail as usize]);
        }
    }

    let sections = header.sections(endian, data)?;
    let symbols = sections.symbols(endian, data, elf::SHT_SYMTAB)?;
    let tohost = symbols
        .iter()
        .find(|s| s.name(endian, symbols.strings()) == Ok(b"tohost".as_slice()))
        .map(|s| s.st_value(endian));

    let entry = header.e_entry(endian);
    state.pc = entry;
    state.tohost = tohost;
    Ok(LoadedElf { entry, tohost })
}

/// Serializes an assembled image as an ELF64 RISC-V executable with one
/// loadable segment and a symbol table.
pub fn write_elf(image: &Image) -> Vec<u8> {
    const ALIGN: u64 = 0x1000;
    let mut out = Vec::new();
    let mut w = Writer::new(Endianness::Little, true, &mut out);

    w.reserve_file_header();
    w.reserve_program_headers(1);
    let text_offset = w.reserve(image.bytes.len(), ALIGN as usize);

    w.reserve_null_section_index();
    let text_name = w.add_section_name(b".text");
    let text_index = w.reserve_section_index();
    w.reserve_null_symbol_index();
    let names: Vec<_> = image.symbols.iter().map(|(n, _)| w.add_string(n.as_bytes())).collect();
    for _ in &image.symbols {
        w.reserve_symbol_index(Some(text_index));
    }
    w.reserve_symtab_section_index();
    w.reserve_symtab();
    w.reserve_strtab_section_index();
    w.reserve_strtab();
    w.reserve_shstrtab_section_index();
    w.reserve_shstrtab();
    w.reserve_section_headers();

    w.write_file_header(&FileHeader {
        os_abi: elf::ELFOSABI_NONE,
        abi_version: 0,
        e_type: elf::ET_EXEC,
        e_machine: elf::EM_RISCV,
        e_entry: image.entry,
        e_flags: 0,
    })
    .expect("ELF64 header fields are in range");
    w.write_align_program_headers();
    let len = image.bytes.len() as u64;
    w.write_program_header(&ProgramHeader {
        p_type: elf::PT_LOAD,
        p_flags: elf::PF_R | elf::PF_W | elf::PF_X,
        p_offset: text_offset as u64,
        p_vaddr: image.base,
        p_paddr: image.base,
        p_filesz: len,
        p_memsz: len,
        p_align: ALIGN,
    });
    w.write_align(ALIGN as usize);
    w.write(&image.bytes);

    w.write_null_symbol();
    for (&name, (_, addr)) in names.iter().zip(&image.symbols) {
        w.write_symbol(&Sym {
            name: Some(name),
            section: Some(text_index),
            st_info: (elf::STB_GLOBAL << 4) | elf::STT_NOTYPE,
            st_other: elf::STV_DEFAULT,
            st_shndx: 0,
            st_value: *addr,
            st_size: 0,
        });
    }
    w.write_strtab();
    w.write_shstrtab();

    w.write_null_section_header();
    w.write_section_header(&SectionHeader {
        name: Some(text_name),
        sh_type: elf::SHT_PROGBITS,
        sh_flags: (elf::SHF_ALLOC | elf::SHF_EXECINSTR | elf::SHF_WRITE) as u64,
        sh_addr: image.base,
        sh_offset: text_offset as u64,
        sh_size: len,
        sh_link: 0,
        sh_info: 0,
        sh_addralign: 8,
        sh_entsize: 0,
    });
    w.write_symtab_section_header(1);
    w.write_strtab_section_header();
    w.write_shstrtab_section_header();
    out
}
