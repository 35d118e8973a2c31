//! A small RV64 assembler: instruction encoders plus a label-resolving
//! [`Assembler`] used to build test programs and benchmark workloads.

use std::collections::HashMap;

use thiserror::Error;

pub mod opcode {
    pub const LOAD: u32 = 0b000_0011;
    pub const MISC_MEM: u32 = 0b000_1111;
    pub const OP_IMM: u32 = 0b001_0011;
    pub const AUIPC: u32 = 0b001_0111;
    pub const OP_IMM_32: u32 = 0b001_1011;
    pub const STORE: u32 = 0b010_0011;
    pub const OP: u32 = 0b011_0011;
    pub const LUI: u32 = 0b011_0111;
    pub const OP_32: u32 = 0b011_1011;
    pub const BRANCH: u32 = 0b110_0011;
    pub const JALR: u32 = 0b110_0111;
    pub const JAL: u32 = 0b110_1111;
    pub const SYSTEM: u32 = 0b111_0011;
}

use opcode::*;

pub fn r_type(funct7: u32, rs2: u8, rs1: u8, funct3: u32, rd: u8, opcode: u32) -> u32 {
    (funct7 << 25) | ((rs2 as u32) << 20) | ((rs1 as u32) << 15) | (funct3 << 12) | ((rd as u32) << 7) | opcode
}

pub fn i_type(imm: i64, rs1: u8, funct3: u32, rd: u8, opcode: u32) -> u32 {
    (((imm as u32) & 0xFFF) << 20) | ((rs1 as u32) << 15) | (funct3 << 12) | ((rd as u32) << 7) | opcode
}

pub fn s_type(imm: i64, rs2: u8, rs1: u8, funct3: u32, opcode: u32) -> u32 {
    let imm = imm as u32;
    (((imm >> 5) & 0x7F) << 25)
        | ((rs2 as u32) << 20)
        | ((rs1 as u32) << 15)
        | (funct3 << 12)
        | ((imm & 0x1F) << 7)
        | opcode
}

pub fn b_type(imm: i64, rs2: u8, rs1: u8, funct3: u32) -> u32 {
    let imm = imm as u32;
    (((imm >> 12) & 1) << 31)
        | (((imm >> 5) & 0x3F) << 25)
        | ((rs2 as u32) << 20)
        | ((rs1 as u32) << 15)
        | (funct3 << 12)
        | (((imm >> 1) & 0xF) << 8)
        | (((imm >> 11) & 1) << 7)
        | BRANCH
}

/// `imm` is the full sign-extended value; only bits 31:12 are encoded.
pub fn u_type(imm: i64, rd: u8, opcode: u32) -> u32 {
    ((imm as u32) & 0xFFFF_F000) | ((rd as u32) << 7) | opcode
}

pub fn j_type(imm: i64, rd: u8) -> u32 {
    let imm = imm as u32;
    (((imm >> 20) & 1) << 31)
        | (((imm >> 1) & 0x3FF) << 21)
        | (((imm >> 11) & 1) << 20)
        | (((imm >> 12) & 0xFF) << 12)
        | ((rd as u32) << 7)
        | JAL
}

macro_rules! rrr {
    ($($name:ident = ($f7:expr, $f3:expr, $op:expr);)*) => {$(
        pub fn $name(rd: u8, rs1: u8, rs2: u8) -> u32 {
            r_type($f7, rs2, rs1, $f3, rd, $op)
        }
    )*};
}

macro_rules! rri {
    ($($name:ident = ($f3:expr, $op:expr);)*) => {$(
        pub fn $name(rd: u8, rs1: u8, imm: i64) -> u32 {
            i_type(imm, rs1, $f3, rd, $op)
        }
    )*};
}

rrr! {
    add = (0, 0, OP); sub = (0x20, 0, OP); sll = (0, 1, OP); slt = (0, 2, OP);
    sltu = (0, 3, OP); xor = (0, 4, OP); srl = (0, 5, OP); sra = (0x20, 5, OP);
    or = (0, 6, OP); and = (0, 7, OP);
    addw = (0, 0, OP_32); subw = (0x20, 0, OP_32); sllw = (0, 1, OP_32);
    srlw = (0, 5, OP_32); sraw = (0x20, 5, OP_32);
    mul = (1, 0, OP); mulh = (1, 1, OP); mulhsu = (1, 2, OP); mulhu = (1, 3, OP);
    div = (1, 4, OP); divu = (1, 5, OP); rem = (1, 6, OP); remu = (1, 7, OP);
    mulw = (1, 0, OP_32); divw = (1, 4, OP_32); divuw = (1, 5, OP_32);
    remw = (1, 6, OP_32); remuw = (1, 7, OP_32);
    andn = (0x20, 7, OP); orn = (0x20, 6, OP); xnor = (0x20, 4, OP);
    min = (5, 4, OP); minu = (5, 5, OP); max = (5, 6, OP); maxu = (5, 7, OP);
    rol = (0x30, 1, OP); ror = (0x30, 5, OP);
}

rri! {
    addi = (0, OP_IMM); slti = (2, OP_IMM); sltiu = (3, OP_IMM); xori = (4, OP_IMM);
    ori = (6, OP_IMM); andi = (7, OP_IMM); addiw = (0, OP_IMM_32);
    lb = (0, LOAD); lh = (1, LOAD); lw = (2, LOAD); ld = (3, LOAD);
    lbu = (4, LOAD); lhu = (5, LOAD); lwu = (6, LOAD);
    jalr = (0, JALR);
}

pub fn slli(rd: u8, rs1: u8, shamt: u32) -> u32 {
    i_type((shamt & 0x3F) as i64, rs1, 1, rd, OP_IMM)
}
pub fn srli(rd: u8, rs1: u8, shamt: u32) -> u32 {
    i_type((shamt & 0x3F) as i64, rs1, 5, rd, OP_IMM)
}
pub fn srai(rd: u8, rs1: u8, shamt: u32) -> u32 {
    i_type((0x400 | (shamt & 0x3F)) as i64, rs1, 5, rd, OP_IMM)
}
pub fn slliw(rd: u8, rs1: u8, shamt: u32) -> u32 {
    i_type((shamt & 0x1F) as i64, rs1, 1, rd, OP_IMM_32)
}
pub fn srliw(rd: u8, rs1: u8, shamt: u32) -> u32 {
    i_type((shamt & 0x1F) as i64, rs1, 5, rd, OP_IMM_32)
}
pub fn sraiw(rd: u8, rs1: u8, shamt: u32) -> u32 {
    i_type((0x400 | (shamt & 0x1F)) as i64, rs1, 5, rd, OP_IMM_32)
}

pub fn sb(rs2: u8, rs1: u8, imm: i64) -> u32 {
    s_type(imm, rs2, rs1, 0, STORE)
}
pub fn sh(rs2: u8, rs1: u8, imm: i64) -> u32 {
    s_type(imm, rs2, rs1, 1, STORE)
}
pub fn sw(rs2: u8, rs1: u8, imm: i64) -> u32 {
    s_type(imm, rs2, rs1, 2, STORE)
}
pub fn sd(rs2: u8, rs1: u8, imm: i64) -> u32 {
    s_type(imm, rs2, rs1, 3, STORE)
}

pub fn lui(rd: u8, imm: i64) -> u32 {
    u_type(imm, rd, LUI)
}
pub fn auipc(rd: u8, imm: i64) -> u32 {
    u_type(imm, rd, AUIPC)
}
pub fn jal(rd: u8, offset: i64) -> u32 {
    j_type(offset, rd)
}

pub fn beq(rs1: u8, rs2: u8, offset: i64) -> u32 {
    b_type(offset, rs2, rs1, 0)
}
pub fn bne(rs1: u8, rs2: u8, offset: i64) -> u32 {
    b_type(offset, rs2, rs1, 1)
}
pub fn blt(rs1: u8, rs2: u8, offset: i64) -> u32 {
    b_type(offset, rs2, rs1, 4)
}
pub fn bge(rs1: u8, rs2: u8, offset: i64) -> u32 {
    b_type(offset, rs2, rs1, 5)
}
pub fn bltu(rs1: u8, rs2: u8, offset: i64) -> u32 {
    b_type(offset, rs2, rs1, 6)
}
pub fn bgeu(rs1: u8, rs2: u8, offset: i64) -> u32 {
    b_type(offset, rs2, rs1, 7)
}

pub const ECALL: u32 = 0x0000_0073;
pub const EBREAK: u32 = 0x0010_0073;
/// `fence iorw, iorw`
pub const FENCE: u32 = 0x0FF0_000F;
pub const FENCE_I: u32 = 0x0000_100F;

pub fn csrrw(rd: u8, csr: u16, rs1: u8) -> u32 {
    i_type(csr as i64, rs1, 1, rd, SYSTEM)
}
pub fn csrrs(rd: u8, csr: u16, rs1: u8) -> u32 {
    i_type(csr as i64, rs1, 2, rd, SYSTEM)
}
pub fn csrrc(rd: u8, csr: u16, rs1: u8) -> u32 {
    i_type(csr as i64, rs1, 3, rd, SYSTEM)
}
pub fn csrrwi(rd: u8, csr: u16, uimm: u8) -> u32 {
    i_type(csr as i64, uimm & 0x1F, 5, rd, SYSTEM)
}
pub fn csrrsi(rd: u8, csr: u16, uimm: u8) -> u32 {
    i_type(csr as i64, uimm & 0x1F, 6, rd, SYSTEM)
}
pub fn csrrci(rd: u8, csr: u16, uimm: u8) -> u32 {
    i_type(csr as i64, uimm & 0x1F, 7, rd, SYSTEM)
}

// Zbb unary and immediate forms.
pub fn clz(rd: u8, rs1: u8) -> u32 {
    i_type(0x600, rs1, 1, rd, OP_IMM)
}
pub fn ctz(rd: u8, rs1: u8) -> u32 {
    i_type(0x601, rs1, 1, rd, OP_IMM)
}
pub fn cpop(rd: u8, rs1: u8) -> u32 {
    i_type(0x602, rs1, 1, rd, OP_IMM)
}
pub fn sext_b(rd: u8, rs1: u8) -> u32 {
    i_type(0x604, rs1, 1, rd, OP_IMM)
}
pub fn sext_h(rd: u8, rs1: u8) -> u32 {
    i_type(0x605, rs1, 1, rd, OP_IMM)
}
pub fn zext_h(rd: u8, rs1: u8) -> u32 {
    r_type(0b000_0100, 0, rs1, 4, rd, OP_32)
}
pub fn rori(rd: u8, rs1: u8, shamt: u32) -> u32 {
    i_type((0x600 | (shamt & 0x3F)) as i64, rs1, 5, rd, OP_IMM)
}
pub fn rev8(rd: u8, rs1: u8) -> u32 {
    i_type(0x6B8, rs1, 5, rd, OP_IMM)
}
pub fn orc_b(rd: u8, rs1: u8) -> u32 {
    i_type(0x287, rs1, 5, rd, OP_IMM)
}

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AsmError {
    #[error("undefined label `{0}`")]
    UndefinedLabel(String),
    #[error("duplicate label `{0}`")]
    DuplicateLabel(String),
    #[error("branch to `{label}` out of range ({offset} bytes)")]
    OutOfRange { label: String, offset: i64 },
}

#[derive(Debug, Clone, Copy)]
enum Fixup {
    Branch,
    Jal,
    /// auipc at this index, addi at the next.
    AuipcAddi,
}

/// Assembled program: text followed by 8-byte-aligned data, loaded at `base`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Image {
    pub base: u64,
    pub bytes: Vec<u8>,
    pub entry: u64,
    pub symbols: Vec<(String, u64)>,
}

impl Image {
    pub fn symbol(&self, name: &str) -> Option<u64> {
        self.symbols.iter().find(|(n, _)| n == name).map(|&(_, a)| a)
    }
}

/// Two-section assembler with forward references.
///
/// Text labels name word indices; data labels name offsets into the data
/// section, which is placed after the text.
pub struct Assembler {
    base: u64,
    text: Vec<u32>,
    data: Vec<u8>,
    text_labels: HashMap<String, usize>,
    data_labels: HashMap<String, usize>,
    fixups: Vec<(usize, String, Fixup)>,
    errors: Vec<AsmError>,
}

impl Assembler {
    pub fn new(base: u64) -> Self {
        Assembler {
            base,
            text: Vec::new(),
            data: Vec::new(),
            text_labels: HashMap::new(),
            data_labels: HashMap::new(),
            fixups: Vec::new(),
            errors: Vec::new(),
        }
    }

    /// Current text position in words.
    pub fn len(&self) -> usize {
        self.text.len()
    }

    pub fn is_empty(&self) -> bool {
        self.text.is_empty()
    }

    pub fn emit(&mut self, word: u32) -> &mut Self {
        self.text.push(word);
        self
    }

    pub fn label(&mut self, name: &str) -> &mut Self {
        if self.text_labels.insert(name.to_owned(), self.text.len()).is_some() || self.data_labels.contains_key(name) {
            self.errors.push(AsmError::DuplicateLabel(name.to_owned()));
        }
        self
    }

    fn fixup(&mut self, name: &str, kind: Fixup) {
        self.fixups.push((self.text.len(), name.to_owned(), kind));
    }

    pub fn beq(&mut self, rs1: u8, rs2: u8, target: &str) -> &mut Self {
        self.fixup(target, Fixup::Branch);
        self.emit(beq(rs1, rs2, 0))
    }
    pub fn bne(&mut self, rs1: u8, rs2: u8, target: &str) -> &mut Self {
        self.fixup(target, Fixup::Branch);
        self.emit(bne(rs1, rs2, 0))
    }
    pub fn blt(&mut self, rs1: u8, rs2: u8, target: &str) -> &mut Self {
        self.fixup(target, Fixup::Branch);
        self.emit(blt(rs1, rs2, 0))
    }
    pub fn bge(&mut self, rs1: u8, rs2: u8, target: &str) -> &mut Self {
        self.fixup(target, Fixup::Branch);
        self.emit(bge(rs1, rs2, 0))
    }
    pub fn bltu(&mut self, rs1: u8, rs2: u8, target: &str) -> &mut Self {
        self.fixup(target, Fixup::Branch);
        self.emit(bltu(rs1, rs2, 0))
    }
    pub fn bgeu(&mut self, rs1: u8, rs2: u8, target: &str) -> &mut Self {
        self.fixup(target, Fixup::Branch);
        self.emit(bgeu(rs1, rs2, 0))
    }
    pub fn jal(&mut self, rd: u8, target: &str) -> &mut Self {
        self.fixup(target, Fixup::Jal);
        self.emit(jal(rd, 0))
    }
    pub fn j(&mut self, target: &str) -> &mut Self {
        self.jal(0, target)
    }
    pub fn call(&mut self, target: &str) -> &mut Self {
        self.jal(1, target)
    }
    pub fn ret(&mut self) -> &mut Self {
        self.emit(jalr(0, 1, 0))
    }

    /// `auipc rd, %hi; addi rd, rd, %lo` for a text or data label.
    pub fn la(&mut self, rd: u8, target: &str) -> &mut Self {
        self.fixup(target, Fixup::AuipcAddi);
        self.emit(auipc(rd, 0));
        self.emit(addi(rd, rd, 0))
    }

    /// Loads an arbitrary 64-bit constant.
    pub fn li(&mut self, rd: u8, value: u64) -> &mut Self {
        let v = value as i64;
        if (-2048..2048).contains(&v) {
            return self.emit(addi(rd, 0, v));
        }
        if v as i32 as i64 == v {
            let lo = (v << 52) >> 52;
            let hi = v.wrapping_sub(lo);
            // lui materializes bits 31:12 sign-extended; addiw wraps in 32 bits.
            self.emit(lui(rd, hi));
            if lo != 0 {
                self.emit(addiw(rd, rd, lo));
            }
            return self;
        }
        // Peel the low 12 bits, load the rest shifted down, shift back.
        let lo = (v << 52) >> 52;
        let rest = v.wrapping_sub(lo) >> 12;
        let shift = rest.trailing_zeros().min(52);
        self.li(rd, (rest >> shift) as u64);
        self.emit(slli(rd, rd, shift + 12));
        if lo != 0 {
            self.emit(addi(rd, rd, lo));
        }
        self
    }

    /// Stores `code` to `tohost` and spins; `code == 0` is a pass.
    pub fn exit(&mut self, code: u64, scratch_addr: u8, scratch_val: u8) -> &mut Self {
        let spin = format!("__exit_spin_{}", self.text.len());
        self.la(scratch_addr, "tohost");
        self.li(scratch_val, (code << 1) | 1);
        self.emit(sd(scratch_val, scratch_addr, 0));
        self.label(&spin);
        self.j(&spin)
    }

    pub fn data_label(&mut self, name: &str) -> &mut Self {
        if self.data_labels.insert(name.to_owned(), self.data.len()).is_some() || self.text_labels.contains_key(name) {
            self.errors.push(AsmError::DuplicateLabel(name.to_owned()));
        }
        self
    }

    pub fn align_data(&mut self, align: usize) -> &mut Self {
        while !self.data.len().is_multiple_of(align) {
            self.data.push(0);
        }
        self
    }

    pub fn dwords(&mut self, values: &[u64]) -> &mut Self {
        self.align_data(8);
        for v in values {
            self.data.extend_from_slice(&v.to_le_bytes());
        }
        self
    }

    pub fn zeros(&mut self, len: usize) -> &mut Self {
        self.data.resize(self.data.len() + len, 0);
        self
    }

    fn data_start(&self) -> u64 {
        (self.text.len() as u64 * 4 + 7) & !7
    }

    fn address_of(&self, name: &str) -> Option<u64> {
        if let Some(&idx) = self.text_labels.get(name) {
            return Some(self.base + idx as u64 * 4);
        }
        self.data_labels.get(name).map(|&off| self.base + self.data_start() + off as u64)
    }

    /// Resolves labels and lays out the image. A `tohost` dword is appended
    /// to the data section if the program did not define one.
    pub fn finish(mut self) -> Result<Image, AsmError> {
        if !self.data_labels.contains_key("tohost") {
            self.align_data(8);
            self.data_label("tohost");
            self.dwords(&[0]);
        }
        if let Some(e) = self.errors.pop() {
            return Err(e);
        }
        let fixups = std::mem::take(&mut self.fixups);
        for (idx, name, kind) in fixups {
            let target = self.address_of(&name).ok_or_else(|| AsmError::UndefinedLabel(name.clone()))?;
            let pc = self.base + idx as u64 * 4;
            let offset = target.wrapping_sub(pc) as i64;
            let word = self.text[idx];
            match kind {
                Fixup::Branch => {
                    if !(-4096..4096).contains(&offset) {
                        return Err(AsmError::OutOfRange { label: name, offset });
                    }
                    self.text[idx] = word | b_type(offset, 0, 0, 0) & !0x7F;
                }
                Fixup::Jal => {
                    if !(-(1 << 20)..(1 << 20)).contains(&offset) {
                        return Err(AsmError::OutOfRange { label: name, offset });
                    }
                    self.text[idx] = word | (j_type(offset, 0) & !0xFFF);
                }
                Fixup::AuipcAddi => {
                    let lo = (offset << 52) >> 52;
                    let hi = offset - lo;
                    self.text[idx] = word | u_type(hi, 0, 0);
                    self.text[idx + 1] |= ((lo as u32) & 0xFFF) << 20;
                }
            }
        }
        let data_start = self.data_start() as usize;
        let mut bytes: Vec<u8> = self.text.iter().flat_map(|w| w.to_le_bytes()).collect();
        bytes.resize(data_start, 0);
        bytes.extend_from_slice(&self.data);
        let mut symbols: Vec<(String, u64)> = self
            .text_labels
            .keys()
            .chain(self.data_labels.keys())
            .filter(|n| !n.starts_with("__"))
            .map(|n| (n.clone(), self.address_of(n).unwrap()))
            .collect();
        symbols.sort();
        Ok(Image { base: self.base, bytes, entry: self.base, symbols })
    }
}
