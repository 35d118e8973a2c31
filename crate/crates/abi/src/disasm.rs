//! Shared disassembly formatting, so base and extension output stays uniform:
//! lowercase mnemonic, `x<n>` registers, `", "` separators, signed decimal
//! immediates.

/// `.word 0x0000abcd` for words nobody decodes.
pub fn illegal_word(word: u32) -> String {
    format!(".word 0x{word:08x}")
}

pub fn fmt_rrr(mnemonic: &str, rd: u8, rs1: u8, rs2: u8) -> String {
    format!("{mnemonic} x{rd}, x{rs1}, x{rs2}")
}

pub fn fmt_rr(mnemonic: &str, rd: u8, rs1: u8) -> String {
    format!("{mnemonic} x{rd}, x{rs1}")
}

pub fn fmt_rri(mnemonic: &str, rd: u8, rs1: u8, imm: i64) -> String {
    format!("{mnemonic} x{rd}, x{rs1}, {imm}")
}
