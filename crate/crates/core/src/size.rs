//! Berkeley-style size breakdown of executables and libraries.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use object::{Object, ObjectSection, SectionKind};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Sections {
    pub text: u64,
    pub data: u64,
    pub bss: u64,
}

impl Sections {
    pub fn total(&self) -> u64 {
        self.text + self.data + self.bss
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SizeRow {
    pub path: PathBuf,
    pub result: Result<(u64, Option<Sections>), String>,
}

impl SizeRow {
    pub fn file_size(&self) -> Option<u64> {
        self.result.as_ref().ok().map(|r| r.0)
    }

    pub fn sections(&self) -> Option<&Sections> {
        self.result.as_ref().ok().and_then(|r| r.1.as_ref())
    }
}

/// Sums allocated sections: code and read-only data count as text, writable
/// data as data, zero-fill as bss. `None` if the file is not an object file.
pub fn section_sizes(bytes: &[u8]) -> Option<Sections> {
    let file = object::File::parse(bytes).ok()?;
    let mut s = Sections { text: 0, data: 0, bss: 0 };
    for sec in file.sections() {
        let size = sec.size();
        match sec.kind() {
            SectionKind::Text
            | SectionKind::ReadOnlyData
            | SectionKind::ReadOnlyString
            | SectionKind::ReadOnlyDataWithRel => s.text += size,
            SectionKind::Data | SectionKind::Tls => s.data += size,
            SectionKind::UninitializedData | SectionKind::UninitializedTls => s.bss += size,
            _ => {}
        }
    }
    Some(s)
}

pub fn size_of(path: &Path) -> SizeRow {
    let result =
        std::fs::read(path).map(|bytes| (bytes.len() as u64, section_sizes(&bytes))).map_err(|e| e.to_string());
    SizeRow { path: path.to_owned(), result }
}

pub fn size_report<P: AsRef<Path>>(paths: &[P]) -> Vec<SizeRow> {
    paths.iter().map(|p| size_of(p.as_ref())).collect()
}

pub fn format_table(rows: &[SizeRow]) -> String {
    let mut out = format!("{:>10}  {:>10}  {:>10}  {:>10}  {:>12}  path\n", "text", "data", "bss", "total", "file");
    for r in rows {
        let _ = match &r.result {
            Ok((file, Some(s))) => writeln!(
                out,
                "{:>10}  {:>10}  {:>10}  {:>10}  {:>12}  {}",
                s.text,
                s.data,
                s.bss,
                s.total(),
                file,
                r.path.display()
            ),
            Ok((file, None)) => {
                writeln!(out, "{:>10}  {:>10}  {:>10}  {:>10}  {:>12}  {}", "-", "-", "-", "-", file, r.path.display())
            }
            Err(e) => writeln!(out, "error: {}: {e}", r.path.display()),
        };
    }
    out
}
