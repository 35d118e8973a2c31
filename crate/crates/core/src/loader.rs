//! Turning `--module` requests into validated module descriptors.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use modsim_abi::{EntryFn, ModuleEntry, ENTRY_SYMBOL};
use thiserror::Error;

use crate::engine::Emulator;
use crate::ext::{check_against, InvalidModule, ModuleDescriptor, Origin, RegisterError};

/// One `--module` value.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LoadRequest {
    Builtin(String),
    Dynamic(PathBuf),
}

impl LoadRequest {
    /// `builtin:NAME` or a library path, used verbatim.
    pub fn parse(value: &str) -> Result<Self, UsageError> {
        if value.is_empty() {
            return Err(UsageError("empty --module value".into()));
        }
        Ok(match value.strip_prefix("builtin:") {
            Some("") => return Err(UsageError("`builtin:` needs a module name".into())),
            Some(name) => LoadRequest::Builtin(name.to_string()),
            None => LoadRequest::Dynamic(PathBuf::from(value)),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("usage: {0}")]
pub struct UsageError(pub String);

/// Collects `--module` requests from an argument list, in order. Other
/// arguments are ignored.
pub fn parse_module_flags<S: AsRef<str>>(args: &[S]) -> Result<Vec<LoadRequest>, UsageError> {
    let mut out = Vec::new();
    let mut it = args.iter().map(AsRef::as_ref);
    while let Some(arg) = it.next() {
        if arg == "--module" {
            let v = it.next().ok_or_else(|| UsageError("--module needs a value".into()))?;
            out.push(LoadRequest::parse(v)?);
        } else if let Some(v) = arg.strip_prefix("--module=") {
            out.push(LoadRequest::parse(v)?);
        }
    }
    Ok(out)
}

#[derive(Debug, Error)]
pub enum LoadError {
    #[error("{}: no such file", .0.display())]
    MissingFile(PathBuf),
    #[error("{}: cannot open library: {reason}", .path.display())]
    Open { path: PathBuf, reason: String },
    #[error("{}: missing symbol `{ENTRY_SYMBOL}`", .0.display())]
    MissingSymbol(PathBuf),
    #[error("{}: ABI version mismatch (found {found}, expected {expected})", .path.display())]
    VersionMismatch { path: PathBuf, found: u32, expected: u32 },
    #[error("{}: {reason}", .path.display())]
    Invalid { path: PathBuf, reason: InvalidModule },
    #[error("unknown builtin module `{0}` (available: {avail})", avail = builtin_names().join(", "))]
    UnknownBuiltin(String),
    #[error("{0}")]
    Register(#[from] RegisterError),
}

fn invalid(path: &Path, reason: InvalidModule) -> LoadError {
    match reason {
        InvalidModule::VersionMismatch { found, expected } => {
            LoadError::VersionMismatch { path: path.to_owned(), found, expected }
        }
        reason => LoadError::Invalid { path: path.to_owned(), reason },
    }
}

/// Maps a module library and validates what its entry function returns.
/// The library stays mapped for as long as the descriptor exists.
pub fn load_dynamic(path: &Path) -> Result<ModuleDescriptor, LoadError> {
    if !path.exists() {
        return Err(LoadError::MissingFile(path.to_owned()));
    }
    let lib = unsafe { libloading::Library::new(path) }
        .map_err(|e| LoadError::Open { path: path.to_owned(), reason: e.to_string() })?;
    let lib = Arc::new(lib);
    let entry: *const ModuleEntry = unsafe {
        let sym = lib.get::<EntryFn>(ENTRY_SYMBOL.as_bytes()).map_err(|_| LoadError::MissingSymbol(path.to_owned()))?;
        sym()
    };
    unsafe { ModuleDescriptor::from_entry(entry, Origin::Dynamic(path.to_owned()), Some(lib)) }
        .map_err(|e| invalid(path, e))
}

/// Names accepted by [`load_static`] in this build.
pub fn builtin_names() -> Vec<&'static str> {
    let mut v = Vec::new();
    if cfg!(feature = "builtin-m") {
        v.push("m");
    }
    if cfg!(feature = "builtin-zbb") {
        v.push("zbb");
    }
    v
}

fn builtin_entry(name: &str) -> Option<*const ModuleEntry> {
    match name {
        #[cfg(feature = "builtin-m")]
        "m" => Some(modsim_ext_m::m_ext_entry()),
        #[cfg(feature = "builtin-zbb")]
        "zbb" => Some(modsim_ext_zbb::zbb_ext_entry()),
        _ => None,
    }
}

/// Registers a compiled-in module through the same entry record a plugin
/// would export.
pub fn load_static(name: &str) -> Result<ModuleDescriptor, LoadError> {
    let entry = builtin_entry(name).ok_or_else(|| LoadError::UnknownBuiltin(name.to_string()))?;
    let path = PathBuf::from(format!("builtin:{name}"));
    unsafe { ModuleDescriptor::from_entry(entry, Origin::StaticRegistered, None) }.map_err(|e| invalid(&path, e))
}

pub fn load(req: &LoadRequest) -> Result<ModuleDescriptor, LoadError> {
    match req {
        LoadRequest::Builtin(name) => load_static(name),
        LoadRequest::Dynamic(path) => load_dynamic(path),
    }
}

/// Loads every request, checks them against each other, and only then
/// registers them in order. On any error nothing is registered.
pub fn register_all(emu: &mut Emulator, reqs: &[LoadRequest]) -> Result<(), LoadError> {
    let descs = reqs.iter().map(load).collect::<Result<Vec<_>, _>>()?;
    let existing = emu.registry().map(|r| r.modules()).unwrap_or(&[]);
    for (i, d) in descs.iter().enumerate() {
        check_against(existing.iter().chain(&descs[..i]), d)?;
    }
    for d in descs {
        emu.register(d)?;
    }
    Ok(())
}
