//! Builds the plugin libraries and host binaries that integration tests load.
//!
//! The artifacts go to `target/fixtures*` through a nested cargo call with
//! the same profile as the tests themselves, so timings compare like with
//! like.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;

pub struct Fixtures {
    pub plugin_m: PathBuf,
    pub plugin_zbb: PathBuf,
    pub plugin_abi2: PathBuf,
    pub plugin_overlap: PathBuf,
    /// `modsim` with the extensions compiled in.
    pub host_full: PathBuf,
    /// `modsim` built without any compiled-in extension.
    pub host_base: PathBuf,
}

pub fn workspace_root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../..").canonicalize().unwrap()
}

fn profile_dir() -> &'static str {
    if cfg!(debug_assertions) {
        "debug"
    } else {
        "release"
    }
}

fn cargo_build(target_dir: &Path, args: &[&str]) {
    let cargo = std::env::var("CARGO").unwrap_or_else(|_| "cargo".into());
    let mut cmd = Command::new(cargo);
    cmd.current_dir(workspace_root()).arg("build").arg("--quiet").arg("--target-dir").arg(target_dir);
    if !cfg!(debug_assertions) {
        cmd.arg("--release");
    }
    let status = cmd.args(args).status().expect("run cargo");
    assert!(status.success(), "cargo build {args:?} failed");
}

fn dylib(dir: &Path, crate_name: &str) -> PathBuf {
    let name = crate_name.replace('-', "_");
    dir.join(format!("{}{name}{}", std::env::consts::DLL_PREFIX, std::env::consts::DLL_SUFFIX))
}

pub fn fixtures() -> &'static Fixtures {
    static CELL: OnceLock<Fixtures> = OnceLock::new();
    CELL.get_or_init(|| {
        let root = workspace_root();
        let full = root.join("target/fixtures");
        let base = root.join("target/fixtures-base");
        cargo_build(
            &full,
            &[
                "-p",
                "modsim-plugin-m",
                "-p",
                "modsim-plugin-zbb",
                "-p",
                "modsim-plugin-abi2",
                "-p",
                "modsim-plugin-overlap",
            ],
        );
        cargo_build(&full, &["-p", "modsim", "--bin", "modsim"]);
        cargo_build(&base, &["-p", "modsim", "--bin", "modsim", "--no-default-features"]);
        let out = full.join(profile_dir());
        let exe = |dir: &Path| dir.join(profile_dir()).join(format!("modsim{}", std::env::consts::EXE_SUFFIX));
        Fixtures {
            plugin_m: dylib(&out, "modsim-plugin-m"),
            plugin_zbb: dylib(&out, "modsim-plugin-zbb"),
            plugin_abi2: dylib(&out, "modsim-plugin-abi2"),
            plugin_overlap: dylib(&out, "modsim-plugin-overlap"),
            host_full: exe(&full),
            host_base: exe(&base),
        }
    })
}

/// Writes the generated program suite once per test binary.
pub fn suite_dir() -> &'static Path {
    static CELL: OnceLock<(tempfile::TempDir, PathBuf)> = OnceLock::new();
    &CELL
        .get_or_init(|| {
            let dir = tempfile::tempdir().unwrap();
            for p in modsim::programs::suite() {
                p.write_to(dir.path()).unwrap();
            }
            let path = dir.path().to_owned();
            (dir, path)
        })
        .1
}

pub fn program_path(name: &str) -> PathBuf {
    suite_dir().join(format!("{name}.elf"))
}
