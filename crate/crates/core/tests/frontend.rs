mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use modsim::arch::DEFAULT_MEM_BASE;
use modsim::asm::{self, Assembler};
use modsim::elf::write_elf;
use modsim::run::{run_config, run_to_sink, RunConfig, EXIT_INSN_LIMIT};
use modsim::{ArchState, Emulator};

fn guest(dir: &Path, name: &str, body: impl FnOnce(&mut Assembler)) -> PathBuf {
    let mut a = Assembler::new(DEFAULT_MEM_BASE);
    body(&mut a);
    let path = dir.join(format!("{name}.elf"));
    std::fs::write(&path, write_elf(&a.finish().unwrap())).unwrap();
    path
}

fn modsim(args: &[&str], elf: Option<&Path>) -> Output {
    let mut cmd = Command::new(&common::fixtures().host_full);
    cmd.args(args);
    if let Some(e) = elf {
        cmd.arg(e);
    }
    cmd.output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn htif_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let pass = guest(dir.path(), "pass", |a| {
        a.emit(asm::addi(1, 0, 5)).exit(0, 5, 6);
    });
    let seven = guest(dir.path(), "seven", |a| {
        a.exit(7, 5, 6);
    });
    assert_eq!(modsim(&[], Some(&pass)).status.code(), Some(0));
    assert_eq!(modsim(&[], Some(&seven)).status.code(), Some(7));

    let o = modsim(&[], Some(&pass));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("retired instructions") && err.contains("ips"), "{err}");
}

#[test]
fn insn_cap_stops_after_exactly_n_steps() {
    let dir = tempfile::tempdir().unwrap();
    let spin = guest(dir.path(), "spin", |a| {
        a.label("top").j("top");
    });
    assert_eq!(modsim(&["--max-insns", "1000"], Some(&spin)).status.code(), Some(134));

    let cfg = RunConfig { max_insns: 1000, ..RunConfig::new(&spin) };
    let r = run_config(&cfg).unwrap();
    assert_eq!((r.exit_code, r.retired, r.steps), (EXIT_INSN_LIMIT, 1000, 1000));
}

#[test]
fn fatal_trap_and_illegal_trace_line() {
    let dir = tempfile::tempdir().unwrap();
    let bad = guest(dir.path(), "bad", |a| {
        a.emit(asm::addi(1, 0, 5)).emit(0xffff_ffff);
    });
    let o = modsim(&["--trace", "-"], Some(&bad));
    assert_eq!(o.status.code(), Some(133));
    assert_eq!(
        stdout(&o),
        "S 0 PC 0x0000000080000000 I 0x00500093 \"addi x1, x0, 5\" W x1=0x0000000000000005\n\
         S 1 PC 0x0000000080000004 I 0xffffffff \".word 0xffffffff\" T cause=2 tval=0x00000000ffffffff\n"
    );
}

#[test]
fn store_line_has_no_suffix() {
    let dir = tempfile::tempdir().unwrap();
    let st = guest(dir.path(), "store", |a| {
        a.la(5, "tohost").emit(asm::sd(0, 5, 0)).exit(0, 6, 7);
    });
    let out = stdout(&modsim(&["--trace", "-"], Some(&st)));
    let line = out.lines().find(|l| l.contains("\"sd x0, 0(x5)\"")).unwrap();
    assert!(line.ends_with("\"sd x0, 0(x5)\""), "{line}");
}

#[test]
fn traces_are_deterministic_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let elf = common::program_path("m-random-1");
    let a = dir.path().join("a.trace");
    let b = dir.path().join("b.trace");
    for t in [&a, &b] {
        let o =
            modsim(&["--module", "builtin:m", "--module", "builtin:zbb", "--trace", t.to_str().unwrap()], Some(&elf));
        assert_eq!(o.status.code(), Some(0));
    }
    let (a, b) = (std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
    assert!(!a.is_empty());
    assert_eq!(a, b);
}

#[test]
fn replaying_writebacks_reproduces_registers() {
    for name in ["base-sort", "m-matmul", "zbb-random-1"] {
        let cfg = RunConfig::new(common::program_path(name)).monolithic();
        let mut emu = Emulator::monolithic(ArchState::new(cfg.mem_base, cfg.mem_size));
        modsim::elf::load_elf_file(&cfg.elf_path, &mut emu.state).unwrap();
        let mut trace = Vec::new();
        modsim::run::run_loop(&mut emu, cfg.max_insns, Some(&mut trace)).unwrap();

        let mut regs = [0u64; 32];
        for line in String::from_utf8(trace).unwrap().lines() {
            if let Some(w) = line.split(" W x").nth(1) {
                let (rd, val) = w.split_once("=0x").unwrap();
                regs[rd.parse::<usize>().unwrap()] = u64::from_str_radix(val, 16).unwrap();
            }
        }
        assert_eq!(&regs, emu.state.gprs(), "{name}");
    }
}

#[test]
fn trace_sink_failure_exits_135() {
    let elf = common::program_path("base-arith");
    let o = modsim(&["--trace", "/nonexistent-dir/trace.txt"], Some(&elf));
    assert_eq!(o.status.code(), Some(135));
}

#[test]
fn usage_and_load_errors_exit_64() {
    let elf = common::program_path("base-arith");
    assert_eq!(modsim(&[], None).status.code(), Some(64));
    assert_eq!(modsim(&["--bogus"], Some(&elf)).status.code(), Some(64));
    assert_eq!(modsim(&["--module"], None).status.code(), Some(64));
    assert_eq!(modsim(&["--module", "builtin:v"], Some(&elf)).status.code(), Some(64));
    assert_eq!(modsim(&["--module", "/nonexistent.so"], Some(&elf)).status.code(), Some(64));
    assert_eq!(modsim(&["--max-insns", "0"], Some(&elf)).status.code(), Some(64));
    assert_eq!(modsim(&[], Some(Path::new("/nonexistent.elf"))).status.code(), Some(64));
    assert_eq!(modsim(&["--help"], None).status.code(), Some(0));
}

#[test]
fn elf_errors() {
    let dir = tempfile::tempdir().unwrap();
    let mut a = Assembler::new(DEFAULT_MEM_BASE);
    a.exit(0, 5, 6);
    let mut bytes = write_elf(&a.finish().unwrap());
    bytes[18..20].copy_from_slice(&62u16.to_le_bytes());
    let x86 = dir.path().join("x86.elf");
    std::fs::write(&x86, &bytes).unwrap();
    let o = modsim(&[], Some(&x86));
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("RISC-V"));

    let not_elf = dir.path().join("text.elf");
    std::fs::write(&not_elf, "hello").unwrap();
    assert_eq!(modsim(&[], Some(&not_elf)).status.code(), Some(64));

    // Memory moved away from the segment's address.
    let elf = common::program_path("base-arith");
    let o = modsim(&["--mem-base", "0x10000000", "--mem-size", "65536"], Some(&elf));
    assert_eq!(o.status.code(), Some(64));
    assert!(String::from_utf8_lossy(&o.stderr).contains("outside memory"));
}

#[test]
fn list_modules() {
    let f = common::fixtures();
    let plugin = f.plugin_zbb.to_str().unwrap();
    let o = modsim(&["--list-modules", "--module", "builtin:m", "--module", plugin], None);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), format!("m\tv1\tM\tstatic\nzbb\tv1\tB\tdynamic:{plugin}\n"));

    let o = modsim(&["--list-modules", "--monolithic"], None);
    assert_eq!(stdout(&o), "m\tv1\tM\tbuiltin\nzbb\tv1\tB\tbuiltin\n");

    assert_eq!(stdout(&modsim(&["--list-modules"], None)), "");
}

#[test]
fn base_only_host_runs_base_programs_and_rejects_m() {
    let f = common::fixtures();
    let run = |name: &str| Command::new(&f.host_base).arg(common::program_path(name)).output().unwrap().status.code();
    assert_eq!(run("base-calls"), Some(0));
    assert_eq!(run("m-mul"), Some(133));

    let o =
        Command::new(&f.host_base).args(["--module", "builtin:m"]).arg(common::program_path("m-mul")).output().unwrap();
    assert_eq!(o.status.code(), Some(64));
    let o = Command::new(&f.host_base)
        .arg("--module")
        .arg(&f.plugin_m)
        .arg(common::program_path("m-mul"))
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
}

#[test]
fn trace_to_stdout_matches_in_memory_trace() {
    let elf = common::program_path("zbb-rotate");
    let o = modsim(&["--module", "builtin:zbb", "--trace", "-"], Some(&elf));
    let mut mem = Vec::new();
    let cfg = RunConfig { modules: vec![modsim::loader::LoadRequest::Builtin("zbb".into())], ..RunConfig::new(&elf) };
    run_to_sink(&cfg, Some(&mut mem)).unwrap();
    assert_eq!(o.stdout, mem);
}
