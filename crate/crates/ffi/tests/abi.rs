use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use softsafe_ffi::*;

fn last_error() -> String {
    let p = ss_last_error();
    assert!(!p.is_null());
    unsafe { CStr::from_ptr(p) }.to_string_lossy().into_owned()
}

fn defaults() -> (SsActuator, SsSupervisorConfig) {
    let mut a = SsActuator { a1: 0.0, a2: 0.0, a3: 0.0, dt: 0.0 };
    let mut c = SsSupervisorConfig { gamma: 0.0, w_max: 0.0, w_lb: 0.0 };
    unsafe { ss_defaults(&mut a, &mut c) };
    (a, c)
}

#[test]
fn actuator_step_and_domain_error() {
    let (a, _) = defaults();
    let mut w = 0.0;
    assert_eq!(unsafe { ss_actuator_step(a, 25.0, 0.5, &mut w) }, SsStatus::Ok);
    assert!((w - 30.0).abs() < 1e-12);
    assert!(ss_last_error().is_null());

    assert_eq!(unsafe { ss_actuator_step(a, 25.0, 1.5, &mut w) }, SsStatus::Domain);
    assert!(last_error().contains('u'));

    let bad = SsActuator { a1: 1.0, ..a };
    assert_eq!(unsafe { ss_actuator_step(bad, 25.0, 0.5, &mut w) }, SsStatus::Domain);
    assert!(last_error().contains("a1"));

    assert_eq!(unsafe { ss_actuator_step(a, 25.0, 0.5, ptr::null_mut()) }, SsStatus::NullPointer);
}

#[test]
fn supervisor_handle() {
    let (a, c) = defaults();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ss_supervisor_new(a, c, &mut h) }, SsStatus::Ok);

    let mut cap = 0.0;
    assert_eq!(unsafe { ss_supervisor_cap(h, 65.0, &mut cap) }, SsStatus::Ok);
    let mut next = 0.0;
    unsafe { ss_actuator_step(a, 65.0, cap, &mut next) };
    assert!((next - 65.0).abs() < 1e-9);

    let temps = [65.0, 25.0];
    let req = [1.0, 0.3];
    let mut applied = [0.0; 2];
    let mut active = [0; 2];
    let s = unsafe { ss_supervisor_apply(h, temps.as_ptr(), req.as_ptr(), applied.as_mut_ptr(), active.as_mut_ptr()) };
    assert_eq!(s, SsStatus::Ok);
    assert!((applied[0] - cap).abs() < 1e-15);
    assert_eq!(applied[1], 0.3);
    assert_eq!(active, [1, 0]);

    let req = [1.2, 0.0];
    let s = unsafe { ss_supervisor_apply(h, temps.as_ptr(), req.as_ptr(), applied.as_mut_ptr(), ptr::null_mut()) };
    assert_eq!(s, SsStatus::Domain);
    unsafe { ss_supervisor_free(h) };

    let bad = SsSupervisorConfig { gamma: 1.3, ..c };
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ss_supervisor_new(a, bad, &mut h) }, SsStatus::Domain);
    assert!(h.is_null());
    assert!(last_error().contains("gamma"));
}

#[test]
fn verify_default_grid() {
    let (a, c) = defaults();
    for gamma in [0.05, 0.1, 0.2, 0.3, 0.5, 0.7, 0.9] {
        let (mut safe, mut iters) = (0, 0);
        let cfg = SsSupervisorConfig { gamma, ..c };
        assert_eq!(unsafe { ss_verify(a, cfg, 100, &mut safe, &mut iters) }, SsStatus::Ok);
        assert_eq!((safe, iters), (1, 1));
    }
}

#[test]
fn simulation_handle() {
    let text = CString::new("[scenario]\ntheta_ref = 40.0\nduration = 10.0\n").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ss_sim_new(text.as_ptr(), &mut h) }, SsStatus::Ok);
    assert_eq!(unsafe { ss_sim_len(h) }, 0);
    let mut n = 0;
    assert_eq!(unsafe { ss_sim_run(h, &mut n) }, SsStatus::Ok);
    assert_eq!(n, 100);
    assert_eq!(unsafe { ss_sim_len(h) }, 100);

    let mut r = std::mem::MaybeUninit::<SsRecord>::uninit();
    for i in 0..n {
        assert_eq!(unsafe { ss_sim_record(h, i, r.as_mut_ptr()) }, SsStatus::Ok);
        let r = unsafe { r.assume_init() };
        assert_eq!(r.k, i);
        assert!(r.temps[0] <= 65.0 + 1e-6 && r.temps[1] <= 65.0 + 1e-6);
    }
    assert_eq!(unsafe { ss_sim_record(h, n, r.as_mut_ptr()) }, SsStatus::OutOfRange);
    unsafe { ss_sim_free(h) };

    let bad = CString::new("[supervisor]\ngamma = 1.3\n").unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(unsafe { ss_sim_new(bad.as_ptr(), &mut h) }, SsStatus::Domain);
    let junk = CString::new("[nope]\n").unwrap();
    assert_eq!(unsafe { ss_sim_new(junk.as_ptr(), &mut h) }, SsStatus::Config);
    assert!(h.is_null());
}

fn target_dir() -> PathBuf {
    // .../target/<profile>/deps/abi-xxxx
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_against_static_library() {
    let lib = target_dir().join("libsoftsafe_ffi.a");
    if !lib.exists() || Command::new("cc").arg("--version").output().is_err() {
        eprintln!("skipping: static library or C compiler unavailable");
        return;
    }
    let crate_dir = Path::new(env!("CARGO_MANIFEST_DIR"));
    let dir = tempfile::tempdir().unwrap();
    let exe = dir.path().join("smoke");
    let status = Command::new("cc")
        .arg(crate_dir.join("tests/smoke.c"))
        .arg("-I")
        .arg(crate_dir.join("include"))
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .status()
        .unwrap();
    assert!(status.success());
    let out = Command::new(&exe).output().unwrap();
    assert!(out.status.success(), "smoke exited with {:?}", out.status.code());
    assert_eq!(String::from_utf8_lossy(&out.stdout), "ok\n");
}

