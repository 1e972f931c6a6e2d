use std::ffi::CStr;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use twosided_ou::harness::config::RunConfig;
use twosided_ou::harness::simulate::simulate;
use twosided_ou::{FundamentalSolution, SampleKind};
use twosided_ou_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 512];
    let n = unsafe { tsou_last_error_message(buf.as_mut_ptr(), buf.len()) };
    let s = unsafe { CStr::from_ptr(buf.as_ptr()) }
        .to_string_lossy()
        .into_owned();
    assert_eq!(n, s.len());
    s
}

#[test]
fn fundamental_handle_matches_library() {
    let reference = FundamentalSolution::build(-0.7, 40).unwrap();
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { tsou_fundamental_new(-0.7, 40, &mut h) },
        TsouStatus::Ok
    );
    for s in [0.0, 0.5, 1.0, 2.25, 7.125, 39.0] {
        let mut r = f64::NAN;
        assert_eq!(
            unsafe { tsou_fundamental_eval(h, s, &mut r) },
            TsouStatus::Ok
        );
        assert_eq!(r.to_bits(), reference.eval(s).to_bits(), "s = {s}");
    }
    let (mut lambda, mut c) = (0.0, 0.0);
    assert_eq!(
        unsafe { tsou_fundamental_decay(h, &mut lambda, &mut c) },
        TsouStatus::Ok
    );
    let d = reference.decay().unwrap();
    assert_eq!((lambda, c), (d.lambda, d.c));
    let mut r = 0.0;
    assert_eq!(
        unsafe { tsou_fundamental_eval(h, 41.0, &mut r) },
        TsouStatus::InvalidArgument
    );
    unsafe { tsou_fundamental_free(h) };
}

#[test]
fn errors_map_to_codes_and_messages() {
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { tsou_fundamental_new(0.5, 40, &mut h) },
        TsouStatus::CoefficientOutOfRange
    );
    assert!(h.is_null());
    assert!(last_error().contains("outside (-1, 0)"));

    assert_eq!(
        unsafe { tsou_fundamental_new(-0.5, 40, ptr::null_mut()) },
        TsouStatus::NullPointer
    );
    assert!(last_error().contains("out is null"));

    // success clears the message
    assert_eq!(
        unsafe { tsou_fundamental_new(-0.5, 10, &mut h) },
        TsouStatus::Ok
    );
    assert_eq!(last_error(), "");
    unsafe { tsou_fundamental_free(h) };
    unsafe { tsou_fundamental_free(ptr::null_mut()) };

    let mut cfg = tsou_sim_config_default();
    cfg.dt = 0.3;
    let mut r = ptr::null_mut();
    assert_eq!(
        unsafe { tsou_simulate(&cfg, &mut r) },
        TsouStatus::InvalidStep
    );
}

#[test]
fn messages_are_per_thread() {
    let mut h = ptr::null_mut();
    assert_ne!(
        unsafe { tsou_fundamental_new(2.0, 40, &mut h) },
        TsouStatus::Ok
    );
    let other = std::thread::spawn(last_error).join().unwrap();
    assert_eq!(other, "");
    assert!(!last_error().is_empty());
}

#[test]
fn truncated_message_stays_terminated() {
    let mut h = ptr::null_mut();
    unsafe { tsou_fundamental_new(2.0, 40, &mut h) };
    let mut buf = [1 as std::ffi::c_char; 8];
    let n = unsafe { tsou_last_error_message(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 7);
    assert_eq!(buf[7], 0);
}

#[test]
fn realization_matches_library() {
    let mut cfg = tsou_sim_config_default();
    cfg.dt = 1.0 / 64.0;
    cfg.t_left = -3.0;
    cfg.t_right = 3.0;
    cfg.seed = 11;
    cfg.kind = TsouKind::Anticipation;
    let mut h = ptr::null_mut();
    assert_eq!(
        unsafe { tsou_simulate(&cfg, &mut h) },
        TsouStatus::Ok,
        "{}",
        last_error()
    );

    let reference = simulate(&RunConfig {
        dt: cfg.dt,
        t_left: -3.0,
        t_end: 3.0,
        seed: 11,
        kind: SampleKind::Anticipation,
        ..RunConfig::default()
    })
    .unwrap();

    let mut n = 0;
    assert_eq!(unsafe { tsou_realization_len(h, &mut n) }, TsouStatus::Ok);
    assert_eq!(n, 6 * 64 + 1);
    let mut buf = vec![0.0; n];
    for (series, expect) in [
        (TsouSeries::Time, reference.times()),
        (TsouSeries::W, reference.w.values()),
        (TsouSeries::X, reference.x.values()),
        (TsouSeries::A, reference.a_values()),
    ] {
        assert_eq!(
            unsafe { tsou_realization_copy(h, series, buf.as_mut_ptr(), n) },
            TsouStatus::Ok
        );
        assert_eq!(buf, expect, "{series:?}");
    }
    let (mut b0, mut res) = (f64::NAN, f64::NAN);
    assert_eq!(unsafe { tsou_realization_b0(h, &mut b0) }, TsouStatus::Ok);
    assert_eq!(b0, reference.b0);
    assert_eq!(
        unsafe { tsou_realization_residual(h, &mut res) },
        TsouStatus::Ok
    );
    assert!(res < 1e-3, "residual {res}");

    assert_eq!(
        unsafe { tsou_realization_copy(h, TsouSeries::X, buf.as_mut_ptr(), n - 1) },
        TsouStatus::BufferTooSmall
    );
    unsafe { tsou_realization_free(h) };
}

#[test]
fn version_is_package_version() {
    let v = unsafe { CStr::from_ptr(tsou_version()) };
    assert_eq!(v.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

fn crate_dir() -> &'static Path {
    Path::new(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_every_export() {
    let header = std::fs::read_to_string(crate_dir().join("include/twosided_ou.h")).unwrap();
    let source = std::fs::read_to_string(crate_dir().join("src/lib.rs")).unwrap();
    let exports: Vec<&str> = source
        .lines()
        .filter_map(|l| l.split("extern \"C\" fn ").nth(1))
        .map(|rest| rest.split('(').next().unwrap())
        .collect();
    assert!(exports.len() >= 10);
    for name in exports {
        assert!(
            header.contains(&format!("{name}(")),
            "{name} missing from header"
        );
    }
}

/// Directory holding the shared library built for this test run.
fn library_dir() -> PathBuf {
    let exe = std::env::current_exe().unwrap();
    exe.parent().unwrap().parent().unwrap().to_path_buf()
}

#[test]
fn c_program_links_and_runs() {
    let lib_dir = library_dir();
    assert!(
        lib_dir.join("libtwosided_ou_ffi.so").exists(),
        "shared library not found in {}",
        lib_dir.display()
    );
    let out_dir = tempfile::tempdir().unwrap();
    let exe = out_dir.path().join("smoke");
    let status = Command::new(std::env::var("CC").unwrap_or_else(|_| "cc".into()))
        .arg("-std=c11")
        .arg("-Wall")
        .arg("-Werror")
        .arg("-I")
        .arg(crate_dir().join("include"))
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg("-L")
        .arg(&lib_dir)
        .arg("-ltwosided_ou_ffi")
        .arg("-lm")
        .arg("-o")
        .arg(&exe)
        .status()
        .expect("C compiler");
    assert!(status.success());
    let run = Command::new(&exe)
        .env("LD_LIBRARY_PATH", &lib_dir)
        .output()
        .unwrap();
    let stdout = String::from_utf8_lossy(&run.stdout);
    assert!(
        run.status.success(),
        "{stdout}{}",
        String::from_utf8_lossy(&run.stderr)
    );
    let fields: Vec<&str> = stdout.split_whitespace().collect();
    assert_eq!(fields[0], "129");
    assert_eq!(fields[1].parse::<f64>().unwrap(), -2.0);
    assert_eq!(fields[2].parse::<f64>().unwrap(), 2.0);
    assert!(fields[3].parse::<f64>().unwrap() < 1e-2);
}
