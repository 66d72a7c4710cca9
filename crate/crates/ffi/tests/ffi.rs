use std::ffi::{CStr, CString};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::ptr;

use stlmc_ffi::*;

const TWO_MODE: &str = r#"{"dim": 1, "weights": [0.5, 0.5], "centers": [[-3.0], [3.0]],
    "base": {"kind": "isotropic-gaussian", "sigma": 1.0}}"#;

fn last_error() -> String {
    unsafe { CStr::from_ptr(stlmc_last_error()) }.to_string_lossy().into_owned()
}

fn target(json: &str) -> *mut StlmcTarget {
    let c = CString::new(json).unwrap();
    let mut t = ptr::null_mut();
    assert_eq!(unsafe { stlmc_target_from_json(c.as_ptr(), &mut t) }, StlmcStatus::Ok);
    t
}

#[test]
fn target_value_and_gradient() {
    let t = target(TWO_MODE);
    let mut dim = 0;
    let x = [1.0];
    let (mut v, mut g) = (0.0, [0.0]);
    unsafe {
        assert_eq!(stlmc_target_dim(t, &mut dim), StlmcStatus::Ok);
        assert_eq!(stlmc_target_value(t, x.as_ptr(), 1, &mut v), StlmcStatus::Ok);
        assert_eq!(stlmc_target_grad(t, x.as_ptr(), 1, g.as_mut_ptr()), StlmcStatus::Ok);
        stlmc_target_free(t);
    }
    assert_eq!(dim, 1);
    let f = |x: f64| -(0.5 * (-(x + 3.0).powi(2) / 2.0).exp() + 0.5 * (-(x - 3.0).powi(2) / 2.0).exp()).ln();
    assert!((v - f(1.0)).abs() < 1e-12);
    let h = 1e-6;
    let fd = (f(1.0 + h) - f(1.0 - h)) / (2.0 * h);
    assert!((g[0] - fd).abs() < 1e-6);
}

#[test]
fn error_codes_and_messages() {
    let bad = CString::new(r#"{"dim": 1, "weights": [1.0]}"#).unwrap();
    let mut t = ptr::null_mut();
    let status = unsafe { stlmc_target_from_json(bad.as_ptr(), &mut t) };
    assert_eq!(status, StlmcStatus::InvalidArgument);
    assert!(t.is_null());
    assert!(last_error().contains("centers"), "{}", last_error());

    assert_eq!(unsafe { stlmc_target_from_json(ptr::null(), &mut t) }, StlmcStatus::NullPointer);
    assert!(last_error().contains("json"));

    let t = target(TWO_MODE);
    let x = [0.0, 0.0];
    let mut v = 0.0;
    assert_eq!(unsafe { stlmc_target_value(t, x.as_ptr(), 2, &mut v) }, StlmcStatus::DimensionMismatch);
    assert_eq!(unsafe { stlmc_target_value(t, x.as_ptr(), 1, &mut v) }, StlmcStatus::Ok);
    assert_eq!(last_error(), "");
    unsafe { stlmc_target_free(t) };
}

#[test]
fn ladders_from_targets_and_geometric() {
    let t = target(TWO_MODE);
    let mut l = ptr::null_mut();
    let mut n = 0;
    let mut p = StlmcRunParams {
        swap_rate: 0.0,
        step_size: 0.0,
        total_time: 0.0,
        init_std: 0.0,
    };
    unsafe {
        assert_eq!(stlmc_ladder_for_target(t, 0.1, &mut l), StlmcStatus::Ok);
        assert_eq!(stlmc_ladder_len(l, &mut n), StlmcStatus::Ok);
        let mut betas = vec![0.0; n];
        assert_eq!(stlmc_ladder_betas(l, betas.as_mut_ptr(), n), StlmcStatus::Ok);
        assert_eq!(*betas.last().unwrap(), 1.0);
        assert!((betas[0] - 1.0 / 9.0).abs() < 1e-12);
        assert_eq!(stlmc_ladder_betas(l, betas.as_mut_ptr(), n - 1), StlmcStatus::DimensionMismatch);
        assert_eq!(stlmc_ladder_run_params(l, &mut p), StlmcStatus::Ok);
        assert!(p.swap_rate > 0.0 && p.step_size > 0.0 && p.init_std == 3.0);
        stlmc_ladder_free(l);

        assert_eq!(stlmc_ladder_geometric(0.25, 2.0, &mut l), StlmcStatus::Ok);
        assert_eq!(stlmc_ladder_len(l, &mut n), StlmcStatus::Ok);
        assert_eq!(n, 3);
        assert_eq!(stlmc_ladder_run_params(l, &mut p), StlmcStatus::InvalidArgument);
        stlmc_ladder_free(l);

        assert_eq!(stlmc_ladder_geometric(2.0, 2.0, &mut l), StlmcStatus::InvalidArgument);
        assert!(l.is_null());
        stlmc_target_free(t);
    }
}

#[test]
fn sampling_is_seeded_and_covers_both_modes() {
    let t = target(TWO_MODE);
    let mut l = ptr::null_mut();
    let p = StlmcRunParams {
        swap_rate: 1.0,
        step_size: 0.05,
        total_time: 20.0,
        init_std: 3.0,
    };
    let mut a = vec![0.0; 200];
    let mut b = vec![0.0; 200];
    unsafe {
        assert_eq!(stlmc_ladder_geometric(1.0 / 9.0, 2.0, &mut l), StlmcStatus::Ok);
        assert_eq!(stlmc_sample(t, l, &p, 7, 200, a.as_mut_ptr(), 200), StlmcStatus::Ok);
        assert_eq!(stlmc_sample(t, l, &p, 7, 200, b.as_mut_ptr(), 200), StlmcStatus::Ok);
        assert_eq!(stlmc_sample(t, l, ptr::null(), 7, 200, b.as_mut_ptr(), 200), StlmcStatus::NullPointer);
        assert_eq!(stlmc_sample(t, l, &p, 7, 200, b.as_mut_ptr(), 100), StlmcStatus::DimensionMismatch);
        stlmc_ladder_free(l);
        stlmc_target_free(t);
    }
    assert_eq!(a, b);
    let left = a.iter().filter(|x| **x < 0.0).count();
    assert!((40..=160).contains(&left), "{left} of 200 in the left mode");
}

#[test]
fn poincare_constant_of_two_state_chain() {
    let (a, b) = (0.5, 1.5);
    let q = [-a, a, b, -b];
    let p = [b / (a + b), a / (a + b)];
    let mut c = 0.0;
    assert_eq!(unsafe { stlmc_poincare_constant(q.as_ptr(), p.as_ptr(), 2, &mut c) }, StlmcStatus::Ok);
    assert!((c - 1.0 / (a + b)).abs() < 1e-12);

    let not_reversible = [-1.0, 1.0, 1.0, -1.0];
    let skewed = [0.9, 0.1];
    let s = unsafe { stlmc_poincare_constant(not_reversible.as_ptr(), skewed.as_ptr(), 2, &mut c) };
    assert_eq!(s, StlmcStatus::InvalidArgument);
}

fn crate_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
}

#[test]
fn header_declares_the_exports() {
    let header = std::fs::read_to_string(crate_dir().join("include/stlmc.h")).unwrap();
    for name in [
        "stlmc_last_error",
        "stlmc_target_from_json",
        "stlmc_target_free",
        "stlmc_target_dim",
        "stlmc_target_value",
        "stlmc_target_grad",
        "stlmc_ladder_for_target",
        "stlmc_ladder_geometric",
        "stlmc_ladder_len",
        "stlmc_ladder_betas",
        "stlmc_ladder_run_params",
        "stlmc_ladder_free",
        "stlmc_sample",
        "stlmc_poincare_constant",
        "typedef struct StlmcTarget StlmcTarget;",
        "STLMC_STATUS_PANIC = 6",
    ] {
        assert!(header.contains(name), "{name} missing from header");
    }
}

#[test]
fn c_program_links_against_the_shared_library() {
    let lib_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    assert!(lib_dir.join("libstlmc_ffi.so").exists() || lib_dir.join("libstlmc_ffi.dylib").exists());
    let tmp = tempfile::tempdir().unwrap();
    let exe = tmp.path().join("smoke");
    let compiled = Command::new("cc")
        .arg(crate_dir().join("tests/c/smoke.c"))
        .arg(format!("-I{}", crate_dir().join("include").display()))
        .arg(format!("-L{}", lib_dir.display()))
        .arg("-lstlmc_ffi")
        .arg("-lm")
        .arg(format!("-Wl,-rpath,{}", lib_dir.display()))
        .arg("-o")
        .arg(&exe)
        .output()
        .expect("a C compiler (cc) is required for this test");
    assert!(compiled.status.success(), "{}", String::from_utf8_lossy(&compiled.stderr));
    let run = Command::new(Path::new(&exe)).output().unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
    assert!(String::from_utf8_lossy(&run.stdout).starts_with("levels=5"));
}
