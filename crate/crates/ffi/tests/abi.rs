//! Calls through the C ABI from Rust and from a compiled C program.

use std::ffi::CStr;
use std::path::PathBuf;
use std::process::Command;
use std::ptr;

use pamret_ffi::*;

fn last_error() -> String {
    let mut buf = vec![0 as std::ffi::c_char; 256];
    let n = unsafe { pamret_last_error(buf.as_mut_ptr(), buf.len()) };
    assert!(n > 0);
    unsafe { CStr::from_ptr(buf.as_ptr()) }.to_string_lossy().into_owned()
}

fn real_problem(n: usize, m: usize) -> (*mut PamretEnsemble, Vec<f64>) {
    let mut ens = ptr::null_mut();
    assert_eq!(unsafe { pamret_ensemble_gaussian_real(n, m, 3, &mut ens) }, PamretStatus::Ok);
    let x: Vec<f64> = (0..n).map(|i| ((i * 7 % 5) as f64) - 2.0).collect();
    assert_eq!(unsafe { pamret_ensemble_observe(ens, x.as_ptr(), n) }, PamretStatus::Ok);
    (ens, x)
}

#[test]
fn loss_and_gradient_vanish_at_truth() {
    let (ens, x) = real_problem(8, 64);
    let (mut n, mut m) = (0, 0);
    assert_eq!(unsafe { pamret_ensemble_dims(ens, &mut n, &mut m) }, PamretStatus::Ok);
    assert_eq!((n, m), (8, 64));
    let mut f = f64::NAN;
    let mut g = vec![f64::NAN; 8];
    for model in [PamretLoss::Pam1, PamretLoss::Pam2, PamretLoss::Amplitude] {
        assert_eq!(unsafe { pamret_loss(ens, model, 1.0, x.as_ptr(), 8, &mut f) }, PamretStatus::Ok);
        assert!(f.abs() < 1e-24);
        assert_eq!(unsafe { pamret_gradient(ens, model, 1.0, x.as_ptr(), 8, g.as_mut_ptr()) }, PamretStatus::Ok);
        assert!(g.iter().all(|v| v.abs() < 1e-12));
    }
    unsafe { pamret_ensemble_free(ens) };
}

#[test]
fn solve_recovers_signal() {
    let (ens, x) = real_problem(16, 128);
    let mut res = ptr::null_mut();
    let st = unsafe { pamret_solve(ens, PamretMethod::Pam2, 2500, 1, 0.0, 0.0, x.as_ptr(), 16, &mut res) };
    assert_eq!(st, PamretStatus::Ok);
    assert!(unsafe { pamret_result_rel_error(res) } < 1e-8);
    assert!(unsafe { pamret_result_iterations(res) } > 0);
    let mut u = vec![0.0; 16];
    assert_eq!(unsafe { pamret_result_estimate(res, u.as_mut_ptr(), 16) }, PamretStatus::Ok);
    let sign = if u[0] * x[0] >= 0.0 { 1.0 } else { -1.0 };
    assert!(u.iter().zip(&x).all(|(a, b)| (sign * a - b).abs() < 1e-6));
    assert_eq!(unsafe { pamret_result_estimate(res, u.as_mut_ptr(), 3) }, PamretStatus::DimensionMismatch);
    unsafe {
        pamret_result_free(res);
        pamret_ensemble_free(ens);
    }
}

#[test]
fn complex_signals_use_interleaved_coordinates() {
    let mut ens = ptr::null_mut();
    assert_eq!(unsafe { pamret_ensemble_cdp(8, 4, 2, &mut ens) }, PamretStatus::Ok);
    let x: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
    assert_eq!(unsafe { pamret_ensemble_observe(ens, x.as_ptr(), 8) }, PamretStatus::DimensionMismatch);
    assert!(last_error().contains("expected 16"));
    assert_eq!(unsafe { pamret_ensemble_observe(ens, x.as_ptr(), 16) }, PamretStatus::Ok);
    let mut f = 1.0;
    assert_eq!(unsafe { pamret_loss(ens, PamretLoss::Pam2, 1.0, x.as_ptr(), 16, &mut f) }, PamretStatus::Ok);
    assert!(f < 1e-24);
    unsafe { pamret_ensemble_free(ens) };
}

#[test]
fn errors_are_reported() {
    let mut ens = ptr::null_mut();
    assert_eq!(unsafe { pamret_ensemble_gaussian_real(0, 4, 1, &mut ens) }, PamretStatus::InvalidArgument);
    assert!(ens.is_null());
    assert_eq!(unsafe { pamret_ensemble_gaussian_real(4, 4, 1, ptr::null_mut()) }, PamretStatus::NullPointer);
    assert!(last_error().contains("out"));

    assert_eq!(unsafe { pamret_ensemble_gaussian_real(4, 16, 1, &mut ens) }, PamretStatus::Ok);
    let u = [1.0, 0.0, 0.0, 0.0];
    let mut f = 0.0;
    let st = unsafe { pamret_loss(ens, PamretLoss::Pam1, 1.0, u.as_ptr(), 4, &mut f) };
    assert_eq!(st, PamretStatus::MissingObservations);
    let y = [1.0; 16];
    assert_eq!(unsafe { pamret_ensemble_set_observations(ens, y.as_ptr(), 16) }, PamretStatus::Ok);
    let zero = [0.0; 4];
    let mut g = [0.0; 4];
    let st = unsafe { pamret_gradient(ens, PamretLoss::Pam1, 1.0, zero.as_ptr(), 4, g.as_mut_ptr()) };
    assert_eq!(st, PamretStatus::Nondifferentiable);
    let st = unsafe { pamret_loss(ens, PamretLoss::Pam1, -1.0, u.as_ptr(), 4, &mut f) };
    assert_eq!(st, PamretStatus::InvalidArgument);
    assert!(last_error().contains("beta"));

    let mut res = ptr::null_mut();
    let st = unsafe { pamret_solve(ens, PamretMethod::Pam2, 50, 0, 1e6, 0.0, ptr::null(), 0, &mut res) };
    assert_eq!(st, PamretStatus::Diverged);
    assert!(!res.is_null());
    assert!(unsafe { pamret_result_rel_error(res) }.is_nan());
    unsafe {
        pamret_result_free(res);
        pamret_ensemble_free(ens);
        pamret_ensemble_free(ptr::null_mut());
    }
    assert!(unsafe { pamret_result_rel_error(ptr::null()) }.is_nan());
}

#[test]
fn profile_and_version() {
    let mut v = 0.0;
    assert_eq!(unsafe { pamret_limiting_profile(PamretLoss::Pam1, 1e-12, 1.0, 0.0, &mut v) }, PamretStatus::Ok);
    assert!((v - 2.0 / std::f64::consts::PI).abs() < 1e-4);
    let st = unsafe { pamret_limiting_profile(PamretLoss::Saf, 1.0, 1.0, 0.0, &mut v) };
    assert_eq!(st, PamretStatus::Unsupported);
    let ver = unsafe { CStr::from_ptr(pamret_version()) };
    assert_eq!(ver.to_str().unwrap(), env!("CARGO_PKG_VERSION"));
}

const C_PROGRAM: &str = r#"
#include <math.h>
#include <stdio.h>
#include "pamret.h"

int main(void) {
    PamretEnsemble *ens = NULL;
    double x[8] = {1, -2, 0.5, 3, 0, -1, 2, 1};
    if (pamret_ensemble_gaussian_real(8, 80, 5, &ens) != PAMRET_STATUS_OK) return 1;
    if (pamret_ensemble_observe(ens, x, 8) != PAMRET_STATUS_OK) return 2;
    PamretResult *res = NULL;
    if (pamret_solve(ens, PAMRET_METHOD_PAM2, 2500, 1, 0.0, 0.0, x, 8, &res) != PAMRET_STATUS_OK) return 3;
    double err = pamret_result_rel_error(res);
    pamret_result_free(res);
    if (pamret_ensemble_gaussian_real(0, 1, 0, &ens) != PAMRET_STATUS_INVALID_ARGUMENT) return 4;
    char msg[128];
    if (pamret_last_error(msg, sizeof msg) == 0) return 5;
    pamret_ensemble_free(ens);
    printf("%.3e\n", err);
    return err < 1e-8 ? 0 : 6;
}
"#;

#[test]
fn c_program_links_against_static_library() {
    let Ok(cc) = Command::new("cc").arg("--version").output() else {
        eprintln!("no C compiler available; skipping");
        return;
    };
    assert!(cc.status.success());
    // tests run from target/<profile>/deps
    let profile_dir = std::env::current_exe().unwrap().parent().unwrap().parent().unwrap().to_path_buf();
    let lib = profile_dir.join("libpamret_ffi.a");
    assert!(lib.exists(), "{} missing", lib.display());
    let include = PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("include");
    let dir = tempfile::tempdir().unwrap();
    let src = dir.path().join("main.c");
    let exe = dir.path().join("main");
    std::fs::write(&src, C_PROGRAM).unwrap();
    let out = Command::new("cc")
        .arg(&src)
        .arg("-I")
        .arg(&include)
        .arg(&lib)
        .args(["-lm", "-lpthread", "-ldl", "-o"])
        .arg(&exe)
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let run = Command::new(&exe).output().unwrap();
    assert!(run.status.success(), "exit {:?}: {}", run.status.code(), String::from_utf8_lossy(&run.stdout));
}
