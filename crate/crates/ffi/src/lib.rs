//! C ABI over `pamret`.
//!
//! Ensembles and solver results are opaque heap handles released with their
//! `_free` functions. Every fallible call returns a [`PamretStatus`]; the
//! message of the last failure on the calling thread is available from
//! [`pamret_last_error`]. Complex signals cross the boundary as interleaved
//! `(re, im)` doubles, so a length-`n` complex signal occupies `2n` slots.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use pamret::landscape::{limiting_profile, ProfileModel, ProfileQuery};
use pamret::objectives::{gradient, loss, EvalContext, LossModel};
use pamret::signal_models::{sample_cdp, sample_gaussian_complex, sample_gaussian_real, MeasurementEnsemble, Signal};
use pamret::solvers::{run_method, Method, TrialRecord, TrialStatus};
use pamret::Error;

/// Result of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PamretStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    DimensionMismatch = 3,
    MissingObservations = 4,
    Nondifferentiable = 5,
    Unsupported = 6,
    Diverged = 7,
    Panic = 8,
    Internal = 9,
}

/// Losses exposed for evaluation.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PamretLoss {
    Pam1 = 0,
    Pam2 = 1,
    Saf = 2,
    WfIntensity = 3,
    Amplitude = 4,
}

/// Solvers with their default settings.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum PamretMethod {
    Pam1 = 0,
    Pam2 = 1,
    Saf = 2,
    Wf = 3,
    Twf = 4,
    Taf = 5,
}

/// Measurement ensemble with optional observations.
pub struct PamretEnsemble(MeasurementEnsemble);

/// Outcome of one solver run.
pub struct PamretResult(TrialRecord);

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("nul bytes removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_of(err: &Error) -> PamretStatus {
    match err {
        Error::InvalidArgument(_) | Error::NonFinite | Error::KindMismatch(_) | Error::Config(_) => {
            PamretStatus::InvalidArgument
        }
        Error::DimensionMismatch { .. } => PamretStatus::DimensionMismatch,
        Error::MissingObservations => PamretStatus::MissingObservations,
        Error::Nondifferentiable(_) => PamretStatus::Nondifferentiable,
        Error::Unsupported(_) => PamretStatus::Unsupported,
        _ => PamretStatus::Internal,
    }
}

/// Runs `f`, recording errors and panics.
fn guard(f: impl FnOnce() -> Result<(), (PamretStatus, String)>) -> PamretStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => PamretStatus::Ok,
        Ok(Err((status, msg))) => {
            set_error(msg);
            status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_error(format!("panic: {msg}"));
            PamretStatus::Panic
        }
    }
}

trait Lift<T> {
    fn lift(self) -> Result<T, (PamretStatus, String)>;
}

impl<T> Lift<T> for pamret::Result<T> {
    fn lift(self) -> Result<T, (PamretStatus, String)> {
        self.map_err(|e| (status_of(&e), e.to_string()))
    }
}

fn null(what: &str) -> (PamretStatus, String) {
    (PamretStatus::NullPointer, format!("{what} is null"))
}

unsafe fn slice<'a>(p: *const f64, len: usize, what: &str) -> Result<&'a [f64], (PamretStatus, String)> {
    if len == 0 {
        return Ok(&[]);
    }
    if p.is_null() {
        return Err(null(what));
    }
    Ok(std::slice::from_raw_parts(p, len))
}

unsafe fn ensemble<'a>(h: *const PamretEnsemble) -> Result<&'a MeasurementEnsemble, (PamretStatus, String)> {
    h.as_ref().map(|e| &e.0).ok_or_else(|| null("ensemble"))
}

/// Signal of the ensemble's kind from `len` interleaved coordinates.
fn signal_for(ens: &MeasurementEnsemble, coords: &[f64]) -> Result<Signal, (PamretStatus, String)> {
    let per = match ens.scalar_kind() {
        pamret::signal_models::ScalarKind::Real => 1,
        pamret::signal_models::ScalarKind::Complex => 2,
    };
    if coords.len() != per * ens.n() {
        return Err((
            PamretStatus::DimensionMismatch,
            format!("expected {} coordinates, found {}", per * ens.n(), coords.len()),
        ));
    }
    Ok(Signal::from_real_coords(coords, ens.scalar_kind()))
}

fn loss_model(model: PamretLoss, beta: f64) -> LossModel {
    match model {
        PamretLoss::Pam1 => LossModel::Pam1 { beta },
        PamretLoss::Pam2 => LossModel::Pam2 { beta },
        PamretLoss::Saf => LossModel::Saf { beta },
        PamretLoss::WfIntensity => LossModel::WfIntensity,
        PamretLoss::Amplitude => LossModel::Amplitude,
    }
}

fn method(m: PamretMethod) -> Method {
    match m {
        PamretMethod::Pam1 => Method::Pam1,
        PamretMethod::Pam2 => Method::Pam2,
        PamretMethod::Saf => Method::Saf,
        PamretMethod::Wf => Method::Wf,
        PamretMethod::Twf => Method::Twf,
        PamretMethod::Taf => Method::Taf,
    }
}

fn store_ensemble(out: *mut *mut PamretEnsemble, r: pamret::Result<MeasurementEnsemble>) -> PamretStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let ens = r.lift()?;
        unsafe { *out = Box::into_raw(Box::new(PamretEnsemble(ens))) };
        Ok(())
    })
}

/// Copies the last error message on this thread into `buf` (NUL-terminated,
/// truncated to `len`). Returns the full message length without the NUL, or
/// 0 when there is no error.
///
/// # Safety
/// `buf` must be valid for `len` bytes or null.
#[no_mangle]
pub unsafe extern "C" fn pamret_last_error(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else { return 0 };
        let bytes = msg.as_bytes();
        if !buf.is_null() && len > 0 {
            let k = bytes.len().min(len - 1);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast::<c_char>(), buf, k);
            *buf.add(k) = 0;
        }
        bytes.len()
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn pamret_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Real Gaussian ensemble with `m` vectors in dimension `n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pamret_ensemble_gaussian_real(
    n: usize,
    m: usize,
    seed: u64,
    out: *mut *mut PamretEnsemble,
) -> PamretStatus {
    store_ensemble(out, sample_gaussian_real(n, m, seed))
}

/// Complex Gaussian ensemble with `m` vectors in dimension `n`.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pamret_ensemble_gaussian_complex(
    n: usize,
    m: usize,
    seed: u64,
    out: *mut *mut PamretEnsemble,
) -> PamretStatus {
    store_ensemble(out, sample_gaussian_complex(n, m, seed))
}

/// Coded diffraction ensemble with `l` octanary masks.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pamret_ensemble_cdp(
    n: usize,
    l: usize,
    seed: u64,
    out: *mut *mut PamretEnsemble,
) -> PamretStatus {
    store_ensemble(out, sample_cdp(n, l, seed))
}

/// Releases an ensemble; null is ignored.
///
/// # Safety
/// `ens` must come from a constructor above and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pamret_ensemble_free(ens: *mut PamretEnsemble) {
    if !ens.is_null() {
        drop(Box::from_raw(ens));
    }
}

/// Signal dimension and number of measurements.
///
/// # Safety
/// `ens` must be a valid handle; `n` and `m` valid pointers or null.
#[no_mangle]
pub unsafe extern "C" fn pamret_ensemble_dims(
    ens: *const PamretEnsemble,
    n: *mut usize,
    m: *mut usize,
) -> PamretStatus {
    guard(|| {
        let e = ensemble(ens)?;
        if !n.is_null() {
            *n = e.n();
        }
        if !m.is_null() {
            *m = e.m();
        }
        Ok(())
    })
}

/// Records the noiseless magnitudes of `x` (`len` coordinates).
///
/// # Safety
/// `ens` must be a valid handle and `x` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pamret_ensemble_observe(ens: *mut PamretEnsemble, x: *const f64, len: usize) -> PamretStatus {
    guard(|| {
        let h = ens.as_mut().ok_or_else(|| null("ensemble"))?;
        let x = signal_for(&h.0, slice(x, len, "x")?)?;
        h.0 = h.0.clone().observe(&x).lift()?;
        Ok(())
    })
}

/// Replaces the observed magnitudes with `y` (length `m`).
///
/// # Safety
/// `ens` must be a valid handle and `y` valid for `m` doubles.
#[no_mangle]
pub unsafe extern "C" fn pamret_ensemble_set_observations(
    ens: *mut PamretEnsemble,
    y: *const f64,
    m: usize,
) -> PamretStatus {
    guard(|| {
        let h = ens.as_mut().ok_or_else(|| null("ensemble"))?;
        let y = slice(y, m, "y")?.to_vec();
        h.0 = h.0.clone().with_observations(y).lift()?;
        Ok(())
    })
}

/// Loss value at `u`. `beta` is ignored by losses without a parameter.
///
/// # Safety
/// `ens` must be a valid handle, `u` valid for `len` doubles, `out` valid.
#[no_mangle]
pub unsafe extern "C" fn pamret_loss(
    ens: *const PamretEnsemble,
    model: PamretLoss,
    beta: f64,
    u: *const f64,
    len: usize,
    out: *mut f64,
) -> PamretStatus {
    guard(|| {
        let e = ensemble(ens)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let ctx = EvalContext::new(loss_model(model, beta), e).lift()?;
        *out = loss(&ctx, &signal_for(e, slice(u, len, "u")?)?).lift()?;
        Ok(())
    })
}

/// Gradient at `u` written to `grad` (same layout and length as `u`). For
/// complex ensembles this is the conjugate (Wirtinger) derivative.
///
/// # Safety
/// `ens` must be a valid handle; `u` and `grad` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pamret_gradient(
    ens: *const PamretEnsemble,
    model: PamretLoss,
    beta: f64,
    u: *const f64,
    len: usize,
    grad: *mut f64,
) -> PamretStatus {
    guard(|| {
        let e = ensemble(ens)?;
        if grad.is_null() {
            return Err(null("grad"));
        }
        let ctx = EvalContext::new(loss_model(model, beta), e).lift()?;
        let g = gradient(&ctx, &signal_for(e, slice(u, len, "u")?)?).lift()?.to_real_coords();
        ptr::copy_nonoverlapping(g.as_ptr(), grad, g.len());
        Ok(())
    })
}

/// Runs `method` with its defaults. `mu <= 0` keeps the default step and
/// `beta <= 0` the default smoothing. `truth` (may be null) enables
/// relative-error reporting. A diverged run still produces a result and
/// returns `Diverged`.
///
/// # Safety
/// `ens` must be a valid handle, `truth` null or valid for `truth_len`
/// doubles, `out` a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pamret_solve(
    ens: *const PamretEnsemble,
    m: PamretMethod,
    max_iters: usize,
    seed: u64,
    mu: f64,
    beta: f64,
    truth: *const f64,
    truth_len: usize,
    out: *mut *mut PamretResult,
) -> PamretStatus {
    let mut diverged = false;
    let status = guard(|| {
        let e = ensemble(ens)?;
        if out.is_null() {
            return Err(null("out"));
        }
        let x = if truth.is_null() { None } else { Some(signal_for(e, slice(truth, truth_len, "truth")?)?) };
        let method = method(m);
        let mut cfg = method.default_config(max_iters, seed);
        if mu > 0.0 {
            cfg.step_mu = mu;
        }
        let model = method.model((beta > 0.0).then_some(beta));
        let rec = run_method(method, model, e, &cfg, x.as_ref()).lift()?;
        diverged = rec.status == TrialStatus::Diverged;
        *out = Box::into_raw(Box::new(PamretResult(rec)));
        Ok(())
    });
    if status == PamretStatus::Ok && diverged {
        set_error("solver diverged".into());
        return PamretStatus::Diverged;
    }
    status
}

/// Releases a result; null is ignored.
///
/// # Safety
/// `res` must come from [`pamret_solve`] and not be used afterwards.
#[no_mangle]
pub unsafe extern "C" fn pamret_result_free(res: *mut PamretResult) {
    if !res.is_null() {
        drop(Box::from_raw(res));
    }
}

/// Iterations run; 0 for a null handle.
///
/// # Safety
/// `res` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn pamret_result_iterations(res: *const PamretResult) -> usize {
    res.as_ref().map_or(0, |r| r.0.iterations_run)
}

/// Final relative error; NaN without a ground truth or for a null handle.
///
/// # Safety
/// `res` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn pamret_result_rel_error(res: *const PamretResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.final_rel_error)
}

/// Final loss value; NaN for a null handle.
///
/// # Safety
/// `res` must be a valid handle or null.
#[no_mangle]
pub unsafe extern "C" fn pamret_result_loss(res: *const PamretResult) -> f64 {
    res.as_ref().map_or(f64::NAN, |r| r.0.final_loss)
}

/// Copies the estimate into `buf` (`len` coordinates, as for inputs).
///
/// # Safety
/// `res` must be a valid handle and `buf` valid for `len` doubles.
#[no_mangle]
pub unsafe extern "C" fn pamret_result_estimate(res: *const PamretResult, buf: *mut f64, len: usize) -> PamretStatus {
    guard(|| {
        let r = res.as_ref().ok_or_else(|| null("result"))?;
        if buf.is_null() {
            return Err(null("buf"));
        }
        let c = r.0.estimate.to_real_coords();
        if c.len() != len {
            return Err((PamretStatus::DimensionMismatch, format!("expected {} coordinates, found {len}", c.len())));
        }
        ptr::copy_nonoverlapping(c.as_ptr(), buf, len);
        Ok(())
    })
}

/// Population profile of the cross term for `model` in {Pam1, Pam2}.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn pamret_limiting_profile(
    model: PamretLoss,
    beta: f64,
    rho: f64,
    t: f64,
    out: *mut f64,
) -> PamretStatus {
    guard(|| {
        if out.is_null() {
            return Err(null("out"));
        }
        let model = match model {
            PamretLoss::Pam1 => ProfileModel::Pam1,
            PamretLoss::Pam2 => ProfileModel::Pam2,
            _ => return Err((PamretStatus::Unsupported, "profiles exist for pam1 and pam2 only".into())),
        };
        *out = limiting_profile(&ProfileQuery::new(model, beta, rho, t).lift()?).lift()?;
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status_codes() {
        let st = guard(|| panic!("boom"));
        assert_eq!(st, PamretStatus::Panic);
        let mut buf = [0 as c_char; 64];
        let n = unsafe { pamret_last_error(buf.as_mut_ptr(), buf.len()) };
        assert_eq!(n, "panic: boom".len());
    }

    #[test]
    fn error_message_is_truncated_and_terminated() {
        set_error("0123456789".into());
        let mut buf = [1 as c_char; 4];
        assert_eq!(unsafe { pamret_last_error(buf.as_mut_ptr(), buf.len()) }, 10);
        assert_eq!(buf, [b'0' as c_char, b'1' as c_char, b'2' as c_char, 0]);
        assert_eq!(unsafe { pamret_last_error(ptr::null_mut(), 0) }, 10);
    }

    #[test]
    fn status_mapping() {
        assert_eq!(status_of(&Error::MissingObservations), PamretStatus::MissingObservations);
        assert_eq!(status_of(&Error::DimensionMismatch { expected: 1, found: 2 }), PamretStatus::DimensionMismatch);
        assert_eq!(status_of(&Error::Config("x".into())), PamretStatus::InvalidArgument);
    }
}
