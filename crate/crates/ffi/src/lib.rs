//! C ABI over `gbm-cutoff`.
//!
//! Systems are opaque handles created by `*_new` and released by `*_free`.
//! Every fallible call returns a [`GbmStatus`]; on failure the message is
//! available through [`gbm_last_error`] on the same thread. Matrices are
//! passed row-major as `dim * dim` doubles.

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::slice;

use gbm_cutoff::commutative::CommutativeModel;
use gbm_cutoff::cubic::{cardano_unique_real, CubicCoefficients};
use gbm_cutoff::hypotheses::check_hypotheses;
use gbm_cutoff::mixing::mixing_time;
use gbm_cutoff::noncommutative::{
    cutoff_schedule_first_order, example35_g, mean_square_first_order,
    mode_decomposition_synthetic, ModeDecomposition, SyntheticSystem,
};
use gbm_cutoff::schedule::{CutoffSchedule, Regime};
use gbm_cutoff::simulate::{estimate_mean_square, Scheme};
use gbm_cutoff::{Error, Matrix};

/// Result code of every fallible call.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GbmStatus {
    GbmOk = 0,
    GbmNullPointer,
    GbmPanic,
    GbmDimMismatch,
    GbmInvalidMatrix,
    GbmNonFinite,
    GbmEigFailure,
    GbmNotSymmetric,
    GbmNotCommuting,
    GbmJointDiagFailure,
    GbmZeroVector,
    GbmNotStable,
    GbmHypothesesViolated,
    GbmNotDiagonalizable,
    GbmOscillatoryProfile,
    GbmAmbiguousRoots,
    GbmNoRealRoot,
    GbmBracketFailure,
    GbmNoStabilizer,
    GbmXOrthogonal,
    GbmBranchViolation,
    GbmRepresentationInvalid,
    GbmNoDecay,
    GbmInvalidArgument,
}

impl From<&Error> for GbmStatus {
    fn from(e: &Error) -> Self {
        match e {
            Error::DimMismatch(_) => GbmStatus::GbmDimMismatch,
            Error::InvalidMatrix(_) => GbmStatus::GbmInvalidMatrix,
            Error::NonFinite(_) => GbmStatus::GbmNonFinite,
            Error::EigFailure => GbmStatus::GbmEigFailure,
            Error::NotSymmetric(_) => GbmStatus::GbmNotSymmetric,
            Error::NotCommuting(_) => GbmStatus::GbmNotCommuting,
            Error::JointDiagFailure(_) => GbmStatus::GbmJointDiagFailure,
            Error::ZeroVector => GbmStatus::GbmZeroVector,
            Error::NotStable(_) => GbmStatus::GbmNotStable,
            Error::HypothesesViolated(_) => GbmStatus::GbmHypothesesViolated,
            Error::NotDiagonalizable => GbmStatus::GbmNotDiagonalizable,
            Error::OscillatoryProfile(_) => GbmStatus::GbmOscillatoryProfile,
            Error::AmbiguousRoots => GbmStatus::GbmAmbiguousRoots,
            Error::NoRealRoot => GbmStatus::GbmNoRealRoot,
            Error::BracketFailure(..) => GbmStatus::GbmBracketFailure,
            Error::NoStabilizer => GbmStatus::GbmNoStabilizer,
            Error::XOrthogonal => GbmStatus::GbmXOrthogonal,
            Error::BranchViolation(_) => GbmStatus::GbmBranchViolation,
            Error::RepresentationInvalid(_) => GbmStatus::GbmRepresentationInvalid,
            Error::NoDecay(_) => GbmStatus::GbmNoDecay,
            Error::InvalidArgument(_) => GbmStatus::GbmInvalidArgument,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GbmScheme {
    GbmExactCommutative = 0,
    GbmExactFirstOrder,
    GbmEulerMaruyama,
    GbmMagnusTruncated,
}

impl From<GbmScheme> for Scheme {
    fn from(s: GbmScheme) -> Self {
        match s {
            GbmScheme::GbmExactCommutative => Scheme::ExactCommutative,
            GbmScheme::GbmExactFirstOrder => Scheme::ExactFirstOrder,
            GbmScheme::GbmEulerMaruyama => Scheme::EulerMaruyama,
            GbmScheme::GbmMagnusTruncated => Scheme::MagnusTruncated,
        }
    }
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum GbmRegime {
    GbmRegimeCommutative = 0,
    GbmRegimeFirstOrder,
    GbmRegimeSynthetic,
    GbmRegimeNoDecay,
}

/// Hypothesis verdicts.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GbmHypotheses {
    pub normal_b: bool,
    pub commutative: bool,
    pub normal_c: bool,
    pub first_order: bool,
    pub hypothesis_set_infeasible: bool,
}

/// Cutoff schedule. Entries that do not apply are NaN (reals) or -1
/// (integers).
#[repr(C)]
#[derive(Clone, Copy, Debug)]
pub struct GbmSchedule {
    pub regime: GbmRegime,
    pub eps: f64,
    pub q: f64,
    pub ell: i64,
    pub gamma: f64,
    pub b: f64,
    pub a: f64,
    pub ell_star: i64,
    pub t_eps: f64,
    pub w_eps: f64,
    pub r_eps: f64,
    pub big_t_eps: f64,
    pub tau_eps: f64,
    /// 1-based.
    pub selected_mode: i64,
}

impl From<&CutoffSchedule> for GbmSchedule {
    fn from(s: &CutoffSchedule) -> Self {
        let real = |v: Option<f64>| v.unwrap_or(f64::NAN);
        let int = |v: Option<usize>| v.map_or(-1, |n| n as i64);
        GbmSchedule {
            regime: match s.regime {
                Regime::Commutative => GbmRegime::GbmRegimeCommutative,
                Regime::FirstOrder => GbmRegime::GbmRegimeFirstOrder,
                Regime::Synthetic => GbmRegime::GbmRegimeSynthetic,
                Regime::NoDecay => GbmRegime::GbmRegimeNoDecay,
            },
            eps: s.eps,
            q: real(s.q),
            ell: int(s.ell),
            gamma: real(s.gamma),
            b: real(s.b),
            a: real(s.a),
            ell_star: int(s.ell_star),
            t_eps: real(s.t_eps),
            w_eps: real(s.w_eps),
            r_eps: real(s.r_eps),
            big_t_eps: real(s.big_t_eps),
            tau_eps: real(s.tau_eps),
            selected_mode: int(s.selected_mode),
        }
    }
}

/// Monte Carlo estimate of the mean square.
#[repr(C)]
#[derive(Clone, Copy, Debug, Default)]
pub struct GbmEstimate {
    pub value: f64,
    pub std_error: f64,
}

/// Coefficient pair `(A, B)` with initial value `x`.
pub struct GbmSystem {
    sys: gbm_cutoff::GbmSystem,
    model: Result<CommutativeModel, Error>,
}

/// Mode-level system with its decomposition.
pub struct GbmSynthetic {
    x: Vec<f64>,
    dec: ModeDecomposition,
}

thread_local! {
    static LAST_ERROR: RefCell<CString> = RefCell::new(CString::default());
}

fn set_error(msg: &str) {
    let c = CString::new(msg.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|e| *e.borrow_mut() = c);
}

fn fail(e: &Error) -> GbmStatus {
    set_error(&format!("{}: {e}", e.code()));
    GbmStatus::from(e)
}

fn guard(f: impl FnOnce() -> Result<(), GbmStatus>) -> GbmStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => GbmStatus::GbmOk,
        Ok(Err(s)) => s,
        Err(_) => {
            set_error("panic inside gbm-cutoff");
            GbmStatus::GbmPanic
        }
    }
}

fn null() -> GbmStatus {
    set_error("null pointer argument");
    GbmStatus::GbmNullPointer
}

unsafe fn read<'a>(p: *const f64, n: usize) -> Result<&'a [f64], GbmStatus> {
    if p.is_null() {
        return Err(null());
    }
    Ok(slice::from_raw_parts(p, n))
}

unsafe fn matrix(p: *const f64, dim: usize) -> Result<Matrix, GbmStatus> {
    Matrix::from_row_slice(dim, read(p, dim * dim)?).map_err(|e| fail(&e))
}

unsafe fn write<T>(out: *mut T, v: T) -> Result<(), GbmStatus> {
    if out.is_null() {
        return Err(null());
    }
    out.write(v);
    Ok(())
}

unsafe fn handle<'a, T>(p: *const T) -> Result<&'a T, GbmStatus> {
    p.as_ref().ok_or_else(null)
}

/// Message of the last failed call on this thread. Valid until the next
/// failing call on the same thread.
#[no_mangle]
pub extern "C" fn gbm_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ptr())
}

/// Creates a system from row-major `A`, `B` (`dim * dim`) and `x` (`dim`).
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_system_new(
    dim: usize,
    a: *const f64,
    b: *const f64,
    x: *const f64,
    out: *mut *mut GbmSystem,
) -> GbmStatus {
    guard(|| {
        let sys =
            gbm_cutoff::GbmSystem::new(matrix(a, dim)?, matrix(b, dim)?, read(x, dim)?.to_vec())
                .map_err(|e| fail(&e))?;
        let model = CommutativeModel::new(&sys);
        write(out, Box::into_raw(Box::new(GbmSystem { sys, model })))
    })
}

/// # Safety
/// `sys` must come from [`gbm_system_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gbm_system_free(sys: *mut GbmSystem) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_check_hypotheses(
    sys: *const GbmSystem,
    out: *mut GbmHypotheses,
) -> GbmStatus {
    guard(|| {
        let r = check_hypotheses(&handle(sys)?.sys);
        write(
            out,
            GbmHypotheses {
                normal_b: r.normal_b,
                commutative: r.commutative,
                normal_c: r.normal_c,
                first_order: r.first_order,
                hypothesis_set_infeasible: r.hypothesis_set_infeasible,
            },
        )
    })
}

fn commutative(s: &GbmSystem) -> Result<&CommutativeModel, GbmStatus> {
    s.model.as_ref().map_err(fail)
}

/// Closed-form `E|X_t|²` of a commuting pair.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_mean_square_commutative(
    sys: *const GbmSystem,
    t: f64,
    out: *mut f64,
) -> GbmStatus {
    guard(|| {
        let v = commutative(handle(sys)?)?
            .mean_square(t)
            .map_err(|e| fail(&e))?;
        write(out, v)
    })
}

/// Cutoff schedule of a commuting pair with window `w`.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_cutoff_commutative(
    sys: *const GbmSystem,
    eps: f64,
    w: f64,
    out: *mut GbmSchedule,
) -> GbmStatus {
    guard(|| {
        let s = commutative(handle(sys)?)?
            .cutoff_time(eps, w)
            .map_err(|e| fail(&e))?;
        write(out, GbmSchedule::from(&s))
    })
}

/// δ-mixing time of a commuting pair.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_mixing_time_commutative(
    sys: *const GbmSystem,
    eps: f64,
    delta: f64,
    out: *mut f64,
) -> GbmStatus {
    guard(|| {
        let model = commutative(handle(sys)?)?;
        let r = mixing_time(|t| model.mean_square(t), eps, delta).map_err(|e| fail(&e))?;
        write(out, r.tau)
    })
}

/// Monte Carlo estimate of `E|X_t|²`, reproducible for a given seed.
///
/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_estimate_mean_square(
    sys: *const GbmSystem,
    t: f64,
    scheme: GbmScheme,
    n_paths: usize,
    dt: f64,
    seed: u64,
    out: *mut GbmEstimate,
) -> GbmStatus {
    guard(|| {
        let e = estimate_mean_square(&handle(sys)?.sys, t, scheme.into(), n_paths, dt, seed)
            .map_err(|e| fail(&e))?;
        write(
            out,
            GbmEstimate {
                value: e.value,
                std_error: e.std_error,
            },
        )
    })
}

/// Creates a mode-level system from row-major `alpha`, `beta`, `gamma`, `a`
/// and `x`, and decomposes it.
///
/// # Safety
/// Pointers must be valid for the stated lengths; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_synthetic_new(
    dim: usize,
    alpha: *const f64,
    beta: *const f64,
    gamma: *const f64,
    a: *const f64,
    x: *const f64,
    out: *mut *mut GbmSynthetic,
) -> GbmStatus {
    guard(|| {
        let x = read(x, dim)?.to_vec();
        let sys = SyntheticSystem::new(
            matrix(alpha, dim)?,
            matrix(beta, dim)?,
            matrix(gamma, dim)?,
            matrix(a, dim)?,
            x.clone(),
        )
        .map_err(|e| fail(&e))?;
        let dec = mode_decomposition_synthetic(&sys).map_err(|e| fail(&e))?;
        write(out, Box::into_raw(Box::new(GbmSynthetic { x, dec })))
    })
}

/// # Safety
/// `sys` must come from [`gbm_synthetic_new`] and not be freed twice.
#[no_mangle]
pub unsafe extern "C" fn gbm_synthetic_free(sys: *mut GbmSynthetic) {
    if !sys.is_null() {
        drop(Box::from_raw(sys));
    }
}

/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_mean_square_synthetic(
    sys: *const GbmSynthetic,
    t: f64,
    out: *mut f64,
) -> GbmStatus {
    guard(|| {
        let s = handle(sys)?;
        write(
            out,
            mean_square_first_order(&s.dec, &s.x, t).map_err(|e| fail(&e))?,
        )
    })
}

/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_cutoff_synthetic(
    sys: *const GbmSynthetic,
    eps: f64,
    out: *mut GbmSchedule,
) -> GbmStatus {
    guard(|| {
        let s = handle(sys)?;
        let sched = cutoff_schedule_first_order(&s.dec, &s.x, eps).map_err(|e| fail(&e))?;
        write(out, GbmSchedule::from(&sched))
    })
}

/// # Safety
/// `sys` must be a live handle; `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_mixing_time_synthetic(
    sys: *const GbmSynthetic,
    eps: f64,
    delta: f64,
    out: *mut f64,
) -> GbmStatus {
    guard(|| {
        let s = handle(sys)?;
        let r = mixing_time(|t| mean_square_first_order(&s.dec, &s.x, t), eps, delta)
            .map_err(|e| fail(&e))?;
        write(out, r.tau)
    })
}

/// Unique real root of `c3 t³ + c2 t² + c1 t + c0`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_cardano(
    c3: f64,
    c2: f64,
    c1: f64,
    c0: f64,
    out: *mut f64,
) -> GbmStatus {
    guard(|| {
        let c = CubicCoefficients::new(c3, c2, c1, c0);
        write(out, cardano_unique_real(&c).map_err(|e| fail(&e))?)
    })
}

/// Inverse of `t ↦ e^{−t³−t²}` for `x ∈ (0, 1)`.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn gbm_example35_g(x: f64, out: *mut f64) -> GbmStatus {
    guard(|| write(out, example35_g(x).map_err(|e| fail(&e))?))
}
