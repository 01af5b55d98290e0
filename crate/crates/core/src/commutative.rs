//! Commuting coefficients: `E|X_t|² = |exp(tQ)x|²` with the effective drift
//! `Q = A + (B + B*)²/4`, and the logarithmic cutoff time scale built from
//! the asymptotics of `exp(tQ)x`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hypotheses::check_hypotheses;
use crate::linalg::{self, eig_general, Matrix};
use crate::schedule::{check_eps, CutoffSchedule, Regime};
use crate::spectral::{extract_asymptotics, SpectralAsymptotics};
use crate::system::GbmSystem;

/// Default cutoff window.
pub const DEFAULT_WINDOW: f64 = 1.0;

/// Margin used when testing the effective drift for stability.
pub const STABILITY_MARGIN: f64 = 1e-12;

/// `Q = A + (B + B*)²/4`; requires `B` normal and `[A, B] = [A, B*] = O`.
pub fn effective_drift(sys: &GbmSystem) -> Result<Matrix> {
    let report = check_hypotheses(sys);
    let failures = report.commutative_failures();
    if !failures.is_empty() {
        return Err(Error::HypothesesViolated(failures.join(", ")));
    }
    Ok(effective_drift_unchecked(sys.a(), sys.b()))
}

fn effective_drift_unchecked(a: &Matrix, b: &Matrix) -> Matrix {
    let bhat = b + &b.transpose();
    a + &(&bhat * &bhat).scale(0.25)
}

/// Closed-form model of the commuting case, with `Q` precomputed.
#[derive(Clone, Debug, Serialize)]
pub struct CommutativeModel {
    #[serde(rename = "Q")]
    q_matrix: Matrix,
    x: Vec<f64>,
}

impl CommutativeModel {
    pub fn new(sys: &GbmSystem) -> Result<Self> {
        Ok(CommutativeModel {
            q_matrix: effective_drift(sys)?,
            x: sys.x().to_vec(),
        })
    }

    pub fn q_matrix(&self) -> &Matrix {
        &self.q_matrix
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    /// `|exp(tQ)x|²`.
    pub fn mean_square(&self, t: f64) -> Result<f64> {
        if !(t >= 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!("time {t}")));
        }
        if t == 0.0 {
            return Ok(linalg::dot(&self.x, &self.x));
        }
        let y = linalg::exp_apply(&self.q_matrix.scale(t), &self.x);
        Ok(linalg::dot(&y, &y))
    }

    pub fn asymptotics(&self) -> Result<SpectralAsymptotics> {
        extract_asymptotics(&self.q_matrix, &self.x, STABILITY_MARGIN)
    }

    pub fn cutoff_time(&self, eps: f64, w: f64) -> Result<CutoffSchedule> {
        check_eps(eps)?;
        check_window(w)?;
        let asym = self.asymptotics()?;
        let mut s = CutoffSchedule::empty(Regime::Commutative, eps);
        s.q = Some(asym.q);
        s.ell = Some(asym.ell);
        s.t_eps = Some(log_cutoff_time(asym.q, asym.ell, eps));
        s.w_eps = Some(w);
        Ok(s)
    }
}

fn check_window(w: f64) -> Result<()> {
    if w > 0.0 && w.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("window {w}")))
    }
}

/// `t_ε = |ln ε|/q + (ℓ − 1) ln|ln ε| / q`.
pub fn log_cutoff_time(q: f64, ell: usize, eps: f64) -> f64 {
    let l = eps.ln().abs();
    l / q + (ell as f64 - 1.0) * l.ln() / q
}

pub fn mean_square_commutative(sys: &GbmSystem, t: f64) -> Result<f64> {
    CommutativeModel::new(sys)?.mean_square(t)
}

pub fn cutoff_time_commutative(sys: &GbmSystem, eps: f64, w: f64) -> Result<CutoffSchedule> {
    CommutativeModel::new(sys)?.cutoff_time(eps, w)
}

/// Limit of `E|X_{t_ε + ρw}|² / ε²` as `ε → 0`: `(e^{−qρw} |v|)²` with `v`
/// the non-oscillating limit vector of `e^{qt} exp(tQ)x`.
pub fn profile_limit(sys: &GbmSystem, rho: f64, w: f64) -> Result<f64> {
    check_window(w)?;
    if !eig_general(sys.a())?.is_diagonalizable() {
        return Err(Error::NotDiagonalizable);
    }
    let model = CommutativeModel::new(sys)?;
    let asym = model.asymptotics()?;
    if asym.ell != 1 {
        return Err(Error::NotDiagonalizable);
    }
    let v = asym
        .real_limit()
        .ok_or(Error::OscillatoryProfile(asym.m()))?;
    Ok((-asym.q * rho * w).exp().powi(2) * linalg::dot(&v, &v))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    fn scalar() -> GbmSystem {
        GbmSystem::scalar(-1.0, 0.5, 1.0).unwrap()
    }

    fn diagonal_2d() -> GbmSystem {
        GbmSystem::new(
            Matrix::diag(&[-2.0, -3.0]),
            Matrix::diag(&[1.0, 0.5]),
            vec![1.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn drift_examples() {
        assert!((effective_drift(&scalar()).unwrap().get(0, 0) + 0.75).abs() < 1e-15);
        assert_eq!(
            effective_drift(&diagonal_2d()).unwrap(),
            Matrix::diag(&[-1.0, -2.75])
        );
        let skew = Matrix::from_rows(&[[0.0, 1.0], [-1.0, 0.0]]).unwrap();
        let a = Matrix::identity(2).scale(-1.0);
        let sys = GbmSystem::new(a.clone(), skew, vec![1.0, 0.0]).unwrap();
        assert_eq!(effective_drift(&sys).unwrap(), a);
    }

    #[test]
    fn drift_requires_hypotheses() {
        let sys = GbmSystem::new(
            Matrix::from_rows(&[[-1.0, 1.0], [0.0, -1.0]]).unwrap(),
            Matrix::diag(&[1.0, 2.0]),
            vec![1.0, 0.0],
        )
        .unwrap();
        assert_eq!(
            effective_drift(&sys).unwrap_err().code(),
            "hypotheses_violated"
        );
        let nonnormal = Matrix::from_rows(&[[1.0, 1.0], [0.0, 1.0]]).unwrap();
        let sys =
            GbmSystem::new(Matrix::identity(2).scale(-1.0), nonnormal, vec![1.0, 0.0]).unwrap();
        assert_eq!(
            effective_drift(&sys).unwrap_err().code(),
            "hypotheses_violated"
        );
    }

    #[test]
    fn mean_square_examples() {
        let m = mean_square_commutative(&scalar(), 1.0).unwrap();
        assert!((m - (-1.5f64).exp()).abs() < 1e-15);
        assert!((m - 0.223130).abs() < 1e-6);
        assert_eq!(mean_square_commutative(&diagonal_2d(), 0.0).unwrap(), 2.0);
        let m = mean_square_commutative(&diagonal_2d(), 1.0).unwrap();
        assert!((m - (E.powi(-2) + (-5.5f64).exp())).abs() < 1e-15);
        assert!(mean_square_commutative(&scalar(), -1.0).is_err());
    }

    #[test]
    fn zero_noise_is_plain_exponential() {
        let a = Matrix::from_rows(&[[-1.0, 0.3], [-0.2, -0.7]]).unwrap();
        let sys = GbmSystem::new(a.clone(), Matrix::zeros(2), vec![0.4, -1.0]).unwrap();
        for t in [0.3, 1.0, 4.0] {
            let y = linalg::exp_apply(&a.scale(t), sys.x());
            assert_eq!(
                mean_square_commutative(&sys, t).unwrap(),
                linalg::dot(&y, &y)
            );
        }
    }

    #[test]
    fn cutoff_time_formula() {
        assert!((log_cutoff_time(0.75, 1, (-3.0f64).exp()) - 4.0).abs() < 1e-14);
        let t = log_cutoff_time(1.0, 2, (-10.0f64).exp());
        assert!((t - (10.0 + 10f64.ln())).abs() < 1e-12);
        assert!((t - 12.302585).abs() < 1e-6);

        let s = cutoff_time_commutative(&scalar(), (-8.0f64).exp(), 1.0).unwrap();
        assert_eq!(s.regime, Regime::Commutative);
        assert!((s.q.unwrap() - 0.75).abs() < 1e-14);
        assert_eq!(s.ell, Some(1));
        assert!((s.t_eps.unwrap() - 8.0 / 0.75).abs() < 1e-12);
        assert_eq!(s.w_eps, Some(1.0));
    }

    #[test]
    fn cutoff_threshold_on_scalar_example() {
        let sys = scalar();
        let eps = (-8.0f64).exp();
        let t = cutoff_time_commutative(&sys, eps, 1.0)
            .unwrap()
            .t_eps
            .unwrap();
        let after = mean_square_commutative(&sys, t + 3.0).unwrap() / (eps * eps);
        let before = mean_square_commutative(&sys, t - 3.0).unwrap() / (eps * eps);
        assert!(after < 0.02 && before > 50.0, "{after} {before}");
    }

    #[test]
    fn cutoff_rejects_bad_eps_and_unstable_drift() {
        assert!(cutoff_time_commutative(&scalar(), 0.5, 1.0).is_err());
        assert!(cutoff_time_commutative(&scalar(), 0.01, 0.0).is_err());
        let sys = GbmSystem::scalar(-0.1, 1.0, 1.0).unwrap();
        let err = cutoff_time_commutative(&sys, 0.01, 1.0).unwrap_err();
        assert_eq!(err.code(), "not_stable");
    }

    #[test]
    fn profile_limit_examples() {
        assert!((profile_limit(&scalar(), 0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);
        let v = profile_limit(&scalar(), 2.0, 0.5).unwrap();
        assert!((v - (-1.5f64 * 2.0 * 0.5).exp()).abs() < 1e-12);
        assert!((profile_limit(&diagonal_2d(), 0.0, 1.0).unwrap() - 1.0).abs() < 1e-12);

        let jordan = GbmSystem::new(
            Matrix::from_rows(&[[-1.0, 1.0], [0.0, -1.0]]).unwrap(),
            Matrix::zeros(2),
            vec![0.0, 1.0],
        )
        .unwrap();
        assert_eq!(
            profile_limit(&jordan, 0.0, 1.0).unwrap_err().code(),
            "not_diagonalizable"
        );

        let rot = GbmSystem::new(
            Matrix::from_rows(&[[-1.0, 2.0], [-2.0, -1.0]]).unwrap(),
            Matrix::zeros(2),
            vec![1.0, 0.0],
        )
        .unwrap();
        assert_eq!(
            profile_limit(&rot, 0.0, 1.0).unwrap_err().code(),
            "oscillatory_profile"
        );
    }

    #[test]
    fn normalized_mean_square_converges_to_profile() {
        let sys = scalar();
        let model = CommutativeModel::new(&sys).unwrap();
        for rho in [-2.0, 0.0, 1.5] {
            let limit = profile_limit(&sys, rho, 1.0).unwrap();
            let mut prev = f64::INFINITY;
            for n in [4.0f64, 6.0, 8.0] {
                let eps = (-n).exp();
                let t = model.cutoff_time(eps, 1.0).unwrap().t_eps.unwrap();
                let err = (model.mean_square(t + rho).unwrap() / (eps * eps) - limit).abs();
                assert!(err <= prev + 1e-12);
                prev = err;
            }
            assert!(prev < 1e-9);
        }
    }
}
