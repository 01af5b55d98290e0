//! First-order non-commutativity.
//!
//! With `C = [B, A]`, `B̂ = B + B*`, `Ĉ = C + C*` the mean square reads
//!
//! ```text
//! E|X_t|² = |exp(tÃ) exp(½(tα − t²β + (t³ − p_Γ t)Γ)) x|²,
//! α = B̂²/2,  β = B̂Ĉ/2,  Γ = Ĉ²/6,  Ã = A + (p_Γ/2)Γ,
//! ```
//!
//! and in a joint eigenbasis `v_j` of `α, β, Γ` (eigenvalues `−a_j`, `b_j`,
//! `−γ_j`) every mode decays like `exp(−(a_j/2)t − (b_j/2)t² − (γ_j/2)t³)`.
//! The cutoff time solves the cubic of the slowest mode.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::cubic::{cardano_unique_real, correction_root, solve_log_cubic, CubicCoefficients};
use crate::error::{Error, Result};
use crate::linalg::{self, commutator, is_hurwitz, simultaneous_diagonalize, Complex64, Matrix};
use crate::schedule::{check_eps, CutoffSchedule, Regime};
use crate::spectral::extract_asymptotics;
use crate::system::{check_vector, GbmSystem};

/// Margin used for every Hurwitz test in this module.
pub const STABILITY_MARGIN: f64 = 1e-12;

/// Largest exponent `k` tried for `p_Γ = 2ᵏ`.
pub const MAX_STABILIZER_EXPONENT: i32 = 20;

/// `|⟨x, v_j⟩| ≤ OVERLAP_TOL·|x|` counts as a mode not excited by `x`.
pub const OVERLAP_TOL: f64 = 1e-12;

/// Relative tolerance for ties in the selection cascade.
pub const TIE_TOL: f64 = 1e-9;

/// Brackets and squares built from `(A, B)`.
#[derive(Clone, Debug, Serialize)]
pub struct BracketMatrices {
    #[serde(rename = "C")]
    pub c: Matrix,
    #[serde(rename = "Bhat")]
    pub bhat: Matrix,
    #[serde(rename = "Chat")]
    pub chat: Matrix,
    pub alpha: Matrix,
    pub beta: Matrix,
    #[serde(rename = "Gamma")]
    pub gamma: Matrix,
}

/// [`BracketMatrices`] with the stabilizing shift `p_Γ` and `Ã = A + (p_Γ/2)Γ`.
#[derive(Clone, Debug, Serialize)]
pub struct GammaMatrices {
    #[serde(flatten)]
    pub brackets: BracketMatrices,
    pub p_gamma: f64,
    #[serde(rename = "A_tilde")]
    pub a_tilde: Matrix,
}

/// `0` for Hurwitz `A`, otherwise the first power of two making
/// `A + (p/2)Γ` Hurwitz.
pub fn stabilizing_shift(a: &Matrix, gamma: &Matrix) -> Result<f64> {
    if is_hurwitz(a, STABILITY_MARGIN)? {
        return Ok(0.0);
    }
    for k in 0..=MAX_STABILIZER_EXPONENT {
        let p = 2f64.powi(k);
        if is_hurwitz(&(a + &gamma.scale(p / 2.0)), STABILITY_MARGIN)? {
            return Ok(p);
        }
    }
    Err(Error::NoStabilizer)
}

pub fn bracket_matrices(sys: &GbmSystem) -> BracketMatrices {
    let b = sys.b();
    let c = sys.bracket_ba();
    let bhat = b + &b.transpose();
    let chat = &c + &c.transpose();
    let alpha = (&bhat * &bhat).scale(0.5);
    let beta = (&bhat * &chat).scale(0.5);
    let gamma = (&chat * &chat).scale(1.0 / 6.0);
    BracketMatrices {
        c,
        bhat,
        chat,
        alpha,
        beta,
        gamma,
    }
}

pub fn gamma_matrices(sys: &GbmSystem) -> Result<GammaMatrices> {
    let brackets = bracket_matrices(sys);
    let p_gamma = stabilizing_shift(sys.a(), &brackets.gamma)?;
    let a_tilde = sys.a() + &brackets.gamma.scale(p_gamma / 2.0);
    Ok(GammaMatrices {
        brackets,
        p_gamma,
        a_tilde,
    })
}

/// Mode-level input `(α, β, Γ, A, x)` given directly.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct SyntheticSystem {
    pub alpha: Matrix,
    pub beta: Matrix,
    #[serde(rename = "Gamma")]
    pub gamma: Matrix,
    #[serde(rename = "A")]
    pub a: Matrix,
    pub x: Vec<f64>,
    #[serde(default = "default_tol")]
    pub tol: f64,
}

fn default_tol() -> f64 {
    linalg::DEFAULT_TOL
}

impl SyntheticSystem {
    pub fn new(alpha: Matrix, beta: Matrix, gamma: Matrix, a: Matrix, x: Vec<f64>) -> Result<Self> {
        let s = SyntheticSystem {
            alpha,
            beta,
            gamma,
            a,
            x,
            tol: default_tol(),
        };
        s.validate()?;
        Ok(s)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.a.dim();
        for (name, m) in [
            ("alpha", &self.alpha),
            ("beta", &self.beta),
            ("Gamma", &self.gamma),
        ] {
            if m.dim() != d {
                return Err(Error::DimMismatch(format!(
                    "{name} is {}x{0}, A is {d}x{d}",
                    m.dim()
                )));
            }
        }
        if self.x.len() != d {
            return Err(Error::DimMismatch(format!(
                "x has length {}, A is {d}x{d}",
                self.x.len()
            )));
        }
        check_vector(&self.x)?;
        if !(self.tol > 0.0 && self.tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tol {}", self.tol)));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.a.dim()
    }
}

/// `‖[U, V]‖ / (‖U‖ ‖V‖)` for the pairs that must commute: `[α,β]`, `[α,Γ]`,
/// `[β,Γ]`, `[A,Γ]`.
pub fn step_three_residuals(
    alpha: &Matrix,
    beta: &Matrix,
    gamma: &Matrix,
    a: &Matrix,
) -> BTreeMap<String, f64> {
    let rel = |u: &Matrix, v: &Matrix| {
        let raw = commutator(u, v).expect("same dimension").frobenius_norm();
        let scale = u.frobenius_norm() * v.frobenius_norm();
        if scale > 0.0 {
            raw / scale
        } else {
            0.0
        }
    };
    [
        ("alpha_beta", rel(alpha, beta)),
        ("alpha_gamma", rel(alpha, gamma)),
        ("beta_gamma", rel(beta, gamma)),
        ("a_gamma", rel(a, gamma)),
    ]
    .into_iter()
    .map(|(k, v)| (k.to_string(), v))
    .collect()
}

/// Joint modes of `α, β, Γ` with their decay parameters.
#[derive(Clone, Debug, Serialize)]
pub struct ModeDecomposition {
    #[serde(rename = "C", skip_serializing_if = "Option::is_none")]
    pub c: Option<Matrix>,
    #[serde(rename = "Bhat", skip_serializing_if = "Option::is_none")]
    pub bhat: Option<Matrix>,
    #[serde(rename = "Chat", skip_serializing_if = "Option::is_none")]
    pub chat: Option<Matrix>,
    pub alpha: Matrix,
    pub beta: Matrix,
    #[serde(rename = "Gamma")]
    pub gamma: Matrix,
    #[serde(rename = "A")]
    pub a: Matrix,
    pub p_gamma: f64,
    #[serde(rename = "A_tilde")]
    pub a_tilde: Matrix,
    /// Orthonormal joint eigenvectors.
    pub basis: Vec<Vec<f64>>,
    /// `−a_j` are the eigenvalues of `α`.
    pub a_coeffs: Vec<f64>,
    /// `b_j` are the eigenvalues of `β`.
    pub b_coeffs: Vec<f64>,
    /// `−γ_j` are the eigenvalues of `Γ`.
    pub g_coeffs: Vec<f64>,
    /// Decay rate of `exp(tÃ)v_j`.
    pub lambda: Vec<f64>,
    /// Polynomial order plus one of `exp(tÃ)v_j`.
    pub ell: Vec<usize>,
    /// `⟨x, v_j⟩`.
    pub overlaps: Vec<f64>,
    pub step_three: BTreeMap<String, f64>,
    pub synthetic: bool,
}

struct Parts<'a> {
    alpha: &'a Matrix,
    beta: &'a Matrix,
    gamma: &'a Matrix,
    a: &'a Matrix,
    p_gamma: f64,
    x: &'a [f64],
    tol: f64,
}

fn decompose(parts: Parts<'_>) -> Result<ModeDecomposition> {
    let Parts {
        alpha,
        beta,
        gamma,
        a,
        p_gamma,
        x,
        tol,
    } = parts;
    let step_three = step_three_residuals(alpha, beta, gamma, a);
    let worst = step_three.values().fold(0.0f64, |m, &v| m.max(v));
    if worst > tol {
        return Err(Error::NotCommuting(worst));
    }
    let a_tilde = a + &gamma.scale(p_gamma / 2.0);
    if !is_hurwitz(&a_tilde, STABILITY_MARGIN)? {
        return Err(Error::NotStable(linalg::spectral_abscissa(&a_tilde)?));
    }
    let joint = simultaneous_diagonalize(&[alpha.clone(), beta.clone(), gamma.clone()])?;
    let a_coeffs = joint
        .congruence_diagonal(alpha)
        .iter()
        .map(|v| -v)
        .collect();
    let b_coeffs = joint.congruence_diagonal(beta);
    let g_coeffs = joint
        .congruence_diagonal(gamma)
        .iter()
        .map(|v| -v)
        .collect();
    let basis = joint.real_basis();
    let mut lambda = Vec::with_capacity(basis.len());
    let mut ell = Vec::with_capacity(basis.len());
    for v in &basis {
        let asym = extract_asymptotics(&a_tilde, v, STABILITY_MARGIN)?;
        lambda.push(asym.q);
        ell.push(asym.ell);
    }
    let overlaps = basis.iter().map(|v| linalg::dot(x, v)).collect();
    Ok(ModeDecomposition {
        c: None,
        bhat: None,
        chat: None,
        alpha: alpha.clone(),
        beta: beta.clone(),
        gamma: gamma.clone(),
        a: a.clone(),
        p_gamma,
        a_tilde,
        basis,
        a_coeffs,
        b_coeffs,
        g_coeffs,
        lambda,
        ell,
        overlaps,
        step_three,
        synthetic: false,
    })
}

pub fn mode_decomposition(sys: &GbmSystem) -> Result<ModeDecomposition> {
    let GammaMatrices {
        brackets: g,
        p_gamma,
        ..
    } = gamma_matrices(sys)?;
    let mut dec = decompose(Parts {
        alpha: &g.alpha,
        beta: &g.beta,
        gamma: &g.gamma,
        a: sys.a(),
        p_gamma,
        x: sys.x(),
        tol: sys.tol(),
    })?;
    dec.c = Some(g.c);
    dec.bhat = Some(g.bhat);
    dec.chat = Some(g.chat);
    Ok(dec)
}

pub fn mode_decomposition_synthetic(sys: &SyntheticSystem) -> Result<ModeDecomposition> {
    sys.validate()?;
    let p_gamma = stabilizing_shift(&sys.a, &sys.gamma)?;
    let mut dec = decompose(Parts {
        alpha: &sys.alpha,
        beta: &sys.beta,
        gamma: &sys.gamma,
        a: &sys.a,
        p_gamma,
        x: &sys.x,
        tol: sys.tol,
    })?;
    dec.synthetic = true;
    Ok(dec)
}

impl ModeDecomposition {
    pub fn dim(&self) -> usize {
        self.basis.len()
    }

    /// `ã_j = a_j/2 + λ_j − (p_Γ/2)γ_j`.
    pub fn a_tilde_coeff(&self, j: usize) -> f64 {
        self.a_coeffs[j] / 2.0 + self.lambda[j] - self.p_gamma / 2.0 * self.g_coeffs[j]
    }

    /// Same decomposition with another admissible `p_Γ`.
    pub fn with_p_gamma(&self, p_gamma: f64) -> Result<Self> {
        let mut out = decompose(Parts {
            alpha: &self.alpha,
            beta: &self.beta,
            gamma: &self.gamma,
            a: &self.a,
            p_gamma,
            x: &self.overlaps_source(),
            tol: f64::INFINITY,
        })?;
        out.c = self.c.clone();
        out.bhat = self.bhat.clone();
        out.chat = self.chat.clone();
        out.synthetic = self.synthetic;
        Ok(out)
    }

    /// `Σ_j ⟨x, v_j⟩ v_j`, i.e. the vector the overlaps were taken from.
    fn overlaps_source(&self) -> Vec<f64> {
        let mut x = vec![0.0; self.dim()];
        for (o, v) in self.overlaps.iter().zip(&self.basis) {
            for (xi, vi) in x.iter_mut().zip(v) {
                *xi += o * vi;
            }
        }
        x
    }

    fn check_x(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.dim() {
            return Err(Error::DimMismatch(format!(
                "x has length {}, decomposition has dimension {}",
                x.len(),
                self.dim()
            )));
        }
        check_vector(x)
    }
}

/// `|Σ_j e^{−(a_j/2)t − (b_j/2)t² − (γ_j/2)(t³ − p_Γ t)} ⟨x, v_j⟩ exp(tÃ)v_j|²`.
pub fn mean_square_first_order(dec: &ModeDecomposition, x: &[f64], t: f64) -> Result<f64> {
    dec.check_x(x)?;
    if !(t >= 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time {t}")));
    }
    if t == 0.0 {
        return Ok(linalg::dot(x, x));
    }
    let mut z = vec![0.0; dec.dim()];
    for (j, v) in dec.basis.iter().enumerate() {
        let exponent = -dec.a_coeffs[j] / 2.0 * t
            - dec.b_coeffs[j] / 2.0 * t * t
            - dec.g_coeffs[j] / 2.0 * (t * t * t - dec.p_gamma * t);
        let c = exponent.exp() * linalg::dot(x, v);
        for (zi, vi) in z.iter_mut().zip(v) {
            *zi += c * vi;
        }
    }
    let y = linalg::exp_apply(&dec.a_tilde.scale(t), &z);
    Ok(linalg::dot(&y, &y))
}

/// Members of `set` whose `key` is within the tie tolerance of the minimum.
fn argmin_set(set: &[usize], key: impl Fn(usize) -> f64) -> (f64, Vec<usize>) {
    let best = set.iter().map(|&j| key(j)).fold(f64::INFINITY, f64::min);
    let tol = TIE_TOL * (1.0 + best.abs());
    (
        best,
        set.iter()
            .copied()
            .filter(|&j| key(j) <= best + tol)
            .collect(),
    )
}

/// Selection cascade and cubic schedule. `selected_mode` is 1-based.
pub fn cutoff_schedule_first_order(
    dec: &ModeDecomposition,
    x: &[f64],
    eps: f64,
) -> Result<CutoffSchedule> {
    dec.check_x(x)?;
    check_eps(eps)?;
    let xnorm = linalg::norm(x);
    let j0: Vec<usize> = (0..dec.dim())
        .filter(|&j| linalg::dot(x, &dec.basis[j]).abs() > OVERLAP_TOL * xnorm)
        .collect();
    if j0.is_empty() {
        return Err(Error::XOrthogonal);
    }
    let (g_min, j1) = argmin_set(&j0, |j| dec.g_coeffs[j]);
    let (b_min, j2) = argmin_set(&j1, |j| dec.b_coeffs[j]);
    let (a_min, j3) = argmin_set(&j2, |j| dec.a_tilde_coeff(j));
    let ell_max = j3.iter().map(|&j| dec.ell[j]).max().expect("non-empty");
    let j4 = *j3
        .iter()
        .find(|&&j| dec.ell[j] == ell_max)
        .expect("non-empty");

    let gamma = g_min / 2.0;
    let b = b_min / 2.0;
    let a = a_min;
    let ell_star = ell_max - 1;
    let regime = if gamma <= TIE_TOL * (1.0 + dec.gamma.frobenius_norm()) {
        Regime::NoDecay
    } else if dec.synthetic {
        Regime::Synthetic
    } else {
        Regime::FirstOrder
    };

    let mut s = CutoffSchedule::empty(regime, eps);
    s.gamma = Some(gamma);
    s.b = Some(b);
    s.a = Some(a);
    s.ell_star = Some(ell_star);
    s.selected_mode = Some(j4 + 1);
    if regime == Regime::NoDecay {
        s.diagnostic = Some(format!(
            "cubic coefficient {gamma:e} is not positive; the mean square has no cubic decay \
             (for commuting coefficients use the commutative schedule)"
        ));
        return Ok(s);
    }

    let cubic = CubicCoefficients::cutoff(gamma, b, a, eps);
    let t = cardano_unique_real(&cubic)?;
    s.t_eps = Some(t);
    s.w_eps = Some(1.0 / (t * t));
    s.big_t_eps = Some(solve_log_cubic(&cubic, ell_star as u32)?);
    if ell_star == 0 || t > 1.0 {
        let r = correction_root(t.max(1.0 + f64::EPSILON), &cubic, ell_star as u32)?;
        let r = if ell_star == 0 { 0.0 } else { r };
        s.r_eps = Some(r);
        s.tau_eps = Some(t + r);
    } else {
        s.diagnostic = Some(format!("t_eps = {t} <= 1; correction root undefined"));
    }
    Ok(s)
}

/// Values of the scalar autonomous form of `x(t) = e^{−t³−t²}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Example35 {
    pub t: f64,
    pub x: f64,
    pub g: f64,
    pub f: f64,
    /// `−(3t² + 2t) x`.
    pub dxdt: f64,
}

/// Smallest `t` accepted by [`example35_check`].
pub const EXAMPLE35_T_MIN: f64 = 0.2;

/// Inverse of `t ↦ e^{−t³−t²}` through Cardano's radicals.
///
/// For `x > e^{−4/27}` the inner square root is imaginary and the cube root
/// is taken as the principal complex one; its modulus is one there, so the
/// two radicals are conjugate.
pub fn example35_g(x: f64) -> Result<f64> {
    if !(x > 0.0 && x < 1.0) {
        return Err(Error::InvalidArgument(format!("x = {x} outside (0, 1)")));
    }
    let l = x.ln();
    let radicand = 27.0 * l * l + 4.0 * l;
    let k = 1.5 * 3f64.sqrt();
    let g = if radicand >= 0.0 {
        let s = -13.5 * l + k * radicand.sqrt() - 1.0;
        let r = s.cbrt();
        (r + 1.0 / r - 1.0) / 3.0
    } else {
        let s = Complex64::new(-13.5 * l - 1.0, k * (-radicand).sqrt());
        let r = s.powf(1.0 / 3.0);
        (r + r.inv() - 1.0).re / 3.0
    };
    Ok(g)
}

/// `f(x) = −x(3g(x)² + 2g(x))`.
pub fn example35_f(x: f64) -> Result<f64> {
    let g = example35_g(x)?;
    Ok(-x * (3.0 * g * g + 2.0 * g))
}

pub fn example35_check(t: f64) -> Result<Example35> {
    if !(t >= EXAMPLE35_T_MIN && t.is_finite()) {
        return Err(Error::BranchViolation(t));
    }
    let x = (-t * t * t - t * t).exp();
    let g = example35_g(x)?;
    Ok(Example35 {
        t,
        x,
        g,
        f: -x * (3.0 * g * g + 2.0 * g),
        dxdt: -(3.0 * t * t + 2.0 * t) * x,
    })
}
