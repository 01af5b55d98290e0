//! Real roots of the cutoff cubics.
//!
//! The closed forms go through the depressed cubic `s³ + p s + q = 0`
//! (`t = s − c2/(3 c3)`) and Cardano's radicals, followed by Newton polishing.
//! Cubics with three distinct real roots are refused instead of guessed.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Residual bound promised for every returned root, relative to `1 + |c0|`.
pub const ROOT_RESIDUAL: f64 = 1e-9;

/// Relative size under which the cubic discriminant counts as zero.
const DISCRIMINANT_TOL: f64 = 1e-12;

/// `c3 t³ + c2 t² + c1 t + c0`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct CubicCoefficients {
    pub c3: f64,
    pub c2: f64,
    pub c1: f64,
    pub c0: f64,
}

impl CubicCoefficients {
    pub fn new(c3: f64, c2: f64, c1: f64, c0: f64) -> Self {
        CubicCoefficients { c3, c2, c1, c0 }
    }

    /// `γ t³ + b t² + a t + ln ε`.
    pub fn cutoff(gamma: f64, b: f64, a: f64, eps: f64) -> Self {
        Self::new(gamma, b, a, eps.ln())
    }

    pub fn eval(&self, t: f64) -> f64 {
        ((self.c3 * t + self.c2) * t + self.c1) * t + self.c0
    }

    pub fn derivative(&self, t: f64) -> f64 {
        (3.0 * self.c3 * t + 2.0 * self.c2) * t + self.c1
    }

    pub fn residual_bound(&self) -> f64 {
        ROOT_RESIDUAL * (1.0 + self.c0.abs())
    }

    /// `(p, q)` of the depressed cubic `s³ + p s + q`.
    pub fn depressed(&self) -> (f64, f64) {
        let a2 = self.c2 / self.c3;
        let a1 = self.c1 / self.c3;
        let a0 = self.c0 / self.c3;
        let p = a1 - a2 * a2 / 3.0;
        let q = 2.0 * a2 * a2 * a2 / 27.0 - a2 * a1 / 3.0 + a0;
        (p, q)
    }

    fn check_finite(&self) -> Result<()> {
        if [self.c3, self.c2, self.c1, self.c0]
            .iter()
            .all(|c| c.is_finite())
        {
            Ok(())
        } else {
            Err(Error::NonFinite(format!("cubic coefficients {self:?}")))
        }
    }
}

/// Real root of `s³ + p s + q` when it is the only one.
///
/// The radicand sign is chosen so the two cube roots never cancel; the
/// second one follows from `u v = −p/3`.
fn depressed_unique_root(p: f64, q: f64) -> Result<f64> {
    let half_q = q / 2.0;
    let third_p = p / 3.0;
    let disc = half_q * half_q + third_p * third_p * third_p;
    let scale = half_q * half_q + third_p.abs().powi(3);
    if disc < -DISCRIMINANT_TOL * scale {
        return Err(Error::AmbiguousRoots);
    }
    if disc.abs() <= DISCRIMINANT_TOL * scale {
        // triple root when p vanishes, otherwise a double root next to a
        // simple one
        if third_p.abs() <= 1e-8 * (1.0 + half_q.abs().cbrt()) {
            return Ok((-q).cbrt());
        }
        return Err(Error::AmbiguousRoots);
    }
    let root = disc.sqrt();
    let u = (-half_q - half_q.signum() * root).cbrt();
    let v = if u != 0.0 {
        -third_p / u
    } else {
        (-half_q + root).cbrt()
    };
    Ok(u + v)
}

/// Newton steps while they keep reducing the residual.
fn polish(c: &CubicCoefficients, mut t: f64) -> f64 {
    let mut r = c.eval(t).abs();
    for _ in 0..8 {
        let d = c.derivative(t);
        if d == 0.0 || r == 0.0 {
            break;
        }
        let next = t - c.eval(t) / d;
        let rn = c.eval(next).abs();
        if rn < r {
            t = next;
            r = rn;
        } else {
            break;
        }
    }
    t
}

/// Lower-degree fallback for `c3 = 0`: the linear root, or the unique
/// positive root of the quadratic.
fn lower_degree_root(c: &CubicCoefficients) -> Result<f64> {
    let (a, b, k) = (c.c2, c.c1, c.c0);
    if a == 0.0 {
        if b == 0.0 {
            return Err(Error::NoRealRoot);
        }
        return Ok(-k / b);
    }
    let disc = b * b - 4.0 * a * k;
    if disc < 0.0 {
        return Err(Error::NoRealRoot);
    }
    if disc == 0.0 {
        return Ok(-b / (2.0 * a));
    }
    let q = -0.5 * (b + b.signum() * disc.sqrt());
    let (r1, r2) = (q / a, if q != 0.0 { k / q } else { 0.0 });
    match (r1 > 0.0, r2 > 0.0) {
        (true, false) => Ok(r1),
        (false, true) => Ok(r2),
        _ => Err(Error::AmbiguousRoots),
    }
}

/// The unique real root of a cubic by Cardano's formula.
pub fn cardano_unique_real(c: &CubicCoefficients) -> Result<f64> {
    c.check_finite()?;
    if c.c3 == 0.0 {
        return lower_degree_root(c);
    }
    let (p, q) = c.depressed();
    let s = depressed_unique_root(p, q)?;
    Ok(polish(c, s - c.c2 / (3.0 * c.c3)))
}

/// Root of `c3 T³ + c2 T² + c1 T − ℓ* ln T + c0 = 0` beyond the turning
/// region, bracketed in `[t/2, 4t]` around the Cardano root `t` of the
/// log-free cubic.
pub fn solve_log_cubic(c: &CubicCoefficients, ell_star: u32) -> Result<f64> {
    if ell_star == 0 {
        return cardano_unique_real(c);
    }
    if !(c.c3 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "leading coefficient {} <= 0",
            c.c3
        )));
    }
    let t0 = cardano_unique_real(c)?;
    let (mut lo, mut hi) = (t0 / 2.0, 4.0 * t0);
    if !(lo > 0.0) {
        return Err(Error::BracketFailure(lo, hi));
    }
    let l = ell_star as f64;
    let f = |t: f64| c.eval(t) - l * t.ln();
    let df = |t: f64| c.derivative(t) - l / t;
    let (flo, fhi) = (f(lo), f(hi));
    if flo.signum() == fhi.signum() {
        return Err(Error::BracketFailure(lo, hi));
    }
    let rising = fhi > 0.0;
    let mut t = t0.clamp(lo, hi);
    for _ in 0..200 {
        let ft = f(t);
        if ft == 0.0 {
            return Ok(t);
        }
        if (ft > 0.0) == rising {
            hi = t;
        } else {
            lo = t;
        }
        let d = df(t);
        let newton = t - ft / d;
        let next = if d != 0.0 && newton > lo && newton < hi {
            newton
        } else {
            0.5 * (lo + hi)
        };
        if (next - t).abs() <= 4.0 * f64::EPSILON * t.abs() || hi - lo <= 4.0 * f64::EPSILON * hi {
            return Ok(next);
        }
        t = next;
    }
    Ok(t)
}

/// Coefficients of the correction cubic
/// `γ r³ + (3γt + b) r² + (3γt² + 2bt + a) r − ℓ* ln t = 0`
/// around a root `t` of `γ t³ + b t² + a t + ln ε`.
pub fn correction_cubic(t_eps: f64, c: &CubicCoefficients, ell_star: u32) -> CubicCoefficients {
    let (g, b, a) = (c.c3, c.c2, c.c1);
    CubicCoefficients::new(
        g,
        3.0 * g * t_eps + b,
        3.0 * g * t_eps * t_eps + 2.0 * b * t_eps + a,
        -(ell_star as f64) * t_eps.ln(),
    )
}

/// `r_ε` such that `τ_ε = t_ε + r_ε` tracks the root of the log-corrected
/// equation.
pub fn correction_root(t_eps: f64, c: &CubicCoefficients, ell_star: u32) -> Result<f64> {
    if !(t_eps > 1.0) {
        return Err(Error::InvalidArgument(format!("t_eps {t_eps} <= 1")));
    }
    if !(c.c3 > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "leading coefficient {} <= 0",
            c.c3
        )));
    }
    if ell_star == 0 {
        return Ok(0.0);
    }
    cardano_unique_real(&correction_cubic(t_eps, c, ell_star))
}
