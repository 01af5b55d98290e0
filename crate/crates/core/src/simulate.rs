//! Monte Carlo estimates of `E|X_t|²`.
//!
//! Path `i` of a run with seed `s` draws from ChaCha8 stream `i` of key `s`,
//! so every path is reproducible on its own and the estimate does not depend
//! on how paths are spread over threads. Per-path values are collected in
//! index order and reduced with compensated summation.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, commutator, Matrix};
use crate::system::GbmSystem;

pub const DEFAULT_PATHS: usize = 100_000;
pub const DEFAULT_DT: f64 = 1e-3;
pub const MIN_PATHS: usize = 100;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scheme {
    /// `exp(tA + W_t B) x`, valid when `[A, B] = O`.
    ExactCommutative,
    /// `exp(tA + W_t B + (½tW_t − ∫W) C) x` with `C = [B, A]`, valid when `C`
    /// commutes with `A` and `B`.
    ExactFirstOrder,
    EulerMaruyama,
    /// Exponential of the truncated Magnus exponent built from path functionals.
    MagnusTruncated,
}

impl Scheme {
    pub const ALL: [Scheme; 4] = [
        Scheme::ExactCommutative,
        Scheme::ExactFirstOrder,
        Scheme::EulerMaruyama,
        Scheme::MagnusTruncated,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::ExactCommutative => "exact_commutative",
            Scheme::ExactFirstOrder => "exact_first_order",
            Scheme::EulerMaruyama => "euler_maruyama",
            Scheme::MagnusTruncated => "magnus_truncated",
        }
    }

    /// Whether the scheme walks the path in steps of `dt`.
    pub fn uses_steps(self) -> bool {
        matches!(self, Scheme::EulerMaruyama | Scheme::MagnusTruncated)
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|sc| sc.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown scheme {s:?}")))
    }
}

/// Generator for path `index` of a run keyed by `seed`.
pub fn path_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

fn normal(rng: &mut ChaCha8Rng) -> f64 {
    rng.sample(StandardNormal)
}

/// Neumaier's compensated sum.
pub fn compensated_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for v in values {
        let t = sum + v;
        if sum.abs() >= v.abs() {
            comp += (sum - t) + v;
        } else {
            comp += (v - t) + sum;
        }
        sum = t;
    }
    sum + comp
}

/// Sample mean and its standard error (sample standard deviation over `√n`).
pub fn mean_and_error(values: &[f64]) -> (f64, f64) {
    let n = values.len() as f64;
    let mean = compensated_sum(values.iter().copied()) / n;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let ss = compensated_sum(values.iter().map(|v| (v - mean) * (v - mean)));
    (mean, (ss / (n - 1.0)).sqrt() / n.sqrt())
}

/// `(W_t, ∫₀ᵗ W_s ds)` from one draw of their joint normal law, via the
/// Cholesky factor of `[[t, t²/2], [t²/2, t³/3]]`.
pub fn gaussian_pair(t: f64, rng: &mut ChaCha8Rng) -> (f64, f64) {
    let z1 = normal(rng);
    let z2 = normal(rng);
    let w = t.sqrt() * z1;
    let i = t.powf(1.5) * (0.5 * z1 + z2 / 12f64.sqrt());
    (w, i)
}

pub fn sample_gaussian_pair(t: f64, seed: u64, index: u64) -> Result<(f64, f64)> {
    check_time(t)?;
    if t == 0.0 {
        return Err(Error::InvalidArgument("t must be positive".into()));
    }
    Ok(gaussian_pair(t, &mut path_rng(seed, index)))
}

fn check_time(t: f64) -> Result<()> {
    if t >= 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!("time {t}")))
    }
}

/// Number of steps of size `dt` covering `[0, t]`; `t/dt` must be an
/// integer up to rounding.
pub fn step_count(t: f64, dt: f64) -> Result<usize> {
    if !(dt > 0.0 && dt.is_finite()) || dt > t {
        return Err(Error::InvalidArgument(format!("dt {dt} for t {t}")));
    }
    let n = (t / dt).round();
    if (n * dt - t).abs() > 1e-9 * t {
        return Err(Error::InvalidArgument(format!(
            "t/dt = {} is not an integer",
            t / dt
        )));
    }
    Ok(n as usize)
}

/// Left-endpoint Riemann sums of a Brownian path on `[0, t]`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct PathFunctionals {
    pub t: f64,
    /// `W_t`.
    pub w: f64,
    /// `∫₀ᵗ W_s ds`.
    pub int_w: f64,
    /// `∫₀ᵗ W_s² ds`.
    pub int_w2: f64,
    /// `∫₀ᵗ s W_s ds`.
    pub int_sw: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct BrownianPath {
    pub dt: f64,
    pub increments: Vec<f64>,
}

impl BrownianPath {
    pub fn sample(n_steps: usize, dt: f64, rng: &mut ChaCha8Rng) -> Self {
        let sd = dt.sqrt();
        let increments = (0..n_steps).map(|_| sd * normal(rng)).collect();
        BrownianPath { dt, increments }
    }

    pub fn t(&self) -> f64 {
        self.increments.len() as f64 * self.dt
    }

    pub fn functionals(&self) -> PathFunctionals {
        let dt = self.dt;
        let (mut w, mut int_w, mut int_w2, mut int_sw) = (0.0, 0.0, 0.0, 0.0);
        for (k, dw) in self.increments.iter().enumerate() {
            let s = k as f64 * dt;
            int_w += w * dt;
            int_w2 += w * w * dt;
            int_sw += s * w * dt;
            w += dw;
        }
        PathFunctionals {
            t: self.t(),
            w,
            int_w,
            int_w2,
            int_sw,
        }
    }
}

/// Truncated Magnus exponent, with `D = A + ½B²`:
///
/// ```text
/// D t + B W_t + [B, D](½tW_t − ∫W) − ½B²t
///   + [[D, B], B](½∫W² − ½W_t∫W + ½tW_t²)
///   + [[D, B], D](∫sW − ½t∫W − t²W_t/12)
/// ```
pub fn magnus_exponent(sys: &GbmSystem, f: &PathFunctionals) -> Matrix {
    let (a, b) = (sys.a(), sys.b());
    let b2 = b * b;
    let d = a + &b2.scale(0.5);
    let br = |u: &Matrix, v: &Matrix| commutator(u, v).expect("same dimension");
    let db = br(&d, b);
    let (t, w, iw) = (f.t, f.w, f.int_w);
    let terms = [
        d.scale(t),
        b.scale(w),
        br(b, &d).scale(0.5 * t * w - iw),
        b2.scale(-0.5 * t),
        br(&db, b).scale(0.5 * f.int_w2 - 0.5 * w * iw + 0.5 * t * w * w),
        br(&db, &d).scale(f.int_sw - 0.5 * t * iw - t * t * w / 12.0),
    ];
    let mut y = Matrix::zeros(a.dim());
    for term in &terms {
        y = &y + term;
    }
    y
}

/// `tA + W_t B + (½tW_t − ∫W) C`, `C = [B, A]`.
pub fn first_order_exponent(sys: &GbmSystem, t: f64, w: f64, int_w: f64) -> Matrix {
    let c = sys.bracket_ba();
    let y = &sys.a().scale(t) + &sys.b().scale(w);
    &y + &c.scale(0.5 * t * w - int_w)
}

fn relative_bracket(u: &Matrix, v: &Matrix) -> f64 {
    let raw = commutator(u, v).expect("same dimension").frobenius_norm();
    let scale = u.frobenius_norm() * v.frobenius_norm();
    if scale > 0.0 {
        raw / scale
    } else {
        0.0
    }
}

/// Draws `X_t` for one scheme, after checking once that the scheme is valid
/// for the system.
#[derive(Clone, Debug)]
pub struct PathSampler {
    sys: GbmSystem,
    scheme: Scheme,
    t: f64,
    dt: f64,
    n_steps: usize,
    drift: DMatrix<f64>,
    noise: DMatrix<f64>,
}

impl PathSampler {
    pub fn new(sys: &GbmSystem, scheme: Scheme, t: f64, dt: f64) -> Result<Self> {
        check_time(t)?;
        let n_steps = if scheme.uses_steps() && t > 0.0 {
            step_count(t, dt)?
        } else {
            0
        };
        let tol = sys.tol();
        match scheme {
            Scheme::ExactCommutative => {
                let r = relative_bracket(sys.a(), sys.b());
                if r > tol {
                    return Err(Error::RepresentationInvalid(format!(
                        "[A, B] relative residual {r:e}"
                    )));
                }
            }
            Scheme::ExactFirstOrder => {
                let c = sys.bracket_ba();
                let r = relative_bracket(sys.a(), &c).max(relative_bracket(sys.b(), &c));
                if r > tol {
                    return Err(Error::RepresentationInvalid(format!(
                        "[A, C], [B, C] relative residual {r:e}"
                    )));
                }
            }
            Scheme::EulerMaruyama | Scheme::MagnusTruncated => {}
        }
        let b = sys.b().as_dmatrix().clone();
        let drift = sys.a().as_dmatrix() + &b * &b * 0.5;
        Ok(PathSampler {
            sys: sys.clone(),
            scheme,
            t,
            dt,
            n_steps,
            drift,
            noise: b,
        })
    }

    pub fn scheme(&self) -> Scheme {
        self.scheme
    }

    /// `X_t` along path `index`.
    pub fn sample(&self, seed: u64, index: u64) -> Vec<f64> {
        let x = self.sys.x();
        if self.t == 0.0 {
            return x.to_vec();
        }
        let mut rng = path_rng(seed, index);
        match self.scheme {
            Scheme::ExactCommutative => {
                let w = self.t.sqrt() * normal(&mut rng);
                let y = &self.sys.a().scale(self.t) + &self.sys.b().scale(w);
                linalg::exp_apply(&y, x)
            }
            Scheme::ExactFirstOrder => {
                let (w, iw) = gaussian_pair(self.t, &mut rng);
                linalg::exp_apply(&first_order_exponent(&self.sys, self.t, w, iw), x)
            }
            Scheme::EulerMaruyama => self.euler_maruyama(&mut rng),
            Scheme::MagnusTruncated => {
                let path = BrownianPath::sample(self.n_steps, self.dt, &mut rng);
                linalg::exp_apply(&magnus_exponent(&self.sys, &path.functionals()), x)
            }
        }
    }

    fn euler_maruyama(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let sd = self.dt.sqrt();
        let mut x = DVector::from_column_slice(self.sys.x());
        let mut dx = DVector::zeros(x.len());
        let mut bx = DVector::zeros(x.len());
        for _ in 0..self.n_steps {
            let dw = sd * normal(rng);
            dx.gemv(self.dt, &self.drift, &x, 0.0);
            bx.gemv(dw, &self.noise, &x, 0.0);
            x += &dx;
            x += &bx;
        }
        x.iter().copied().collect()
    }
}

pub fn sample_exact_first_order(
    sys: &GbmSystem,
    t: f64,
    seed: u64,
    index: u64,
) -> Result<Vec<f64>> {
    Ok(PathSampler::new(sys, Scheme::ExactFirstOrder, t, 0.0)?.sample(seed, index))
}

pub fn euler_maruyama(sys: &GbmSystem, t: f64, dt: f64, seed: u64, index: u64) -> Result<Vec<f64>> {
    Ok(PathSampler::new(sys, Scheme::EulerMaruyama, t, dt)?.sample(seed, index))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct MCEstimate {
    pub value: f64,
    pub std_error: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub scheme: Scheme,
    pub t: f64,
}

impl MCEstimate {
    /// `|self − reference| / SE`; infinite when the SE vanishes and the values differ.
    pub fn z_score(&self, reference: f64) -> f64 {
        let diff = (self.value - reference).abs();
        if diff == 0.0 {
            0.0
        } else {
            diff / self.std_error
        }
    }
}

fn check_paths(n_paths: usize) -> Result<()> {
    if n_paths < MIN_PATHS {
        return Err(Error::InvalidArgument(format!(
            "n_paths {n_paths} < {MIN_PATHS}"
        )));
    }
    Ok(())
}

/// Mean of `|X_t|²` over paths `0..n_paths`.
pub fn estimate_mean_square(
    sys: &GbmSystem,
    t: f64,
    scheme: Scheme,
    n_paths: usize,
    dt: f64,
    seed: u64,
) -> Result<MCEstimate> {
    check_paths(n_paths)?;
    let sampler = PathSampler::new(sys, scheme, t, dt)?;
    let (value, std_error) = if t == 0.0 {
        (linalg::dot(sys.x(), sys.x()), 0.0)
    } else {
        let values: Vec<f64> = (0..n_paths as u64)
            .into_par_iter()
            .map(|i| {
                let x = sampler.sample(seed, i);
                linalg::dot(&x, &x)
            })
            .collect();
        mean_and_error(&values)
    };
    Ok(MCEstimate {
        value,
        std_error,
        n_paths,
        seed,
        scheme,
        t,
    })
}

/// One entry of a Gaussian exponential moment estimate.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MomentEstimate {
    pub value: f64,
    pub std_error: f64,
    pub closed_form: f64,
}

/// Entrywise `E exp(∫₀ᵗ (μ − (t − s)ν) dW_s) = E exp(μW_t − ν∫W)` for
/// diagonal `B̂ = diag(μ)`, `Ĉ = diag(ν)`, against
/// `exp(tμ²/2 − t²μν/2 + t³ν²/6)`.
pub fn gaussian_moment_estimate(
    mu: &[f64],
    nu: &[f64],
    t: f64,
    n_draws: usize,
    seed: u64,
) -> Result<Vec<MomentEstimate>> {
    if mu.len() != nu.len() {
        return Err(Error::DimMismatch(format!("{} vs {}", mu.len(), nu.len())));
    }
    check_paths(n_draws)?;
    if !(t > 0.0 && t.is_finite()) {
        return Err(Error::InvalidArgument(format!("time {t}")));
    }
    let pairs: Vec<(f64, f64)> = (0..n_draws as u64)
        .into_par_iter()
        .map(|i| gaussian_pair(t, &mut path_rng(seed, i)))
        .collect();
    Ok(mu
        .iter()
        .zip(nu)
        .map(|(&m, &n)| {
            let values: Vec<f64> = pairs.iter().map(|(w, iw)| (m * w - n * iw).exp()).collect();
            let (value, std_error) = mean_and_error(&values);
            let closed_form =
                (t * m * m / 2.0 - t * t * m * n / 2.0 + t * t * t * n * n / 6.0).exp();
            MomentEstimate {
                value,
                std_error,
                closed_form,
            }
        })
        .collect())
}
