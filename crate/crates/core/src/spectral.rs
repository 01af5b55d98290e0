//! Leading-order behaviour of `t ↦ exp(tQ) y` for Hurwitz `Q`:
//!
//! ```text
//! (e^{q t} / t^{ℓ−1}) exp(tQ) y  −  Σ_k e^{i θ_k t} v_k  →  0
//! ```
//!
//! `y` is split along the generalized eigenspaces of `Q`. Among the
//! eigenvalues that `y` actually excites, the ones with the largest real part
//! decide `q`; among those, the longest Jordan chain attained by `y` decides
//! `ℓ`. Only eigenvalues attaining that maximal chain contribute a `v_k`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{Error, Result};
use crate::linalg::{
    self, chain_threshold, is_hurwitz, spectral_components, to_complex, Complex64, Matrix,
    CLUSTER_REL_GAP,
};

/// Relative size under which a spectral component of `y` counts as absent.
pub const COMPONENT_THRESHOLD: f64 = 1e-9;

/// Number of grid points used for the `K0`/`K1` estimates.
pub const K_GRID_POINTS: usize = 10_000;

#[derive(Clone, Debug, Serialize)]
pub struct SpectralAsymptotics {
    /// Exponential decay rate.
    pub q: f64,
    /// Polynomial degree plus one.
    pub ell: usize,
    /// Oscillation frequencies, decreasing.
    pub thetas: Vec<f64>,
    /// Limit coefficient vectors, parallel to `thetas`, as `[re, im]` pairs.
    #[serde(serialize_with = "serialize_complex_vectors")]
    pub vs: Vec<Vec<Complex64>>,
    #[serde(rename = "K0")]
    pub k0: f64,
    #[serde(rename = "K1")]
    pub k1: f64,
}

fn serialize_complex_vectors<S: serde::Serializer>(
    vs: &[Vec<Complex64>],
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    let pairs: Vec<Vec<[f64; 2]>> = vs
        .iter()
        .map(|v| v.iter().map(|z| [z.re, z.im]).collect())
        .collect();
    pairs.serialize(s)
}

impl SpectralAsymptotics {
    pub fn m(&self) -> usize {
        self.thetas.len()
    }

    /// `Σ_k e^{i θ_k t} v_k`.
    pub fn limit_vector(&self, t: f64) -> Vec<Complex64> {
        let d = self.vs[0].len();
        let mut out = vec![Complex64::new(0.0, 0.0); d];
        for (theta, v) in self.thetas.iter().zip(&self.vs) {
            let phase = Complex64::from_polar(1.0, theta * t);
            for (o, c) in out.iter_mut().zip(v) {
                *o += phase * c;
            }
        }
        out
    }

    /// `|Σ_k e^{i θ_k t} v_k|`.
    pub fn limit_norm(&self, t: f64) -> f64 {
        self.limit_vector(t)
            .iter()
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Real limit vector when there is a single non-oscillating mode.
    pub fn real_limit(&self) -> Option<Vec<f64>> {
        if self.m() == 1 && self.thetas[0] == 0.0 {
            Some(self.vs[0].iter().map(|z| z.re).collect())
        } else {
            None
        }
    }

    /// Right end of the grid used for `K0`/`K1`: `200π / (smallest gap
    /// between frequencies)`.
    pub fn k_grid_span(&self) -> f64 {
        let mut gap = f64::INFINITY;
        for (i, a) in self.thetas.iter().enumerate() {
            for b in &self.thetas[i + 1..] {
                let g = (a - b).abs();
                if g > 0.0 {
                    gap = gap.min(g);
                }
            }
        }
        if gap.is_finite() {
            200.0 * std::f64::consts::PI / gap
        } else {
            0.0
        }
    }

    /// `‖(e^{qt}/t^{ℓ−1}) exp(tQ) y − Σ_k e^{iθ_k t} v_k‖`.
    pub fn normalized_residual(&self, q_matrix: &Matrix, y: &[f64], t: f64) -> f64 {
        let z = linalg::exp_apply(&q_matrix.scale(t), y);
        let factor = (self.q * t).exp() / t.powi(self.ell as i32 - 1);
        self.limit_vector(t)
            .iter()
            .zip(&z)
            .map(|(l, zi)| (Complex64::new(zi * factor, 0.0) - l).norm_sqr())
            .sum::<f64>()
            .sqrt()
    }
}

/// Leading asymptotic parameters of `exp(tQ) y`.
pub fn extract_asymptotics(
    q_matrix: &Matrix,
    y: &[f64],
    margin: f64,
) -> Result<SpectralAsymptotics> {
    let d = q_matrix.dim();
    if y.len() != d {
        return Err(Error::DimMismatch(format!(
            "vector of length {} for dimension {d}",
            y.len()
        )));
    }
    let ynorm = linalg::norm(y);
    if ynorm == 0.0 {
        return Err(Error::ZeroVector);
    }
    if !is_hurwitz(q_matrix, margin)? {
        return Err(Error::NotStable(linalg::spectral_abscissa(q_matrix)?));
    }

    let comps = spectral_components(q_matrix)?;
    let all = DMatrix::from_columns(
        &comps
            .iter()
            .flat_map(|c| c.basis.column_iter().map(|col| col.into_owned()))
            .collect::<Vec<_>>(),
    );
    let yc = DVector::from_iterator(d, y.iter().map(|&v| Complex64::new(v, 0.0)));
    let coeffs = all.lu().solve(&yc).ok_or(Error::EigFailure)?;

    let qc = to_complex(q_matrix.as_dmatrix());
    let qnorm = q_matrix.frobenius_norm();

    struct Part {
        lambda: Complex64,
        u: DVector<Complex64>,
        height: usize,
    }
    let mut parts = Vec::new();
    let mut offset = 0;
    for c in &comps {
        let u = &c.basis * coeffs.rows(offset, c.multiplicity);
        offset += c.multiplicity;
        let unorm = u.norm();
        if unorm <= COMPONENT_THRESHOLD * ynorm {
            continue;
        }
        let shifted = &qc - DMatrix::<Complex64>::identity(d, d) * c.eigenvalue;
        let mut height = 1;
        let mut chain = &shifted * &u;
        while height < c.multiplicity && chain.norm() > chain_threshold(qnorm, height) * unorm {
            chain = &shifted * chain;
            height += 1;
        }
        parts.push(Part {
            lambda: c.eigenvalue,
            u,
            height,
        });
    }
    if parts.is_empty() {
        return Err(Error::ZeroVector);
    }

    let top = parts
        .iter()
        .map(|p| p.lambda.re)
        .fold(f64::NEG_INFINITY, f64::max);
    let q = -top;
    let leading: Vec<&Part> = parts
        .iter()
        .filter(|p| (p.lambda.re - top).abs() <= CLUSTER_REL_GAP * q.max(1.0))
        .collect();
    let ell = leading.iter().map(|p| p.height).max().unwrap_or(1);

    let mut modes: Vec<(f64, Vec<Complex64>)> = Vec::new();
    for p in leading.iter().filter(|p| p.height == ell) {
        let shifted = &qc - DMatrix::<Complex64>::identity(d, d) * p.lambda;
        let mut v = p.u.clone();
        let mut factorial = 1.0;
        for k in 1..ell {
            v = &shifted * v;
            factorial *= k as f64;
        }
        v /= Complex64::new(factorial, 0.0);
        modes.push((p.lambda.im, v.iter().copied().collect()));
    }
    modes.sort_by(|a, b| b.0.total_cmp(&a.0));
    // exactly real eigenvalues report a real, zero-frequency mode
    for (theta, v) in modes.iter_mut() {
        if theta.abs() <= CLUSTER_REL_GAP * q.max(1.0) {
            *theta = 0.0;
            v.iter_mut().for_each(|z| z.im = 0.0);
        }
    }

    let (thetas, vs): (Vec<f64>, Vec<Vec<Complex64>>) = modes.into_iter().unzip();
    let mut out = SpectralAsymptotics {
        q,
        ell,
        thetas,
        vs,
        k0: 0.0,
        k1: 0.0,
    };
    let (k0, k1) = limit_norm_bounds(&out);
    out.k0 = k0;
    out.k1 = k1;
    Ok(out)
}

/// Min and max of `|Σ_k e^{iθ_k t} v_k|` over `[0, k_grid_span]`: a uniform
/// grid followed by golden-section refinement around the best grid points.
fn limit_norm_bounds(asym: &SpectralAsymptotics) -> (f64, f64) {
    if asym.m() == 1 {
        let n = asym.limit_norm(0.0);
        return (n, n);
    }
    let span = asym.k_grid_span();
    let h = span / (K_GRID_POINTS - 1) as f64;
    let samples: Vec<(f64, f64)> = (0..K_GRID_POINTS)
        .map(|i| {
            let t = i as f64 * h;
            (t, asym.limit_norm(t))
        })
        .collect();

    let mut by_value: Vec<usize> = (0..samples.len()).collect();
    by_value.sort_by(|&i, &j| samples[i].1.total_cmp(&samples[j].1));
    let refine = |idx: usize, sign: f64| {
        let (t, _) = samples[idx];
        let lo = (t - h).max(0.0);
        let hi = (t + h).min(span);
        let best = golden_section(|s| sign * asym.limit_norm(s), lo, hi);
        asym.limit_norm(best)
    };
    let candidates = 8.min(by_value.len());
    let k0 = by_value[..candidates]
        .iter()
        .map(|&i| refine(i, 1.0))
        .fold(f64::INFINITY, f64::min)
        .min(samples[by_value[0]].1);
    let k1 = by_value[by_value.len() - candidates..]
        .iter()
        .map(|&i| refine(i, -1.0))
        .fold(f64::NEG_INFINITY, f64::max)
        .max(samples[*by_value.last().unwrap()].1);
    (k0, k1)
}

/// Minimizer of a unimodal function on `[lo, hi]`.
fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let r = (5f64.sqrt() - 1.0) / 2.0;
    let mut c = hi - r * (hi - lo);
    let mut d = lo + r * (hi - lo);
    let (mut fc, mut fd) = (f(c), f(d));
    for _ in 0..200 {
        if hi - lo <= 1e-13 * (1.0 + hi.abs()) {
            break;
        }
        if fc < fd {
            hi = d;
            d = c;
            fd = fc;
            c = hi - r * (hi - lo);
            fc = f(c);
        } else {
            lo = c;
            c = d;
            fc = fd;
            d = lo + r * (hi - lo);
            fd = f(d);
        }
    }
    0.5 * (lo + hi)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn re(v: &[Complex64]) -> Vec<f64> {
        v.iter().map(|z| z.re).collect()
    }

    #[test]
    fn slowest_mode_dominates() {
        let a = extract_asymptotics(&Matrix::diag(&[-1.0, -2.0]), &[1.0, 1.0], 0.0).unwrap();
        assert!((a.q - 1.0).abs() < 1e-14);
        assert_eq!(a.ell, 1);
        assert_eq!(a.m(), 1);
        let v = re(&a.vs[0]);
        assert!((v[0] - 1.0).abs() < 1e-12 && v[1].abs() < 1e-12);
        assert!((a.k0 - 1.0).abs() < 1e-12 && (a.k1 - 1.0).abs() < 1e-12);
        assert_eq!(a.real_limit().unwrap().len(), 2);
    }

    #[test]
    fn jordan_block_gives_polynomial_factor() {
        let q = Matrix::from_rows(&[[-1.0, 1.0], [0.0, -1.0]]).unwrap();
        let a = extract_asymptotics(&q, &[0.0, 1.0], 0.0).unwrap();
        assert!((a.q - 1.0).abs() < 1e-12);
        assert_eq!(a.ell, 2);
        let v = re(&a.vs[0]);
        assert!((v[0] - 1.0).abs() < 1e-9 && v[1].abs() < 1e-9, "{v:?}");
        // the eigenvector direction only attains a chain of height one
        let a = extract_asymptotics(&q, &[1.0, 0.0], 0.0).unwrap();
        assert_eq!(a.ell, 1);
    }

    #[test]
    fn rotation_has_constant_modulus() {
        let q = Matrix::from_rows(&[[-1.0, 2.0], [-2.0, -1.0]]).unwrap();
        let a = extract_asymptotics(&q, &[1.0, 0.0], 0.0).unwrap();
        assert!((a.q - 1.0).abs() < 1e-12);
        assert_eq!(a.ell, 1);
        assert_eq!(a.m(), 2);
        assert!((a.thetas[0] - 2.0).abs() < 1e-12 && (a.thetas[1] + 2.0).abs() < 1e-12);
        assert!((a.k0 - 1.0).abs() < 1e-9 && (a.k1 - 1.0).abs() < 1e-9);
        assert!(a.real_limit().is_none());
        assert!(a.normalized_residual(&q, &[1.0, 0.0], 50.0) < 1e-9);
    }

    #[test]
    fn errors() {
        let q = Matrix::diag(&[-1.0, 0.5]);
        assert_eq!(
            extract_asymptotics(&q, &[1.0, 0.0], 0.0)
                .unwrap_err()
                .code(),
            "not_stable"
        );
        let q = Matrix::diag(&[-1.0, -0.5]);
        assert_eq!(
            extract_asymptotics(&q, &[0.0, 0.0], 0.0)
                .unwrap_err()
                .code(),
            "zero_vector"
        );
        assert_eq!(
            extract_asymptotics(&q, &[1.0], 0.0).unwrap_err().code(),
            "dim_mismatch"
        );
    }

    #[test]
    fn unexcited_modes_are_ignored() {
        let a = extract_asymptotics(&Matrix::diag(&[-1.0, -2.0]), &[0.0, 3.0], 0.0).unwrap();
        assert!((a.q - 2.0).abs() < 1e-14);
        assert!((a.k0 - 3.0).abs() < 1e-12);
    }

    #[test]
    fn two_frequency_bounds_match_closed_form() {
        // |Σ| = |2 Re(v e^{iθt})| is sinusoidal in its square: extremes
        // 2|v|² ± 2|vᵀv| for a conjugate pair.
        let q = Matrix::from_rows(&[[-1.0, 3.0], [-1.0, -1.0]]).unwrap();
        let a = extract_asymptotics(&q, &[1.0, 0.5], 0.0).unwrap();
        assert_eq!(a.m(), 2);
        let v = &a.vs[0];
        let herm: f64 = v.iter().map(|z| z.norm_sqr()).sum();
        let bil: Complex64 = v.iter().map(|z| z * z).sum();
        let k1 = (2.0 * herm + 2.0 * bil.norm()).sqrt();
        let k0 = (2.0 * herm - 2.0 * bil.norm()).sqrt();
        assert!((a.k1 - k1).abs() < 1e-9, "{} vs {k1}", a.k1);
        assert!((a.k0 - k0).abs() < 1e-9, "{} vs {k0}", a.k0);
    }
}
