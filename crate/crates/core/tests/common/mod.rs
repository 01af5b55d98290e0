#![allow(dead_code)]

use gbm_cutoff::noncommutative::SyntheticSystem;
use gbm_cutoff::{GbmSystem, Matrix};

pub fn scalar() -> GbmSystem {
    GbmSystem::scalar(-1.0, 0.5, 1.0).unwrap()
}

pub fn diagonal_2d() -> GbmSystem {
    GbmSystem::new(
        Matrix::diag(&[-2.0, -3.0]),
        Matrix::diag(&[1.0, 0.5]),
        vec![1.0, 1.0],
    )
    .unwrap()
}

pub fn heisenberg() -> GbmSystem {
    GbmSystem::new(
        Matrix::elementary(3, 1, 2),
        Matrix::elementary(3, 0, 1),
        vec![0.0, 0.0, 1.0],
    )
    .unwrap()
}

/// Commuting pairs with normal noise.
pub fn commutative_suite() -> Vec<(&'static str, GbmSystem)> {
    let skew = Matrix::from_rows(&[[0.0, 0.8], [-0.8, 0.0]]).unwrap();
    let rot = Matrix::from_rows(&[[-1.0, 2.0], [-2.0, -1.0]]).unwrap();
    vec![
        ("scalar", scalar()),
        ("diagonal_2d", diagonal_2d()),
        (
            "skew_noise",
            GbmSystem::new(Matrix::identity(2).scale(-0.5), skew, vec![1.0, -2.0]).unwrap(),
        ),
        (
            "rotation_drift",
            GbmSystem::new(rot, Matrix::identity(2).scale(0.3), vec![0.5, 1.0]).unwrap(),
        ),
        (
            "diagonal_3d",
            GbmSystem::new(
                Matrix::diag(&[-1.0, -0.5, -2.0]),
                Matrix::diag(&[0.2, -0.4, 0.9]),
                vec![1.0, 1.0, 1.0],
            )
            .unwrap(),
        ),
    ]
}

fn rotation(theta: f64) -> Matrix {
    let (s, c) = theta.sin_cos();
    Matrix::from_rows(&[[c, -s], [s, c]]).unwrap()
}

fn conjugate(r: &Matrix, m: &Matrix) -> Matrix {
    &(r * m) * &r.transpose()
}

pub fn synthetic_diagonal() -> SyntheticSystem {
    SyntheticSystem::new(
        Matrix::diag(&[0.2, 0.4]),
        Matrix::diag(&[0.3, 0.1]),
        Matrix::diag(&[-0.6, -1.2]),
        Matrix::diag(&[-1.0, -2.0]),
        vec![1.0, 1.0],
    )
    .unwrap()
}

/// Mode-level inputs with cubic decay.
pub fn synthetic_suite() -> Vec<(&'static str, SyntheticSystem)> {
    let d = synthetic_diagonal();
    let r = rotation(0.7);
    let rotated = SyntheticSystem::new(
        conjugate(&r, &d.alpha),
        conjugate(&r, &d.beta),
        conjugate(&r, &d.gamma),
        conjugate(&r, &d.a),
        r.apply(&d.x),
    )
    .unwrap();
    let jordan = SyntheticSystem::new(
        Matrix::diag(&[0.1, 0.1, 0.3]),
        Matrix::diag(&[0.2, 0.2, 0.1]),
        Matrix::diag(&[-0.5, -0.5, -1.0]),
        Matrix::from_rows(&[[-1.0, 1.0, 0.0], [0.0, -1.0, 0.0], [0.0, 0.0, -2.0]]).unwrap(),
        vec![1.0, 1.0, 1.0],
    )
    .unwrap();
    let unstable_drift = SyntheticSystem::new(
        Matrix::diag(&[0.2, 0.4]),
        Matrix::diag(&[0.3, 0.1]),
        Matrix::diag(&[-0.6, -1.2]),
        Matrix::diag(&[0.1, -1.0]),
        vec![1.0, 1.0],
    )
    .unwrap();
    vec![
        ("diagonal", d),
        ("rotated", rotated),
        ("jordan", jordan),
        ("unstable_drift", unstable_drift),
    ]
}

/// Bisection on a sign-changing bracket.
pub fn bisect(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64) -> f64 {
    let flo = f(lo);
    assert!(
        flo.signum() != f(hi).signum(),
        "no sign change on [{lo}, {hi}]"
    );
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if f(mid).signum() == flo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Bisection for the positive root of an increasing-at-infinity function with
/// `f(0) < 0`, growing the right end until the sign changes.
pub fn positive_root(f: impl Fn(f64) -> f64) -> f64 {
    let mut hi = 1.0;
    while f(hi) < 0.0 {
        hi *= 2.0;
    }
    bisect(f, 0.0, hi)
}
