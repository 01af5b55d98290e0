//! Which bracket conditions a pair `(A, B)` satisfies.
//!
//! Every condition is a Frobenius norm of a (nested) commutator. Booleans are
//! decided on the relative residual: the raw norm divided by the product of
//! the norms of the leaves of the bracket (`‖A‖² ‖B‖` for `[A, [A, B]]`, and
//! so on). That scale is homogeneous, so multiplying both `A` and `B` by a
//! non-zero constant never changes a verdict.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::linalg::{commutator, Matrix};
use crate::system::GbmSystem;

/// Margin factor certifying a bracket as non-zero.
pub const NONZERO_FACTOR: f64 = 10.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HypothesisReport {
    /// `[B, B*] = O`.
    #[serde(rename = "normal_B")]
    pub normal_b: bool,
    /// `[A, B] = [A, B*] = O`.
    pub commutative: bool,
    /// `[C, C*] = O` for `C = [A, B]`.
    #[serde(rename = "normal_C")]
    pub normal_c: bool,
    /// `[A, B] ≠ O`, `[A, B*] ≠ O` and `C`, `C*` commute with `A` and `B`.
    pub first_order: bool,
    /// `[A, C] = O` forces `C` nilpotent; a non-zero nilpotent `C` cannot be
    /// normal, so the first-order hypothesis set has no solutions.
    pub hypothesis_set_infeasible: bool,
    /// Raw Frobenius norms of the brackets.
    pub residuals: BTreeMap<String, f64>,
    /// Raw norms divided by the product of the leaf norms.
    pub relative_residuals: BTreeMap<String, f64>,
    /// `trace(Cᵏ)`, `k = 1..d`.
    pub nilpotence_witness: Vec<f64>,
    pub tol: f64,
}

impl HypothesisReport {
    pub fn relative(&self, key: &str) -> f64 {
        self.relative_residuals[key]
    }

    /// Names of the commutative-case conditions that fail.
    pub fn commutative_failures(&self) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !self.normal_b {
            out.push("normal_B");
        }
        if !self.commutative {
            out.push("commutative");
        }
        out
    }
}

struct Check {
    key: &'static str,
    raw: f64,
    scale: f64,
}

impl Check {
    fn relative(&self) -> f64 {
        if self.scale > 0.0 {
            self.raw / self.scale
        } else {
            0.0
        }
    }
}

/// `trace(Cᵏ)` for `k = 1..d`, with `C = [A, B]`.
pub fn nilpotence_diagnostic(sys: &GbmSystem) -> Vec<f64> {
    let c = commutator(sys.a(), sys.b()).expect("dimensions checked on construction");
    power_traces(&c)
}

fn power_traces(c: &Matrix) -> Vec<f64> {
    let mut power = c.clone();
    let mut out = Vec::with_capacity(c.dim());
    for _ in 0..c.dim() {
        out.push(power.trace());
        power = &power * c;
    }
    out
}

pub fn check_hypotheses(sys: &GbmSystem) -> HypothesisReport {
    let (a, b) = (sys.a(), sys.b());
    let tol = sys.tol();
    let bt = b.transpose();
    let br = |u: &Matrix, v: &Matrix| commutator(u, v).expect("same dimension").frobenius_norm();
    let c = commutator(a, b).expect("same dimension");
    let ct = c.transpose();
    let (na, nb) = (a.frobenius_norm(), b.frobenius_norm());

    let checks = [
        Check {
            key: "b_bstar",
            raw: br(b, &bt),
            scale: nb * nb,
        },
        Check {
            key: "a_b",
            raw: c.frobenius_norm(),
            scale: na * nb,
        },
        Check {
            key: "a_bstar",
            raw: br(a, &bt),
            scale: na * nb,
        },
        Check {
            key: "c_cstar",
            raw: br(&c, &ct),
            scale: (na * nb).powi(2),
        },
        Check {
            key: "a_c",
            raw: br(a, &c),
            scale: na * na * nb,
        },
        Check {
            key: "a_cstar",
            raw: br(a, &ct),
            scale: na * na * nb,
        },
        Check {
            key: "b_c",
            raw: br(b, &c),
            scale: na * nb * nb,
        },
        Check {
            key: "b_cstar",
            raw: br(b, &ct),
            scale: na * nb * nb,
        },
    ];
    let residuals: BTreeMap<String, f64> =
        checks.iter().map(|c| (c.key.to_string(), c.raw)).collect();
    let relative_residuals: BTreeMap<String, f64> = checks
        .iter()
        .map(|c| (c.key.to_string(), c.relative()))
        .collect();

    let zero = |k: &str| relative_residuals[k] <= tol;
    let nonzero = |k: &str| relative_residuals[k] > NONZERO_FACTOR * tol;

    let normal_b = zero("b_bstar");
    let commutative = zero("a_b") && zero("a_bstar");
    let normal_c = zero("c_cstar");
    let first_order = nonzero("a_b")
        && nonzero("a_bstar")
        && ["a_c", "a_cstar", "b_c", "b_cstar"].iter().all(|k| zero(k));
    let hypothesis_set_infeasible = zero("a_c") && nonzero("a_b");

    HypothesisReport {
        normal_b,
        commutative,
        normal_c,
        first_order,
        hypothesis_set_infeasible,
        residuals,
        relative_residuals,
        nilpotence_witness: power_traces(&c),
        tol,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn heisenberg() -> GbmSystem {
        GbmSystem::new(
            Matrix::elementary(3, 1, 2),
            Matrix::elementary(3, 0, 1),
            vec![0.0, 0.0, 1.0],
        )
        .unwrap()
    }

    #[test]
    fn diagonal_pair_commutes() {
        let sys = GbmSystem::new(
            Matrix::diag(&[-2.0, -3.0]),
            Matrix::diag(&[1.0, 0.5]),
            vec![1.0, 1.0],
        )
        .unwrap();
        let r = check_hypotheses(&sys);
        assert!(r.normal_b && r.commutative && !r.first_order);
        assert!(!r.hypothesis_set_infeasible);
        assert_eq!(r.nilpotence_witness, vec![0.0, 0.0]);
    }

    #[test]
    fn jordan_drift_does_not_commute() {
        let sys = GbmSystem::new(
            Matrix::from_rows(&[[-1.0, 1.0], [0.0, -1.0]]).unwrap(),
            Matrix::diag(&[1.0, 2.0]),
            vec![1.0, 0.0],
        )
        .unwrap();
        let r = check_hypotheses(&sys);
        assert!(!r.commutative);
        // [A, B] = [[0, 1], [0, 0]]
        assert!((r.residuals["a_b"] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn heisenberg_brackets() {
        let sys = heisenberg();
        let c = commutator(sys.a(), sys.b()).unwrap();
        assert_eq!(c, Matrix::elementary(3, 0, 2).scale(-1.0));
        let r = check_hypotheses(&sys);
        assert_eq!(r.residuals["a_c"], 0.0);
        assert_eq!(r.residuals["b_c"], 0.0);
        assert!(r.residuals["a_cstar"] > 0.5);
        assert!(!r.normal_c);
        assert!(!r.commutative);
        assert!(!r.first_order, "adjoint brackets do not vanish");
        assert!(r.hypothesis_set_infeasible);
        assert_eq!(nilpotence_diagnostic(&sys), vec![0.0, 0.0, 0.0]);
    }

    #[test]
    fn dense_pair_has_nonzero_square_trace() {
        let a = Matrix::from_rows(&[[0.3, -1.2, 0.5], [0.7, 0.1, -0.4], [-0.9, 0.6, 0.2]]).unwrap();
        let b = Matrix::from_rows(&[[1.1, 0.4, -0.3], [0.2, -0.8, 0.9], [0.5, 0.6, 0.1]]).unwrap();
        let sys = GbmSystem::new(a, b, vec![1.0, 0.0, 0.0]).unwrap();
        let w = nilpotence_diagnostic(&sys);
        assert!(w[0].abs() < 1e-14, "trace of a commutator vanishes");
        assert!(w[1].abs() > 1e-3);
        assert!(!check_hypotheses(&sys).hypothesis_set_infeasible);
    }

    #[test]
    fn report_keys_are_stable() {
        let v = serde_json::to_value(check_hypotheses(&heisenberg())).unwrap();
        for k in [
            "normal_B",
            "commutative",
            "normal_C",
            "first_order",
            "hypothesis_set_infeasible",
            "residuals",
            "relative_residuals",
            "nilpotence_witness",
            "tol",
        ] {
            assert!(v.get(k).is_some(), "missing {k}");
        }
    }
}
