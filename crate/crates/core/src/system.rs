use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, Matrix, DEFAULT_TOL};

/// The coefficient pair `(A, B)`, the initial value `x` and the relative
/// tolerance used by every bracket test.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct GbmSystem {
    #[serde(rename = "A")]
    a: Matrix,
    #[serde(rename = "B")]
    b: Matrix,
    x: Vec<f64>,
    tol: f64,
}

impl GbmSystem {
    pub fn new(a: Matrix, b: Matrix, x: Vec<f64>) -> Result<Self> {
        Self::with_tol(a, b, x, DEFAULT_TOL)
    }

    pub fn with_tol(a: Matrix, b: Matrix, x: Vec<f64>, tol: f64) -> Result<Self> {
        if a.dim() != b.dim() || a.dim() != x.len() {
            return Err(Error::DimMismatch(format!(
                "A is {0}x{0}, B is {1}x{1}, x has {2} entries",
                a.dim(),
                b.dim(),
                x.len()
            )));
        }
        check_vector(&x)?;
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(Error::InvalidArgument(format!("tolerance {tol}")));
        }
        Ok(GbmSystem { a, b, x, tol })
    }

    /// Scalar system `dX = a X dt + b X ∘ dW`.
    pub fn scalar(a: f64, b: f64, x: f64) -> Result<Self> {
        Self::new(Matrix::diag(&[a]), Matrix::diag(&[b]), vec![x])
    }

    pub fn a(&self) -> &Matrix {
        &self.a
    }

    pub fn b(&self) -> &Matrix {
        &self.b
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn tol(&self) -> f64 {
        self.tol
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }

    /// Same system started from another initial value.
    pub fn with_x(&self, x: Vec<f64>) -> Result<Self> {
        Self::with_tol(self.a.clone(), self.b.clone(), x, self.tol)
    }

    /// `C = [B, A]`, the first-order bracket.
    pub fn bracket_ba(&self) -> Matrix {
        linalg::commutator(&self.b, &self.a).expect("dimensions checked on construction")
    }
}

/// Rejects empty, non-finite or zero initial values.
pub(crate) fn check_vector(x: &[f64]) -> Result<()> {
    if x.is_empty() {
        return Err(Error::DimMismatch("empty initial value".into()));
    }
    if let Some(v) = x.iter().find(|v| !v.is_finite()) {
        return Err(Error::NonFinite(format!("initial value entry {v}")));
    }
    if x.iter().all(|&v| v == 0.0) {
        return Err(Error::ZeroVector);
    }
    Ok(())
}
