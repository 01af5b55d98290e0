//! Dense real square matrices and the handful of primitives the analyses
//! need: brackets, exponentials, spectra and (joint) eigendecompositions.
//!
//! Storage is an `nalgebra::DMatrix<f64>` behind a validating newtype. All
//! operations are pure.

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use nalgebra::linalg::Schur;
use nalgebra::{Complex, DMatrix, DVector};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

pub type Complex64 = Complex<f64>;

/// Default relative tolerance for commutation and symmetry tests.
pub const DEFAULT_TOL: f64 = 1e-10;

/// Relative gap under which eigenvalues are treated as one cluster.
pub const CLUSTER_REL_GAP: f64 = 1e-7;

/// Off-diagonal residual accepted from a joint diagonalization.
pub const JOINT_DIAG_TOL: f64 = 1e-8;

/// A square real matrix with finite entries and dimension at least one.
#[derive(Clone, PartialEq)]
pub struct Matrix(DMatrix<f64>);

impl Matrix {
    pub fn from_dmatrix(m: DMatrix<f64>) -> Result<Self> {
        if m.nrows() == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        if m.nrows() != m.ncols() {
            return Err(Error::InvalidMatrix(format!(
                "matrix is {}x{}, expected square",
                m.nrows(),
                m.ncols()
            )));
        }
        if let Some(v) = m.iter().find(|v| !v.is_finite()) {
            return Err(Error::NonFinite(format!("matrix entry {v}")));
        }
        Ok(Matrix(m))
    }

    /// Builds a matrix from rows; every row must have the same length as the
    /// number of rows.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.len();
        if d == 0 {
            return Err(Error::InvalidMatrix("empty matrix".into()));
        }
        let mut data = Vec::with_capacity(d * d);
        for (i, r) in rows.iter().enumerate() {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::InvalidMatrix(format!(
                    "row {i} has {} entries, expected {d}",
                    r.len()
                )));
            }
            data.extend_from_slice(r);
        }
        Self::from_dmatrix(DMatrix::from_row_slice(d, d, &data))
    }

    /// Row-major entries.
    pub fn from_row_slice(dim: usize, entries: &[f64]) -> Result<Self> {
        if dim == 0 || entries.len() != dim * dim {
            return Err(Error::InvalidMatrix(format!(
                "{} entries for dimension {dim}",
                entries.len()
            )));
        }
        Self::from_dmatrix(DMatrix::from_row_slice(dim, dim, entries))
    }

    pub fn zeros(dim: usize) -> Self {
        Matrix(DMatrix::zeros(dim, dim))
    }

    pub fn identity(dim: usize) -> Self {
        Matrix(DMatrix::identity(dim, dim))
    }

    pub fn diag(values: &[f64]) -> Self {
        Matrix(DMatrix::from_diagonal(&DVector::from_row_slice(values)))
    }

    /// Elementary matrix `E_ij` (zero-based indices).
    pub fn elementary(dim: usize, i: usize, j: usize) -> Self {
        let mut m = DMatrix::zeros(dim, dim);
        m[(i, j)] = 1.0;
        Matrix(m)
    }

    pub fn dim(&self) -> usize {
        self.0.nrows()
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[(i, j)]
    }

    pub fn as_dmatrix(&self) -> &DMatrix<f64> {
        &self.0
    }

    pub fn into_dmatrix(self) -> DMatrix<f64> {
        self.0
    }

    pub fn to_rows(&self) -> Vec<Vec<f64>> {
        self.0
            .row_iter()
            .map(|r| r.iter().copied().collect())
            .collect()
    }

    /// Row-major copy of the entries.
    pub fn to_row_major(&self) -> Vec<f64> {
        self.0.transpose().as_slice().to_vec()
    }

    pub fn transpose(&self) -> Matrix {
        Matrix(self.0.transpose())
    }

    pub fn frobenius_norm(&self) -> f64 {
        self.0.norm()
    }

    pub fn trace(&self) -> f64 {
        self.0.trace()
    }

    pub fn scale(&self, c: f64) -> Matrix {
        Matrix(&self.0 * c)
    }

    pub fn pow(&self, k: u32) -> Matrix {
        let mut out = Matrix::identity(self.dim());
        for _ in 0..k {
            out = &out * self;
        }
        out
    }

    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let x = DVector::from_column_slice(v);
        (&self.0 * x).as_slice().to_vec()
    }

    /// `‖U − Uᵀ‖_F`.
    pub fn asymmetry(&self) -> f64 {
        (&self.0 - self.0.transpose()).norm()
    }

    pub fn is_symmetric(&self, tol: f64) -> bool {
        self.asymmetry() <= tol * (1.0 + self.frobenius_norm())
    }

    fn check_same_dim(&self, other: &Matrix) -> Result<()> {
        if self.dim() != other.dim() {
            return Err(Error::DimMismatch(format!(
                "{} vs {}",
                self.dim(),
                other.dim()
            )));
        }
        Ok(())
    }
}

impl fmt::Debug for Matrix {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Matrix{:?}", self.to_rows())
    }
}

impl Serialize for Matrix {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.to_rows().serialize(s)
    }
}

impl<'de> Deserialize<'de> for Matrix {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        let rows = Vec::<Vec<f64>>::deserialize(d)?;
        Matrix::from_rows(&rows).map_err(serde::de::Error::custom)
    }
}

impl<'a> Add<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn add(self, rhs: &'a Matrix) -> Matrix {
        Matrix(&self.0 + &rhs.0)
    }
}

impl<'a> Sub<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn sub(self, rhs: &'a Matrix) -> Matrix {
        Matrix(&self.0 - &rhs.0)
    }
}

impl<'a> Mul<&'a Matrix> for &'a Matrix {
    type Output = Matrix;
    fn mul(self, rhs: &'a Matrix) -> Matrix {
        Matrix(&self.0 * &rhs.0)
    }
}

impl Neg for &Matrix {
    type Output = Matrix;
    fn neg(self) -> Matrix {
        Matrix(-&self.0)
    }
}

/// Lie bracket `[U, V] = UV − VU`.
pub fn commutator(u: &Matrix, v: &Matrix) -> Result<Matrix> {
    u.check_same_dim(v)?;
    Ok(Matrix(&u.0 * &v.0 - &v.0 * &u.0))
}

/// Matrix exponential (scaling and squaring with a Padé approximant).
pub fn matrix_exp(u: &Matrix) -> Matrix {
    if u.dim() == 1 {
        return Matrix(DMatrix::from_element(1, 1, u.0[(0, 0)].exp()));
    }
    Matrix(u.0.exp())
}

/// `exp(U) v` without keeping the exponential around.
pub fn exp_apply(u: &Matrix, v: &[f64]) -> Vec<f64> {
    matrix_exp(u).apply(v)
}

/// Eigenvalues of a real square matrix via the real Schur form.
pub fn eigenvalues(u: &Matrix) -> Result<Vec<Complex64>> {
    let schur = Schur::try_new(u.0.clone(), f64::EPSILON, 10_000).ok_or(Error::EigFailure)?;
    Ok(schur.complex_eigenvalues().iter().copied().collect())
}

/// Largest real part over the spectrum.
pub fn spectral_abscissa(u: &Matrix) -> Result<f64> {
    Ok(eigenvalues(u)?
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max))
}

/// True iff every eigenvalue satisfies `Re λ ≤ −margin`.
pub fn is_hurwitz(u: &Matrix, margin: f64) -> Result<bool> {
    if !(margin >= 0.0) {
        return Err(Error::InvalidArgument(format!("margin {margin} < 0")));
    }
    Ok(spectral_abscissa(u)? <= -margin)
}

/// Eigenstructure of a matrix.
///
/// `eigenvalues`, `basis` and `jordan_heights` are parallel lists; the height
/// reported for an eigenvalue is the longest Jordan chain of its cluster.
#[derive(Clone, Debug)]
pub struct EigDecomposition {
    pub eigenvalues: Vec<Complex64>,
    pub basis: Vec<Vec<Complex64>>,
    pub jordan_heights: Vec<usize>,
    pub orthonormal: bool,
}

impl EigDecomposition {
    fn from_real(values: Vec<f64>, vectors: Vec<Vec<f64>>) -> Self {
        let n = values.len();
        EigDecomposition {
            eigenvalues: values.into_iter().map(|v| Complex64::new(v, 0.0)).collect(),
            basis: vectors
                .into_iter()
                .map(|v| v.into_iter().map(|c| Complex64::new(c, 0.0)).collect())
                .collect(),
            jordan_heights: vec![1; n],
            orthonormal: true,
        }
    }

    pub fn real_eigenvalues(&self) -> Vec<f64> {
        self.eigenvalues.iter().map(|z| z.re).collect()
    }

    pub fn real_basis(&self) -> Vec<Vec<f64>> {
        self.basis
            .iter()
            .map(|v| v.iter().map(|z| z.re).collect())
            .collect()
    }

    /// `v_jᵀ U v_j` for every basis vector, i.e. the diagonal of `U` in this
    /// basis. Meaningful for real orthonormal bases.
    pub fn congruence_diagonal(&self, u: &Matrix) -> Vec<f64> {
        self.real_basis()
            .iter()
            .map(|v| dot(v, &u.apply(v)))
            .collect()
    }

    pub fn is_diagonalizable(&self) -> bool {
        self.jordan_heights.iter().all(|&h| h == 1)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub(crate) fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Flips `v` so that its largest-magnitude entry (first one on ties) is positive.
fn normalize_sign(v: &mut [f64]) {
    let mut best = 0;
    for (i, c) in v.iter().enumerate() {
        if c.abs() > v[best].abs() * (1.0 + 1e-12) {
            best = i;
        }
    }
    if v[best] < 0.0 {
        v.iter_mut().for_each(|c| *c = -*c);
    }
}

/// Sorted (ascending) eigenpairs of a symmetric matrix given as a `DMatrix`.
fn sorted_sym_eigen(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let mut order: Vec<usize> = (0..eig.eigenvalues.len()).collect();
    order.sort_by(|&i, &j| eig.eigenvalues[i].total_cmp(&eig.eigenvalues[j]));
    let values = order.iter().map(|&i| eig.eigenvalues[i]).collect();
    let vectors = DMatrix::from_columns(
        &order
            .iter()
            .map(|&i| eig.eigenvectors.column(i).into_owned())
            .collect::<Vec<_>>(),
    );
    (values, vectors)
}

/// Eigendecomposition of a symmetric matrix: ascending real eigenvalues and an
/// orthonormal basis.
pub fn sym_eig(u: &Matrix) -> Result<EigDecomposition> {
    let asym = u.asymmetry();
    if asym > DEFAULT_TOL * (1.0 + u.frobenius_norm()) {
        return Err(Error::NotSymmetric(asym));
    }
    let (values, vectors) = sorted_sym_eigen(&u.0);
    let basis = vectors
        .column_iter()
        .map(|c| {
            let mut v: Vec<f64> = c.iter().copied().collect();
            normalize_sign(&mut v);
            v
        })
        .collect();
    Ok(EigDecomposition::from_real(values, basis))
}

/// Splits sorted values into runs whose consecutive gaps are within `gap`.
fn cluster_sorted(values: &[f64], gap: f64) -> Vec<std::ops::Range<usize>> {
    let mut out = Vec::new();
    let mut start = 0;
    for i in 1..=values.len() {
        if i == values.len() || values[i] - values[i - 1] > gap {
            out.push(start..i);
            start = i;
        }
    }
    out
}

/// One orthonormal basis diagonalizing every member of a commuting family of
/// symmetric matrices.
///
/// The basis is refined member by member: each current block of the basis is
/// split along the eigenspaces of the next matrix restricted to it. The
/// reported eigenvalues are those of the first member.
pub fn simultaneous_diagonalize(family: &[Matrix]) -> Result<EigDecomposition> {
    let first = family
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty family".into()))?;
    let d = first.dim();
    for u in family {
        first.check_same_dim(u)?;
        let asym = u.asymmetry();
        if asym > DEFAULT_TOL * (1.0 + u.frobenius_norm()) {
            return Err(Error::NotSymmetric(asym));
        }
    }
    for (i, u) in family.iter().enumerate() {
        for v in &family[i + 1..] {
            let r = commutator(u, v)?.frobenius_norm();
            if r > DEFAULT_TOL * (1.0 + u.frobenius_norm() * v.frobenius_norm()) {
                return Err(Error::NotCommuting(r));
            }
        }
    }

    let mut blocks: Vec<DMatrix<f64>> = vec![DMatrix::identity(d, d)];
    for u in family {
        let gap = CLUSTER_REL_GAP * (1.0 + u.frobenius_norm());
        let mut next = Vec::with_capacity(blocks.len());
        for block in blocks {
            if block.ncols() == 1 {
                next.push(block);
                continue;
            }
            let restricted = block.transpose() * &u.0 * &block;
            let (values, vectors) = sorted_sym_eigen(&restricted);
            let rotated = &block * vectors;
            for range in cluster_sorted(&values, gap) {
                next.push(rotated.columns(range.start, range.len()).into_owned());
            }
        }
        blocks = next;
    }

    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(d);
    for block in &blocks {
        for c in block.column_iter() {
            let mut v: Vec<f64> = c.iter().copied().collect();
            normalize_sign(&mut v);
            basis.push(v);
        }
    }

    let v = DMatrix::from_fn(d, d, |i, j| basis[j][i]);
    for u in family {
        let mut t = v.transpose() * &u.0 * &v;
        t.fill_diagonal(0.0);
        let off = t.norm();
        if off > JOINT_DIAG_TOL * u.frobenius_norm().max(1.0) {
            return Err(Error::JointDiagFailure(off));
        }
    }

    let values = basis.iter().map(|b| dot(b, &first.apply(b))).collect();
    Ok(EigDecomposition::from_real(values, basis))
}

/// A cluster of (numerically) equal eigenvalues together with a basis of its
/// generalized eigenspace.
#[derive(Clone, Debug)]
pub struct SpectralComponent {
    pub eigenvalue: Complex64,
    pub multiplicity: usize,
    /// `d × multiplicity` basis of `ker (U − λ)^multiplicity`.
    pub basis: DMatrix<Complex64>,
    /// Longest Jordan chain in the cluster.
    pub height: usize,
}

pub(crate) fn to_complex(m: &DMatrix<f64>) -> DMatrix<Complex64> {
    m.map(|v| Complex64::new(v, 0.0))
}

/// Nilpotency threshold for `(U − λ)^h` restricted to a generalized eigenspace.
pub(crate) fn chain_threshold(unorm: f64, h: usize) -> f64 {
    1e-6 * (1.0 + unorm).powi(h as i32)
}

/// Single-linkage clustering of eigenvalues by relative gap.
fn cluster_eigenvalues(values: &[Complex64]) -> Vec<Vec<usize>> {
    let n = values.len();
    let mut label: Vec<usize> = (0..n).collect();
    fn find(label: &mut [usize], i: usize) -> usize {
        let mut r = i;
        while label[r] != r {
            r = label[r];
        }
        label[i] = r;
        r
    }
    for i in 0..n {
        for j in i + 1..n {
            let scale = 1.0_f64.max(values[i].norm()).max(values[j].norm());
            if (values[i] - values[j]).norm() <= CLUSTER_REL_GAP * scale {
                let (ri, rj) = (find(&mut label, i), find(&mut label, j));
                label[ri.max(rj)] = ri.min(rj);
            }
        }
    }
    let mut groups: Vec<Vec<usize>> = Vec::new();
    let mut roots: Vec<usize> = Vec::new();
    for i in 0..n {
        let r = find(&mut label, i);
        match roots.iter().position(|&x| x == r) {
            Some(k) => groups[k].push(i),
            None => {
                roots.push(r);
                groups.push(vec![i]);
            }
        }
    }
    groups
}

/// Generalized eigenspaces of a real matrix, one entry per eigenvalue cluster.
pub fn spectral_components(u: &Matrix) -> Result<Vec<SpectralComponent>> {
    let d = u.dim();
    let values = eigenvalues(u)?;
    let uc = to_complex(&u.0);
    let unorm = u.frobenius_norm();
    let mut out = Vec::new();
    for group in cluster_eigenvalues(&values) {
        let m = group.len();
        let lambda = group.iter().map(|&i| values[i]).sum::<Complex64>() / m as f64;
        let shifted = &uc - DMatrix::<Complex64>::identity(d, d) * lambda;
        let mut power = DMatrix::<Complex64>::identity(d, d);
        for _ in 0..m {
            power = &power * &shifted;
        }
        let svd = power.svd(false, true);
        let v_t = svd.v_t.ok_or(Error::EigFailure)?;
        // `SVD::new` orders singular values decreasingly: the last `m` right
        // singular vectors span the kernel.
        let basis = DMatrix::from_fn(d, m, |i, j| v_t[(d - m + j, i)].conj());
        let mut height = 1;
        let mut chain = &shifted * &basis;
        while height < m && chain.norm() > chain_threshold(unorm, height) {
            chain = &shifted * chain;
            height += 1;
        }
        out.push(SpectralComponent {
            eigenvalue: lambda,
            multiplicity: m,
            basis,
            height,
        });
    }
    Ok(out)
}

/// General eigendecomposition: eigenvalues (cluster means, repeated by
/// multiplicity), generalized eigenvectors and Jordan chain heights.
pub fn eig_general(u: &Matrix) -> Result<EigDecomposition> {
    let comps = spectral_components(u)?;
    let mut eigenvalues = Vec::new();
    let mut basis = Vec::new();
    let mut jordan_heights = Vec::new();
    for c in &comps {
        for j in 0..c.multiplicity {
            eigenvalues.push(c.eigenvalue);
            basis.push(c.basis.column(j).iter().copied().collect());
            jordan_heights.push(c.height);
        }
    }
    Ok(EigDecomposition {
        eigenvalues,
        basis,
        jordan_heights,
        orthonormal: false,
    })
}
