use thiserror::Error;

/// Errors raised by the analysis modules.
///
/// Every variant has a stable snake_case code (see [`Error::code`]) used by the
/// CLI and the C ABI.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimMismatch(String),
    #[error("invalid matrix: {0}")]
    InvalidMatrix(String),
    #[error("non-finite value: {0}")]
    NonFinite(String),
    #[error("eigenvalue iteration did not converge")]
    EigFailure,
    #[error("matrix is not symmetric (residual {0:e})")]
    NotSymmetric(f64),
    #[error("family does not commute (residual {0:e})")]
    NotCommuting(f64),
    #[error("joint diagonalization residual {0:e} exceeds tolerance")]
    JointDiagFailure(f64),
    #[error("vector is zero")]
    ZeroVector,
    #[error("matrix is not Hurwitz stable (spectral abscissa {0})")]
    NotStable(f64),
    #[error("hypotheses violated: {0}")]
    HypothesesViolated(String),
    #[error("matrix is not diagonalizable")]
    NotDiagonalizable,
    #[error("profile limit oscillates ({0} leading modes)")]
    OscillatoryProfile(usize),
    #[error("cubic has three distinct real roots")]
    AmbiguousRoots,
    #[error("polynomial has no real root")]
    NoRealRoot,
    #[error("no sign change in bracket [{0}, {1}]")]
    BracketFailure(f64, f64),
    #[error("no stabilizing multiple of Gamma up to 2^20")]
    NoStabilizer,
    #[error("initial value is orthogonal to every mode")]
    XOrthogonal,
    #[error("radicand outside the real branch at t = {0}")]
    BranchViolation(f64),
    #[error("exponential representation invalid: {0}")]
    RepresentationInvalid(String),
    #[error("no decay below threshold for t <= {0}")]
    NoDecay(f64),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl Error {
    pub fn code(&self) -> &'static str {
        match self {
            Error::DimMismatch(_) => "dim_mismatch",
            Error::InvalidMatrix(_) => "invalid_matrix",
            Error::NonFinite(_) => "non_finite",
            Error::EigFailure => "eig_failure",
            Error::NotSymmetric(_) => "not_symmetric",
            Error::NotCommuting(_) => "not_commuting",
            Error::JointDiagFailure(_) => "joint_diag_failure",
            Error::ZeroVector => "zero_vector",
            Error::NotStable(_) => "not_stable",
            Error::HypothesesViolated(_) => "hypotheses_violated",
            Error::NotDiagonalizable => "not_diagonalizable",
            Error::OscillatoryProfile(_) => "oscillatory_profile",
            Error::AmbiguousRoots => "ambiguous_roots",
            Error::NoRealRoot => "no_real_root",
            Error::BracketFailure(..) => "bracket_failure",
            Error::NoStabilizer => "no_stabilizer",
            Error::XOrthogonal => "x_orthogonal",
            Error::BranchViolation(_) => "branch_violation",
            Error::RepresentationInvalid(_) => "representation_invalid",
            Error::NoDecay(_) => "no_decay",
            Error::InvalidArgument(_) => "invalid_argument",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
