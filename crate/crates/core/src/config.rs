//! Run configuration: a JSON file, validated into a model plus run settings.
//!
//! Every invariant violation has its own error code.

use std::fmt;
use std::path::PathBuf;

use serde::Deserialize;

use crate::error::Error;
use crate::linalg::Matrix;
use crate::noncommutative::SyntheticSystem;
use crate::schedule::check_eps;
use crate::simulate::{Scheme, DEFAULT_DT, DEFAULT_PATHS, MIN_PATHS};
use crate::system::GbmSystem;

/// An error with a stable machine-readable code.
#[derive(Clone, Debug, PartialEq)]
pub struct CliError {
    pub code: String,
    pub message: String,
}

impl CliError {
    pub fn new(code: &str, message: impl Into<String>) -> Self {
        CliError {
            code: code.to_string(),
            message: message.into(),
        }
    }

    /// `{"error": code, "message": ...}` on one line.
    pub fn to_json_line(&self) -> String {
        serde_json::json!({ "error": self.code, "message": self.message }).to_string()
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.code, self.message)
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::new(e.code(), e.to_string())
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Commutative,
    FirstOrder,
    Synthetic,
}

impl Mode {
    pub fn name(self) -> &'static str {
        match self {
            Mode::Commutative => "commutative",
            Mode::FirstOrder => "first_order",
            Mode::Synthetic => "synthetic",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Csv,
    Json,
}

type Rows = Vec<Vec<f64>>;

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McConfig {
    pub n_paths: Option<usize>,
    pub dt: Option<f64>,
    pub seed: Option<u64>,
    pub scheme: Option<Scheme>,
}

#[derive(Clone, Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<PathBuf>,
    pub format: Option<Format>,
}

/// Configuration file as written by the user.
#[derive(Clone, Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub mode: Mode,
    #[serde(rename = "A")]
    pub a: Option<Rows>,
    #[serde(rename = "B")]
    pub b: Option<Rows>,
    pub alpha: Option<Rows>,
    pub beta: Option<Rows>,
    #[serde(rename = "Gamma")]
    pub gamma: Option<Rows>,
    pub x: Vec<f64>,
    pub eps_list: Option<Vec<f64>>,
    pub delta: Option<f64>,
    pub rho_grid: Option<Vec<f64>>,
    pub w: Option<f64>,
    pub t_grid: Option<Vec<f64>>,
    #[serde(default)]
    pub mc: McConfig,
    pub tol: Option<f64>,
    #[serde(default)]
    pub output: OutputConfig,
}

/// Command-line overrides of configuration entries.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub eps: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub out: Option<PathBuf>,
}

pub const DEFAULT_EPS_LIST: [f64; 3] = [1e-2, 1e-4, 1e-6];
pub const DEFAULT_DELTA: f64 = 0.1;
pub const DEFAULT_RHO_GRID: [f64; 7] = [-3.0, -2.0, -1.0, 0.0, 1.0, 2.0, 3.0];
pub const DEFAULT_T_GRID: [f64; 3] = [0.5, 1.0, 2.0];

#[derive(Clone, Debug)]
pub enum Model {
    Pair(GbmSystem),
    Synthetic(SyntheticSystem),
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct McSettings {
    pub n_paths: usize,
    pub dt: f64,
    pub seed: u64,
    pub scheme: Option<Scheme>,
}

/// A configuration that passed validation.
#[derive(Clone, Debug)]
pub struct Validated {
    pub mode: Mode,
    pub model: Model,
    pub eps_list: Vec<f64>,
    pub delta: f64,
    pub rho_grid: Vec<f64>,
    pub w: f64,
    /// `None` when the file leaves the grid to the command.
    pub t_grid: Option<Vec<f64>>,
    pub mc: McSettings,
    pub tol: f64,
    pub out: Option<PathBuf>,
    pub format: Option<Format>,
}

impl RunConfig {
    pub fn from_json(text: &str) -> CliResult<Self> {
        serde_json::from_str(text).map_err(|e| CliError::new("config_parse", e.to_string()))
    }

    pub fn load(path: &std::path::Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::new("config_io", format!("{}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn validate(self, ov: &Overrides) -> CliResult<Validated> {
        let tol = self.tol.unwrap_or(crate::linalg::DEFAULT_TOL);
        if !(tol > 0.0 && tol.is_finite()) {
            return Err(CliError::new("invalid_tol", format!("tol = {tol}")));
        }
        if self.x.is_empty() {
            return Err(CliError::new("dim_mismatch", "x is empty"));
        }
        if self.x.iter().all(|&v| v == 0.0) {
            return Err(CliError::new("zero_vector", "x is the zero vector"));
        }
        let model = self.build_model(tol)?;

        let eps_list = ov
            .eps
            .clone()
            .or(self.eps_list)
            .unwrap_or_else(|| DEFAULT_EPS_LIST.to_vec());
        if eps_list.is_empty() {
            return Err(CliError::new("empty_eps_list", "eps_list is empty"));
        }
        for &eps in &eps_list {
            check_eps(eps).map_err(|_| {
                CliError::new("invalid_eps", format!("eps = {eps} outside (0, 1/e)"))
            })?;
        }
        let delta = self.delta.unwrap_or(DEFAULT_DELTA);
        if !(delta > 0.0 && delta < 1.0) {
            return Err(CliError::new(
                "invalid_delta",
                format!("delta = {delta} outside (0, 1)"),
            ));
        }
        let w = self.w.unwrap_or(1.0);
        if !(w > 0.0 && w.is_finite()) {
            return Err(CliError::new("invalid_window", format!("w = {w}")));
        }
        let rho_grid = self.rho_grid.unwrap_or_else(|| DEFAULT_RHO_GRID.to_vec());
        if rho_grid.is_empty() {
            return Err(CliError::new("empty_rho_grid", "rho_grid is empty"));
        }
        if let Some(grid) = &self.t_grid {
            if grid.is_empty() {
                return Err(CliError::new("empty_t_grid", "t_grid is empty"));
            }
            if let Some(t) = grid.iter().find(|t| !(**t >= 0.0)) {
                return Err(CliError::new("invalid_t_grid", format!("t = {t} < 0")));
            }
        }
        let mc = McSettings {
            n_paths: ov.paths.or(self.mc.n_paths).unwrap_or(DEFAULT_PATHS),
            dt: ov.dt.or(self.mc.dt).unwrap_or(DEFAULT_DT),
            seed: ov.seed.or(self.mc.seed).unwrap_or(0),
            scheme: self.mc.scheme,
        };
        if mc.n_paths < MIN_PATHS {
            return Err(CliError::new(
                "invalid_paths",
                format!("n_paths = {} < {MIN_PATHS}", mc.n_paths),
            ));
        }
        if !(mc.dt > 0.0 && mc.dt.is_finite()) {
            return Err(CliError::new("invalid_dt", format!("dt = {}", mc.dt)));
        }
        Ok(Validated {
            mode: self.mode,
            model,
            eps_list,
            delta,
            rho_grid,
            w,
            t_grid: self.t_grid,
            mc,
            tol,
            out: ov.out.clone().or(self.output.path),
            format: self.output.format,
        })
    }

    fn build_model(&self, tol: f64) -> CliResult<Model> {
        let matrix = |name: &str, rows: &Option<Rows>| -> CliResult<Matrix> {
            let rows = rows.as_ref().ok_or_else(|| {
                CliError::new(
                    "missing_matrix",
                    format!("{name} is required in mode {}", self.mode.name()),
                )
            })?;
            Matrix::from_rows(rows).map_err(|e| CliError::new(e.code(), format!("{name}: {e}")))
        };
        let unexpected = |names: &[(&str, &Option<Rows>)]| -> CliResult<()> {
            match names.iter().find(|(_, m)| m.is_some()) {
                Some((n, _)) => Err(CliError::new(
                    "unexpected_matrix",
                    format!("{n} is not used in mode {}", self.mode.name()),
                )),
                None => Ok(()),
            }
        };
        match self.mode {
            Mode::Commutative | Mode::FirstOrder => {
                unexpected(&[
                    ("alpha", &self.alpha),
                    ("beta", &self.beta),
                    ("Gamma", &self.gamma),
                ])?;
                let sys = GbmSystem::with_tol(
                    matrix("A", &self.a)?,
                    matrix("B", &self.b)?,
                    self.x.clone(),
                    tol,
                )?;
                Ok(Model::Pair(sys))
            }
            Mode::Synthetic => {
                unexpected(&[("B", &self.b)])?;
                let mut sys = SyntheticSystem {
                    alpha: matrix("alpha", &self.alpha)?,
                    beta: matrix("beta", &self.beta)?,
                    gamma: matrix("Gamma", &self.gamma)?,
                    a: matrix("A", &self.a)?,
                    x: self.x.clone(),
                    tol,
                };
                sys.validate()?;
                sys.tol = tol;
                Ok(Model::Synthetic(sys))
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn code(text: &str) -> String {
        RunConfig::from_json(text)
            .and_then(|c| c.validate(&Overrides::default()))
            .unwrap_err()
            .code
    }

    #[test]
    fn scalar_config_validates() {
        let v = RunConfig::from_json(r#"{"mode":"commutative","A":[[-1]],"B":[[0.5]],"x":[1]}"#)
            .unwrap()
            .validate(&Overrides {
                seed: Some(9),
                ..Default::default()
            })
            .unwrap();
        assert_eq!(v.mode, Mode::Commutative);
        assert_eq!(v.mc.seed, 9);
        assert_eq!(v.mc.n_paths, DEFAULT_PATHS);
        assert_eq!(v.eps_list, DEFAULT_EPS_LIST.to_vec());
    }

    #[test]
    fn each_violation_has_its_own_code() {
        let cases = [
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[0.5]],"x":[1],"extra":1}"#,
                "config_parse",
            ),
            (r#"{"mode":"other","x":[1]}"#, "config_parse"),
            (
                r#"{"mode":"commutative","A":[[-1]],"x":[1]}"#,
                "missing_matrix",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"alpha":[[1]],"x":[1]}"#,
                "unexpected_matrix",
            ),
            (
                r#"{"mode":"commutative","A":[[-1,0]],"B":[[1]],"x":[1]}"#,
                "invalid_matrix",
            ),
            (
                r#"{"mode":"commutative","A":[[-1,0],[0,1]],"B":[[1]],"x":[1,1]}"#,
                "dim_mismatch",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[]}"#,
                "dim_mismatch",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[0]}"#,
                "zero_vector",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"eps_list":[]}"#,
                "empty_eps_list",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"eps_list":[0.5]}"#,
                "invalid_eps",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"delta":1}"#,
                "invalid_delta",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"w":0}"#,
                "invalid_window",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"rho_grid":[]}"#,
                "empty_rho_grid",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"t_grid":[]}"#,
                "empty_t_grid",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"t_grid":[-1]}"#,
                "invalid_t_grid",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"mc":{"n_paths":10}}"#,
                "invalid_paths",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"mc":{"dt":0}}"#,
                "invalid_dt",
            ),
            (
                r#"{"mode":"commutative","A":[[-1]],"B":[[1]],"x":[1],"tol":0}"#,
                "invalid_tol",
            ),
            (
                r#"{"mode":"synthetic","alpha":[[1]],"beta":[[1]],"Gamma":[[1]],"A":[[-1]],"B":[[1]],"x":[1]}"#,
                "unexpected_matrix",
            ),
        ];
        for (text, expected) in cases {
            assert_eq!(code(text), expected, "{text}");
        }
    }

    #[test]
    fn synthetic_config() {
        let v = RunConfig::from_json(
            r#"{"mode":"synthetic","alpha":[[0.2,0],[0,0.4]],"beta":[[0.3,0],[0,0.1]],
                "Gamma":[[-0.6,0],[0,-1.2]],"A":[[-1,0],[0,-2]],"x":[1,1],"tol":1e-9}"#,
        )
        .unwrap()
        .validate(&Overrides::default())
        .unwrap();
        match v.model {
            Model::Synthetic(s) => assert_eq!(s.tol, 1e-9),
            Model::Pair(_) => panic!("expected synthetic model"),
        }
    }
}
