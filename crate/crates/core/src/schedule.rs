use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    Commutative,
    FirstOrder,
    Synthetic,
    NoDecay,
}

/// Cutoff time scale and window for one `ε`. Entries that do not apply to the
/// regime are `None` and omitted from the JSON form.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CutoffSchedule {
    pub regime: Regime,
    pub eps: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub q: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub b: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub a: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ell_star: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub t_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub w_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_eps: Option<f64>,
    #[serde(rename = "T_eps", skip_serializing_if = "Option::is_none")]
    pub big_t_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub tau_eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub selected_mode: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub diagnostic: Option<String>,
}

impl CutoffSchedule {
    pub(crate) fn empty(regime: Regime, eps: f64) -> Self {
        CutoffSchedule {
            regime,
            eps,
            q: None,
            ell: None,
            gamma: None,
            b: None,
            a: None,
            ell_star: None,
            t_eps: None,
            w_eps: None,
            r_eps: None,
            big_t_eps: None,
            tau_eps: None,
            selected_mode: None,
            diagnostic: None,
        }
    }

    /// `t_ε + ρ w_ε`.
    pub fn shifted_time(&self, rho: f64) -> Option<f64> {
        Some(self.t_eps? + rho * self.w_eps?)
    }
}

/// `ln|ln ε|` must be defined and positive, so `ε` lives in `(0, 1/e)`.
pub fn check_eps(eps: f64) -> Result<()> {
    if eps > 0.0 && eps < (-1.0f64).exp() {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "eps {eps} outside (0, 1/e)"
        )))
    }
}
