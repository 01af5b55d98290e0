//! δ-mixing times `τ_ε(δ) = inf{t ≥ 0 : E|X_t|²/ε² ≤ δ}` of a non-increasing
//! mean-square curve.

use serde::Serialize;

use crate::error::{Error, Result};

/// Upper end of the bracket search.
pub const SEARCH_CAP: f64 = 1e6;

/// Final bracket width relative to `1 + τ`.
pub const BRACKET_REL_WIDTH: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixingTimeResult {
    pub eps: f64,
    pub delta: f64,
    pub tau: f64,
    /// `h` with `msq(τ − h)/ε² > δ ≥ msq(τ)/ε²`; zero when `τ = 0`.
    pub bracket_width: f64,
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v < 1.0 {
        Ok(())
    } else {
        Err(Error::InvalidArgument(format!(
            "{name} = {v} outside (0, 1)"
        )))
    }
}

/// Bisection for the first time `msq(t) ≤ δ ε²`, on a bracket found by
/// doubling from `t = 1`.
pub fn mixing_time(
    msq: impl Fn(f64) -> Result<f64>,
    eps: f64,
    delta: f64,
) -> Result<MixingTimeResult> {
    check_unit("eps", eps)?;
    check_unit("delta", delta)?;
    let target = delta * eps * eps;
    let above = |t: f64| -> Result<bool> { Ok(msq(t)? > target) };
    if !above(0.0)? {
        return Ok(MixingTimeResult {
            eps,
            delta,
            tau: 0.0,
            bracket_width: 0.0,
        });
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    while above(hi)? {
        lo = hi;
        hi *= 2.0;
        if hi > SEARCH_CAP {
            if above(SEARCH_CAP)? {
                return Err(Error::NoDecay(SEARCH_CAP));
            }
            hi = SEARCH_CAP;
            break;
        }
    }
    while hi - lo > BRACKET_REL_WIDTH * (1.0 + hi) {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if above(mid)? {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Ok(MixingTimeResult {
        eps,
        delta,
        tau: hi,
        bracket_width: hi - lo,
    })
}

/// One row of [`mixing_ratio_check`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MixingRow {
    pub eps: f64,
    pub delta: f64,
    pub tau: f64,
    /// `τ_ε(δ) / t_ε`.
    pub tau_over_t_eps: f64,
    /// `τ_ε(δ) / τ_ε(1 − δ)`.
    pub tau_ratio: f64,
}

/// Both mixing ratios for every `ε`; `t_eps` maps `ε` to the reference time
/// scale.
pub fn mixing_ratio_check(
    t_eps: impl Fn(f64) -> Result<f64>,
    msq: impl Fn(f64) -> Result<f64>,
    eps_list: &[f64],
    delta: f64,
) -> Result<Vec<MixingRow>> {
    if !(delta > 0.0 && delta <= 0.5) {
        return Err(Error::InvalidArgument(format!(
            "delta = {delta} outside (0, 1/2]"
        )));
    }
    eps_list
        .iter()
        .map(|&eps| {
            let lower = mixing_time(&msq, eps, delta)?;
            let upper = mixing_time(&msq, eps, 1.0 - delta)?;
            Ok(MixingRow {
                eps,
                delta,
                tau: lower.tau,
                tau_over_t_eps: lower.tau / t_eps(eps)?,
                tau_ratio: lower.tau / upper.tau,
            })
        })
        .collect()
}
