//! Closed-form download cost versus leakage exponent.
//!
//! All three cost curves and both inversions are evaluated in the log
//! domain so that `K` in the tens and `ε` in the tens stay finite.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::params::{SchemeParams, Shape};

/// Slack on the upper end of the feasible cost interval.
const FEASIBLE_SLACK: f64 = 1e-12;

/// `ln(1 + (N-1) e^{-ε})`, i.e. `ln(e^ε + N - 1) - ε`.
fn ln1p_spread(n: f64, eps: f64) -> f64 {
    ((n - 1.0) * (-eps).exp()).ln_1p()
}

/// Download cost of the optimal layered allocation.
pub fn cost_tsc(params: &SchemeParams) -> f64 {
    let n = params.n() as f64;
    let km1 = (params.k() - 1) as f64;
    // 1 - e^{(K-1)(ε - ln(e^ε + N - 1))}
    let fraction = -(-km1 * ln1p_spread(n, params.epsilon())).exp_m1();
    1.0 + fraction / (n - 1.0)
}

/// Download cost of the prior-art allocation (the UB curve).
pub fn cost_ub(params: &SchemeParams) -> f64 {
    let n = params.n() as f64;
    let m = n.powi(params.k() as i32 - 1) - 1.0;
    1.0 + m / ((n - 1.0) * (params.epsilon().exp() + m))
}

/// The converse lower bound `1 + Σ_{i=1}^{K-1} (N e^ε)^{-i}`.
pub fn cost_lb(params: &SchemeParams) -> f64 {
    let step = -(params.n() as f64).ln() - params.epsilon();
    1.0 + (1..params.k())
        .map(|i| (i as f64 * step).exp())
        .sum::<f64>()
}

/// Cost at ε = 0, `1 + 1/N + … + 1/N^{K-1}`; the largest feasible `D`.
pub fn max_feasible_cost(shape: Shape) -> f64 {
    let n = shape.n() as f64;
    1.0 + alpha_max(shape) / (n - 1.0)
}

/// `1 - N^{1-K}`, the value of `α` at ε = 0.
fn alpha_max(shape: Shape) -> f64 {
    let n = shape.n() as f64;
    -(-((shape.k() - 1) as f64) * n.ln()).exp_m1()
}

/// `α = (D-1)(N-1)` after checking `D ∈ (1, D_max]`.
pub fn alpha_for(shape: Shape, d: f64) -> Result<f64> {
    let hi = max_feasible_cost(shape);
    if !(d.is_finite() && d > 1.0 && d <= hi * (1.0 + FEASIBLE_SLACK)) {
        return Err(Error::InfeasibleCost { d, lo: 1.0, hi });
    }
    let alpha = (d - 1.0) * (shape.n() as f64 - 1.0);
    Ok(alpha.min(alpha_max(shape)))
}

/// Leakage exponent the optimal allocation needs to reach cost `D`.
pub fn eps_tsc(shape: Shape, d: f64) -> Result<f64> {
    let alpha = alpha_for(shape, d)?;
    let n = shape.n() as f64;
    let ln_r = (-alpha).ln_1p() / (shape.k() - 1) as f64;
    // e^ε = r (N-1) / (1 - r)
    let eps = ln_r + (n - 1.0).ln() - (-ln_r.exp_m1()).ln();
    Ok(eps.max(0.0))
}

/// Leakage exponent the prior-art allocation needs to reach cost `D`.
pub fn eps_ub(shape: Shape, d: f64) -> Result<f64> {
    let alpha = alpha_for(shape, d)?;
    let n = shape.n() as f64;
    let km1 = (shape.k() - 1) as f64;
    // ln(N^{K-1} - 1) = (K-1) ln N + ln(1 - N^{1-K})
    let ln_m = km1 * n.ln() + (-(-km1 * n.ln()).exp()).ln_1p();
    let eps = (-alpha).ln_1p() - alpha.ln() + ln_m;
    Ok(eps.max(0.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ExponentBounds {
    pub alpha: f64,
    pub eps_tsc: f64,
    pub eps_ub: f64,
    /// `log(K-1) + log((N-1)/α)`
    pub tsc_upper: f64,
    /// `(K-1) log N + log((1-α)/α)`
    pub ub_upper: f64,
    /// `(K-2) log N + log((1-α)/α)`
    pub ub_lower: f64,
}

impl ExponentBounds {
    pub fn tsc_upper_holds(&self) -> bool {
        self.eps_tsc <= self.tsc_upper + 1e-9
    }

    pub fn ub_upper_holds(&self) -> bool {
        self.eps_ub <= self.ub_upper + 1e-9
    }

    pub fn ub_lower_holds(&self) -> bool {
        self.eps_ub >= self.ub_lower - 1e-9
    }

    pub fn all_hold(&self) -> bool {
        self.tsc_upper_holds() && self.ub_upper_holds() && self.ub_lower_holds()
    }
}

/// Both inversions at cost `D` together with their logarithmic/linear bounds.
pub fn exponent_bounds(shape: Shape, d: f64) -> Result<ExponentBounds> {
    let alpha = alpha_for(shape, d)?;
    let n = shape.n() as f64;
    let k = shape.k() as f64;
    let odds = (-alpha).ln_1p() - alpha.ln();
    let bounds = ExponentBounds {
        alpha,
        eps_tsc: eps_tsc(shape, d)?,
        eps_ub: eps_ub(shape, d)?,
        tsc_upper: (k - 1.0).ln() + ((n - 1.0) / alpha).ln(),
        ub_upper: (k - 1.0) * n.ln() + odds,
        ub_lower: (k - 2.0) * n.ln() + odds,
    };
    debug_assert!(bounds.all_hold(), "{bounds:?}");
    Ok(bounds)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TradeoffPoint {
    pub epsilon: f64,
    pub d_tsc: f64,
    pub d_ub: f64,
    pub d_lb: f64,
    pub gap_tsc_lb: f64,
    pub gap_ub_lb: f64,
}

pub fn tradeoff_point(params: &SchemeParams) -> TradeoffPoint {
    let (d_tsc, d_ub, d_lb) = (cost_tsc(params), cost_ub(params), cost_lb(params));
    TradeoffPoint {
        epsilon: params.epsilon(),
        d_tsc,
        d_ub,
        d_lb,
        gap_tsc_lb: d_tsc / d_lb,
        gap_ub_lb: d_ub / d_lb,
    }
}

pub fn sweep(shape: Shape, eps_grid: &[f64]) -> Result<Vec<TradeoffPoint>> {
    eps_grid
        .iter()
        .map(|&eps| shape.with_epsilon(eps).map(|p| tradeoff_point(&p)))
        .collect()
}

/// `steps` evenly spaced values from `lo` to `hi` inclusive (`lo` alone when `steps == 1`).
pub fn uniform_grid(lo: f64, hi: f64, steps: usize) -> Vec<f64> {
    match steps {
        0 => Vec::new(),
        1 => vec![lo],
        _ => (0..steps)
            .map(|i| lo + (hi - lo) * i as f64 / (steps - 1) as f64)
            .collect(),
    }
}
