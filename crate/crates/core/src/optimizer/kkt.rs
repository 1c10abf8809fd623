//! Closed-form primal/dual pair for the reduced problem and its KKT check.
//!
//! Lagrangian convention: `μ_j` prices `p_j ≥ 0`, `λ` the normalization,
//! `α_j` the row `p_j - e^ε p_{j+1} ≤ 0` and `β_j` the row `p_j - e^ε p_{j-1} ≤ 0`.

use serde::Serialize;

use crate::allocation::{optimal_allocation, validate, WeightAllocation};
use crate::combinatorics::key_class_sizes;
use crate::error::Result;
use crate::params::SchemeParams;

pub const RESIDUAL_TOL: f64 = 1e-9;
pub const DUAL_TOL: f64 = 1e-12;
pub const SLACKNESS_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KktCertificate {
    pub primal: WeightAllocation,
    pub lambda: f64,
    /// `μ_0..μ_{K-1}`.
    pub mu: Vec<f64>,
    /// `α_0..α_{K-2}`.
    pub alpha_dual: Vec<f64>,
    /// `β_1..β_{K-1}`, stored from index 0.
    pub beta_dual: Vec<f64>,
    pub stationarity_residuals: Vec<f64>,
    pub max_residual: f64,
    /// `|μ_j p_j|`, then `|α_j (p_j - e^ε p_{j+1})|`, then `|β_j (p_j - e^ε p_{j-1})|`.
    pub slackness: Vec<f64>,
    pub max_slackness: f64,
    pub primal_feasible: bool,
}

impl KktCertificate {
    pub fn duals_nonnegative(&self) -> bool {
        self.mu
            .iter()
            .chain(&self.alpha_dual)
            .chain(&self.beta_dual)
            .all(|&v| v >= -DUAL_TOL)
    }

    pub fn holds(&self) -> bool {
        self.max_residual <= RESIDUAL_TOL
            && self.duals_nonnegative()
            && self.max_slackness <= SLACKNESS_TOL
            && self.primal_feasible
    }
}

/// Builds the closed-form primal and duals, then evaluates every KKT condition.
pub fn kkt_certificate(params: &SchemeParams) -> Result<KktCertificate> {
    let shape = params.shape();
    let k = shape.k();
    let n = shape.n() as f64;
    let eps = params.epsilon();
    let e = eps.exp();
    let s: Vec<f64> = key_class_sizes(shape)?
        .into_iter()
        .map(|v| v as f64)
        .collect();

    let primal = optimal_allocation(params);
    let p = primal.probs();

    // λ = 1/((N-1) S) and α_j = N/(N-1) · Σ_{i>j} s_i e^{(j-i)ε} / S, S = Σ_i s_i e^{-iε}.
    // The tail sum avoids the cancellation in `1 - head/S`.
    let total: f64 = s
        .iter()
        .enumerate()
        .map(|(i, si)| si * (-(i as f64) * eps).exp())
        .sum();
    let lambda = 1.0 / ((n - 1.0) * total);
    let alpha_dual: Vec<f64> = (0..k - 1)
        .map(|j| {
            let tail: f64 = (j + 1..k)
                .map(|i| s[i] * ((j as f64 - i as f64) * eps).exp())
                .sum();
            n / (n - 1.0) * tail / total
        })
        .collect();
    let mu = vec![0.0; k];
    let beta_dual = vec![0.0; k - 1];

    let alpha = |j: usize| alpha_dual[j];
    let beta = |j: usize| beta_dual[j - 1];
    let stationarity_residuals: Vec<f64> = (0..k)
        .map(|j| {
            let mut r = -mu[j] + lambda * n * s[j];
            if j == 0 {
                r -= n / (n - 1.0);
            }
            if j + 1 < k {
                r += alpha(j) - e * beta(j + 1);
            }
            if j >= 1 {
                r += beta(j) - e * alpha(j - 1);
            }
            r.abs()
        })
        .collect();
    let max_residual = stationarity_residuals.iter().copied().fold(0.0, f64::max);

    let mut slackness: Vec<f64> = (0..k).map(|j| (mu[j] * p[j]).abs()).collect();
    slackness.extend((0..k - 1).map(|j| (alpha(j) * (p[j] - e * p[j + 1])).abs()));
    slackness.extend((1..k).map(|j| (beta(j) * (p[j] - e * p[j - 1])).abs()));
    let max_slackness = slackness.iter().copied().fold(0.0, f64::max);

    let primal_feasible = validate(params, &primal)?.is_valid();

    Ok(KktCertificate {
        primal,
        lambda,
        mu,
        alpha_dual,
        beta_dual,
        stationarity_residuals,
        max_residual,
        slackness,
        max_slackness,
        primal_feasible,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn spot_values() {
        let c = kkt_certificate(&SchemeParams::new(2, 3, 2f64.ln()).unwrap()).unwrap();
        assert!((c.lambda - 4.0 / 9.0).abs() < 1e-12);
        assert!((c.alpha_dual[0] - 10.0 / 9.0).abs() < 1e-12);
        assert!((c.alpha_dual[1] - 4.0 / 9.0).abs() < 1e-12);
        assert!(c.max_residual < 1e-12);
        assert!(c.holds());
    }

    #[test]
    fn matches_head_sum_form() {
        // λ = e^{(K-2)ε}/((N-1) Σ s_i e^{(K-2-i)ε}),
        // α_j = N/(N-1) e^{jε} [1 - Σ_{i≤j} s_i e^{(K-2-i)ε} / Σ_i s_i e^{(K-2-i)ε}]
        for (n, k, eps) in [
            (2usize, 3usize, 0.4f64),
            (3, 4, 1.0),
            (4, 5, 0.0),
            (2, 2, 2.0),
        ] {
            let p = SchemeParams::new(n, k, eps).unwrap();
            let c = kkt_certificate(&p).unwrap();
            let s = key_class_sizes(p.shape()).unwrap();
            let w: Vec<f64> = (0..k)
                .map(|i| s[i] as f64 * ((k as f64 - 2.0 - i as f64) * eps).exp())
                .collect();
            let denom: f64 = w.iter().sum();
            let nf = n as f64;
            let lambda = ((k as f64 - 2.0) * eps).exp() / ((nf - 1.0) * denom);
            assert!((c.lambda - lambda).abs() <= 1e-12 * lambda.max(1.0));
            for j in 0..k - 1 {
                let head: f64 = w[..=j].iter().sum();
                let a = nf / (nf - 1.0) * (j as f64 * eps).exp() * (1.0 - head / denom);
                assert!((c.alpha_dual[j] - a).abs() < 1e-10, "{n} {k} {eps} {j}");
            }
        }
    }

    #[test]
    fn grid_holds() {
        for n in 2..=4 {
            for k in 2..=5 {
                for eps in [0.0, 0.5, 1.0, 2.0] {
                    let c = kkt_certificate(&SchemeParams::new(n, k, eps).unwrap()).unwrap();
                    assert!(c.holds(), "{n} {k} {eps}: {c:?}");
                    assert_eq!(c.stationarity_residuals.len(), k);
                    assert_eq!(c.alpha_dual.len(), k - 1);
                }
            }
        }
    }

    #[test]
    fn detects_a_bad_dual() {
        let mut c = kkt_certificate(&SchemeParams::new(3, 3, 1.0).unwrap()).unwrap();
        c.alpha_dual[0] = -1.0;
        assert!(!c.holds());
    }
}
