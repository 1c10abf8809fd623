//! Probability allocations over the random key `(F, π)`.
//!
//! A [`WeightAllocation`] assigns one probability `p_j` to every individual
//! key `(f, π)` with `‖f‖ = j` and cyclic `π`; a [`FullAllocation`] is the
//! explicit per-message table over `(k, f, π)`.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::combinatorics::{
    enumerate_keys, enumerate_permutations, factorial, key_class_sizes, KeyVector, Permutation,
};
use crate::error::{Error, Result};
use crate::params::{SchemeParams, Shape};

/// Tolerance for exact identities (normalization, closed-form ratios).
pub const IDENTITY_TOL: f64 = 1e-12;
/// Tolerance for audited inequalities (DP ratios).
pub const INEQUALITY_TOL: f64 = 1e-9;

/// Largest `(k, f, π)` table over cyclic permutations.
pub const CYCLIC_TABLE_LIMIT: u128 = 10_000_000;
/// Largest `(k, f, π)` table over all permutations.
pub const FULL_TABLE_LIMIT: u128 = 1_000_000;

/// Per-key probabilities `p_0, …, p_{K-1}` of the reduced code.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct WeightAllocation {
    probs: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct AllocationFile {
    n: usize,
    k: usize,
    epsilon: f64,
    probs: Vec<f64>,
}

impl WeightAllocation {
    pub fn new(shape: Shape, probs: Vec<f64>) -> Result<Self> {
        if probs.len() != shape.k() {
            return Err(Error::MalformedAllocation(format!(
                "expected {} weight-class probabilities, got {}",
                shape.k(),
                probs.len()
            )));
        }
        if let Some(p) = probs.iter().find(|p| !p.is_finite()) {
            return Err(Error::MalformedAllocation(format!(
                "probability {p} is not finite"
            )));
        }
        Ok(WeightAllocation { probs })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn p(&self, weight: usize) -> f64 {
        self.probs[weight]
    }

    /// Probability of drawing any key of weight `j`: `N·s_j·p_j`.
    pub fn class_masses(&self, shape: Shape) -> Result<Vec<f64>> {
        let s = key_class_sizes(shape)?;
        Ok(self
            .probs
            .iter()
            .zip(s)
            .map(|(p, s)| shape.n() as f64 * s as f64 * p)
            .collect())
    }

    /// Download cost of the reduced code, `(N/(N-1))(1 - p_0)`.
    pub fn download_cost(&self, shape: Shape) -> f64 {
        let n = shape.n() as f64;
        n / (n - 1.0) * (1.0 - self.probs[0])
    }

    pub fn to_json(&self, params: &SchemeParams) -> String {
        let file = AllocationFile {
            n: params.n(),
            k: params.k(),
            epsilon: params.epsilon(),
            probs: self.probs.clone(),
        };
        serde_json::to_string(&file).expect("allocation serializes")
    }

    pub fn from_json(text: &str) -> Result<(SchemeParams, Self)> {
        let file: AllocationFile =
            serde_json::from_str(text).map_err(|e| Error::MalformedAllocation(e.to_string()))?;
        let params = SchemeParams::new(file.n, file.k, file.epsilon)?;
        let alloc = WeightAllocation::new(params.shape(), file.probs)?;
        Ok((params, alloc))
    }
}

/// The optimal layered allocation `p_j = e^{(K-1-j)ε} / (N (e^ε + N - 1)^{K-1})`.
pub fn optimal_allocation(params: &SchemeParams) -> WeightAllocation {
    let n = params.n() as f64;
    let k = params.k();
    let eps = params.epsilon();
    // ln(e^ε + N - 1) without forming e^ε
    let ln_base = eps + ((n - 1.0) * (-eps).exp()).ln_1p();
    let ln_norm = n.ln() + (k - 1) as f64 * ln_base;
    let probs = (0..k)
        .map(|j| ((k - 1 - j) as f64 * eps - ln_norm).exp())
        .collect();
    WeightAllocation { probs }
}

/// The prior-art allocation: boosted `p_0`, flat tail forced by normalization.
pub fn samy_allocation(params: &SchemeParams) -> WeightAllocation {
    let n = params.n() as f64;
    let k = params.k() as i32;
    let eps = params.epsilon();
    // p_0 = e^ε / (N e^ε + N^K - N), p_{j≥1} = 1 / (N e^ε + N^K - N)
    let ln_n = n.ln();
    let ln_a = ln_n + eps;
    let ln_b = ln_n + (n.powi(k - 1) - 1.0).ln();
    let (hi, lo) = if ln_a >= ln_b {
        (ln_a, ln_b)
    } else {
        (ln_b, ln_a)
    };
    let ln_den = hi + (lo - hi).exp().ln_1p();
    let p0 = (eps - ln_den).exp();
    let tail = (-ln_den).exp();
    let mut probs = vec![tail; params.k()];
    probs[0] = p0;
    WeightAllocation { probs }
}

/// Outcome of checking an allocation against the constraints of the reduced problem.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ValidationReport {
    pub normalization_ok: bool,
    pub nonneg_ok: bool,
    pub dp_ok: bool,
    pub worst_ratio_log: f64,
    pub details: Vec<String>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.normalization_ok && self.nonneg_ok && self.dp_ok
    }
}

fn log_ratio(a: f64, b: f64) -> f64 {
    match (a > 0.0, b > 0.0) {
        (true, true) => (a / b).ln().abs(),
        (false, false) => 0.0,
        _ => f64::INFINITY,
    }
}

pub fn validate(params: &SchemeParams, alloc: &WeightAllocation) -> Result<ValidationReport> {
    let shape = params.shape();
    if alloc.probs.len() != shape.k() {
        return Err(Error::MalformedAllocation(format!(
            "expected {} weight-class probabilities, got {}",
            shape.k(),
            alloc.probs.len()
        )));
    }
    let mut details = Vec::new();
    let probs = &alloc.probs;

    let nonneg_ok = probs.iter().all(|&p| p >= 0.0);
    for (j, p) in probs.iter().enumerate().filter(|(_, p)| **p < 0.0) {
        details.push(format!("p_{j} = {p} is negative"));
    }

    let total: f64 = alloc.class_masses(shape)?.iter().sum();
    let normalization_ok = (total - 1.0).abs() <= IDENTITY_TOL;
    if !normalization_ok {
        details.push(format!("sum_j N s_j p_j = {total}, expected 1"));
    }

    let bound = params.epsilon().exp();
    let mut worst_ratio_log: f64 = 0.0;
    for j in 0..probs.len().saturating_sub(1) {
        let (a, b) = (probs[j], probs[j + 1]);
        worst_ratio_log = worst_ratio_log.max(log_ratio(a, b));
        let slack = INEQUALITY_TOL * a.abs().max(b.abs());
        if a - bound * b > slack {
            details.push(format!("p_{j} <= e^eps p_{} violated", j + 1));
        }
        if b - bound * a > slack {
            details.push(format!("p_{} <= e^eps p_{j} violated", j + 1));
        }
    }
    let dp_ok = worst_ratio_log <= params.epsilon() + INEQUALITY_TOL;

    Ok(ValidationReport {
        normalization_ok,
        nonneg_ok,
        dp_ok,
        worst_ratio_log,
        details,
    })
}

/// Which permutations a full table ranges over.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PermutationScope {
    Cyclic,
    All,
}

/// Number of `(k, f, π)` cells in a table of the given scope.
pub fn table_size(shape: Shape, scope: PermutationScope) -> Result<u128> {
    let n = shape.n() as u128;
    let keys = n
        .checked_pow(shape.k() as u32 - 1)
        .ok_or(Error::Overflow("table size"))?;
    let perms = match scope {
        PermutationScope::Cyclic => n,
        PermutationScope::All => factorial(shape.n()).map(u128::from).unwrap_or(u128::MAX),
    };
    Ok(keys.saturating_mul(perms).saturating_mul(shape.k() as u128))
}

pub(crate) fn check_guard(size: u128, limit: u128, what: &'static str) -> Result<()> {
    if size > limit {
        return Err(Error::GuardExceeded { what, size, limit });
    }
    Ok(())
}

fn default_limit(scope: PermutationScope) -> u128 {
    match scope {
        PermutationScope::Cyclic => CYCLIC_TABLE_LIMIT,
        PermutationScope::All => FULL_TABLE_LIMIT,
    }
}

/// Sparse table `p^{k,π}_{(f)}`; only nonzero cells are stored.
///
/// Keys are `(k, base-N code of f, lexicographic rank of π)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FullAllocation {
    shape: Shape,
    scope: PermutationScope,
    table: BTreeMap<(usize, u64, u64), f64>,
}

impl FullAllocation {
    /// Build from explicit cells; per-message mass must be 1 within `INEQUALITY_TOL`.
    pub fn from_entries<I>(shape: Shape, scope: PermutationScope, entries: I) -> Result<Self>
    where
        I: IntoIterator<Item = (usize, KeyVector, Permutation, f64)>,
    {
        let mut table = BTreeMap::new();
        for (k, f, pi, p) in entries {
            if k == 0 || k > shape.k() {
                return Err(Error::OutOfRange {
                    what: "message index k",
                    value: k as i64,
                    min: 1,
                    max: shape.k() as i64,
                });
            }
            if f.len() != shape.k() - 1 || pi.len() != shape.n() {
                return Err(Error::MalformedAllocation(format!(
                    "cell ({k}, {f}, {pi}) has the wrong shape"
                )));
            }
            if scope == PermutationScope::Cyclic && !pi.is_cyclic() {
                return Err(Error::MalformedAllocation(format!(
                    "{pi} is not cyclic but the table scope is cyclic"
                )));
            }
            if !(p >= 0.0 && p.is_finite()) {
                return Err(Error::MalformedAllocation(format!(
                    "cell ({k}, {f}, {pi}) has probability {p}"
                )));
            }
            if p > 0.0 {
                *table
                    .entry((k, f.encode(shape.n()), pi.rank()))
                    .or_insert(0.0) += p;
            }
        }
        let full = FullAllocation {
            shape,
            scope,
            table,
        };
        for k in 1..=shape.k() {
            let mass = full.message_mass(k);
            if (mass - 1.0).abs() > INEQUALITY_TOL {
                return Err(Error::MalformedAllocation(format!(
                    "message {k} has total mass {mass}"
                )));
            }
        }
        Ok(full)
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    pub fn scope(&self) -> PermutationScope {
        self.scope
    }

    /// Number of stored (nonzero) cells.
    pub fn support_len(&self) -> usize {
        self.table.len()
    }

    pub fn support_len_for(&self, k: usize) -> usize {
        self.table.range((k, 0, 0)..(k + 1, 0, 0)).count()
    }

    pub fn message_mass(&self, k: usize) -> f64 {
        self.table
            .range((k, 0, 0)..(k + 1, 0, 0))
            .map(|(_, p)| p)
            .sum()
    }

    pub fn prob(&self, k: usize, f: &KeyVector, pi: &Permutation) -> f64 {
        self.table
            .get(&(k, f.encode(self.shape.n()), pi.rank()))
            .copied()
            .unwrap_or(0.0)
    }

    /// Nonzero cells `(k, f, π, p)` in canonical order.
    pub fn iter(&self) -> impl Iterator<Item = (usize, KeyVector, Permutation, f64)> + '_ {
        let n = self.shape.n();
        let len = self.shape.k() - 1;
        self.table.iter().map(move |(&(k, f, pi), &p)| {
            (
                k,
                KeyVector::decode(f, n, len),
                Permutation::unrank(n, pi).expect("stored rank is valid"),
                p,
            )
        })
    }

    /// Nonzero cells for one message.
    pub fn iter_message(
        &self,
        k: usize,
    ) -> impl Iterator<Item = (KeyVector, Permutation, f64)> + '_ {
        let n = self.shape.n();
        let len = self.shape.k() - 1;
        self.table
            .range((k, 0, 0)..(k + 1, 0, 0))
            .map(move |(&(_, f, pi), &p)| {
                (
                    KeyVector::decode(f, n, len),
                    Permutation::unrank(n, pi).expect("stored rank is valid"),
                    p,
                )
            })
    }
}

/// Assign `p_{‖f‖}` to every `(k, f, cyclic π)`.
pub fn expand_to_full(params: &SchemeParams, alloc: &WeightAllocation) -> Result<FullAllocation> {
    expand_to_full_with_limit(params, alloc, CYCLIC_TABLE_LIMIT)
}

pub fn expand_to_full_with_limit(
    params: &SchemeParams,
    alloc: &WeightAllocation,
    limit: u128,
) -> Result<FullAllocation> {
    let shape = params.shape();
    let report = validate(params, alloc)?;
    if !(report.normalization_ok && report.nonneg_ok) {
        return Err(Error::MalformedAllocation(report.details.join("; ")));
    }
    check_guard(
        table_size(shape, PermutationScope::Cyclic)?,
        limit,
        "cyclic allocation table",
    )?;
    let keys = enumerate_keys(shape, None)?;
    let perms = enumerate_permutations(shape.n(), true)?;
    let mut table = BTreeMap::new();
    for k in 1..=shape.k() {
        for f in &keys {
            let p = alloc.p(f.weight());
            if p > 0.0 {
                for pi in &perms {
                    table.insert((k, f.encode(shape.n()), pi.rank()), p);
                }
            }
        }
    }
    Ok(FullAllocation {
        shape,
        scope: PermutationScope::Cyclic,
        table,
    })
}

/// Uniform mass over every `(f, π)` in scope, for each message.
pub fn uniform_full_allocation(shape: Shape, scope: PermutationScope) -> Result<FullAllocation> {
    uniform_full_allocation_with_limit(shape, scope, default_limit(scope))
}

pub fn uniform_full_allocation_with_limit(
    shape: Shape,
    scope: PermutationScope,
    limit: u128,
) -> Result<FullAllocation> {
    check_guard(table_size(shape, scope)?, limit, "uniform allocation table")?;
    let keys = enumerate_keys(shape, None)?;
    let perms = enumerate_permutations_in_scope(shape.n(), scope, limit)?;
    let p = 1.0 / (keys.len() * perms.len()) as f64;
    let mut table = BTreeMap::new();
    for k in 1..=shape.k() {
        for f in &keys {
            for pi in &perms {
                table.insert((k, f.encode(shape.n()), pi.rank()), p);
            }
        }
    }
    Ok(FullAllocation {
        shape,
        scope,
        table,
    })
}

pub(crate) fn enumerate_permutations_in_scope(
    n: usize,
    scope: PermutationScope,
    limit: u128,
) -> Result<Vec<Permutation>> {
    match scope {
        PermutationScope::Cyclic => enumerate_permutations(n, true),
        PermutationScope::All => crate::combinatorics::enumerate_permutations_with_limit(
            n,
            false,
            limit.min(u64::MAX as u128) as u64,
        ),
    }
}
