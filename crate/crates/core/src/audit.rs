//! Exhaustive checks of leakage, cost and correctness.
//!
//! Nothing here uses the closed forms: query distributions are pushed
//! forward from the explicit `(k, f, π)` table, and correctness is checked
//! by running the protocol.
//!
//! The DP ratio is taken over query marginals. Answers are a deterministic
//! function of the query and the stored messages, and the key is drawn
//! independently of the messages, so conditioning on `W_{1:K}` leaves the
//! joint `(Q, A)` ratio equal to the query ratio.

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::allocation::{
    check_guard, enumerate_permutations_in_scope, table_size, FullAllocation, PermutationScope,
    WeightAllocation, CYCLIC_TABLE_LIMIT, FULL_TABLE_LIMIT,
};
use crate::combinatorics::{enumerate_keys, QueryVector};
use crate::error::{Error, Result};
use crate::params::{SchemeParams, Shape};
use crate::protocol::{
    make_queries, retrieve_with_key, trial_rng, KeySampler, MessageStore, RandomKey,
};

/// Exact law of the query seen by server `n` when message `k` is requested.
#[derive(Debug, Clone, PartialEq)]
pub struct QueryDistribution {
    pub server: usize,
    pub message: usize,
    pub probs: BTreeMap<QueryVector, f64>,
}

impl QueryDistribution {
    pub fn prob(&self, q: &QueryVector) -> f64 {
        self.probs.get(q).copied().unwrap_or(0.0)
    }

    pub fn total(&self) -> f64 {
        self.probs.values().sum()
    }
}

fn check_server(shape: Shape, n: usize) -> Result<()> {
    if n == 0 || n > shape.n() {
        return Err(Error::OutOfRange {
            what: "server index n",
            value: n as i64,
            min: 1,
            max: shape.n() as i64,
        });
    }
    Ok(())
}

pub fn query_distribution(full: &FullAllocation, k: usize, n: usize) -> Result<QueryDistribution> {
    let shape = full.shape();
    check_server(shape, n)?;
    let mut probs = BTreeMap::new();
    for (f, pi, p) in full.iter_message(k) {
        let key = RandomKey { f, pi };
        let q = make_queries(shape, k, &key)?.swap_remove(n - 1);
        *probs.entry(q).or_insert(0.0) += p;
    }
    Ok(QueryDistribution {
        server: n,
        message: k,
        probs,
    })
}

fn serialize_extended<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_finite() {
        s.serialize_f64(*v)
    } else {
        s.serialize_str(if *v > 0.0 { "inf" } else { "-inf" })
    }
}

fn serialize_extended_seq<S: Serializer>(v: &[f64], s: S) -> std::result::Result<S::Ok, S::Error> {
    use serde::ser::SerializeSeq;
    #[derive(Serialize)]
    struct Ext(#[serde(serialize_with = "serialize_extended")] f64);
    let mut seq = s.serialize_seq(Some(v.len()))?;
    for x in v {
        seq.serialize_element(&Ext(*x))?;
    }
    seq.end()
}

/// The query and message pair that attains the largest likelihood ratio.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageWitness {
    pub server: usize,
    pub query: QueryVector,
    pub k1: usize,
    pub k2: usize,
    pub p1: f64,
    pub p2: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LeakageReport {
    /// `+inf` when some query is possible under one message and impossible under another.
    #[serde(serialize_with = "serialize_extended")]
    pub empirical_epsilon: f64,
    pub witness: Option<LeakageWitness>,
    #[serde(serialize_with = "serialize_extended_seq")]
    pub per_server_eps: Vec<f64>,
}

/// Largest per-server log-likelihood ratio between any two requested messages.
pub fn measure_leakage(full: &FullAllocation) -> Result<LeakageReport> {
    let shape = full.shape();
    let mut per_server_eps = Vec::with_capacity(shape.n());
    let mut best: Option<(f64, LeakageWitness)> = None;
    for n in 1..=shape.n() {
        let dists = (1..=shape.k())
            .map(|k| query_distribution(full, k, n))
            .collect::<Result<Vec<_>>>()?;
        let mut support: Vec<&QueryVector> = dists.iter().flat_map(|d| d.probs.keys()).collect();
        support.sort();
        support.dedup();

        let mut server_best: Option<(f64, LeakageWitness)> = None;
        for q in support {
            // ratio is maximized by the most and least likely messages
            let (mut hi, mut lo) = ((0usize, f64::NEG_INFINITY), (0usize, f64::INFINITY));
            for (i, d) in dists.iter().enumerate() {
                let p = d.prob(q);
                if p > hi.1 {
                    hi = (i, p);
                }
                if p < lo.1 {
                    lo = (i, p);
                }
            }
            let ratio = if lo.1 > 0.0 {
                (hi.1 / lo.1).ln()
            } else {
                f64::INFINITY
            };
            if server_best.as_ref().is_none_or(|(r, _)| ratio > *r) {
                server_best = Some((
                    ratio,
                    LeakageWitness {
                        server: n,
                        query: q.clone(),
                        k1: hi.0 + 1,
                        k2: lo.0 + 1,
                        p1: hi.1,
                        p2: lo.1,
                    },
                ));
            }
        }
        let (eps, witness) = server_best.expect("every message has nonempty support");
        per_server_eps.push(eps);
        if best.as_ref().is_none_or(|(r, _)| eps > *r) {
            best = Some((eps, witness));
        }
    }
    let (empirical_epsilon, witness) = best.expect("N >= 2");
    Ok(LeakageReport {
        empirical_epsilon,
        witness: Some(witness),
        per_server_eps,
    })
}

/// Worst-case over `k` of `p_d^k + (N/(N-1))(1 - p_d^k)`.
pub fn exact_download_cost(full: &FullAllocation) -> f64 {
    let n = full.shape().n() as f64;
    (1..=full.shape().k())
        .map(|k| {
            let direct: f64 = full
                .iter_message(k)
                .filter(|(f, _, _)| f.is_zero())
                .map(|(_, _, p)| p)
                .sum();
            direct + n / (n - 1.0) * (1.0 - direct)
        })
        .fold(f64::NEG_INFINITY, f64::max)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonteCarloEstimate {
    pub mean: f64,
    pub std_error: f64,
    pub trials: u64,
}

/// Mean normalized download over `trials` independent retrievals of message `k`.
///
/// Trial `i` draws from `trial_rng(seed, i)`, and sums are accumulated as
/// integers, so the output is bit-identical regardless of thread scheduling.
pub fn monte_carlo_cost(
    params: &SchemeParams,
    alloc: &WeightAllocation,
    k: usize,
    trials: u64,
    seed: u64,
) -> Result<MonteCarloEstimate> {
    if trials == 0 {
        return Err(Error::InvalidParams("trials must be >= 1".into()));
    }
    let shape = params.shape();
    let sampler = KeySampler::new(params, alloc)?;
    let store = MessageStore::random(shape, seed);
    let (sum, sum_sq) = (0..trials)
        .into_par_iter()
        .map(|i| -> Result<(u64, u64)> {
            let key = sampler.sample(&mut trial_rng(seed, i));
            let t = retrieve_with_key(shape, k, key, &store)?;
            if t.decoded != store.message(k) {
                return Err(Error::Decode(format!(
                    "trial {i} decoded the wrong message"
                )));
            }
            let d = t.downloaded_symbols as u64;
            Ok((d, d * d))
        })
        .try_reduce(|| (0, 0), |a, b| Ok((a.0 + b.0, a.1 + b.1)))?;

    let len = (shape.n() - 1) as f64;
    let t = trials as f64;
    let mean_raw = sum as f64 / t;
    let var_raw = if trials > 1 {
        ((sum_sq as f64 - t * mean_raw * mean_raw) / (t - 1.0)).max(0.0)
    } else {
        0.0
    };
    Ok(MonteCarloEstimate {
        mean: mean_raw / len,
        std_error: (var_raw / t).sqrt() / len,
        trials,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct CorrectnessReport {
    pub all_correct: bool,
    pub cases: u64,
}

/// Run every `(k, f, π)` in scope against a random store and check the decoded message.
pub fn verify_correctness(
    shape: Shape,
    scope: PermutationScope,
    store_seed: u64,
) -> Result<CorrectnessReport> {
    let limit = match scope {
        PermutationScope::Cyclic => CYCLIC_TABLE_LIMIT,
        PermutationScope::All => FULL_TABLE_LIMIT,
    };
    verify_correctness_with_limit(shape, scope, store_seed, limit)
}

pub fn verify_correctness_with_limit(
    shape: Shape,
    scope: PermutationScope,
    store_seed: u64,
    limit: u128,
) -> Result<CorrectnessReport> {
    check_guard(table_size(shape, scope)?, limit, "correctness enumeration")?;
    let store = MessageStore::random(shape, store_seed);
    let keys = enumerate_keys(shape, None)?;
    let perms = enumerate_permutations_in_scope(shape.n(), scope, limit)?;
    let mut cases = 0u64;
    let mut all_correct = true;
    for k in 1..=shape.k() {
        for f in &keys {
            for pi in &perms {
                let key = RandomKey {
                    f: f.clone(),
                    pi: pi.clone(),
                };
                let ok = retrieve_with_key(shape, k, key, &store)
                    .map(|t| t.decoded == store.message(k))
                    .unwrap_or(false);
                all_correct &= ok;
                cases += 1;
            }
        }
    }
    Ok(CorrectnessReport { all_correct, cases })
}
