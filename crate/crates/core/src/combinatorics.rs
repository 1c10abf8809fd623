//! Weight classes, key and query vectors, and server permutations.
//!
//! Key vectors `F ∈ [0:N-1]^{K-1}` and queries `q ∈ [0:N-1]^K` are encoded
//! as base-`N` integers with the first coordinate most significant, so
//! lexicographic order and numeric order coincide. Permutations are stored
//! as value sequences `(π(1), …, π(N))` over `[0:N-1]` and ranked in
//! lexicographic order.

use std::fmt;

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::params::Shape;

/// Largest number of permutations `enumerate_permutations` will list by default (`7!`).
pub const PERMUTATION_LIMIT: u64 = 5040;

/// Largest number of key vectors `enumerate_keys` will list.
pub const KEY_LIMIT: u64 = 10_000_000;

/// `C(n, k)` with overflow checking; class sizes beyond `2^63` are rejected.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) / (i + 1) stays integral at every step.
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > i64::MAX as u128 {
            return Err(Error::Overflow("binomial coefficient"));
        }
    }
    Ok(acc as u64)
}

pub(crate) fn checked_pow(base: u64, exp: u32, what: &'static str) -> Result<u64> {
    base.checked_pow(exp)
        .filter(|v| *v <= i64::MAX as u64)
        .ok_or(Error::Overflow(what))
}

fn checked_class(binom: u64, base: u64, j: u32, what: &'static str) -> Result<u64> {
    checked_pow(base, j, what)?
        .checked_mul(binom)
        .filter(|v| *v <= i64::MAX as u64)
        .ok_or(Error::Overflow(what))
}

/// `s_j = C(K-1, j)·(N-1)^j`, the number of key vectors of Hamming weight `j`.
pub fn key_class_size(shape: Shape, j: usize) -> Result<u64> {
    let len = shape.k() - 1;
    if j > len {
        return Err(Error::OutOfRange {
            what: "key weight j",
            value: j as i64,
            min: 0,
            max: len as i64,
        });
    }
    let b = binomial(len as u64, j as u64)?;
    checked_class(b, shape.n() as u64 - 1, j as u32, "key class size")
}

/// `t_j = C(K, j)·(N-1)^j`, the number of queries of Hamming weight `j`.
pub fn query_class_size(shape: Shape, j: usize) -> Result<u64> {
    let len = shape.k();
    if j > len {
        return Err(Error::OutOfRange {
            what: "query weight j",
            value: j as i64,
            min: 0,
            max: len as i64,
        });
    }
    let b = binomial(len as u64, j as u64)?;
    checked_class(b, shape.n() as u64 - 1, j as u32, "query class size")
}

/// All `s_0, …, s_{K-1}` at once.
pub fn key_class_sizes(shape: Shape) -> Result<Vec<u64>> {
    (0..shape.k()).map(|j| key_class_size(shape, j)).collect()
}

/// Unrank the `rank`-th `size`-subset of `[0, universe)` in lexicographic order.
pub fn unrank_combination(universe: usize, size: usize, mut rank: u64) -> Result<Vec<usize>> {
    let total = binomial(universe as u64, size as u64)?;
    if rank >= total {
        return Err(Error::OutOfRange {
            what: "combination rank",
            value: rank as i64,
            min: 0,
            max: total as i64 - 1,
        });
    }
    let mut out = Vec::with_capacity(size);
    let mut next = 0usize;
    for remaining in (1..=size).rev() {
        loop {
            // subsets whose smallest remaining element is `next`
            let with_next = binomial((universe - next - 1) as u64, (remaining - 1) as u64)?;
            if rank < with_next {
                out.push(next);
                next += 1;
                break;
            }
            rank -= with_next;
            next += 1;
        }
    }
    Ok(out)
}

fn fmt_digits(entries: &[usize], f: &mut fmt::Formatter<'_>) -> fmt::Result {
    let n = entries.iter().copied().max().unwrap_or(0);
    let sep = if n >= 10 { "," } else { "" };
    let body: Vec<String> = entries.iter().map(|e| e.to_string()).collect();
    write!(f, "{}", body.join(sep))
}

fn encode_digits(entries: &[usize], base: usize) -> u64 {
    entries
        .iter()
        .fold(0u64, |acc, &d| acc * base as u64 + d as u64)
}

fn decode_digits(mut code: u64, base: usize, len: usize) -> Vec<usize> {
    let mut out = vec![0; len];
    for slot in out.iter_mut().rev() {
        *slot = (code % base as u64) as usize;
        code /= base as u64;
    }
    out
}

fn validate_digits(entries: &[usize], base: usize, what: &str) -> Result<()> {
    if let Some(bad) = entries.iter().find(|&&e| e >= base) {
        return Err(Error::MalformedQuery(format!(
            "{what} entry {bad} is outside [0:{}]",
            base - 1
        )));
    }
    Ok(())
}

/// The interference selector `F`, a length-`(K-1)` vector over `[0:N-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct KeyVector {
    entries: Vec<usize>,
    weight: usize,
}

impl KeyVector {
    pub fn new(entries: Vec<usize>, n_servers: usize) -> Result<Self> {
        validate_digits(&entries, n_servers, "key vector")?;
        let weight = entries.iter().filter(|&&e| e != 0).count();
        Ok(KeyVector { entries, weight })
    }

    pub fn zero(len: usize) -> Self {
        KeyVector {
            entries: vec![0; len],
            weight: 0,
        }
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Hamming weight `‖F‖`.
    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn is_zero(&self) -> bool {
        self.weight == 0
    }

    /// `(Σ_j F_j) mod N`.
    pub fn sum_mod(&self, n_servers: usize) -> usize {
        self.entries.iter().sum::<usize>() % n_servers
    }

    pub fn encode(&self, n_servers: usize) -> u64 {
        encode_digits(&self.entries, n_servers)
    }

    pub fn decode(code: u64, n_servers: usize, len: usize) -> Self {
        let entries = decode_digits(code, n_servers, len);
        let weight = entries.iter().filter(|&&e| e != 0).count();
        KeyVector { entries, weight }
    }
}

impl fmt::Display for KeyVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_digits(&self.entries, f)
    }
}

impl Serialize for KeyVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

/// A query sent to one server: a length-`K` vector over `[0:N-1]`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct QueryVector {
    entries: Vec<usize>,
    weight: usize,
}

impl QueryVector {
    pub fn new(entries: Vec<usize>, n_servers: usize) -> Result<Self> {
        validate_digits(&entries, n_servers, "query")?;
        let weight = entries.iter().filter(|&&e| e != 0).count();
        Ok(QueryVector { entries, weight })
    }

    pub fn entries(&self) -> &[usize] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn weight(&self) -> usize {
        self.weight
    }

    pub fn is_zero(&self) -> bool {
        self.weight == 0
    }

    /// `q|k`: the query with its `k`-th coordinate (1-based) removed.
    pub fn without(&self, k: usize) -> KeyVector {
        let entries: Vec<usize> = self
            .entries
            .iter()
            .enumerate()
            .filter(|(i, _)| i + 1 != k)
            .map(|(_, &e)| e)
            .collect();
        let weight = entries.iter().filter(|&&e| e != 0).count();
        KeyVector { entries, weight }
    }

    pub fn encode(&self, n_servers: usize) -> u64 {
        encode_digits(&self.entries, n_servers)
    }

    pub fn decode(code: u64, n_servers: usize, len: usize) -> Self {
        let entries = decode_digits(code, n_servers, len);
        let weight = entries.iter().filter(|&&e| e != 0).count();
        QueryVector { entries, weight }
    }

    pub(crate) fn from_parts(entries: Vec<usize>) -> Self {
        let weight = entries.iter().filter(|&&e| e != 0).count();
        QueryVector { entries, weight }
    }
}

impl fmt::Display for QueryVector {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt_digits(&self.entries, f)
    }
}

impl Serialize for QueryVector {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.entries.serialize(s)
    }
}

/// A bijection `π: [1:N] → [0:N-1]` stored as `(π(1), …, π(N))`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Permutation {
    mapping: Vec<usize>,
    is_cyclic: bool,
}

impl Permutation {
    pub fn new(mapping: Vec<usize>) -> Result<Self> {
        let n = mapping.len();
        let mut seen = vec![false; n];
        for &v in &mapping {
            if v >= n || seen[v] {
                return Err(Error::InvalidParams(format!(
                    "{mapping:?} is not a bijection onto [0:{}]",
                    n.saturating_sub(1)
                )));
            }
            seen[v] = true;
        }
        let is_cyclic = mapping.windows(2).all(|w| w[1] == (w[0] + 1) % n);
        Ok(Permutation { mapping, is_cyclic })
    }

    /// The cyclic permutation with `π(1) = shift`.
    pub fn cyclic(n_servers: usize, shift: usize) -> Self {
        let mapping = (0..n_servers).map(|i| (shift + i) % n_servers).collect();
        Permutation {
            mapping,
            is_cyclic: true,
        }
    }

    pub fn mapping(&self) -> &[usize] {
        &self.mapping
    }

    pub fn is_cyclic(&self) -> bool {
        self.is_cyclic
    }

    pub fn len(&self) -> usize {
        self.mapping.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mapping.is_empty()
    }

    /// `π(server)` for a 1-based server index.
    pub fn apply(&self, server: usize) -> usize {
        self.mapping[server - 1]
    }

    /// The 1-based server `n` with `π(n) = value`.
    pub fn preimage(&self, value: usize) -> usize {
        self.mapping
            .iter()
            .position(|&v| v == value)
            .map(|i| i + 1)
            .expect("permutation is a bijection")
    }

    /// Lexicographic rank among all `N!` permutations (Lehmer code).
    pub fn rank(&self) -> u64 {
        let n = self.mapping.len();
        let mut rank = 0u64;
        for i in 0..n {
            let smaller_after = self.mapping[i + 1..]
                .iter()
                .filter(|&&v| v < self.mapping[i])
                .count() as u64;
            rank = rank * (n - i) as u64 + smaller_after;
        }
        rank
    }

    pub fn unrank(n_servers: usize, mut rank: u64) -> Result<Self> {
        let total = factorial(n_servers)?;
        if rank >= total {
            return Err(Error::OutOfRange {
                what: "permutation rank",
                value: rank as i64,
                min: 0,
                max: total as i64 - 1,
            });
        }
        let mut digits = vec![0u64; n_servers];
        for i in (0..n_servers).rev() {
            let radix = (n_servers - i) as u64;
            digits[i] = rank % radix;
            rank /= radix;
        }
        let mut pool: Vec<usize> = (0..n_servers).collect();
        let mapping = digits.iter().map(|&d| pool.remove(d as usize)).collect();
        Permutation::new(mapping)
    }
}

impl fmt::Display for Permutation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let body: Vec<String> = self.mapping.iter().map(|e| e.to_string()).collect();
        write!(f, "({})", body.join(","))
    }
}

impl Serialize for Permutation {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        self.mapping.serialize(s)
    }
}

pub fn factorial(n: usize) -> Result<u64> {
    (1..=n as u64).try_fold(1u64, |acc, i| {
        acc.checked_mul(i).ok_or(Error::Overflow("factorial"))
    })
}

/// All key vectors of a given weight (or every weight), in lexicographic order.
pub fn enumerate_keys(shape: Shape, weight: Option<usize>) -> Result<Vec<KeyVector>> {
    let len = shape.k() - 1;
    let n = shape.n();
    let expected = match weight {
        Some(j) => key_class_size(shape, j)?,
        None => checked_pow(n as u64, len as u32, "key space size")?,
    };
    if expected > KEY_LIMIT {
        return Err(Error::GuardExceeded {
            what: "key enumeration",
            size: expected as u128,
            limit: KEY_LIMIT as u128,
        });
    }
    let total = checked_pow(n as u64, len as u32, "key space size")?;
    let out: Vec<KeyVector> = (0..total)
        .map(|code| KeyVector::decode(code, n, len))
        .filter(|f| weight.is_none_or(|j| f.weight() == j))
        .collect();
    debug_assert_eq!(out.len() as u64, expected);
    Ok(out)
}

/// Either the `N` cyclic permutations or all `N!` bijections, lexicographically.
pub fn enumerate_permutations(n_servers: usize, cyclic_only: bool) -> Result<Vec<Permutation>> {
    enumerate_permutations_with_limit(n_servers, cyclic_only, PERMUTATION_LIMIT)
}

pub fn enumerate_permutations_with_limit(
    n_servers: usize,
    cyclic_only: bool,
    limit: u64,
) -> Result<Vec<Permutation>> {
    if cyclic_only {
        return Ok((0..n_servers)
            .map(|shift| Permutation::cyclic(n_servers, shift))
            .collect());
    }
    let total = factorial(n_servers)?;
    if total > limit {
        return Err(Error::GuardExceeded {
            what: "permutation enumeration",
            size: total as u128,
            limit: limit as u128,
        });
    }
    (0..total)
        .map(|r| Permutation::unrank(n_servers, r))
        .collect()
}
