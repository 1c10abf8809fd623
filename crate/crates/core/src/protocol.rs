//! The permuted TSC retrieval code over 8-bit symbols.
//!
//! Each message holds `L = N - 1` symbols `W_k[1..=L]`; `W_k[0]` is an
//! implicit zero. Server `n` answers query `q` with `⊕_m W_m[q_m]`, or with
//! nothing when `q` is all-zero.

use rand::distr::weighted::WeightedIndex;
use rand::distr::Distribution;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::allocation::{validate, WeightAllocation};
use crate::combinatorics::{binomial, unrank_combination, KeyVector, Permutation, QueryVector};
use crate::error::{Error, Result};
use crate::params::{SchemeParams, Shape};

/// The deterministic generator for trial `index` under `seed`.
///
/// Each trial gets its own ChaCha stream, so results do not depend on the
/// order in which trials run.
pub fn trial_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// `K` messages of `N - 1` symbols, row-major by message.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MessageStore {
    shape: Shape,
    symbols: Vec<u8>,
}

impl MessageStore {
    pub fn from_bytes(shape: Shape, bytes: &[u8]) -> Result<Self> {
        let want = shape.k() * (shape.n() - 1);
        if bytes.len() != want {
            return Err(Error::Store(format!(
                "expected {want} bytes (K = {} messages of N - 1 = {} symbols), got {}",
                shape.k(),
                shape.n() - 1,
                bytes.len()
            )));
        }
        Ok(MessageStore {
            shape,
            symbols: bytes.to_vec(),
        })
    }

    pub fn random(shape: Shape, seed: u64) -> Self {
        let mut symbols = vec![0u8; shape.k() * (shape.n() - 1)];
        ChaCha8Rng::seed_from_u64(seed).fill_bytes(&mut symbols);
        MessageStore { shape, symbols }
    }

    pub fn shape(&self) -> Shape {
        self.shape
    }

    /// Message length `L = N - 1`.
    pub fn message_len(&self) -> usize {
        self.shape.n() - 1
    }

    /// `W_k[1..=L]` for a 1-based `k`.
    pub fn message(&self, k: usize) -> &[u8] {
        let len = self.message_len();
        &self.symbols[(k - 1) * len..k * len]
    }

    /// `W_k[index]`, where index 0 is the dummy zero symbol.
    pub fn symbol(&self, k: usize, index: usize) -> u8 {
        match index {
            0 => 0,
            i => self.message(k)[i - 1],
        }
    }

    pub fn as_bytes(&self) -> &[u8] {
        &self.symbols
    }
}

/// The user's private randomness `F* = (F, π)`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
pub struct RandomKey {
    pub f: KeyVector,
    pub pi: Permutation,
}

impl RandomKey {
    pub fn new(shape: Shape, f: KeyVector, pi: Permutation) -> Result<Self> {
        if f.len() != shape.k() - 1 {
            return Err(Error::InvalidParams(format!(
                "key vector has length {}, expected K - 1 = {}",
                f.len(),
                shape.k() - 1
            )));
        }
        if pi.len() != shape.n() {
            return Err(Error::InvalidParams(format!(
                "permutation has length {}, expected N = {}",
                pi.len(),
                shape.n()
            )));
        }
        if f.entries().iter().any(|&e| e >= shape.n()) {
            return Err(Error::InvalidParams(format!(
                "key vector {f} has entries >= N"
            )));
        }
        Ok(RandomKey { f, pi })
    }

    /// Desired-symbol index `i_n = (π(n) - Σ F) mod N` at each server.
    fn symbol_indices(&self, n_servers: usize) -> impl Iterator<Item = usize> + '_ {
        let sigma = self.f.sum_mod(n_servers);
        self.pi
            .mapping()
            .iter()
            .map(move |&v| (v + n_servers - sigma) % n_servers)
    }
}

/// A server reply: nothing for the all-zero query, otherwise one symbol.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(transparent)]
pub struct Answer {
    pub payload: Option<u8>,
}

impl Answer {
    pub fn len(&self) -> usize {
        usize::from(self.payload.is_some())
    }

    pub fn is_empty(&self) -> bool {
        self.payload.is_none()
    }
}

fn check_message_index(shape: Shape, k: usize) -> Result<()> {
    if k == 0 || k > shape.k() {
        return Err(Error::OutOfRange {
            what: "message index k",
            value: k as i64,
            min: 1,
            max: shape.k() as i64,
        });
    }
    Ok(())
}

/// Precomputed class weights for repeated key sampling.
#[derive(Debug, Clone)]
pub struct KeySampler {
    shape: Shape,
    classes: WeightedIndex<f64>,
}

impl KeySampler {
    pub fn new(params: &SchemeParams, alloc: &WeightAllocation) -> Result<Self> {
        let report = validate(params, alloc)?;
        if !(report.normalization_ok && report.nonneg_ok) {
            return Err(Error::MalformedAllocation(report.details.join("; ")));
        }
        let masses = alloc.class_masses(params.shape())?;
        let classes =
            WeightedIndex::new(&masses).map_err(|e| Error::MalformedAllocation(e.to_string()))?;
        Ok(KeySampler {
            shape: params.shape(),
            classes,
        })
    }

    /// Weight class, then a uniform key of that weight, then a uniform cyclic `π`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> RandomKey {
        let n = self.shape.n();
        let len = self.shape.k() - 1;
        let weight = self.classes.sample(rng);
        let count = binomial(len as u64, weight as u64).expect("class size fits in u64");
        let positions = unrank_combination(len, weight, rng.random_range(0..count))
            .expect("rank drawn below class size");
        let mut entries = vec![0usize; len];
        for pos in positions {
            entries[pos] = rng.random_range(1..n);
        }
        let f = KeyVector::new(entries, n).expect("entries drawn below N");
        let pi = Permutation::cyclic(n, rng.random_range(0..n));
        RandomKey { f, pi }
    }
}

/// Draw a key for retrieving message `k` under a reduced-code allocation.
pub fn sample_key<R: Rng + ?Sized>(
    params: &SchemeParams,
    alloc: &WeightAllocation,
    k: usize,
    rng: &mut R,
) -> Result<RandomKey> {
    check_message_index(params.shape(), k)?;
    Ok(KeySampler::new(params, alloc)?.sample(rng))
}

/// The `N` queries for message `k`: `F` with `(π(n) - Σ F) mod N` inserted at position `k`.
pub fn make_queries(shape: Shape, k: usize, key: &RandomKey) -> Result<Vec<QueryVector>> {
    check_message_index(shape, k)?;
    let n = shape.n();
    let f = key.f.entries();
    Ok(key
        .symbol_indices(n)
        .map(|desired| {
            let mut q = Vec::with_capacity(shape.k());
            q.extend_from_slice(&f[..k - 1]);
            q.push(desired);
            q.extend_from_slice(&f[k - 1..]);
            QueryVector::from_parts(q)
        })
        .collect())
}

/// Server-side answer `W_1[q_1] ⊕ … ⊕ W_K[q_K]`.
pub fn answer_query(shape: Shape, q: &QueryVector, store: &MessageStore) -> Result<Answer> {
    if q.len() != shape.k() {
        return Err(Error::MalformedQuery(format!(
            "query {q} has length {}, expected K = {}",
            q.len(),
            shape.k()
        )));
    }
    if let Some(&bad) = q.entries().iter().find(|&&e| e >= shape.n()) {
        return Err(Error::MalformedQuery(format!(
            "query {q} has entry {bad} outside [0:{}]",
            shape.n() - 1
        )));
    }
    if store.shape() != shape {
        return Err(Error::Store("store shape does not match parameters".into()));
    }
    if q.is_zero() {
        return Ok(Answer { payload: None });
    }
    let symbol = q
        .entries()
        .iter()
        .enumerate()
        .fold(0u8, |acc, (m, &idx)| acc ^ store.symbol(m + 1, idx));
    Ok(Answer {
        payload: Some(symbol),
    })
}

/// Recover `W_k[1..=N-1]` from the `N` answers by cancelling the interference.
pub fn decode(shape: Shape, k: usize, key: &RandomKey, answers: &[Answer]) -> Result<Vec<u8>> {
    check_message_index(shape, k)?;
    let n = shape.n();
    if answers.len() != n {
        return Err(Error::Decode(format!(
            "expected {n} answers, got {}",
            answers.len()
        )));
    }
    let indices: Vec<usize> = key.symbol_indices(n).collect();
    for (server, (&i, a)) in indices.iter().zip(answers).enumerate() {
        // only the interference server under a zero key sees the all-zero query
        let expect_empty = i == 0 && key.f.is_zero();
        if a.is_empty() != expect_empty {
            return Err(Error::Decode(format!(
                "server {} returned {} symbol(s) but the key implies {}",
                server + 1,
                a.len(),
                usize::from(!expect_empty)
            )));
        }
    }
    let interference_server = key.pi.preimage(key.f.sum_mod(n));
    let interference = answers[interference_server - 1].payload.unwrap_or(0);
    let mut out = vec![0u8; n - 1];
    for (&i, a) in indices.iter().zip(answers) {
        if i != 0 {
            out[i - 1] = a.payload.expect("checked nonempty") ^ interference;
        }
    }
    Ok(out)
}

/// Everything exchanged in one retrieval.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RetrievalTranscript {
    pub k: usize,
    pub key: RandomKey,
    pub queries: Vec<QueryVector>,
    pub answers: Vec<Answer>,
    pub decoded: Vec<u8>,
    pub downloaded_symbols: usize,
}

/// Queries, answers and decoding for a given key against in-process servers.
pub fn retrieve_with_key(
    shape: Shape,
    k: usize,
    key: RandomKey,
    store: &MessageStore,
) -> Result<RetrievalTranscript> {
    let queries = make_queries(shape, k, &key)?;
    let answers = queries
        .iter()
        .map(|q| answer_query(shape, q, store))
        .collect::<Result<Vec<_>>>()?;
    let decoded = decode(shape, k, &key, &answers)?;
    let downloaded_symbols = answers.iter().map(Answer::len).sum();
    Ok(RetrievalTranscript {
        k,
        key,
        queries,
        answers,
        decoded,
        downloaded_symbols,
    })
}

/// Sample a key and run one full retrieval of message `k`.
pub fn run_retrieval<R: Rng + ?Sized>(
    params: &SchemeParams,
    alloc: &WeightAllocation,
    k: usize,
    store: &MessageStore,
    rng: &mut R,
) -> Result<RetrievalTranscript> {
    let key = sample_key(params, alloc, k, rng)?;
    retrieve_with_key(params.shape(), k, key, store)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::optimal_allocation;
    use crate::combinatorics::{enumerate_keys, enumerate_permutations};
    use std::f64::consts::LN_2;

    fn shape(n: usize, k: usize) -> Shape {
        Shape::new(n, k).unwrap()
    }

    fn key(n: usize, f: &[usize], pi: &[usize]) -> RandomKey {
        RandomKey {
            f: KeyVector::new(f.to_vec(), n).unwrap(),
            pi: Permutation::new(pi.to_vec()).unwrap(),
        }
    }

    fn render(qs: &[QueryVector]) -> Vec<String> {
        qs.iter().map(|q| q.to_string()).collect()
    }

    // a1, a2, b1, b2 as distinct bits so XORs are identifiable
    fn table_store() -> MessageStore {
        MessageStore::from_bytes(shape(3, 2), &[0x01, 0x02, 0x04, 0x08]).unwrap()
    }

    #[test]
    fn query_examples() {
        let s = shape(3, 2);
        let q = make_queries(s, 1, &key(3, &[0], &[2, 1, 0])).unwrap();
        assert_eq!(render(&q), ["20", "10", "00"]);
        let q = make_queries(s, 2, &key(3, &[1], &[2, 1, 0])).unwrap();
        assert_eq!(render(&q), ["11", "10", "12"]);
        // direct download: the server with π(n) = 0 gets the zero query
        let q = make_queries(s, 1, &key(3, &[0], &[1, 0, 2])).unwrap();
        assert!(q[1].is_zero());
        assert!(make_queries(s, 3, &key(3, &[0], &[1, 0, 2])).is_err());
        assert!(make_queries(s, 0, &key(3, &[0], &[1, 0, 2])).is_err());
    }

    #[test]
    fn answer_examples() {
        let s = shape(3, 2);
        let store = table_store();
        let a = |e: [usize; 2]| {
            answer_query(s, &QueryVector::new(e.to_vec(), 3).unwrap(), &store).unwrap()
        };
        assert_eq!(a([2, 0]).payload, Some(0x02));
        assert_eq!(a([0, 0]).payload, None);
        assert_eq!(a([1, 1]).payload, Some(0x01 ^ 0x04));
        assert!(answer_query(s, &QueryVector::new(vec![1, 1, 1], 3).unwrap(), &store).is_err());
        assert!(QueryVector::new(vec![3, 0], 3).is_err());
    }

    #[test]
    fn decode_examples() {
        let s = shape(3, 2);
        let store = table_store();
        let k = key(3, &[1], &[2, 1, 0]);
        let answers = [0x01 ^ 0x04, 0x04, 0x02 ^ 0x04].map(|v| Answer { payload: Some(v) });
        assert_eq!(decode(s, 1, &k, &answers).unwrap(), vec![0x01, 0x02]);

        let k = key(3, &[0], &[2, 1, 0]);
        let t = retrieve_with_key(s, 1, k, &store).unwrap();
        assert_eq!(t.decoded, store.message(1));
        assert_eq!(t.downloaded_symbols, 2);
    }

    #[test]
    fn decode_rejects_inconsistent_lengths() {
        let s = shape(3, 2);
        let k = key(3, &[1], &[2, 1, 0]);
        let answers = [
            Answer { payload: Some(1) },
            Answer { payload: None },
            Answer { payload: Some(3) },
        ];
        assert!(matches!(decode(s, 1, &k, &answers), Err(Error::Decode(_))));
        let k0 = key(3, &[0], &[2, 1, 0]);
        let full = [Answer { payload: Some(1) }; 3];
        assert!(matches!(decode(s, 1, &k0, &full), Err(Error::Decode(_))));
        assert!(decode(s, 1, &k0, &full[..2]).is_err());
    }

    #[test]
    fn exhaustive_roundtrip_n3_k2() {
        let s = shape(3, 2);
        let store = MessageStore::random(s, 11);
        let mut cases = 0;
        for m in 1..=2 {
            for f in enumerate_keys(s, None).unwrap() {
                for pi in enumerate_permutations(3, false).unwrap() {
                    let t =
                        retrieve_with_key(s, m, RandomKey { f: f.clone(), pi }, &store).unwrap();
                    assert_eq!(t.decoded, store.message(m));
                    // q|k recovers f at every server
                    assert!(t.queries.iter().all(|q| q.without(m) == f));
                    let zeros = t.queries.iter().filter(|q| q.is_zero()).count();
                    assert_eq!(t.downloaded_symbols == 2, f.is_zero());
                    assert_eq!(zeros == 1, f.is_zero());
                    cases += 1;
                }
            }
        }
        assert_eq!(cases, 36);
    }

    #[test]
    fn sampler_is_deterministic() {
        let p = SchemeParams::new(3, 3, 1.0).unwrap();
        let a = optimal_allocation(&p);
        let draw = |seed| {
            let mut rng = trial_rng(seed, 0);
            (0..50)
                .map(|_| sample_key(&p, &a, 1, &mut rng).unwrap())
                .collect::<Vec<_>>()
        };
        assert_eq!(draw(7), draw(7));
        assert_ne!(draw(7), draw(8));
    }

    #[test]
    fn sampler_class_frequencies() {
        let p = SchemeParams::new(3, 2, LN_2).unwrap();
        let a = optimal_allocation(&p);
        let sampler = KeySampler::new(&p, &a).unwrap();
        let mut rng = trial_rng(1, 0);
        let draws = 200_000;
        let zero = (0..draws)
            .filter(|_| sampler.sample(&mut rng).f.is_zero())
            .count();
        let freq = zero as f64 / draws as f64;
        // binomial sd = sqrt(0.25 / 2e5) ≈ 1.1e-3
        assert!((freq - 0.5).abs() < 5e-3, "{freq}");

        let p = SchemeParams::new(3, 4, 30.0).unwrap();
        let sampler = KeySampler::new(&p, &optimal_allocation(&p)).unwrap();
        let zero = (0..10_000)
            .filter(|_| sampler.sample(&mut rng).f.is_zero())
            .count();
        assert_eq!(zero, 10_000);
    }

    #[test]
    fn sampled_keys_are_cyclic() {
        let p = SchemeParams::new(5, 4, 0.5).unwrap();
        let sampler = KeySampler::new(&p, &optimal_allocation(&p)).unwrap();
        let mut rng = trial_rng(3, 9);
        for _ in 0..1000 {
            let key = sampler.sample(&mut rng);
            assert!(key.pi.is_cyclic());
            assert_eq!(key.f.len(), 3);
        }
    }

    #[test]
    fn store_loading() {
        let s = shape(3, 2);
        assert!(MessageStore::from_bytes(s, &[1, 2, 3]).is_err());
        let st = MessageStore::from_bytes(s, &[1, 2, 3, 4]).unwrap();
        assert_eq!(st.symbol(2, 0), 0);
        assert_eq!(st.symbol(2, 2), 4);
        assert_eq!(MessageStore::random(s, 5), MessageStore::random(s, 5));
    }

    #[test]
    fn transcript_json() {
        let s = shape(3, 2);
        let t = retrieve_with_key(s, 1, key(3, &[0], &[2, 1, 0]), &table_store()).unwrap();
        let v = serde_json::to_value(&t).unwrap();
        assert_eq!(v["answers"][2], serde_json::Value::Null);
        assert_eq!(v["key"]["pi"], serde_json::json!([2, 1, 0]));
        assert_eq!(v["downloaded_symbols"], 2);
    }
}
