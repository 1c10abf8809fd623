#![allow(dead_code)]

//! Reference query/answer grids for N = 3, K = 2.
//!
//! Messages are `W_1 = (a1, a2)` and `W_2 = (b1, b2)`. Each row lists
//! `(F, π, [(query, answer); 3])` per server; `-` is the empty answer and
//! `+` is XOR.

use lpir::combinatorics::{enumerate_keys, enumerate_permutations, KeyVector, Permutation};
use lpir::protocol::{retrieve_with_key, MessageStore, RandomKey};
use lpir::Shape;

pub type Row = (usize, &'static str, [(&'static str, &'static str); 3]);

/// Reduced code, three permutations per key vector.
pub const REDUCED_W1: [Row; 9] = [
    (0, "210", [("20", "a2"), ("10", "a1"), ("00", "-")]),
    (0, "102", [("10", "a1"), ("00", "-"), ("20", "a2")]),
    (0, "021", [("00", "-"), ("20", "a2"), ("10", "a1")]),
    (1, "210", [("11", "a1+b1"), ("01", "b1"), ("21", "a2+b1")]),
    (1, "102", [("01", "b1"), ("21", "a2+b1"), ("11", "a1+b1")]),
    (1, "021", [("21", "a2+b1"), ("11", "a1+b1"), ("01", "b1")]),
    (2, "210", [("02", "b2"), ("22", "a2+b2"), ("12", "a1+b2")]),
    (2, "102", [("22", "a2+b2"), ("12", "a1+b2"), ("02", "b2")]),
    (2, "021", [("12", "a1+b2"), ("02", "b2"), ("22", "a2+b2")]),
];

pub const REDUCED_W2: [Row; 9] = [
    (0, "210", [("02", "b2"), ("01", "b1"), ("00", "-")]),
    (0, "102", [("01", "b1"), ("00", "-"), ("02", "b2")]),
    (0, "021", [("00", "-"), ("02", "b2"), ("01", "b1")]),
    (1, "210", [("11", "a1+b1"), ("10", "a1"), ("12", "a1+b2")]),
    (1, "102", [("10", "a1"), ("12", "a1+b2"), ("11", "a1+b1")]),
    (1, "021", [("12", "a1+b2"), ("11", "a1+b1"), ("10", "a1")]),
    (2, "210", [("20", "a2"), ("22", "a2+b2"), ("21", "a2+b1")]),
    (2, "102", [("22", "a2+b2"), ("21", "a2+b1"), ("20", "a2")]),
    (2, "021", [("21", "a2+b1"), ("20", "a2"), ("22", "a2+b2")]),
];

/// Every permutation, listed in reverse lexicographic order within each key vector.
pub const FULL_W1: [Row; 18] = [
    (0, "210", [("20", "a2"), ("10", "a1"), ("00", "-")]),
    (0, "201", [("20", "a2"), ("00", "-"), ("10", "a1")]),
    (0, "120", [("10", "a1"), ("20", "a2"), ("00", "-")]),
    (0, "102", [("10", "a1"), ("00", "-"), ("20", "a2")]),
    (0, "021", [("00", "-"), ("20", "a2"), ("10", "a1")]),
    (0, "012", [("00", "-"), ("10", "a1"), ("20", "a2")]),
    (1, "210", [("11", "a1+b1"), ("01", "b1"), ("21", "a2+b1")]),
    (1, "201", [("11", "a1+b1"), ("21", "a2+b1"), ("01", "b1")]),
    (1, "120", [("01", "b1"), ("11", "a1+b1"), ("21", "a2+b1")]),
    (1, "102", [("01", "b1"), ("21", "a2+b1"), ("11", "a1+b1")]),
    (1, "021", [("21", "a2+b1"), ("11", "a1+b1"), ("01", "b1")]),
    (1, "012", [("21", "a2+b1"), ("01", "b1"), ("11", "a1+b1")]),
    (2, "210", [("02", "b2"), ("22", "a2+b2"), ("12", "a1+b2")]),
    (2, "201", [("02", "b2"), ("12", "a1+b2"), ("22", "a2+b2")]),
    (2, "120", [("22", "a2+b2"), ("02", "b2"), ("12", "a1+b2")]),
    (2, "102", [("22", "a2+b2"), ("12", "a1+b2"), ("02", "b2")]),
    (2, "021", [("12", "a1+b2"), ("02", "b2"), ("22", "a2+b2")]),
    (2, "012", [("12", "a1+b2"), ("22", "a2+b2"), ("02", "b2")]),
];

pub const FULL_W2: [Row; 18] = [
    (0, "210", [("02", "b2"), ("01", "b1"), ("00", "-")]),
    (0, "201", [("02", "b2"), ("00", "-"), ("01", "b1")]),
    (0, "120", [("01", "b1"), ("02", "b2"), ("00", "-")]),
    (0, "102", [("01", "b1"), ("00", "-"), ("02", "b2")]),
    (0, "021", [("00", "-"), ("02", "b2"), ("01", "b1")]),
    (0, "012", [("00", "-"), ("01", "b1"), ("02", "b2")]),
    (1, "210", [("11", "a1+b1"), ("10", "a1"), ("12", "a1+b2")]),
    (1, "201", [("11", "a1+b1"), ("12", "a1+b2"), ("10", "a1")]),
    (1, "120", [("10", "a1"), ("11", "a1+b1"), ("12", "a1+b2")]),
    (1, "102", [("10", "a1"), ("12", "a1+b2"), ("11", "a1+b1")]),
    (1, "021", [("12", "a1+b2"), ("11", "a1+b1"), ("10", "a1")]),
    (1, "012", [("12", "a1+b2"), ("10", "a1"), ("11", "a1+b1")]),
    (2, "210", [("20", "a2"), ("22", "a2+b2"), ("21", "a2+b1")]),
    (2, "201", [("20", "a2"), ("21", "a2+b1"), ("22", "a2+b2")]),
    (2, "120", [("22", "a2+b2"), ("20", "a2"), ("21", "a2+b1")]),
    (2, "102", [("22", "a2+b2"), ("21", "a2+b1"), ("20", "a2")]),
    (2, "021", [("21", "a2+b1"), ("20", "a2"), ("22", "a2+b2")]),
    (2, "012", [("21", "a2+b1"), ("22", "a2+b2"), ("20", "a2")]),
];

/// Symbols are distinct bits so every XOR combination renders uniquely.
pub fn symbolic_store(shape: Shape) -> MessageStore {
    MessageStore::from_bytes(shape, &[0x01, 0x02, 0x04, 0x08]).unwrap()
}

pub fn render(payload: Option<u8>) -> String {
    let Some(byte) = payload else {
        return "-".into();
    };
    let names = ["a1", "a2", "b1", "b2"];
    let parts: Vec<&str> = (0..4)
        .filter(|bit| byte & (1 << bit) != 0)
        .map(|bit| names[bit])
        .collect();
    parts.join("+")
}

pub fn perm(text: &str) -> Permutation {
    Permutation::new(text.bytes().map(|b| usize::from(b - b'0')).collect()).unwrap()
}

/// Compares every row of `rows` against the generated grid for message `k`.
/// Returns the mismatches as readable strings.
pub fn mismatches(k: usize, rows: &[Row]) -> Vec<String> {
    let shape = Shape::new(3, 2).unwrap();
    let store = symbolic_store(shape);
    let mut out = Vec::new();
    for &(f, pi, cells) in rows {
        let key = RandomKey::new(shape, KeyVector::new(vec![f], 3).unwrap(), perm(pi)).unwrap();
        let t = retrieve_with_key(shape, k, key, &store).unwrap();
        for (server, (q, a)) in cells.iter().enumerate() {
            let got_q = t.queries[server].to_string();
            let got_a = render(t.answers[server].payload);
            if got_q != *q || got_a != *a {
                out.push(format!(
                    "k={k} F={f} pi={pi} server {}: expected {q}/{a}, got {got_q}/{got_a}",
                    server + 1
                ));
            }
        }
        if t.decoded != store.message(k) {
            out.push(format!("k={k} F={f} pi={pi}: decoded {:?}", t.decoded));
        }
    }
    out
}

/// The (F, π) order in which the full grid is generated: keys ascending,
/// permutations descending.
pub fn generated_full_order() -> Vec<(usize, String)> {
    let shape = Shape::new(3, 2).unwrap();
    let mut perms = enumerate_permutations(3, false).unwrap();
    perms.reverse();
    let mut order = Vec::new();
    for f in enumerate_keys(shape, None).unwrap() {
        for pi in &perms {
            let text: String = pi.mapping().iter().map(|v| v.to_string()).collect();
            order.push((f.entries()[0], text));
        }
    }
    order
}
