//! The reduced and full allocation problems as explicit linear programs.

use serde::Serialize;

use super::lp::LinearProgram;
use super::simplex::solve;
use crate::combinatorics::{enumerate_permutations, factorial, key_class_sizes, QueryVector};
use crate::error::{Error, Result};
use crate::params::SchemeParams;

/// Largest full-problem LP (variables, including the epigraph variable).
pub const P1_VARIABLE_LIMIT: u128 = 5000;
/// Largest gap accepted between the two optimal values.
pub const REDUCTION_TOL: f64 = 1e-6;

/// Reduced problem over the per-key weights `p_0..p_{K-1}`.
///
/// Minimizes `(N/(N-1))(1 - p_0)` as `-(N/(N-1)) p_0` plus a constant.
pub fn build_p2(params: &SchemeParams) -> Result<LinearProgram> {
    let shape = params.shape();
    let k = shape.k();
    let n = shape.n() as f64;
    let e = params.epsilon().exp();
    let s = key_class_sizes(shape)?;

    let names = (0..k).map(|j| format!("p{j}")).collect();
    let mut lp = LinearProgram::new(names, vec![0.0; k]);
    lp.objective[0] = -n / (n - 1.0);
    lp.objective_offset = n / (n - 1.0);

    let adjacency = |a: usize, b: usize| {
        let mut row = vec![0.0; k];
        row[a] = 1.0;
        row[b] = -e;
        row
    };
    for j in 0..k - 1 {
        lp.add_le(adjacency(j, j + 1), 0.0);
    }
    for j in 1..k {
        lp.add_le(adjacency(j, j - 1), 0.0);
    }
    lp.add_eq(s.iter().map(|&sj| n * sj as f64).collect(), 1.0);
    Ok(lp)
}

/// Number of variables in the full problem: `K·N^{K-1}·N! + 1`.
pub fn p1_variable_count(params: &SchemeParams) -> u128 {
    let shape = params.shape();
    let n = shape.n() as u128;
    let keys = n.checked_pow(shape.k() as u32 - 1).unwrap_or(u128::MAX);
    let perms = factorial(shape.n()).map(u128::from).unwrap_or(u128::MAX);
    keys.saturating_mul(perms)
        .saturating_mul(shape.k() as u128)
        .saturating_add(1)
}

pub fn build_p1(params: &SchemeParams) -> Result<LinearProgram> {
    build_p1_with_limit(params, P1_VARIABLE_LIMIT)
}

/// Full problem over `p^{k,π}_{(f)}` for every permutation, with an epigraph
/// variable `d` bounding the per-message download cost.
///
/// Variable `((k-1)·|F| + code(f))·N! + rank(π)` holds `p^{k,π}_{(f)}`; `d` is last.
pub fn build_p1_with_limit(params: &SchemeParams, limit: u128) -> Result<LinearProgram> {
    let size = p1_variable_count(params);
    if size > limit {
        return Err(Error::GuardExceeded {
            what: "full-problem LP variables",
            size,
            limit,
        });
    }
    let shape = params.shape();
    let (n, k) = (shape.n(), shape.k());
    let e = params.epsilon().exp();
    let perms = enumerate_permutations(n, false)?;
    let n_perms = perms.len();
    let n_keys = n.pow(k as u32 - 1);
    let n_vars = size as usize;
    let d = n_vars - 1;
    let var = |msg: usize, f_code: usize, pi: usize| ((msg - 1) * n_keys + f_code) * n_perms + pi;

    let mut names = vec![String::new(); n_vars];
    for msg in 1..=k {
        for f_code in 0..n_keys {
            for (pi_idx, pi) in perms.iter().enumerate() {
                let f = crate::combinatorics::KeyVector::decode(f_code as u64, n, k - 1);
                names[var(msg, f_code, pi_idx)] = format!("p[k{msg},f{f},pi{pi}]");
            }
        }
    }
    names[d] = "d".into();
    let mut lower = vec![0.0; n_vars];
    lower[d] = f64::NEG_INFINITY;
    let mut lp = LinearProgram::new(names, lower);
    lp.objective[d] = 1.0;

    // DP rows: for server n and query q, message k is consistent only with
    // f = q|k and the permutations sending n to q_k + Σ(q|k).
    let nf = n as f64;
    let n_queries = n.pow(k as u32);
    for server in 1..=n {
        for code in 0..n_queries {
            let q = QueryVector::decode(code as u64, n, k);
            let support = |msg: usize| {
                let f = q.without(msg);
                let f_code = f.encode(n) as usize;
                let target = (q.entries()[msg - 1] + f.sum_mod(n)) % n;
                perms
                    .iter()
                    .enumerate()
                    .filter(move |(_, pi)| pi.apply(server) == target)
                    .map(move |(idx, _)| var(msg, f_code, idx))
            };
            for k1 in 1..=k {
                for k2 in (1..=k).filter(|&k2| k2 != k1) {
                    let mut row = vec![0.0; n_vars];
                    support(k1).for_each(|v| row[v] += 1.0);
                    support(k2).for_each(|v| row[v] -= e);
                    lp.add_le(row, 0.0);
                }
            }
        }
    }

    // epigraph: N/(N-1) - p_d^k/(N-1) <= d, with p_d^k the mass on f = 0
    for msg in 1..=k {
        let mut row = vec![0.0; n_vars];
        for pi in 0..n_perms {
            row[var(msg, 0, pi)] = -1.0 / (nf - 1.0);
        }
        row[d] = -1.0;
        lp.add_le(row, -nf / (nf - 1.0));
    }

    for msg in 1..=k {
        let mut row = vec![0.0; n_vars];
        for f_code in 0..n_keys {
            for pi in 0..n_perms {
                row[var(msg, f_code, pi)] = 1.0;
            }
        }
        lp.add_eq(row, 1.0);
    }
    Ok(lp)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ReductionCheck {
    pub p1_value: f64,
    pub p2_value: f64,
    pub agree: bool,
}

/// Solves both problems and compares their optimal values.
pub fn verify_reduction(params: &SchemeParams) -> Result<ReductionCheck> {
    let p1 = build_p1(params)?;
    let p2 = build_p2(params)?;
    let p1_value = solve(&p1)?.value;
    let p2_value = solve(&p2)?.value;
    Ok(ReductionCheck {
        p1_value,
        p2_value,
        agree: (p1_value - p2_value).abs() <= REDUCTION_TOL,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::allocation::{optimal_allocation, samy_allocation};
    use crate::tradeoff::{cost_tsc, cost_ub};

    fn params(n: usize, k: usize, eps: f64) -> SchemeParams {
        SchemeParams::new(n, k, eps).unwrap()
    }

    #[test]
    fn p2_shape() {
        let lp = build_p2(&params(2, 3, 2f64.ln())).unwrap();
        assert_eq!(lp.num_vars(), 3);
        assert_eq!(lp.ineq_constraints.len(), 4);
        assert_eq!(lp.eq_constraints.len(), 1);
        assert_eq!(lp.eq_constraints[0].coeffs, vec![2.0, 4.0, 2.0]);

        let lp = build_p2(&params(5, 2, 1.0)).unwrap();
        assert_eq!((lp.num_vars(), lp.ineq_constraints.len()), (2, 2));
    }

    #[test]
    fn p2_value_examples() {
        let s = solve(&build_p2(&params(2, 3, 2f64.ln())).unwrap()).unwrap();
        assert!((s.value - 14.0 / 9.0).abs() < 1e-8);

        for (n, k) in [(2, 3), (3, 4), (4, 2)] {
            let s = solve(&build_p2(&params(n, k, 0.0)).unwrap()).unwrap();
            let expected = 1.0 + (1..k).map(|i| (n as f64).powi(-(i as i32))).sum::<f64>();
            assert!((s.value - expected).abs() < 1e-10, "{n} {k}");
            let uniform = (n as f64).powi(-(k as i32));
            assert!(s.x.iter().all(|p| (p - uniform).abs() < 1e-12));
        }
    }

    #[test]
    fn p2_solution_matches_layered_allocation() {
        for (n, k) in [(2, 2), (2, 5), (3, 3), (4, 4)] {
            for eps in [0.3, 1.0, 2.5] {
                let p = params(n, k, eps);
                let s = solve(&build_p2(&p).unwrap()).unwrap();
                let opt = optimal_allocation(&p);
                for (a, b) in s.x.iter().zip(opt.probs()) {
                    assert!((a - b).abs() < 1e-8, "{n} {k} {eps}: {a} vs {b}");
                }
                assert!((s.value - cost_tsc(&p)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn samy_point_is_feasible_with_cost_ub() {
        for (n, k, eps) in [(2, 3, 0.7), (3, 4, 1.5), (4, 3, 0.1)] {
            let p = params(n, k, eps);
            let lp = build_p2(&p).unwrap();
            let samy = samy_allocation(&p);
            assert!(lp.max_violation(samy.probs()) < 1e-12);
            assert!((lp.objective_value(samy.probs()) - cost_ub(&p)).abs() < 1e-12);
            assert!(solve(&lp).unwrap().value <= cost_ub(&p) + 1e-12);
        }
    }

    #[test]
    fn p1_census() {
        let lp = build_p1(&params(2, 2, 0.0)).unwrap();
        assert_eq!(lp.num_vars(), 9);
        let lp = build_p1(&params(3, 2, 0.5)).unwrap();
        assert_eq!(lp.num_vars(), 37);
        // DP rows plus one epigraph row per message
        assert_eq!(lp.ineq_constraints.len(), 54 + 2);
        assert_eq!(lp.eq_constraints.len(), 2);
        assert_eq!(lp.var_lower_bounds[36], f64::NEG_INFINITY);
    }

    #[test]
    fn p1_guard() {
        let err = build_p1(&params(4, 4, 1.0)).unwrap_err();
        assert!(matches!(err, Error::GuardExceeded { size: 6145, .. }));
        assert!(build_p1_with_limit(&params(2, 2, 0.0), 8).is_err());
    }

    #[test]
    fn p1_capacity_value() {
        let s = solve(&build_p1(&params(2, 2, 0.0)).unwrap()).unwrap();
        assert!((s.value - 1.5).abs() < 1e-9);
    }

    #[test]
    fn reduction_examples() {
        let c = verify_reduction(&params(2, 2, 2f64.ln())).unwrap();
        assert!(c.agree && (c.p1_value - 4.0 / 3.0).abs() < 1e-9, "{c:?}");
        let c = verify_reduction(&params(3, 2, 2f64.ln())).unwrap();
        assert!(c.agree && (c.p1_value - 1.25).abs() < 1e-9, "{c:?}");
        let p = params(2, 3, 1.0);
        let c = verify_reduction(&p).unwrap();
        assert!(c.agree && (c.p2_value - cost_tsc(&p)).abs() < 1e-8, "{c:?}");
    }

    #[test]
    fn expanded_optimum_is_p1_feasible() {
        // the layered allocation extended to all permutations (zero on the
        // non-cyclic ones) is a feasible point of the full problem
        let p = params(3, 2, 0.8);
        let lp = build_p1(&p).unwrap();
        let full = crate::allocation::expand_to_full(&p, &optimal_allocation(&p)).unwrap();
        let perms = enumerate_permutations(3, false).unwrap();
        let mut x = vec![0.0; lp.num_vars()];
        for (msg, f, pi, prob) in full.iter() {
            let idx = perms.iter().position(|q| *q == pi).unwrap();
            x[((msg - 1) * 3 + f.encode(3) as usize) * perms.len() + idx] = prob;
        }
        *x.last_mut().unwrap() = cost_tsc(&p);
        assert!(lp.max_violation(&x) < 1e-12, "{}", lp.max_violation(&x));
    }
}
