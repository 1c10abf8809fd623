//! Dense two-phase tableau simplex.
//!
//! The model is brought to `min c·y, A y = b, y ≥ 0, b ≥ 0`: finite lower
//! bounds are shifted to zero, free variables are split into a difference
//! of two nonnegative columns, and every `≤` row gets a slack. Rows whose
//! slack can start in the basis skip the artificial variable.
//!
//! The allocation LPs are heavily degenerate (most rows have a zero
//! right-hand side), so the first attempt relaxes those rows by tiny
//! distinct amounts, prices by largest reduced cost and breaks ratio ties
//! towards the largest pivot. The true right-hand side is then restored; the
//! final basis is accepted only if it is still primal feasible, since reduced
//! costs do not depend on `b`. Otherwise the exact problem is re-solved with
//! Bland's rule taking over whenever the objective stalls, which excludes
//! cycling. In both passes the tableau is rebuilt from the original rows with
//! partial pivoting every [`REFACTOR_INTERVAL`] pivots and at the end of each
//! phase, so rounding from long pivot runs cannot accumulate.

use super::lp::{LinearProgram, LpError};

/// Smallest pivot accepted, relative to the largest entry of its column.
pub const PIVOT_TOL: f64 = 1e-10;
/// Reduced costs above `-COST_TOL` count as nonnegative.
const COST_TOL: f64 = 1e-10;
/// Phase-one objective above this means the model is infeasible.
const FEASIBILITY_TOL: f64 = 1e-8;
/// Basic values above `-PRIMAL_TOL` count as nonnegative.
const PRIMAL_TOL: f64 = 1e-9;
/// Ratio-test ties are resolved within this band.
const RATIO_TOL: f64 = 1e-12;
/// Size of the right-hand-side relaxation in the first pass.
const PERTURBATION: f64 = 1e-7;
/// Consecutive non-improving pivots before Bland's rule takes over.
const STALL_LIMIT: usize = 50;
/// Entries below this in an artificial's row are rounding residue.
const DRIVE_OUT_TOL: f64 = 1e-7;
pub const REFACTOR_INTERVAL: usize = 50;
pub const DEFAULT_ITERATION_CAP: usize = 200_000;

#[derive(Debug, Clone, PartialEq)]
pub struct LpSolution {
    pub value: f64,
    pub x: Vec<f64>,
    pub iterations: usize,
}

/// How an original variable maps onto standard-form columns.
#[derive(Debug, Clone, Copy)]
enum Column {
    Shifted { col: usize, lower: f64 },
    Split { pos: usize, neg: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Pass {
    Perturbed,
    Exact,
}

struct Tableau {
    rows: usize,
    width: usize, // columns including rhs
    /// Standard-form rows `[A | b]`, kept for refactorization.
    original: Vec<f64>,
    data: Vec<f64>,
    basis: Vec<usize>,
    pass: Pass,
}

impl Tableau {
    fn at(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.width + c]
    }

    fn rhs(&self, r: usize) -> f64 {
        self.at(r, self.width - 1)
    }

    fn pivot(&mut self, pr: usize, pc: usize, cost: &mut [f64]) {
        let w = self.width;
        let inv = 1.0 / self.at(pr, pc);
        let (head, rest) = self.data.split_at_mut(pr * w);
        let (pivot_row, tail) = rest.split_at_mut(w);
        pivot_row.iter_mut().for_each(|v| *v *= inv);
        pivot_row[pc] = 1.0;
        let eliminate = |row: &mut [f64]| {
            let factor = row[pc];
            if factor != 0.0 {
                row.iter_mut()
                    .zip(pivot_row.iter())
                    .for_each(|(v, p)| *v -= factor * p);
                row[pc] = 0.0;
            }
        };
        head.chunks_exact_mut(w).for_each(eliminate);
        tail.chunks_exact_mut(w).for_each(eliminate);
        eliminate(cost);
        self.basis[pr] = pc;
    }

    /// Rebuilds the tableau for the current basis from the original rows,
    /// choosing each pivot row by partial pivoting, then recomputes the
    /// reduced-cost row from `costs`.
    fn refactor(&mut self, costs: &[f64], cost: &mut [f64]) -> Result<(), LpError> {
        let w = self.width;
        let mut basic = self.basis.clone();
        basic.sort_unstable();
        self.data.copy_from_slice(&self.original);
        let mut assigned = vec![false; self.rows];
        let mut scratch = vec![0.0; w];
        for &col in &basic {
            let best = (0..self.rows)
                .filter(|&r| !assigned[r])
                .max_by(|&a, &b| self.at(a, col).abs().total_cmp(&self.at(b, col).abs()))
                .expect("one unassigned row per basic column");
            if self.at(best, col).abs() <= PIVOT_TOL {
                return Err(LpError::Malformed(format!(
                    "basis became singular at column {col} during refactorization"
                )));
            }
            assigned[best] = true;
            self.pivot(best, col, &mut scratch);
        }
        cost.copy_from_slice(costs);
        for r in 0..self.rows {
            let cb = costs[self.basis[r]];
            if cb != 0.0 {
                let row = &self.data[r * w..(r + 1) * w];
                cost.iter_mut().zip(row).for_each(|(c, v)| *c -= cb * v);
            }
        }
        for &b in &self.basis {
            cost[b] = 0.0;
        }
        Ok(())
    }

    /// Leaving row for entering column `pc`, with the step length.
    fn ratio_test(&self, pc: usize, bland: bool) -> Option<(usize, f64)> {
        let scale = (0..self.rows)
            .map(|r| self.at(r, pc).abs())
            .fold(1.0, f64::max);
        let tol = PIVOT_TOL.max(1e-9 * scale);
        let mut leave: Option<(usize, f64)> = None;
        for r in 0..self.rows {
            let a = self.at(r, pc);
            if a <= tol {
                continue;
            }
            let ratio = self.rhs(r).max(0.0) / a;
            let better = match leave {
                None => true,
                Some((_, best)) if ratio < best - RATIO_TOL => true,
                Some((lr, best)) if ratio <= best + RATIO_TOL => {
                    if bland {
                        self.basis[r] < self.basis[lr]
                    } else {
                        a > self.at(lr, pc)
                    }
                }
                Some(_) => false,
            };
            if better {
                leave = Some((r, ratio));
            }
        }
        leave
    }

    /// Runs pivots until no column below `allowed` prices out.
    fn run(
        &mut self,
        costs: &[f64],
        cost: &mut [f64],
        allowed: usize,
        iterations: &mut usize,
        cap: usize,
    ) -> Result<(), LpError> {
        let mut stall = 0;
        let mut since_refactor = 0;
        loop {
            let bland = self.pass == Pass::Exact && stall >= STALL_LIMIT;
            let entering = if bland {
                (0..allowed).find(|&c| cost[c] < -COST_TOL)
            } else {
                (0..allowed)
                    .filter(|&c| cost[c] < -COST_TOL)
                    .min_by(|&a, &b| cost[a].total_cmp(&cost[b]))
            };
            let Some(pc) = entering else {
                return Ok(());
            };
            let Some((pr, step)) = self.ratio_test(pc, bland) else {
                return Err(LpError::Unbounded);
            };
            if *iterations >= cap {
                return Err(LpError::IterationLimit(cap));
            }
            *iterations += 1;
            stall = if step > RATIO_TOL { 0 } else { stall + 1 };
            self.pivot(pr, pc, cost);
            since_refactor += 1;
            if since_refactor >= REFACTOR_INTERVAL {
                self.refactor(costs, cost)?;
                since_refactor = 0;
            }
        }
    }
}

pub fn solve(lp: &LinearProgram) -> Result<LpSolution, LpError> {
    solve_with_cap(lp, DEFAULT_ITERATION_CAP)
}

pub fn solve_with_cap(lp: &LinearProgram, cap: usize) -> Result<LpSolution, LpError> {
    lp.check()?;
    match solve_pass(lp, cap, Pass::Perturbed) {
        Ok(Some(solution)) => Ok(solution),
        // the relaxed pass cannot certify infeasibility or unboundedness;
        // the exact pass decides
        Ok(None) | Err(LpError::Malformed(_)) | Err(LpError::Infeasible(_)) => {
            solve_pass(lp, cap, Pass::Exact).map(|s| s.expect("exact pass always concludes"))
        }
        Err(e) => Err(e),
    }
}

/// Deterministic spread in `[1, 2)` so no two relaxed rows tie.
fn spread(r: usize) -> f64 {
    let h = (r as u64 + 1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    1.0 + (h >> 11) as f64 / (1u64 << 53) as f64
}

/// One simplex solve. The perturbed pass returns `None` when its final
/// basis is not feasible for the true right-hand side.
fn solve_pass(lp: &LinearProgram, cap: usize, pass: Pass) -> Result<Option<LpSolution>, LpError> {
    // structural columns
    let mut columns = Vec::with_capacity(lp.num_vars());
    let mut n_struct = 0;
    for &lower in &lp.var_lower_bounds {
        if lower.is_finite() {
            columns.push(Column::Shifted {
                col: n_struct,
                lower,
            });
            n_struct += 1;
        } else {
            columns.push(Column::Split {
                pos: n_struct,
                neg: n_struct + 1,
            });
            n_struct += 2;
        }
    }
    let expand = |coeffs: &[f64], rhs: f64| -> (Vec<f64>, f64) {
        let mut out = vec![0.0; n_struct];
        let mut rhs = rhs;
        for (c, col) in coeffs.iter().zip(&columns) {
            match *col {
                Column::Shifted { col, lower } => {
                    out[col] = *c;
                    rhs -= c * lower;
                }
                Column::Split { pos, neg } => {
                    out[pos] = *c;
                    out[neg] = -c;
                }
            }
        }
        (out, rhs)
    };

    let n_le = lp.ineq_constraints.len();
    let slack0 = n_struct;
    let art0 = slack0 + n_le;

    // rows in standard form, rhs made nonnegative; the flag marks rows
    // whose slack can start in the basis
    let mut body: Vec<(Vec<f64>, f64, Option<usize>, bool)> = Vec::new();
    for r in &lp.eq_constraints {
        let (mut a, mut b) = expand(&r.coeffs, r.rhs);
        if b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            b = -b;
        }
        body.push((a, b, None, false));
    }
    for (i, r) in lp.ineq_constraints.iter().enumerate() {
        let (mut a, mut b) = expand(&r.coeffs, r.rhs);
        let mut slack_basic = true;
        if b < 0.0 {
            a.iter_mut().for_each(|v| *v = -*v);
            b = -b;
            slack_basic = false;
        }
        body.push((a, b, Some(slack0 + i), slack_basic));
    }
    let rows = body.len();
    let n_art = body.iter().filter(|row| !row.3).count();
    let total_cols = art0 + n_art;
    let width = total_cols + 1;

    let mut data = vec![0.0; rows * width];
    let mut basis = vec![0; rows];
    let mut true_rhs = vec![0.0; rows];
    let mut next_art = art0;
    for (r, (a, b, slack, slack_basic)) in body.into_iter().enumerate() {
        let row = &mut data[r * width..(r + 1) * width];
        row[..n_struct].copy_from_slice(&a);
        true_rhs[r] = b;
        row[width - 1] = b;
        if let Some(s) = slack {
            row[s] = if slack_basic { 1.0 } else { -1.0 };
        }
        if slack_basic {
            basis[r] = slack.expect("slack-based start");
            if pass == Pass::Perturbed {
                // loosening a `≤` row keeps every original feasible point
                row[width - 1] += PERTURBATION * spread(r);
            }
        } else {
            row[next_art] = 1.0;
            basis[r] = next_art;
            next_art += 1;
        }
    }
    let mut t = Tableau {
        rows,
        width,
        original: data.clone(),
        data,
        basis,
        pass,
    };

    let mut iterations = 0;
    let mut cost = vec![0.0; width];

    // phase one: minimize the artificial sum
    if n_art > 0 {
        let mut costs = vec![0.0; width];
        costs[art0..total_cols].iter_mut().for_each(|c| *c = 1.0);
        t.refactor(&costs, &mut cost)?;
        t.run(&costs, &mut cost, art0, &mut iterations, cap)?;
        t.refactor(&costs, &mut cost)?;
        let residual: f64 = (0..rows)
            .filter(|&r| t.basis[r] >= art0)
            .map(|r| t.rhs(r))
            .sum();
        if residual > FEASIBILITY_TOL {
            return Err(LpError::Infeasible(residual));
        }
        // drive zero-level artificials out where a real column can replace them
        for r in 0..rows {
            if t.basis[r] >= art0 {
                let candidate = (0..art0)
                    .filter(|&c| t.at(r, c).abs() > DRIVE_OUT_TOL)
                    .max_by(|&a, &b| t.at(r, a).abs().total_cmp(&t.at(r, b).abs()));
                if let Some(c) = candidate {
                    let mut scratch = vec![0.0; width];
                    t.pivot(r, c, &mut scratch);
                }
            }
        }
    }

    // phase two; artificials never re-enter
    let mut costs = vec![0.0; width];
    let (obj, _) = expand(&lp.objective, 0.0);
    costs[..n_struct].copy_from_slice(&obj);
    t.refactor(&costs, &mut cost)?;
    t.run(&costs, &mut cost, art0, &mut iterations, cap)?;

    if pass == Pass::Perturbed {
        for (r, b) in true_rhs.iter().enumerate() {
            t.original[r * width + width - 1] = *b;
        }
    }
    t.refactor(&costs, &mut cost)?;
    let feasible = (0..rows).all(|r| t.rhs(r) >= -PRIMAL_TOL)
        && (0..rows)
            .filter(|&r| t.basis[r] >= art0)
            .all(|r| t.rhs(r) <= PRIMAL_TOL);
    if !feasible {
        if pass == Pass::Perturbed {
            return Ok(None);
        }
        return Err(LpError::Malformed(
            "final basis lost primal feasibility to rounding".into(),
        ));
    }

    let mut y = vec![0.0; total_cols];
    for r in 0..rows {
        y[t.basis[r]] = t.rhs(r).max(0.0);
    }
    let x: Vec<f64> = columns
        .iter()
        .map(|col| match *col {
            Column::Shifted { col, lower } => lower + y[col],
            Column::Split { pos, neg } => y[pos] - y[neg],
        })
        .collect();
    Ok(Some(LpSolution {
        value: lp.objective_value(&x),
        x,
        iterations,
    }))
}
