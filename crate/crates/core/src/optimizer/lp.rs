use std::fmt;

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum LpError {
    #[error("linear program is infeasible (phase-one residual {0:e})")]
    Infeasible(f64),
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("simplex iteration cap of {0} reached")]
    IterationLimit(usize),
    #[error("malformed linear program: {0}")]
    Malformed(String),
}

/// One linear row `coeffs · x (= or ≤) rhs`.
#[derive(Debug, Clone, PartialEq)]
pub struct Row {
    pub coeffs: Vec<f64>,
    pub rhs: f64,
}

/// `min c·x + offset` subject to equality rows, `≤` rows and per-variable lower bounds.
///
/// A lower bound of `-∞` makes the variable free.
#[derive(Debug, Clone, PartialEq)]
pub struct LinearProgram {
    pub objective: Vec<f64>,
    pub objective_offset: f64,
    pub eq_constraints: Vec<Row>,
    pub ineq_constraints: Vec<Row>,
    pub var_lower_bounds: Vec<f64>,
    pub var_names: Vec<String>,
}

impl LinearProgram {
    pub fn new(var_names: Vec<String>, var_lower_bounds: Vec<f64>) -> Self {
        let n = var_names.len();
        LinearProgram {
            objective: vec![0.0; n],
            objective_offset: 0.0,
            eq_constraints: Vec::new(),
            ineq_constraints: Vec::new(),
            var_lower_bounds,
            var_names,
        }
    }

    pub fn num_vars(&self) -> usize {
        self.var_names.len()
    }

    pub fn add_eq(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.eq_constraints.push(Row { coeffs, rhs });
    }

    pub fn add_le(&mut self, coeffs: Vec<f64>, rhs: f64) {
        self.ineq_constraints.push(Row { coeffs, rhs });
    }

    pub fn check(&self) -> Result<(), LpError> {
        let n = self.num_vars();
        if self.objective.len() != n || self.var_lower_bounds.len() != n {
            return Err(LpError::Malformed(format!(
                "objective/bounds width differs from the {n} variables"
            )));
        }
        let rows = self.eq_constraints.iter().chain(&self.ineq_constraints);
        for (i, row) in rows.enumerate() {
            if row.coeffs.len() != n {
                return Err(LpError::Malformed(format!(
                    "row {i} has {} coefficients, expected {n}",
                    row.coeffs.len()
                )));
            }
            if !row.rhs.is_finite() || row.coeffs.iter().any(|c| !c.is_finite()) {
                return Err(LpError::Malformed(format!("row {i} is not finite")));
            }
        }
        if self.objective.iter().any(|c| !c.is_finite()) || !self.objective_offset.is_finite() {
            return Err(LpError::Malformed("objective is not finite".into()));
        }
        if self
            .var_lower_bounds
            .iter()
            .any(|l| l.is_nan() || *l == f64::INFINITY)
        {
            return Err(LpError::Malformed(
                "lower bounds must be finite or -inf".into(),
            ));
        }
        Ok(())
    }

    pub fn objective_value(&self, x: &[f64]) -> f64 {
        self.objective_offset + dot(&self.objective, x)
    }

    /// Largest violation of any row or bound at `x` (0 when feasible).
    pub fn max_violation(&self, x: &[f64]) -> f64 {
        let eq = self
            .eq_constraints
            .iter()
            .map(|r| (dot(&r.coeffs, x) - r.rhs).abs());
        let le = self
            .ineq_constraints
            .iter()
            .map(|r| (dot(&r.coeffs, x) - r.rhs).max(0.0));
        let lb = self
            .var_lower_bounds
            .iter()
            .zip(x)
            .map(|(l, v)| (l - v).max(0.0));
        eq.chain(le).chain(lb).fold(0.0, f64::max)
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn fmt_row(f: &mut fmt::Formatter<'_>, names: &[String], coeffs: &[f64]) -> fmt::Result {
    let mut first = true;
    for (name, &c) in names.iter().zip(coeffs) {
        if c == 0.0 {
            continue;
        }
        let sign = if c < 0.0 {
            "-"
        } else if first {
            ""
        } else {
            "+"
        };
        if !first {
            write!(f, " ")?;
        }
        write!(f, "{sign}{} {name}", fmt_coeff(c.abs()))?;
        first = false;
    }
    if first {
        write!(f, "0")?;
    }
    Ok(())
}

fn fmt_coeff(c: f64) -> String {
    if c == 1.0 {
        "1".into()
    } else {
        format!("{c}")
    }
}

/// Plain-text dump for debugging; one row per line.
impl fmt::Display for LinearProgram {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "minimize ")?;
        fmt_row(f, &self.var_names, &self.objective)?;
        writeln!(f, " + {}", self.objective_offset)?;
        writeln!(f, "subject to")?;
        for (i, r) in self.eq_constraints.iter().enumerate() {
            write!(f, "  e{i}: ")?;
            fmt_row(f, &self.var_names, &r.coeffs)?;
            writeln!(f, " = {}", r.rhs)?;
        }
        for (i, r) in self.ineq_constraints.iter().enumerate() {
            write!(f, "  i{i}: ")?;
            fmt_row(f, &self.var_names, &r.coeffs)?;
            writeln!(f, " <= {}", r.rhs)?;
        }
        writeln!(f, "bounds")?;
        for (name, l) in self.var_names.iter().zip(&self.var_lower_bounds) {
            if l.is_finite() {
                writeln!(f, "  {name} >= {l}")?;
            } else {
                writeln!(f, "  {name} free")?;
            }
        }
        Ok(())
    }
}
