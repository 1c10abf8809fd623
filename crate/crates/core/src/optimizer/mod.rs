//! LP formulations of the allocation problems, a dense simplex solver and
//! the closed-form KKT certificate.

mod kkt;
mod lp;
mod problems;
mod simplex;

pub use kkt::{kkt_certificate, KktCertificate, DUAL_TOL, RESIDUAL_TOL, SLACKNESS_TOL};
pub use lp::{LinearProgram, LpError, Row};
pub use problems::{
    build_p1, build_p1_with_limit, build_p2, p1_variable_count, verify_reduction, ReductionCheck,
    P1_VARIABLE_LIMIT, REDUCTION_TOL,
};
pub use simplex::{solve, solve_with_cap, LpSolution, DEFAULT_ITERATION_CAP, PIVOT_TOL};
