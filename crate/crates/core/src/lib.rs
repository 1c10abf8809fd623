//! Leaky private information retrieval over the permuted TSC code.
//!
//! * [`protocol`] builds queries, answers and decodes single-symbol XOR retrievals.
//! * [`allocation`] holds the layered key distributions and their full tables.
//! * [`tradeoff`] evaluates closed-form download costs and their inverses.
//! * [`audit`] measures leakage and cost by exhaustive enumeration or sampling.
//! * [`optimizer`] re-solves the allocation problems as LPs and checks the KKT certificate.

pub mod allocation;
pub mod audit;
pub mod combinatorics;
pub mod error;
pub mod optimizer;
pub mod params;
pub mod protocol;
pub mod tradeoff;

pub use error::{Error, Result};
pub use params::{SchemeParams, Shape};
