//! Scheme parameters `(N, K, ε)`.

use serde::Serialize;

use crate::error::{Error, Result};

/// Number of servers, number of messages and the leakage ratio exponent (nats).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchemeParams {
    n_servers: usize,
    n_messages: usize,
    epsilon: f64,
}

impl SchemeParams {
    pub fn new(n_servers: usize, n_messages: usize, epsilon: f64) -> Result<Self> {
        let shape = Shape::new(n_servers, n_messages)?;
        shape.with_epsilon(epsilon)
    }

    pub fn n(&self) -> usize {
        self.n_servers
    }

    pub fn k(&self) -> usize {
        self.n_messages
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// The `(N, K)` part without ε.
    pub fn shape(&self) -> Shape {
        Shape {
            n_servers: self.n_servers,
            n_messages: self.n_messages,
        }
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        self.shape().with_epsilon(epsilon)
    }
}

/// `(N, K)` without a privacy level; used by the inversions `ε(D)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct Shape {
    n_servers: usize,
    n_messages: usize,
}

impl Shape {
    pub fn new(n_servers: usize, n_messages: usize) -> Result<Self> {
        if n_servers < 2 {
            return Err(Error::InvalidParams(format!(
                "N must be >= 2 (got {n_servers})"
            )));
        }
        if n_messages < 2 {
            return Err(Error::InvalidParams(format!(
                "K must be >= 2 (got {n_messages})"
            )));
        }
        Ok(Shape {
            n_servers,
            n_messages,
        })
    }

    pub fn n(&self) -> usize {
        self.n_servers
    }

    pub fn k(&self) -> usize {
        self.n_messages
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<SchemeParams> {
        if !epsilon.is_finite() {
            return Err(Error::InvalidParams(format!(
                "epsilon must be finite (got {epsilon})"
            )));
        }
        if epsilon < 0.0 {
            return Err(Error::InvalidParams(format!(
                "epsilon must be >= 0 (got {epsilon})"
            )));
        }
        Ok(SchemeParams {
            n_servers: self.n_servers,
            n_messages: self.n_messages,
            epsilon,
        })
    }
}

impl From<SchemeParams> for Shape {
    fn from(p: SchemeParams) -> Self {
        p.shape()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn accepts_smallest_table_example() {
        let p = SchemeParams::new(3, 2, std::f64::consts::LN_2).unwrap();
        assert_eq!((p.n(), p.k()), (3, 2));
        assert_eq!(p.epsilon(), std::f64::consts::LN_2);
    }

    #[test]
    fn rejects_bad_parameters() {
        let e = SchemeParams::new(1, 2, 0.0).unwrap_err();
        assert!(e.to_string().contains("N must be >= 2"), "{e}");
        let e = SchemeParams::new(2, 1, 0.0).unwrap_err();
        assert!(e.to_string().contains("K must be >= 2"), "{e}");
        let e = SchemeParams::new(2, 2, -0.1).unwrap_err();
        assert!(e.to_string().contains("epsilon must be >= 0"), "{e}");
        assert!(SchemeParams::new(2, 2, f64::NAN).is_err());
        assert!(SchemeParams::new(2, 2, f64::INFINITY).is_err());
    }

    #[test]
    fn zero_epsilon_is_perfect_privacy() {
        assert!(SchemeParams::new(2, 2, 0.0).is_ok());
    }
}
