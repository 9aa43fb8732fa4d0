use crate::{Error, Result};
use serde::{Deserialize, Serialize};

/// Sum tolerance for simplex weights.
pub const SIMPLEX_SUM_TOL: f64 = 1e-12;
/// Most negative component accepted (and clamped to zero).
pub const SIMPLEX_NEG_TOL: f64 = 1e-15;

/// Nonnegative weights summing to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct SimplexWeights(Vec<f64>);

impl SimplexWeights {
    pub fn new(mut theta: Vec<f64>) -> Result<Self> {
        if theta.is_empty() {
            return Err(Error::Simplex("no weights".into()));
        }
        for (i, t) in theta.iter_mut().enumerate() {
            if !t.is_finite() {
                return Err(Error::Simplex(format!("weight {i} is not finite")));
            }
            if *t < -SIMPLEX_NEG_TOL {
                return Err(Error::Simplex(format!("weight {i} is negative ({t})")));
            }
            if *t < 0.0 {
                *t = 0.0;
            }
        }
        let sum: f64 = theta.iter().sum();
        if (sum - 1.0).abs() > SIMPLEX_SUM_TOL {
            return Err(Error::Simplex(format!("weights sum to {sum}")));
        }
        Ok(Self(theta))
    }

    pub fn vertex(n: usize, k: usize) -> Self {
        assert!(k < n);
        let mut v = vec![0.0; n];
        v[k] = 1.0;
        Self(v)
    }

    pub fn uniform(n: usize) -> Self {
        assert!(n > 0);
        Self(vec![1.0 / n as f64; n])
    }

    /// Clamps tiny negatives and renormalizes; for iterates that drift off
    /// the simplex by rounding.
    pub(crate) fn renormalized(mut theta: Vec<f64>) -> Self {
        for t in theta.iter_mut() {
            if *t < 0.0 {
                *t = 0.0;
            }
        }
        let sum: f64 = theta.iter().sum();
        if sum != 1.0 {
            for t in theta.iter_mut() {
                *t /= sum;
            }
        }
        Self(theta)
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.0
    }
}
