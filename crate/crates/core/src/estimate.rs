//! Result records that carry the evaluation mode alongside the number.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::par::{ComplexSum, CompensatedSum};

/// How an expectation is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Mode {
    /// Full enumeration of the sample space.
    Exact,
    /// Average over `samples` draws from a generator seeded with `seed`.
    MonteCarlo { samples: u64, seed: u64 },
}

impl Mode {
    pub fn mc(samples: u64, seed: u64) -> Self {
        Mode::MonteCarlo { samples, seed }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        match self {
            Mode::MonteCarlo { samples: 0, .. } => Err(Error::InvalidArgument("samples must be >= 1".into())),
            _ => Ok(()),
        }
    }

    pub fn is_exact(&self) -> bool {
        matches!(self, Mode::Exact)
    }
}

/// A computed quantity; `std_error` is present for Monte Carlo results.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate<T> {
    pub value: T,
    pub std_error: Option<f64>,
    pub mode: Mode,
}

impl<T> Estimate<T> {
    pub fn exact(value: T) -> Self {
        Self { value, std_error: None, mode: Mode::Exact }
    }
}

/// Streaming mean and variance of complex samples, mergeable across chunks.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct ComplexMoments {
    pub count: u64,
    pub sum: ComplexSum,
    pub sq: CompensatedSum,
}

impl ComplexMoments {
    #[inline]
    pub fn push(&mut self, z: Complex64) {
        self.count += 1;
        self.sum.add(z);
        self.sq.add(z.norm_sqr());
    }

    pub fn merge(&mut self, o: &ComplexMoments) {
        self.count += o.count;
        self.sum.merge(&o.sum);
        self.sq.merge(&o.sq);
    }

    pub fn mean(&self) -> Complex64 {
        self.sum.value() / self.count as f64
    }

    /// Standard error of the mean, using E|Z - mean|^2 as the variance.
    pub fn std_error(&self) -> f64 {
        let n = self.count as f64;
        let var = (self.sq.value() / n - self.mean().norm_sqr()).max(0.0);
        if self.count > 1 {
            (var * n / (n - 1.0) / n).sqrt()
        } else {
            var.sqrt()
        }
    }
}
