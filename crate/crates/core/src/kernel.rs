//! Covariance kernels and point sets.

use crate::error::{Error, Result};
use crate::float::Float;
use std::collections::HashMap;

/// Kernel families with unit marginal variance.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum KernelFamily {
    /// K(x, x') = exp(-alpha * ||x - x'||^2).
    SquaredExponential,
}

/// A stationary correlation kernel: K(x, x) = 1 for every x.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KernelSpec<F: Float> {
    pub family: KernelFamily,
    /// Inverse squared length-scale; larger means faster decay.
    pub alpha: F,
}

impl<F: Float> KernelSpec<F> {
    pub fn squared_exponential(alpha: F) -> Result<Self> {
        if !(alpha > F::zero()) || !alpha.is_finite() {
            return Err(Error::InvalidParameter {
                name: "alpha",
                reason: "must be positive and finite",
            });
        }
        Ok(KernelSpec {
            family: KernelFamily::SquaredExponential,
            alpha,
        })
    }
}

/// Evaluates the kernel at a pair of points of equal dimension.
pub fn kernel_eval<F: Float>(spec: &KernelSpec<F>, x: &[F], x_prime: &[F]) -> Result<F> {
    if x.len() != x_prime.len() {
        return Err(Error::DimensionMismatch {
            expected: x.len(),
            got: x_prime.len(),
        });
    }
    let mut d2 = F::zero();
    for (&u, &v) in x.iter().zip(x_prime) {
        let d = u - v;
        d2 += d * d;
    }
    match spec.family {
        KernelFamily::SquaredExponential => Ok((-spec.alpha * d2).exp()),
    }
}

/// An ordered set of distinct q-dimensional points, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct Locations<F: Float> {
    coords: Vec<F>,
    q: usize,
}

impl<F: Float> Locations<F> {
    /// Builds the set, rejecting dimension mismatches and exact duplicates.
    ///
    /// Duplicates are detected by bit-pattern equality: near-coincident points
    /// are legal here and left to the jitter policy downstream.
    pub fn new(points: Vec<Vec<F>>) -> Result<Self> {
        if points.is_empty() {
            return Err(Error::InvalidParameter {
                name: "points",
                reason: "must be non-empty",
            });
        }
        let q = points[0].len();
        if q == 0 {
            return Err(Error::InvalidParameter {
                name: "points",
                reason: "points must have at least one coordinate",
            });
        }
        let mut coords = Vec::with_capacity(points.len() * q);
        let mut seen: HashMap<Vec<u64>, usize> = HashMap::with_capacity(points.len());
        for (i, p) in points.iter().enumerate() {
            if p.len() != q {
                return Err(Error::DimensionMismatch {
                    expected: q,
                    got: p.len(),
                });
            }
            let key: Vec<u64> = p
                .iter()
                .map(|v| v.to_f64().map(f64::to_bits).unwrap_or(u64::MAX))
                .collect();
            if let Some(&j) = seen.get(&key) {
                return Err(Error::DuplicateLocations { i: j, j: i });
            }
            seen.insert(key, i);
            coords.extend_from_slice(p);
        }
        Ok(Locations {
            coords,
            q,
        })
    }

    pub fn len(&self) -> usize {
        self.coords.len() / self.q
    }

    pub fn is_empty(&self) -> bool {
        self.coords.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.q
    }

    pub fn point(&self, i: usize) -> &[F] {
        &self.coords[i * self.q..(i + 1) * self.q]
    }

    /// True if `x` coincides bit-for-bit with a stored point.
    pub fn contains(&self, x: &[F]) -> bool {
        if x.len() != self.q {
            return false;
        }
        (0..self.len()).any(|i| {
            self.point(i)
                .iter()
                .zip(x)
                .all(|(a, b)| a.to_f64().map(f64::to_bits) == b.to_f64().map(f64::to_bits))
        })
    }
}
