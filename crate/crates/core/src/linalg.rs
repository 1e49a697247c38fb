//! Dense symmetric matrices, packed triangular factors, and Cholesky
//! factorization with the jitter escalation policy.

use crate::error::{Error, Result};
use crate::float::{c, Float};
use crate::kernel::{kernel_eval, KernelSpec, Locations};

/// Relative symmetry tolerance accepted by [`DenseSpd::from_entries`].
const SYMMETRY_TOL: f64 = 1e-12;

/// Jitter escalation: multiples of the mean diagonal tried in order before
/// declaring a matrix not positive definite.
const JITTER_LEVELS: [f64; 6] = [0.0, 1e-10, 1e-9, 1e-8, 1e-7, 1e-6];

#[inline(always)]
pub(crate) fn dot<F: Float>(a: &[F], b: &[F]) -> F {
    debug_assert_eq!(a.len(), b.len());
    let mut s = F::zero();
    for i in 0..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// A dense symmetric matrix expected to be positive (semi-)definite up to
/// jitter. Stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseSpd<F: Float> {
    n: usize,
    entries: Vec<F>,
}

impl<F: Float> DenseSpd<F> {
    /// Wraps row-major entries, verifying shape and symmetry.
    pub fn from_entries(n: usize, entries: Vec<F>) -> Result<Self> {
        if n == 0 || entries.len() != n * n {
            return Err(Error::DimensionMismatch {
                expected: n * n,
                got: entries.len(),
            });
        }
        let tol = c::<F>(SYMMETRY_TOL);
        for i in 0..n {
            for j in 0..i {
                let a = entries[i * n + j];
                let b = entries[j * n + i];
                let scale = a.abs().max(b.abs()).max(F::one());
                if !a.is_finite() || !b.is_finite() {
                    return Err(Error::NonFinite {
                        context: "matrix entries",
                    });
                }
                if (a - b).abs() > tol * scale {
                    return Err(Error::InvalidParameter {
                        name: "entries",
                        reason: "matrix is not symmetric",
                    });
                }
            }
        }
        Ok(DenseSpd { n, entries })
    }

    pub fn identity(n: usize) -> Self {
        let mut entries = vec![F::zero(); n * n];
        for i in 0..n {
            entries[i * n + i] = F::one();
        }
        DenseSpd { n, entries }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.entries[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[F] {
        &self.entries[i * self.n..(i + 1) * self.n]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.entries
    }

    /// The matrix with rows and columns rearranged so that entry (i, j) of
    /// the result is entry (perm[i], perm[j]) of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Result<Self> {
        if perm.len() != self.n {
            return Err(Error::DimensionMismatch {
                expected: self.n,
                got: perm.len(),
            });
        }
        let mut entries = vec![F::zero(); self.n * self.n];
        for i in 0..self.n {
            for j in 0..self.n {
                entries[i * self.n + j] = self.get(perm[i], perm[j]);
            }
        }
        Ok(DenseSpd {
            n: self.n,
            entries,
        })
    }

    /// The principal submatrix selected by `idx` (indices must be in range).
    pub fn submatrix(&self, idx: &[usize]) -> Result<Self> {
        let m = idx.len();
        if m == 0 {
            return Err(Error::InvalidParameter {
                name: "idx",
                reason: "must be non-empty",
            });
        }
        for &i in idx {
            if i >= self.n {
                return Err(Error::IndexOutOfRange {
                    index: i,
                    len: self.n,
                });
            }
        }
        let mut entries = Vec::with_capacity(m * m);
        for &i in idx {
            for &j in idx {
                entries.push(self.get(i, j));
            }
        }
        Ok(DenseSpd { n: m, entries })
    }

    /// y = M x.
    pub fn matvec(&self, x: &[F]) -> Vec<F> {
        assert_eq!(x.len(), self.n);
        (0..self.n).map(|i| dot(self.row(i), x)).collect()
    }
}

/// A lower-triangular factor in packed row-major storage: row i is the
/// contiguous slice of its i+1 leading entries.
#[derive(Debug, Clone, PartialEq)]
pub struct PackedLower<F: Float> {
    n: usize,
    data: Vec<F>,
}

impl<F: Float> PackedLower<F> {
    pub fn zeros(n: usize) -> Self {
        PackedLower {
            n,
            data: vec![F::zero(); n * (n + 1) / 2],
        }
    }

    pub fn n(&self) -> usize {
        self.n
    }

    #[inline(always)]
    fn row_start(i: usize) -> usize {
        i * (i + 1) / 2
    }

    /// Row i including the diagonal: length i+1.
    #[inline(always)]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[Self::row_start(i)..Self::row_start(i) + i + 1]
    }

    #[inline(always)]
    pub fn get(&self, i: usize, j: usize) -> F {
        debug_assert!(j <= i);
        self.data[Self::row_start(i) + j]
    }

    #[inline(always)]
    pub(crate) fn set(&mut self, i: usize, j: usize, v: F) {
        debug_assert!(j <= i);
        self.data[Self::row_start(i) + j] = v;
    }

    #[inline(always)]
    pub fn diag(&self, i: usize) -> F {
        self.data[Self::row_start(i) + i]
    }

    /// Solves L y = b in place.
    pub fn solve_forward(&self, b: &mut [F]) {
        assert_eq!(b.len(), self.n);
        for i in 0..self.n {
            let row = self.row(i);
            let s = dot(&row[..i], &b[..i]);
            b[i] = (b[i] - s) / row[i];
        }
    }

    /// Solves L^T x = b in place.
    pub fn solve_backward_transpose(&self, b: &mut [F]) {
        assert_eq!(b.len(), self.n);
        for i in (0..self.n).rev() {
            let mut s = b[i];
            for k in i + 1..self.n {
                s -= self.get(k, i) * b[k];
            }
            b[i] = s / self.diag(i);
        }
    }

    /// Solves (L L^T) x = b in place: one forward and one transposed sweep.
    pub fn solve_spd(&self, b: &mut [F]) {
        self.solve_forward(b);
        self.solve_backward_transpose(b);
    }

    /// Reconstructs L L^T as a dense row-major matrix (test support).
    pub fn mul_transpose(&self) -> Vec<F> {
        let n = self.n;
        let mut out = vec![F::zero(); n * n];
        for i in 0..n {
            for j in 0..n {
                let m = i.min(j);
                let s = dot(&self.row(i)[..m + 1], &self.row(j)[..m + 1]);
                out[i * n + j] = s;
            }
        }
        out
    }
}

/// Builds the covariance matrix K(x_i, x_j) over a location set.
///
/// The diagonal is exactly one and the matrix is exactly symmetric by
/// construction.
pub fn build_covariance<F: Float>(spec: &KernelSpec<F>, locs: &Locations<F>) -> Result<DenseSpd<F>> {
    let n = locs.len();
    let mut entries = vec![F::zero(); n * n];
    for i in 0..n {
        entries[i * n + i] = F::one();
        for j in 0..i {
            let v = kernel_eval(spec, locs.point(i), locs.point(j))?;
            entries[i * n + j] = v;
            entries[j * n + i] = v;
        }
    }
    Ok(DenseSpd { n, entries })
}

/// Inner factorization attempt at a fixed jitter. Returns None on breakdown.
fn cholesky_attempt<F: Float>(s: &DenseSpd<F>, jitter: F) -> Option<PackedLower<F>> {
    let n = s.n();
    let mut l = PackedLower::zeros(n);
    for i in 0..n {
        for j in 0..=i {
            let prefix = dot(&l.row(i)[..j], &l.row(j)[..j]);
            if i == j {
                let v = s.get(i, i) + jitter - prefix;
                if !(v > F::zero()) || !v.is_finite() {
                    return None;
                }
                l.set(i, i, v.sqrt());
            } else {
                l.set(i, j, (s.get(i, j) - prefix) / l.diag(j));
            }
        }
    }
    Some(l)
}

pub(crate) fn mean_diag<F: Float>(s: &DenseSpd<F>) -> F {
    let n = s.n();
    let mut t = F::zero();
    for i in 0..n {
        t += s.get(i, i);
    }
    t / c::<F>(n as f64)
}

/// Runs `attempt` under the escalating jitter policy shared by the dense and
/// tiled factorizations: exact first, then 1e-10..1e-6 times the mean
/// diagonal, then an error carrying the last jitter tried.
pub(crate) fn with_jitter<F: Float, T>(
    s: &DenseSpd<F>,
    mut attempt: impl FnMut(F) -> Option<T>,
) -> Result<T> {
    let scale = mean_diag(s);
    let mut last = 0.0f64;
    for &level in &JITTER_LEVELS {
        last = level;
        if let Some(t) = attempt(scale * c::<F>(level)) {
            return Ok(t);
        }
    }
    Err(Error::NotPositiveDefinite {
        jitter_tried: last * scale.to_f64().unwrap_or(f64::NAN),
    })
}

/// Cholesky factorization L L^T = S, escalating diagonal jitter on breakdown.
pub fn dense_cholesky<F: Float>(s: &DenseSpd<F>) -> Result<PackedLower<F>> {
    with_jitter(s, |jitter| cholesky_attempt(s, jitter))
}

/// Single factorization attempt with no jitter of its own. Used by the tiled
/// factorization, whose escalation must restart the whole factor rather than
/// patch one tile.
pub(crate) fn cholesky_attempt_exact<F: Float>(s: &DenseSpd<F>) -> Option<PackedLower<F>> {
    cholesky_attempt(s, F::zero())
}
