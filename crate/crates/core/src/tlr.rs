//! Tile-low-rank Cholesky factorization.
//!
//! The factor is stored as dense lower-triangular diagonal tiles plus
//! low-rank U V^T pairs for every off-diagonal tile. Off-diagonal tiles are
//! compressed by a truncated SVD with a relative spectral cutoff; truncation
//! only removes positive-semidefinite mass from the Schur updates, so
//! compression cannot push a diagonal tile closer to breakdown than the
//! uncompressed factorization already is.

use crate::error::{Error, Result};
use crate::float::{c, Float};
use crate::linalg::{dot, with_jitter, DenseSpd, PackedLower};

/// One off-diagonal tile in factored form: tile = U V^T with U rows x rank
/// and V cols x rank, both row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct LowRankTile<F: Float> {
    pub rows: usize,
    pub cols: usize,
    pub rank: usize,
    pub u: Vec<F>,
    pub v: Vec<F>,
}

impl<F: Float> LowRankTile<F> {
    #[inline(always)]
    pub(crate) fn u_row(&self, r: usize) -> &[F] {
        &self.u[r * self.rank..(r + 1) * self.rank]
    }

    /// w = V^T x for x of length `cols`.
    pub(crate) fn vt_mul(&self, x: &[F], w: &mut Vec<F>) {
        w.clear();
        w.resize(self.rank, F::zero());
        for j in 0..self.cols {
            let xj = x[j];
            let vr = &self.v[j * self.rank..(j + 1) * self.rank];
            for k in 0..self.rank {
                w[k] += vr[k] * xj;
            }
        }
    }

    /// Dense reconstruction, row-major rows x cols (test support).
    pub fn to_dense(&self) -> Vec<F> {
        let mut out = vec![F::zero(); self.rows * self.cols];
        for r in 0..self.rows {
            for cidx in 0..self.cols {
                out[r * self.cols + cidx] = dot(
                    self.u_row(r),
                    &self.v[cidx * self.rank..(cidx + 1) * self.rank],
                );
            }
        }
        out
    }
}

/// Lower-triangular Cholesky factor in tile-low-rank form.
#[derive(Debug, Clone, PartialEq)]
pub struct TlrMatrix<F: Float> {
    n: usize,
    block_size: usize,
    trunc_tol: F,
    /// Block boundaries: block I covers offsets[I]..offsets[I+1].
    offsets: Vec<usize>,
    /// Dense factors of the diagonal tiles.
    diag: Vec<PackedLower<F>>,
    /// offdiag[I] holds tiles (I, J) for J = 0..I.
    offdiag: Vec<Vec<LowRankTile<F>>>,
}

impl<F: Float> TlrMatrix<F> {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn block_size(&self) -> usize {
        self.block_size
    }

    pub fn trunc_tol(&self) -> F {
        self.trunc_tol
    }

    pub fn num_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn block_range(&self, i: usize) -> std::ops::Range<usize> {
        self.offsets[i]..self.offsets[i + 1]
    }

    pub fn diag_tile(&self, i: usize) -> &PackedLower<F> {
        &self.diag[i]
    }

    pub fn offdiag_tile(&self, block_row: usize, block_col: usize) -> &LowRankTile<F> {
        &self.offdiag[block_row][block_col]
    }

    /// Diagonal entry of the factor at global row index.
    pub fn factor_diag(&self, row: usize) -> F {
        let (bi, loc) = self.locate(row);
        self.diag[bi].diag(loc)
    }

    #[inline(always)]
    pub(crate) fn locate(&self, row: usize) -> (usize, usize) {
        // Uniform blocks except possibly the last, so direct division works.
        let bi = (row / self.block_size).min(self.num_blocks() - 1);
        (bi, row - self.offsets[bi])
    }

    /// Solves L z = b in place through the tiles.
    pub fn solve_forward(&self, b: &mut [F]) {
        assert_eq!(b.len(), self.n);
        let mut w: Vec<F> = Vec::new();
        for i in 0..self.num_blocks() {
            let (lo, hi) = (self.offsets[i], self.offsets[i + 1]);
            for (j, tile) in self.offdiag[i].iter().enumerate() {
                let (jlo, jhi) = (self.offsets[j], self.offsets[j + 1]);
                // Split borrow: the solved prefix is read-only here.
                let (head, tail) = b.split_at_mut(lo);
                tile.vt_mul(&head[jlo..jhi], &mut w);
                for r in 0..hi - lo {
                    tail[r] -= dot(tile.u_row(r), &w);
                }
            }
            let block = &mut b[lo..hi];
            self.diag[i].solve_forward(block);
        }
    }

    /// Dense reconstruction of the whole factor (test support).
    pub fn to_dense_factor(&self) -> Vec<F> {
        let n = self.n;
        let mut out = vec![F::zero(); n * n];
        for i in 0..self.num_blocks() {
            let lo = self.offsets[i];
            let m = self.offsets[i + 1] - lo;
            for r in 0..m {
                for cidx in 0..=r {
                    out[(lo + r) * n + lo + cidx] = self.diag[i].get(r, cidx);
                }
            }
            for (j, tile) in self.offdiag[i].iter().enumerate() {
                let jlo = self.offsets[j];
                let dense = tile.to_dense();
                for r in 0..tile.rows {
                    for cidx in 0..tile.cols {
                        out[(lo + r) * n + jlo + cidx] = dense[r * tile.cols + cidx];
                    }
                }
            }
        }
        out
    }
}

/// Singular value decomposition by one-sided Jacobi rotations.
///
/// Returns (u, sigma, v) with the input equal to u * diag(sigma) * v^T,
/// singular values sorted descending. Deterministic and accurate enough for
/// tile-sized inputs; cost O(rows * cols^2) per sweep.
fn jacobi_svd<F: Float>(rows: usize, cols: usize, m: &[F]) -> (Vec<F>, Vec<F>, Vec<F>) {
    // Column-major working copy of the input.
    let mut b = vec![F::zero(); rows * cols];
    for r in 0..rows {
        for cc in 0..cols {
            b[cc * rows + r] = m[r * cols + cc];
        }
    }
    let mut v = vec![F::zero(); cols * cols];
    for i in 0..cols {
        v[i * cols + i] = F::one();
    }
    let eps = F::epsilon();
    for _sweep in 0..40 {
        let mut rotated = false;
        for p in 0..cols {
            for q in p + 1..cols {
                let (mut app, mut aqq, mut apq) = (F::zero(), F::zero(), F::zero());
                for r in 0..rows {
                    let bp = b[p * rows + r];
                    let bq = b[q * rows + r];
                    app += bp * bp;
                    aqq += bq * bq;
                    apq += bp * bq;
                }
                if apq.abs() <= eps * (app * aqq).sqrt() || apq == F::zero() {
                    continue;
                }
                rotated = true;
                let zeta = (aqq - app) / (c::<F>(2.0) * apq);
                let t = if zeta >= F::zero() {
                    (zeta + (F::one() + zeta * zeta).sqrt()).recip()
                } else {
                    -((-zeta + (F::one() + zeta * zeta).sqrt()).recip())
                };
                let cs = (F::one() + t * t).sqrt().recip();
                let sn = cs * t;
                for r in 0..rows {
                    let bp = b[p * rows + r];
                    let bq = b[q * rows + r];
                    b[p * rows + r] = cs * bp - sn * bq;
                    b[q * rows + r] = sn * bp + cs * bq;
                }
                for r in 0..cols {
                    let vp = v[r * cols + p];
                    let vq = v[r * cols + q];
                    v[r * cols + p] = cs * vp - sn * vq;
                    v[r * cols + q] = sn * vp + cs * vq;
                }
            }
        }
        if !rotated {
            break;
        }
    }
    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..cols).collect();
    let mut sigma: Vec<F> = (0..cols)
        .map(|cc| dot(&b[cc * rows..(cc + 1) * rows], &b[cc * rows..(cc + 1) * rows]).sqrt())
        .collect();
    order.sort_by(|&x, &y| sigma[y].partial_cmp(&sigma[x]).unwrap().then(x.cmp(&y)));
    let mut u_sorted = vec![F::zero(); rows * cols];
    let mut v_sorted = vec![F::zero(); cols * cols];
    let mut s_sorted = vec![F::zero(); cols];
    for (new, &old) in order.iter().enumerate() {
        let s = sigma[old];
        s_sorted[new] = s;
        if s > F::zero() {
            for r in 0..rows {
                u_sorted[r * cols + new] = b[old * rows + r] / s;
            }
        }
        for r in 0..cols {
            v_sorted[r * cols + new] = v[r * cols + old];
        }
    }
    sigma = s_sorted;
    (u_sorted, sigma, v_sorted)
}

/// Compresses a dense tile to the smallest rank whose spectral tail is at or
/// below `tol` times the leading singular value. Rank is always >= 1.
fn compress_tile<F: Float>(rows: usize, cols: usize, m: &[F], tol: F) -> LowRankTile<F> {
    let (u, sigma, v) = jacobi_svd(rows, cols, m);
    let lead = sigma[0];
    let mut rank = 1usize;
    while rank < sigma.len() && sigma[rank] > tol * lead {
        rank += 1;
    }
    // U carries the singular values so the tile is U V^T.
    let mut u_t = vec![F::zero(); rows * rank];
    let mut v_t = vec![F::zero(); cols * rank];
    for r in 0..rows {
        for k in 0..rank {
            u_t[r * rank + k] = u[r * cols + k] * sigma[k];
        }
    }
    for r in 0..cols {
        for k in 0..rank {
            v_t[r * rank + k] = v[r * cols + k];
        }
    }
    LowRankTile {
        rows,
        cols,
        rank,
        u: u_t,
        v: v_t,
    }
}

/// One factorization attempt at a fixed jitter; None when a diagonal tile
/// loses positive definiteness.
fn tlr_attempt<F: Float>(
    s: &DenseSpd<F>,
    offsets: &[usize],
    block_size: usize,
    tol: F,
    jitter: F,
) -> Option<TlrMatrix<F>> {
    let nb = offsets.len() - 1;
    let n = s.n();
    let mut diag: Vec<PackedLower<F>> = Vec::with_capacity(nb);
    let mut offdiag: Vec<Vec<LowRankTile<F>>> = Vec::with_capacity(nb);

    for bi in 0..nb {
        let (ilo, ihi) = (offsets[bi], offsets[bi + 1]);
        let mi = ihi - ilo;
        let mut row_tiles: Vec<LowRankTile<F>> = Vec::with_capacity(bi);
        let mut row_grams: Vec<Vec<F>> = Vec::with_capacity(bi);

        for bj in 0..bi {
            let (jlo, jhi) = (offsets[bj], offsets[bj + 1]);
            let mj = jhi - jlo;
            // M = A[I,J] - sum_K U_IK (V_IK^T V_JK) U_JK^T over K < J.
            let mut m = vec![F::zero(); mi * mj];
            for r in 0..mi {
                let arow = s.row(ilo + r);
                for cc in 0..mj {
                    m[r * mj + cc] = arow[jlo + cc];
                }
            }
            for bk in 0..bj {
                let ti = &row_tiles[bk];
                let tj = &offdiag[bj][bk];
                let cross = gram_cross(ti, tj);
                // m -= U_I (cross) U_J^T
                for r in 0..mi {
                    let ur = ti.u_row(r);
                    for cc in 0..mj {
                        let ujc = tj.u_row(cc);
                        let mut acc = F::zero();
                        for a in 0..ti.rank {
                            let mut inner = F::zero();
                            for bq in 0..tj.rank {
                                inner += cross[a * tj.rank + bq] * ujc[bq];
                            }
                            acc += ur[a] * inner;
                        }
                        m[r * mj + cc] -= acc;
                    }
                }
            }
            // Right triangular solve: X L_JJ^T = M, row by row.
            let ljj = &diag[bj];
            let mut xrow = vec![F::zero(); mj];
            for r in 0..mi {
                xrow.copy_from_slice(&m[r * mj..(r + 1) * mj]);
                ljj.solve_forward(&mut xrow);
                m[r * mj..(r + 1) * mj].copy_from_slice(&xrow);
            }
            let tile = compress_tile(mi, mj, &m, tol);
            row_grams.push(gram_self(&tile));
            row_tiles.push(tile);
        }

        // Diagonal tile: A[I,I] + jitter*I - sum_K U_IK (V_IK^T V_IK) U_IK^T.
        let mut d = vec![F::zero(); mi * mi];
        for r in 0..mi {
            let arow = s.row(ilo + r);
            for cc in 0..mi {
                d[r * mi + cc] = arow[ilo + cc];
            }
            d[r * mi + r] += jitter;
        }
        for bk in 0..bi {
            let t = &row_tiles[bk];
            let g = &row_grams[bk];
            for r in 0..mi {
                let ur = t.u_row(r);
                for cc in 0..=r {
                    let uc = t.u_row(cc);
                    let mut acc = F::zero();
                    for a in 0..t.rank {
                        let mut inner = F::zero();
                        for bq in 0..t.rank {
                            inner += g[a * t.rank + bq] * uc[bq];
                        }
                        acc += ur[a] * inner;
                    }
                    d[r * mi + cc] -= acc;
                    if cc != r {
                        d[cc * mi + r] -= acc;
                    }
                }
            }
        }
        let dm = DenseSpd::from_entries(mi, d).ok()?;
        let l = crate::linalg::cholesky_attempt_exact(&dm)?;
        diag.push(l);
        offdiag.push(row_tiles);
    }
    Some(TlrMatrix {
        n,
        block_size,
        trunc_tol: tol,
        offsets: offsets.to_vec(),
        diag,
        offdiag,
    })
}

/// V_i^T V_j for two tiles sharing their column space dimension.
fn gram_cross<F: Float>(ti: &LowRankTile<F>, tj: &LowRankTile<F>) -> Vec<F> {
    debug_assert_eq!(ti.cols, tj.cols);
    let (ra, rb) = (ti.rank, tj.rank);
    let mut g = vec![F::zero(); ra * rb];
    for r in 0..ti.cols {
        let vi = &ti.v[r * ra..(r + 1) * ra];
        let vj = &tj.v[r * rb..(r + 1) * rb];
        for a in 0..ra {
            for b in 0..rb {
                g[a * rb + b] += vi[a] * vj[b];
            }
        }
    }
    g
}

fn gram_self<F: Float>(t: &LowRankTile<F>) -> Vec<F> {
    gram_cross(t, t)
}

/// Tile-low-rank Cholesky factorization of a symmetric positive-definite
/// matrix, under the same jitter escalation as [`crate::dense_cholesky`].
///
/// Blocks are consecutive index ranges of `block_size` with at most one
/// ragged final block.
pub fn tlr_compress<F: Float>(
    s: &DenseSpd<F>,
    block_size: usize,
    tol: F,
) -> Result<TlrMatrix<F>> {
    let n = s.n();
    if block_size == 0 || block_size > n {
        return Err(Error::InvalidParameter {
            name: "block_size",
            reason: "must be in 1..=n",
        });
    }
    if !(tol >= F::zero()) {
        return Err(Error::InvalidParameter {
            name: "tol",
            reason: "must be non-negative",
        });
    }
    let mut offsets = Vec::with_capacity(n / block_size + 2);
    let mut at = 0;
    while at < n {
        offsets.push(at);
        at += block_size;
    }
    offsets.push(n);
    with_jitter(s, |jitter| tlr_attempt(s, &offsets, block_size, tol, jitter))
}

/// Dot product of the factor's strict row prefix (columns left of the
/// diagonal) with `v`, evaluated through the tiles.
pub fn tlr_row_matvec<F: Float>(t: &TlrMatrix<F>, row: usize, v: &[F]) -> Result<F> {
    if row >= t.n() {
        return Err(Error::IndexOutOfRange {
            index: row,
            len: t.n(),
        });
    }
    if v.len() < row {
        return Err(Error::DimensionMismatch {
            expected: row,
            got: v.len(),
        });
    }
    let (bi, loc) = t.locate(row);
    let mut acc = F::zero();
    let mut w: Vec<F> = Vec::new();
    for (bj, tile) in t.offdiag[bi].iter().enumerate() {
        let jlo = t.offsets[bj];
        tile.vt_mul(&v[jlo..jlo + tile.cols], &mut w);
        acc += dot(tile.u_row(loc), &w);
    }
    let lo = t.offsets[bi];
    acc += dot(&t.diag[bi].row(loc)[..loc], &v[lo..lo + loc]);
    Ok(acc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{KernelSpec, Locations};
    use crate::linalg::{build_covariance, dense_cholesky};

    fn se_cov(n: usize, alpha: f64) -> DenseSpd<f64> {
        let side = (n as f64).sqrt().ceil() as usize;
        let pts: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                vec![
                    ((i % side) + 1) as f64 / side as f64,
                    ((i / side) + 1) as f64 / side as f64,
                ]
            })
            .collect();
        let locs = Locations::new(pts).unwrap();
        build_covariance(&KernelSpec::squared_exponential(alpha).unwrap(), &locs).unwrap()
    }

    fn frob_rel(a: &[f64], b: &[f64]) -> f64 {
        let mut num = 0.0;
        let mut den = 0.0;
        for (x, y) in a.iter().zip(b) {
            num += (x - y) * (x - y);
            den += y * y;
        }
        (num / den).sqrt()
    }

    #[test]
    fn identity_blocks_and_zero_prefix() {
        let s = DenseSpd::identity(10);
        let t = tlr_compress(&s, 4, 1e-4).unwrap();
        assert_eq!(t.num_blocks(), 3);
        assert_eq!(t.block_range(2), 8..10);
        let ones = vec![1.0; 10];
        for i in 0..10 {
            assert_eq!(tlr_row_matvec(&t, i, &ones).unwrap(), 0.0);
            assert_eq!(t.factor_diag(i), 1.0);
        }
    }

    #[test]
    fn single_tile_equals_dense() {
        let s = se_cov(16, 3.0);
        let l = dense_cholesky(&s).unwrap();
        let t = tlr_compress(&s, 16, 0.0).unwrap();
        let v: Vec<f64> = (0..16).map(|i| (i as f64 * 0.37).sin()).collect();
        for i in 0..16 {
            let dense_dot = dot(&l.row(i)[..i], &v[..i]);
            let tlr_dot = tlr_row_matvec(&t, i, &v).unwrap();
            assert!((dense_dot - tlr_dot).abs() < 1e-12);
            assert!((t.factor_diag(i) - l.diag(i)).abs() < 1e-12);
        }
    }

    #[test]
    fn exact_tolerance_matches_dense_factor() {
        let s = se_cov(24, 2.0);
        let l = dense_cholesky(&s).unwrap();
        let t = tlr_compress(&s, 8, 0.0).unwrap();
        let dense_t = t.to_dense_factor();
        for i in 0..24 {
            for j in 0..=i {
                assert!(
                    (dense_t[i * 24 + j] - l.get(i, j)).abs() < 1e-10,
                    "factor mismatch at ({i},{j})"
                );
            }
        }
        // Row dots through tiles match the dense factor rows.
        let v: Vec<f64> = (0..24).map(|i| ((i * i) as f64 * 0.11).cos()).collect();
        for i in 0..24 {
            let want = dot(&l.row(i)[..i], &v[..i]);
            let got = tlr_row_matvec(&t, i, &v).unwrap();
            assert!((want - got).abs() < 1e-8);
        }
    }

    #[test]
    fn ragged_final_block() {
        let s = se_cov(19, 4.0);
        let t = tlr_compress(&s, 8, 0.0).unwrap();
        assert_eq!(t.num_blocks(), 3);
        assert_eq!(t.block_range(2), 16..19);
        let l = dense_cholesky(&s).unwrap();
        let v = vec![0.5; 19];
        for i in 0..19 {
            let want = dot(&l.row(i)[..i], &v[..i]);
            let got = tlr_row_matvec(&t, i, &v).unwrap();
            assert!((want - got).abs() < 1e-8);
        }
    }

    #[test]
    fn rank_bounds_hold() {
        let s = se_cov(64, 10.0);
        let t = tlr_compress(&s, 8, 1e-3).unwrap();
        for bi in 0..t.num_blocks() {
            for bj in 0..bi {
                let tile = t.offdiag_tile(bi, bj);
                assert!(tile.rank >= 1 && tile.rank <= 8);
            }
        }
    }

    #[test]
    fn reconstruction_error_monotone_in_tol() {
        let s = se_cov(100, 15.0);
        let mut errs = Vec::new();
        for tol in [1e-2, 1e-3, 1e-4] {
            let t = tlr_compress(&s, 10, tol).unwrap();
            let lf = t.to_dense_factor();
            let n = 100;
            // L L^T vs S, relative Frobenius.
            let mut rec = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    let m = i.min(j);
                    let mut acc = 0.0;
                    for k in 0..=m {
                        acc += lf[i * n + k] * lf[j * n + k];
                    }
                    rec[i * n + j] = acc;
                }
            }
            errs.push(frob_rel(&rec, s.as_slice()));
        }
        assert!(errs[0] >= errs[1] && errs[1] >= errs[2], "errors {errs:?}");
        assert!(errs[2] < 1e-3);
    }

    #[test]
    fn se_kernel_row_dot_close_to_dense() {
        let s = se_cov(256, 30.0);
        let l = dense_cholesky(&s).unwrap();
        let t = tlr_compress(&s, 16, 1e-4).unwrap();
        let v: Vec<f64> = (0..256).map(|i| ((i as f64) * 0.313).sin() * 0.8).collect();
        for i in (0..256).step_by(17) {
            let want = dot(&l.row(i)[..i], &v[..i]);
            let got = tlr_row_matvec(&t, i, &v).unwrap();
            let scale = want.abs().max(1.0);
            assert!(
                (want - got).abs() / scale < 1e-3,
                "row {i}: dense {want} vs tlr {got}"
            );
        }
    }

    #[test]
    fn forward_solve_matches_dense() {
        // Unit-inflated diagonal as in the actual CDF problems: a raw smooth
        // kernel matrix is near-singular and the two factorizations would
        // diverge by conditioning alone.
        let base = se_cov(30, 2.5);
        let mut e = base.as_slice().to_vec();
        for i in 0..30 {
            e[i * 30 + i] += 1.0;
        }
        let s = DenseSpd::from_entries(30, e).unwrap();
        let l = dense_cholesky(&s).unwrap();
        let t = tlr_compress(&s, 7, 0.0).unwrap();
        let b: Vec<f64> = (0..30).map(|i| (i as f64 - 15.0) / 10.0).collect();
        let mut dense_sol = b.clone();
        l.solve_forward(&mut dense_sol);
        let mut tlr_sol = b;
        t.solve_forward(&mut tlr_sol);
        for (x, y) in tlr_sol.iter().zip(&dense_sol) {
            assert!((x - y).abs() < 1e-9);
        }
    }

    #[test]
    fn svd_reconstructs() {
        let m: Vec<f64> = vec![
            1.0, 2.0, 0.5, //
            -0.3, 0.7, 1.1, //
            0.0, 0.25, -0.9, //
            2.2, -1.0, 0.4,
        ];
        let (u, s, v) = jacobi_svd(4, 3, &m);
        assert!(s[0] >= s[1] && s[1] >= s[2]);
        for r in 0..4 {
            for cc in 0..3 {
                let mut acc = 0.0;
                for k in 0..3 {
                    acc += u[r * 3 + k] * s[k] * v[cc * 3 + k];
                }
                assert!((acc - m[r * 3 + cc]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn validates_inputs() {
        let s = DenseSpd::identity(8);
        assert!(tlr_compress(&s, 0, 1e-4).is_err());
        assert!(tlr_compress(&s, 9, 1e-4).is_err());
        assert!(tlr_compress(&s, 4, -1.0).is_err());
        let t = tlr_compress(&s, 4, 1e-4).unwrap();
        assert!(tlr_row_matvec(&t, 8, &[0.0; 8]).is_err());
        assert!(tlr_row_matvec(&t, 5, &[0.0; 3]).is_err());
    }
}
