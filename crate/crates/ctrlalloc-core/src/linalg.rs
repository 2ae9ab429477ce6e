//! Dense small-matrix utilities: SVD, pseudoinverse, and the linear-filter
//! gain computation used by the dynamic allocator.
//!
//! Matrices here are tiny (at most 8x8), so everything is plain row-major
//! storage and one-sided Jacobi iteration. The SVD is the single
//! factorization behind every pseudoinverse in this crate; sparsified
//! effectiveness matrices lose rank routinely and normal equations would
//! not survive that.

use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Dense row-major matrix of `f64`.
#[derive(Clone, Debug, PartialEq)]
pub struct Mat {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl Mat {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Mat {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Mat::zeros(n, n);
        for i in 0..n {
            m[(i, i)] = 1.0;
        }
        m
    }

    /// Build from a row-major slice; `data.len()` must equal `rows * cols`.
    pub fn from_row_slice(rows: usize, cols: usize, data: &[f64]) -> Self {
        assert_eq!(data.len(), rows * cols, "row slice length mismatch");
        Mat {
            rows,
            cols,
            data: data.to_vec(),
        }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut m = Mat::zeros(rows, cols);
        for i in 0..rows {
            for j in 0..cols {
                m[(i, j)] = f(i, j);
            }
        }
        m
    }

    /// Diagonal matrix from a slice.
    pub fn from_diag(d: &[f64]) -> Self {
        let mut m = Mat::zeros(d.len(), d.len());
        for (i, &v) in d.iter().enumerate() {
            m[(i, i)] = v;
        }
        m
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn col(&self, j: usize) -> Vec<f64> {
        (0..self.rows).map(|i| self[(i, j)]).collect()
    }

    pub fn transpose(&self) -> Mat {
        Mat::from_fn(self.cols, self.rows, |i, j| self[(j, i)])
    }

    pub fn matmul(&self, rhs: &Mat) -> Mat {
        assert_eq!(self.cols, rhs.rows, "matmul dimension mismatch");
        let mut out = Mat::zeros(self.rows, rhs.cols);
        for i in 0..self.rows {
            for k in 0..self.cols {
                let a = self[(i, k)];
                if a == 0.0 {
                    continue;
                }
                for j in 0..rhs.cols {
                    out[(i, j)] += a * rhs[(k, j)];
                }
            }
        }
        out
    }

    pub fn mul_vec(&self, v: &[f64]) -> Vec<f64> {
        assert_eq!(self.cols, v.len(), "mul_vec dimension mismatch");
        let mut out = vec![0.0; self.rows];
        for i in 0..self.rows {
            let mut acc = 0.0;
            for j in 0..self.cols {
                acc += self[(i, j)] * v[j];
            }
            out[i] = acc;
        }
        out
    }

    pub fn scale(&self, s: f64) -> Mat {
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|x| x * s).collect(),
        }
    }

    pub fn sub(&self, rhs: &Mat) -> Mat {
        assert_eq!((self.rows, self.cols), (rhs.rows, rhs.cols));
        Mat {
            rows: self.rows,
            cols: self.cols,
            data: self
                .data
                .iter()
                .zip(&rhs.data)
                .map(|(a, b)| a - b)
                .collect(),
        }
    }

    pub fn zero_col(&mut self, j: usize) {
        for i in 0..self.rows {
            self[(i, j)] = 0.0;
        }
    }

    /// Keep the listed columns, producing a `rows x keep.len()` matrix.
    pub fn select_cols(&self, keep: &[usize]) -> Mat {
        Mat::from_fn(self.rows, keep.len(), |i, j| self[(i, keep[j])])
    }

    pub fn norm_fro(&self) -> f64 {
        libm::sqrt(self.data.iter().map(|x| x * x).sum())
    }

    pub fn is_finite(&self) -> bool {
        self.data.iter().all(|x| x.is_finite())
    }
}

impl core::ops::Index<(usize, usize)> for Mat {
    type Output = f64;
    fn index(&self, (i, j): (usize, usize)) -> &f64 {
        &self.data[i * self.cols + j]
    }
}

impl core::ops::IndexMut<(usize, usize)> for Mat {
    fn index_mut(&mut self, (i, j): (usize, usize)) -> &mut f64 {
        &mut self.data[i * self.cols + j]
    }
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm2(v: &[f64]) -> f64 {
    libm::sqrt(dot(v, v))
}

/// Thin singular value decomposition, `A = U diag(sigma) V^T`.
#[derive(Clone, Debug)]
pub struct Svd {
    /// `p x r` with `r = min(p, q)`; columns for vanished singular values are zero.
    pub u: Mat,
    /// Singular values, descending.
    pub sigma: Vec<f64>,
    /// `r x q`.
    pub vt: Mat,
}

const JACOBI_EPS: f64 = 1e-15;
const JACOBI_MAX_SWEEPS: usize = 60;

/// One-sided Jacobi SVD. Exact enough at these sizes to serve as the
/// rank detector for sparsified allocation matrices.
pub fn svd(a: &Mat) -> Svd {
    if a.rows >= a.cols {
        svd_tall(a)
    } else {
        let s = svd_tall(&a.transpose());
        Svd {
            u: s.vt.transpose(),
            sigma: s.sigma,
            vt: s.u.transpose(),
        }
    }
}

fn svd_tall(a: &Mat) -> Svd {
    let (p, q) = (a.rows, a.cols);
    let mut w = a.clone();
    let mut v = Mat::identity(q);

    for _ in 0..JACOBI_MAX_SWEEPS {
        let mut rotated = false;
        for i in 0..q {
            for j in (i + 1)..q {
                let mut aii = 0.0;
                let mut ajj = 0.0;
                let mut aij = 0.0;
                for r in 0..p {
                    let x = w[(r, i)];
                    let y = w[(r, j)];
                    aii += x * x;
                    ajj += y * y;
                    aij += x * y;
                }
                if libm::fabs(aij) <= JACOBI_EPS * libm::sqrt(aii * ajj) {
                    continue;
                }
                rotated = true;
                let zeta = (ajj - aii) / (2.0 * aij);
                let t = if zeta >= 0.0 {
                    1.0 / (zeta + libm::sqrt(1.0 + zeta * zeta))
                } else {
                    -1.0 / (-zeta + libm::sqrt(1.0 + zeta * zeta))
                };
                let c = 1.0 / libm::sqrt(1.0 + t * t);
                let s = c * t;
                for r in 0..p {
                    let x = w[(r, i)];
                    let y = w[(r, j)];
                    w[(r, i)] = c * x - s * y;
                    w[(r, j)] = s * x + c * y;
                }
                for r in 0..q {
                    let x = v[(r, i)];
                    let y = v[(r, j)];
                    v[(r, i)] = c * x - s * y;
                    v[(r, j)] = s * x + c * y;
                }
            }
        }
        if !rotated {
            break;
        }
    }

    // Column norms are the singular values; sort descending.
    let mut order: Vec<usize> = (0..q).collect();
    let norms: Vec<f64> = (0..q).map(|j| norm2(&w.col(j))).collect();
    order.sort_by(|&x, &y| {
        norms[y]
            .partial_cmp(&norms[x])
            .unwrap_or(core::cmp::Ordering::Equal)
    });

    let mut u = Mat::zeros(p, q);
    let mut vt = Mat::zeros(q, q);
    let mut sigma = vec![0.0; q];
    for (k, &j) in order.iter().enumerate() {
        let s = norms[j];
        sigma[k] = s;
        if s > 0.0 {
            for r in 0..p {
                u[(r, k)] = w[(r, j)] / s;
            }
        }
        for r in 0..q {
            vt[(k, r)] = v[(r, j)];
        }
    }
    Svd { u, sigma, vt }
}

/// Moore-Penrose pseudoinverse via SVD. Singular values below
/// `rank_tol * sigma_max` are treated as zero; a zero matrix maps to a
/// zero pseudoinverse.
pub fn pinv(a: &Mat, rank_tol: f64) -> Mat {
    // A single row or column has one singular value, its norm; the SVD
    // collapses to the closed form A^T / ||A||^2.
    if a.rows == 1 || a.cols == 1 {
        let n2 = dot(&a.data, &a.data);
        let mut out = Mat::zeros(a.cols, a.rows);
        if n2 > 0.0 {
            for i in 0..a.cols {
                for j in 0..a.rows {
                    out[(i, j)] = a[(j, i)] / n2;
                }
            }
        }
        return out;
    }
    let s = svd(a);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    let cutoff = rank_tol * smax;
    let r = s.sigma.len();
    // V * Sigma^+ * U^T
    let mut out = Mat::zeros(a.cols, a.rows);
    for k in 0..r {
        if s.sigma[k] <= cutoff || s.sigma[k] == 0.0 {
            continue;
        }
        let inv = 1.0 / s.sigma[k];
        for i in 0..a.cols {
            let vik = s.vt[(k, i)];
            if vik == 0.0 {
                continue;
            }
            for j in 0..a.rows {
                out[(i, j)] += vik * inv * s.u[(j, k)];
            }
        }
    }
    out
}

/// Numerical rank with the same relative cutoff as [`pinv`].
pub fn rank(a: &Mat, rank_tol: f64) -> usize {
    let s = svd(a);
    let smax = s.sigma.first().copied().unwrap_or(0.0);
    s.sigma
        .iter()
        .filter(|&&x| x > rank_tol * smax && x > 0.0)
        .count()
}

/// Gains of the explicit weighted least-squares filter
/// `u = E u_s + F u_prev + G nu`.
#[derive(Clone, Debug)]
pub struct LinearFilterGains {
    pub e: Mat,
    pub f: Mat,
    pub g: Mat,
}

/// Compute the filter gains for effectiveness matrix `b` and diagonal
/// weights `w_m`, `w_r`:
///
/// `W = sqrt(W_m^2 + W_r^2)`, `G = W^-1 (B W^-1)^+`,
/// `E = (I - G B) W^-2 W_m^2`, `F = (I - G B) W^-2 W_r^2`.
pub fn filter_gains(b: &Mat, w_m: &[f64], w_r: &[f64], rank_tol: f64) -> Result<LinearFilterGains> {
    let m = b.cols();
    assert_eq!(w_m.len(), m, "w_m length mismatch");
    assert_eq!(w_r.len(), m, "w_r length mismatch");
    let active = vec![true; m];
    filter_gains_masked(b, w_m, w_r, &active, rank_tol)
}

/// Filter gains of the reduced problem over the `active` effectors only.
/// Rows (and mixing columns) of inactive effectors are zero, so the
/// resulting filter never commands a frozen effector.
pub fn filter_gains_masked(
    b: &Mat,
    w_m: &[f64],
    w_r: &[f64],
    active: &[bool],
    rank_tol: f64,
) -> Result<LinearFilterGains> {
    let (o, m) = (b.rows(), b.cols());
    let mut w = vec![0.0; m];
    for i in 0..m {
        if w_m[i] < 0.0 || w_r[i] < 0.0 {
            return Err(Error::DegenerateWeights { index: i });
        }
        w[i] = libm::sqrt(w_m[i] * w_m[i] + w_r[i] * w_r[i]);
        if active[i] && w[i] <= 0.0 {
            return Err(Error::DegenerateWeights { index: i });
        }
    }

    let idx: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
    let mut e = Mat::zeros(m, m);
    let mut f = Mat::zeros(m, m);
    let mut g = Mat::zeros(m, o);
    if idx.is_empty() {
        return Ok(LinearFilterGains { e, f, g });
    }

    // B_a W_a^-1 on the active columns.
    let na = idx.len();
    let ba_winv = Mat::from_fn(o, na, |r, c| b[(r, idx[c])] / w[idx[c]]);
    let pi = pinv(&ba_winv, rank_tol);

    // G_a = W_a^-1 (B_a W_a^-1)^+
    let ga = Mat::from_fn(na, o, |r, c| pi[(r, c)] / w[idx[r]]);
    let ba = b.select_cols(&idx);
    let igb = Mat::identity(na).sub(&ga.matmul(&ba));
    for r in 0..na {
        for c in 0..o {
            g[(idx[r], c)] = ga[(r, c)];
        }
        for c in 0..na {
            let wi = w[idx[c]];
            let ratio_m = (w_m[idx[c]] * w_m[idx[c]]) / (wi * wi);
            let ratio_r = (w_r[idx[c]] * w_r[idx[c]]) / (wi * wi);
            e[(idx[r], idx[c])] = igb[(r, c)] * ratio_m;
            f[(idx[r], idx[c])] = igb[(r, c)] * ratio_r;
        }
    }
    Ok(LinearFilterGains { e, f, g })
}
