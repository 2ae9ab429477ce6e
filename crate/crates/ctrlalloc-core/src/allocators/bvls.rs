//! Bounded-variable least squares: `min 0.5 ||A x - b||^2` subject to
//! `lo <= x <= hi`, solved with an active-set method in the
//! Lawson-Hanson style. Free-set subproblems use the SVD min-norm
//! solution, so rank-deficient column subsets (zeroed effectiveness
//! columns, unregularized membership queries) are handled uniformly.

use alloc::vec;
use alloc::vec::Vec;

use crate::linalg::{self, Mat};
use crate::{Error, Result};

const KKT_REL: f64 = 1e-12;
const BIND_SNAP: f64 = 1e-13;

#[derive(Clone, Copy, PartialEq)]
enum VarState {
    Free,
    AtLo,
    AtHi,
}

pub(crate) struct BvlsSolution {
    pub x: Vec<f64>,
    pub pivots: usize,
}

struct Workspace<'a> {
    a: &'a Mat,
    rhs: &'a [f64],
    lo: &'a [f64],
    hi: &'a [f64],
    x: Vec<f64>,
    state: Vec<VarState>,
    pivots: usize,
    max_pivots: usize,
    rank_tol: f64,
}

impl Workspace<'_> {
    fn residual(&self) -> Vec<f64> {
        let ax = self.a.mul_vec(&self.x);
        self.rhs.iter().zip(&ax).map(|(b, v)| b - v).collect()
    }

    fn objective(&self) -> f64 {
        let r = self.residual();
        0.5 * linalg::dot(&r, &r)
    }

    /// Optimize over the current free set, binding variables that hit a
    /// bound along the way. Returns false when the pivot budget runs out.
    fn inner(&mut self) -> bool {
        loop {
            let free: Vec<usize> = (0..self.x.len())
                .filter(|&j| self.state[j] == VarState::Free)
                .collect();
            if free.is_empty() {
                return true;
            }
            // rhs with bound variables' contribution removed
            let mut r = self.rhs.to_vec();
            for j in 0..self.x.len() {
                if self.state[j] != VarState::Free && self.x[j] != 0.0 {
                    for row in 0..self.a.rows() {
                        r[row] -= self.a[(row, j)] * self.x[j];
                    }
                }
            }
            let sub = self.a.select_cols(&free);
            let z = linalg::pinv(&sub, self.rank_tol).mul_vec(&r);

            let mut alpha = 1.0;
            let mut hit: Option<(usize, VarState)> = None;
            for (k, &f) in free.iter().enumerate() {
                let d = z[k] - self.x[f];
                if d > 0.0 && self.x[f] + d > self.hi[f] {
                    let step = (self.hi[f] - self.x[f]) / d;
                    if step < alpha {
                        alpha = step;
                        hit = Some((f, VarState::AtHi));
                    }
                } else if d < 0.0 && self.x[f] + d < self.lo[f] {
                    let step = (self.lo[f] - self.x[f]) / d;
                    if step < alpha {
                        alpha = step;
                        hit = Some((f, VarState::AtLo));
                    }
                }
            }

            if hit.is_none() {
                for (k, &f) in free.iter().enumerate() {
                    self.x[f] = z[k];
                }
                return true;
            }

            for (k, &f) in free.iter().enumerate() {
                self.x[f] += alpha * (z[k] - self.x[f]);
            }
            for &f in &free {
                let w = 1.0f64.max(self.hi[f].abs()).max(self.lo[f].abs());
                if self.hi[f] - self.x[f] <= BIND_SNAP * w && self.hi[f] > self.lo[f] {
                    self.x[f] = self.hi[f];
                    self.state[f] = VarState::AtHi;
                } else if self.x[f] - self.lo[f] <= BIND_SNAP * w {
                    self.x[f] = self.lo[f];
                    self.state[f] = VarState::AtLo;
                }
            }
            if let Some((f, s)) = hit {
                self.x[f] = if s == VarState::AtHi {
                    self.hi[f]
                } else {
                    self.lo[f]
                };
                self.state[f] = s;
            }
            self.pivots += 1;
            if self.pivots > self.max_pivots {
                return false;
            }
        }
    }
}

/// Solve the bounded least-squares problem. Fixed variables
/// (`lo == hi`) stay pinned; everything else starts at zero when zero is
/// interior, otherwise at the nearer bound. Anti-cycling: a freed
/// variable that buys no objective decrease is blocked until some other
/// pivot makes progress, the entering rule degrades to smallest-index
/// once half the budget is spent, and the hard pivot cap reports
/// [`Error::PivotLimit`].
pub(crate) fn solve_bvls(
    a: &Mat,
    rhs: &[f64],
    lo: &[f64],
    hi: &[f64],
    max_pivots: usize,
    rank_tol: f64,
) -> Result<BvlsSolution> {
    let n = a.cols();
    assert_eq!(rhs.len(), a.rows(), "rhs length mismatch");
    assert_eq!(lo.len(), n, "lower bound length mismatch");
    assert_eq!(hi.len(), n, "upper bound length mismatch");

    let mut state = Vec::with_capacity(n);
    let mut x = Vec::with_capacity(n);
    for j in 0..n {
        if lo[j] == hi[j] {
            state.push(VarState::AtLo);
            x.push(lo[j]);
        } else if lo[j] < 0.0 && 0.0 < hi[j] {
            state.push(VarState::Free);
            x.push(0.0);
        } else if lo[j].abs() <= hi[j].abs() {
            state.push(VarState::AtLo);
            x.push(lo[j]);
        } else {
            state.push(VarState::AtHi);
            x.push(hi[j]);
        }
    }

    let mut ws = Workspace {
        a,
        rhs,
        lo,
        hi,
        x,
        state,
        pivots: 0,
        max_pivots,
        rank_tol,
    };
    let fro = a.norm_fro();
    if !ws.inner() {
        return Err(Error::PivotLimit { pivots: ws.pivots });
    }

    let mut blocked = vec![false; n];
    let mut f_cur = ws.objective();
    let mut bland = false;
    loop {
        let res = ws.residual();
        let g: Vec<f64> = (0..n)
            .map(|j| (0..a.rows()).map(|r| a[(r, j)] * res[r]).sum())
            .collect();
        let tol = KKT_REL * fro * linalg::norm2(&res).max(1e-30) + 1e-300;

        let mut best: Option<usize> = None;
        let mut best_v = tol;
        for j in 0..n {
            if lo[j] == hi[j] || blocked[j] || ws.state[j] == VarState::Free {
                continue;
            }
            let v = match ws.state[j] {
                VarState::AtLo if g[j] > 0.0 => g[j],
                VarState::AtHi if g[j] < 0.0 => -g[j],
                _ => 0.0,
            };
            if v > best_v {
                best = Some(j);
                best_v = v;
                if bland {
                    break;
                }
            }
        }
        let Some(j) = best else {
            return Ok(BvlsSolution {
                x: ws.x,
                pivots: ws.pivots,
            });
        };

        ws.state[j] = VarState::Free;
        ws.pivots += 1;
        if ws.pivots > max_pivots / 2 {
            bland = true;
        }
        if ws.pivots > max_pivots {
            return Err(Error::PivotLimit { pivots: ws.pivots });
        }
        if !ws.inner() {
            return Err(Error::PivotLimit { pivots: ws.pivots });
        }

        let f_new = ws.objective();
        if f_new < f_cur - 1e-12 * f_cur.max(1e-30) {
            f_cur = f_new;
            for b in blocked.iter_mut() {
                *b = false;
            }
        } else {
            f_cur = f_cur.min(f_new);
            blocked[j] = true;
        }
    }
}
