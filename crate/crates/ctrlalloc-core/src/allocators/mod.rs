//! The allocation algorithms, each mapping a demand and the current
//! constraint state to an [`AllocationResult`] under one interface.
//!
//! All of them are deterministic: identical inputs produce bit-identical
//! outputs. Wall time is not measured here; the harness wraps calls with
//! a monotonic clock and fills [`AllocationResult::elapsed_s`].

mod bvls;
mod idca;
mod qp_ref;

pub(crate) use bvls::solve_bvls;
pub use idca::{idca, IdcaConfig};

use alloc::vec;
use alloc::vec::Vec;

use crate::actuator::{
    effective_bounds, ActuatorLimits, ActuatorState, EffectivenessMatrix, VirtualCommand,
};
use crate::linalg::{self, Mat};
use crate::{Error, Result};

/// Candidates within this distance of a bound count as saturated (deg).
pub(crate) const SAT_DETECT_TOL: f64 = 1e-12;

/// Outcome of one allocator call.
#[derive(Clone, Debug)]
pub struct AllocationResult {
    /// Commanded deflections (deg).
    pub u: Vec<f64>,
    /// Achieved virtual command `B u` (Nm).
    pub achieved: Vec<f64>,
    /// Demand minus achieved, `nu - B u` (Nm).
    pub residual: Vec<f64>,
    /// `||u||_2`.
    pub cost: f64,
    /// Iterations the algorithm ran (1 for the closed-form allocators).
    pub iterations: usize,
    /// Wall time of the call in seconds; filled by the harness, zero here.
    pub elapsed_s: f64,
}

impl AllocationResult {
    pub(crate) fn from_u(u: Vec<f64>, b: &Mat, nu: &[f64], iterations: usize) -> Self {
        let achieved = b.mul_vec(&u);
        let residual: Vec<f64> = nu.iter().zip(&achieved).map(|(n, a)| n - a).collect();
        let cost = linalg::norm2(&u);
        AllocationResult {
            u,
            achieved,
            residual,
            cost,
            iterations,
            elapsed_s: 0.0,
        }
    }

    /// `||nu - B u||_2`.
    pub fn error_norm(&self) -> f64 {
        linalg::norm2(&self.residual)
    }
}

/// Min-norm pseudoinverse allocation `u = B^+ nu`. Ignores every limit;
/// the result may be infeasible.
pub fn pica(b: &EffectivenessMatrix, nu: &VirtualCommand, rank_tol: f64) -> AllocationResult {
    assert_eq!(nu.len(), b.axes(), "demand length must match axis count");
    let u = linalg::pinv(b.matrix(), rank_tol).mul_vec(nu.values());
    AllocationResult::from_u(u, b.matrix(), nu.values(), 1)
}

/// Pseudoinverse allocation clamped into the effective bounds.
pub fn saturated_pica(
    b: &EffectivenessMatrix,
    nu: &VirtualCommand,
    limits: &ActuatorLimits,
    state: &ActuatorState,
    rank_tol: f64,
) -> AllocationResult {
    let unconstrained = pica(b, nu, rank_tol);
    let u = crate::actuator::saturate(&unconstrained.u, limits, state);
    AllocationResult::from_u(u, b.matrix(), nu.values(), 1)
}

/// Per-iteration feasible window in increment coordinates: the shifted
/// magnitude box intersected with the shifted rate window, collapsing an
/// empty intersection onto the window edge nearest the box.
pub(crate) fn window(lo: f64, hi: f64, zlo: f64, zhi: f64) -> (f64, f64) {
    let l = lo.max(zlo);
    let h = hi.min(zhi);
    if l > h {
        let pinned = if lo > zhi { zhi } else { zlo };
        (pinned, pinned)
    } else {
        (l, h)
    }
}

pub(crate) struct ShiftedLimits {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    pub zlo: Vec<f64>,
    pub zhi: Vec<f64>,
}

impl ShiftedLimits {
    pub fn new(limits: &ActuatorLimits, state: &ActuatorState) -> Self {
        let m = limits.len();
        let mut s = ShiftedLimits {
            lo: limits.u_min.clone(),
            hi: limits.u_max.clone(),
            zlo: Vec::with_capacity(m),
            zhi: Vec::with_capacity(m),
        };
        for i in 0..m {
            s.zlo.push(state.u_prev[i] + limits.rate_min[i] * state.dt);
            s.zhi.push(state.u_prev[i] + limits.rate_max[i] * state.dt);
        }
        s
    }

    pub fn window(&self, i: usize) -> (f64, f64) {
        window(self.lo[i], self.hi[i], self.zlo[i], self.zhi[i])
    }

    /// Telescope all four bounds by the committed increment.
    pub fn shift(&mut self, s: &[f64]) {
        for i in 0..s.len() {
            self.lo[i] -= s[i];
            self.hi[i] -= s[i];
            self.zlo[i] -= s[i];
            self.zhi[i] -= s[i];
        }
    }
}

fn redistributed(
    b: &EffectivenessMatrix,
    nu: &VirtualCommand,
    limits: &ActuatorLimits,
    state: &ActuatorState,
    max_iter: usize,
    residual_tol: f64,
    rank_tol: f64,
    scaled: bool,
) -> AllocationResult {
    let bm = b.matrix();
    let m = b.effectors();
    assert_eq!(nu.len(), b.axes(), "demand length must match axis count");

    let mut sparsified = bm.clone();
    let mut bounds = ShiftedLimits::new(limits, state);
    let mut res = nu.values().to_vec();
    let mut acc = vec![0.0; m];
    let mut active = vec![true; m];
    let mut iterations = 0;

    for _ in 0..max_iter.max(1) {
        if linalg::norm2(&res) <= residual_tol {
            break;
        }
        if sparsified.norm_fro() == 0.0 {
            break;
        }
        iterations += 1;

        let mut cand = linalg::pinv(&sparsified, rank_tol).mul_vec(&res);
        if scaled {
            // Scale so the most-exceeding component just saturates,
            // preserving direction. Zero components are excluded; a
            // non-positive factor is the documented trivial step.
            let mut a = 1.0f64;
            for i in 0..m {
                if cand[i] == 0.0 {
                    continue;
                }
                let (l, h) = bounds.window(i);
                let limit = if cand[i] > 0.0 { h } else { l };
                a = a.min(limit / cand[i]);
            }
            a = a.max(0.0);
            if a == 0.0 {
                for c in cand.iter_mut() {
                    *c = 0.0;
                }
            } else {
                for c in cand.iter_mut() {
                    *c *= a;
                }
            }
        }

        let mut s = vec![0.0; m];
        let mut newly = vec![false; m];
        let mut any_new = false;
        for i in 0..m {
            let (l, h) = bounds.window(i);
            s[i] = cand[i].clamp(l, h);
            if active[i]
                && ((s[i] - l).abs() <= SAT_DETECT_TOL || (s[i] - h).abs() <= SAT_DETECT_TOL)
            {
                newly[i] = true;
                any_new = true;
            }
        }

        for i in 0..m {
            acc[i] += s[i];
        }
        let achieved = bm.mul_vec(&s);
        for (r, a) in res.iter_mut().zip(&achieved) {
            *r -= a;
        }
        bounds.shift(&s);

        if !any_new {
            break;
        }
        for i in 0..m {
            if newly[i] {
                sparsified.zero_col(i);
                active[i] = false;
            }
        }
    }

    AllocationResult::from_u(acc, bm, nu.values(), iterations.max(1))
}

/// Redistributed pseudoinverse: saturate, zero the saturated columns,
/// shift the remaining limits, and reallocate the residual until it is
/// met, no effectors remain, or the iteration budget runs out.
pub fn rpica(
    b: &EffectivenessMatrix,
    nu: &VirtualCommand,
    limits: &ActuatorLimits,
    state: &ActuatorState,
    max_iter: usize,
    residual_tol: f64,
    rank_tol: f64,
) -> AllocationResult {
    redistributed(
        b,
        nu,
        limits,
        state,
        max_iter,
        residual_tol,
        rank_tol,
        false,
    )
}

/// Scaled redistributed pseudoinverse: each unconstrained increment is
/// shrunk onto the feasible box before saturation so the commanded
/// direction is preserved. With a zero lower bound the scale factor can
/// vanish, producing the documented trivial command.
pub fn rspica(
    b: &EffectivenessMatrix,
    nu: &VirtualCommand,
    limits: &ActuatorLimits,
    state: &ActuatorState,
    max_iter: usize,
    residual_tol: f64,
    rank_tol: f64,
) -> AllocationResult {
    redistributed(b, nu, limits, state, max_iter, residual_tol, rank_tol, true)
}

/// Axis weighting for the least-squares objective of [`qpca`].
#[derive(Clone, Debug)]
pub enum QpWeight {
    Identity,
    /// Positive diagonal entries, one per virtual axis.
    Diagonal(Vec<f64>),
}

impl QpWeight {
    fn sqrt_diag(&self, o: usize) -> Result<Vec<f64>> {
        match self {
            QpWeight::Identity => Ok(vec![1.0; o]),
            QpWeight::Diagonal(d) => {
                if d.len() != o {
                    return Err(Error::Dimension {
                        what: "qp weight diagonal",
                    });
                }
                let mut out = Vec::with_capacity(o);
                for (i, &w) in d.iter().enumerate() {
                    if !(w > 0.0) {
                        return Err(Error::DegenerateWeights { index: i });
                    }
                    out.push(libm::sqrt(w));
                }
                Ok(out)
            }
        }
    }

    pub(crate) fn diag(&self, o: usize) -> Result<Vec<f64>> {
        let s = self.sqrt_diag(o)?;
        Ok(s.iter().map(|x| x * x).collect())
    }
}

/// Stack the weighted residual block on top of the Tikhonov block:
/// minimizing `0.5 ||A u - rhs||^2` over the box solves
/// `0.5 ||B u - nu||_W^2 + reg_lambda ||u - u_ref||^2`.
pub(crate) fn stack_qp(
    bm: &Mat,
    nu: &[f64],
    w_sqrt: &[f64],
    reg_lambda: f64,
    u_ref: &[f64],
) -> (Mat, Vec<f64>) {
    let (o, m) = (bm.rows(), bm.cols());
    let extra = if reg_lambda > 0.0 { m } else { 0 };
    let mut a = Mat::zeros(o + extra, m);
    let mut rhs = vec![0.0; o + extra];
    for r in 0..o {
        for c in 0..m {
            a[(r, c)] = w_sqrt[r] * bm[(r, c)];
        }
        rhs[r] = w_sqrt[r] * nu[r];
    }
    if extra > 0 {
        let s = libm::sqrt(2.0 * reg_lambda);
        for c in 0..m {
            a[(o + c, c)] = s;
            rhs[o + c] = s * u_ref[c];
        }
    }
    (a, rhs)
}

/// Box-constrained weighted least squares via a bounded-variable
/// active-set method:
/// `min 0.5 ||B u - nu||_W^2 + reg_lambda ||u - u_ref||^2` over the
/// effective bounds. Returns the KKT-certified minimizer.
pub fn qpca(
    b: &EffectivenessMatrix,
    nu: &VirtualCommand,
    limits: &ActuatorLimits,
    state: &ActuatorState,
    weight: &QpWeight,
    reg_lambda: f64,
    u_ref: &[f64],
    rank_tol: f64,
) -> Result<AllocationResult> {
    let bm = b.matrix();
    let (o, m) = (b.axes(), b.effectors());
    if nu.len() != o || u_ref.len() != m {
        return Err(Error::Dimension {
            what: "qpca inputs",
        });
    }
    let w_sqrt = weight.sqrt_diag(o)?;
    let (a, rhs) = stack_qp(bm, nu.values(), &w_sqrt, reg_lambda, u_ref);
    let box_ = effective_bounds(limits, state);
    let max_pivots = 10 * m * o.max(1);
    let sol = solve_bvls(&a, &rhs, &box_.lo, &box_.hi, max_pivots, rank_tol)?;
    let mut out = AllocationResult::from_u(sol.x, bm, nu.values(), sol.pivots.max(1));
    out.iterations = sol.pivots.max(1);
    Ok(out)
}

/// Reference QP path: forms the dense normal equations and runs a
/// textbook primal active-set iteration from a cold start on every call,
/// rebuilding and refactorizing the full KKT system at each pivot. Same
/// minimizer as [`qpca`], none of its structure exploitation; exists as
/// a runtime baseline.
pub fn qpca_generic_ref(
    b: &EffectivenessMatrix,
    nu: &VirtualCommand,
    limits: &ActuatorLimits,
    state: &ActuatorState,
    weight: &QpWeight,
    reg_lambda: f64,
    u_ref: &[f64],
    rank_tol: f64,
) -> Result<AllocationResult> {
    qp_ref::solve(b, nu, limits, state, weight, reg_lambda, u_ref, rank_tol)
}

#[cfg(test)]
mod tests;
