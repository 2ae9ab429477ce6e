//! Generic dense QP path used as a runtime reference.
//!
//! Forms the normal equations `P = B^T W B + 2 lambda I`,
//! `q = -(B^T W nu + 2 lambda u_ref)` and minimizes
//! `0.5 x^T P x + q^T x` subject to the box written as the 2m general
//! inequalities `[I; -I] x <= [hi; -lo]`. A textbook primal active-set
//! iteration runs on that general form: the full KKT system of the
//! working set is assembled and factorized from scratch at every pivot
//! (SVD, so singular `P` and redundant working sets survive), one
//! constraint enters or leaves per pivot, and nothing carries over
//! between pivots or calls. Same minimizer as the structured solver,
//! none of its economy; exists as a runtime baseline.

use alloc::vec;
use alloc::vec::Vec;

use crate::actuator::{
    effective_bounds, ActuatorLimits, ActuatorState, EffectivenessMatrix, VirtualCommand,
};
use crate::linalg::{self, Mat};
use crate::{Error, Result};

use super::{AllocationResult, QpWeight};

#[allow(clippy::too_many_arguments)]
pub(crate) fn solve(
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
            what: "qp reference inputs",
        });
    }
    let w = weight.diag(o)?;

    // Normal equations, assembled dense.
    let mut p = Mat::zeros(m, m);
    for i in 0..m {
        for j in 0..m {
            let mut acc = 0.0;
            for r in 0..o {
                acc += bm[(r, i)] * w[r] * bm[(r, j)];
            }
            p[(i, j)] = acc;
        }
        p[(i, i)] += 2.0 * reg_lambda;
    }
    let mut q = vec![0.0; m];
    for i in 0..m {
        let mut acc = 0.0;
        for r in 0..o {
            acc += bm[(r, i)] * w[r] * nu.values()[r];
        }
        q[i] = -(acc + 2.0 * reg_lambda * u_ref[i]);
    }

    // General inequality form G x <= h.
    let box_ = effective_bounds(limits, state);
    let ncon = 2 * m;
    let mut g = Mat::zeros(ncon, m);
    let mut h = vec![0.0; ncon];
    for i in 0..m {
        g[(i, i)] = 1.0;
        h[i] = box_.hi[i];
        g[(m + i, i)] = -1.0;
        h[m + i] = -box_.lo[i];
    }

    // Feasible start at the box projection of the origin; the initial
    // working set is whatever holds with equality there.
    let mut x: Vec<f64> = (0..m)
        .map(|i| 0.0f64.clamp(box_.lo[i], box_.hi[i]))
        .collect();
    let mut working: Vec<bool> = (0..ncon)
        .map(|c| (linalg::dot(g.row(c), &x) - h[c]).abs() <= 1e-12)
        .collect();

    let max_pivots = 20 * m * o.max(1);
    let mut pivots = 0usize;
    let scale = p.norm_fro().max(1.0);

    loop {
        pivots += 1;
        if pivots > max_pivots {
            return Err(Error::PivotLimit { pivots });
        }

        let px = p.mul_vec(&x);
        let grad: Vec<f64> = px.iter().zip(&q).map(|(a, b)| a + b).collect();

        // KKT system of the equality-constrained subproblem
        // min 0.5 d' P d + grad' d  s.t.  G_W d = 0, built from scratch.
        let active: Vec<usize> = (0..ncon).filter(|&c| working[c]).collect();
        let na = active.len();
        let dim = m + na;
        let mut kkt = Mat::zeros(dim, dim);
        for i in 0..m {
            for j in 0..m {
                kkt[(i, j)] = p[(i, j)];
            }
        }
        for (k, &c) in active.iter().enumerate() {
            for j in 0..m {
                kkt[(j, m + k)] = g[(c, j)];
                kkt[(m + k, j)] = g[(c, j)];
            }
        }
        let mut rhs = vec![0.0; dim];
        for i in 0..m {
            rhs[i] = -grad[i];
        }
        let sol = linalg::pinv(&kkt, rank_tol).mul_vec(&rhs);
        let d = &sol[..m];
        let lambda = &sol[m..];

        let d_norm = linalg::norm2(d);
        if d_norm <= 1e-11 * scale.max(linalg::norm2(&x)) {
            // Stationary on the working set; drop the most negative
            // multiplier or certify optimality.
            let mut drop: Option<(usize, f64)> = None;
            for (k, &c) in active.iter().enumerate() {
                if lambda[k] < -1e-9 {
                    match drop {
                        Some((_, best)) if lambda[k] >= best => {}
                        _ => drop = Some((c, lambda[k])),
                    }
                }
            }
            match drop {
                None => {
                    let mut out = AllocationResult::from_u(x, bm, nu.values(), pivots);
                    out.iterations = pivots;
                    return Ok(out);
                }
                Some((c, _)) => {
                    working[c] = false;
                    continue;
                }
            }
        }

        // Step to the nearest blocking constraint.
        let mut alpha = 1.0f64;
        let mut blocking: Option<usize> = None;
        for c in 0..ncon {
            if working[c] {
                continue;
            }
            let gd = linalg::dot(g.row(c), d);
            if gd > 1e-14 {
                let slack = h[c] - linalg::dot(g.row(c), &x);
                let step = slack / gd;
                if step < alpha {
                    alpha = step.max(0.0);
                    blocking = Some(c);
                }
            }
        }
        for i in 0..m {
            x[i] += alpha * d[i];
        }
        if let Some(c) = blocking {
            working[c] = true;
        }
    }
}
