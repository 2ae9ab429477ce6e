//! Iterative dynamic control allocation.
//!
//! Each iteration solves the unconstrained weighted problem explicitly
//! through the filter gains `u = E u_s + F u_prev + G nu`, saturates the
//! candidate against the shifted per-iteration window, freezes effectors
//! that saturated (their columns leave the reduced problem and their
//! later increments are zero), and reallocates the remaining residual.
//! Limits telescope with the committed increments, so the accumulated
//! command stays inside the original effective bounds by construction.
//!
//! Freezing alone can dead-end: a small negative excursion pins an
//! effector at its bound even though the optimum wants it slightly
//! inside. When an iteration makes no progress, effectors pinned at a
//! bound whose reduced gradient points back into the interior are
//! released, which restores exactness on every demand inside the
//! attainable set without disturbing the finite termination of the plain
//! iteration.

use alloc::vec;
use alloc::vec::Vec;

use crate::actuator::{ActuatorLimits, ActuatorState, EffectivenessMatrix, VirtualCommand};
use crate::linalg::{self, Mat};
use crate::weighting::WeightingMatrices;

use super::{AllocationResult, ShiftedLimits, SAT_DETECT_TOL};

/// Iteration budget and tolerances for [`idca`].
#[derive(Clone, Debug)]
pub struct IdcaConfig {
    /// Maximum number of iterations `N`.
    pub max_iterations: usize,
    /// Terminate once `||nu - B u|| <= residual_tol` (Nm).
    pub residual_tol: f64,
    /// Relative singular-value cutoff for the gain pseudoinverses.
    pub rank_tol: f64,
    /// Shift the steady-state target by each committed increment. On by
    /// default; switchable for sensitivity checks.
    pub adjust_steady_state: bool,
}

impl Default for IdcaConfig {
    fn default() -> Self {
        IdcaConfig {
            max_iterations: 8,
            residual_tol: 1e-6,
            rank_tol: 1e-12,
            adjust_steady_state: true,
        }
    }
}

#[derive(Clone, Copy, PartialEq)]
enum Pin {
    None,
    Lo,
    Hi,
}

/// Allocate `nu` around the steady-state target under magnitude and rate
/// limits. Always returns the best feasible accumulation; the residual is
/// zero (to tolerance) whenever the demand is attainable.
pub fn idca(
    b: &EffectivenessMatrix,
    nu: &VirtualCommand,
    limits: &ActuatorLimits,
    state: &ActuatorState,
    u_s: &[f64],
    weights: &WeightingMatrices,
    cfg: &IdcaConfig,
) -> AllocationResult {
    let bm = b.matrix();
    let m = b.effectors();
    assert_eq!(nu.len(), b.axes(), "demand length must match axis count");
    assert_eq!(u_s.len(), m, "steady-state target length");
    assert_eq!(weights.w_m.len(), m, "weight length");

    let u_tau = &state.u_prev;
    let mut bounds = ShiftedLimits::new(limits, state);
    let mut target = u_s.to_vec();
    // The previous-input anchor in increment coordinates: committed
    // increments shift it exactly like the limits, so later iterations
    // pull toward holding position rather than toward the absolute
    // previous deflection.
    let mut anchor = u_tau.clone();
    let mut res = nu.values().to_vec();
    let mut acc = vec![0.0; m];
    let mut pins = vec![Pin::None; m];
    let mut active = vec![true; m];
    let mut blocked = vec![false; m];
    let mut last_released: Option<usize> = None;
    let mut best_res = f64::INFINITY;
    let mut iterations = 0;

    let b_fro = bm.norm_fro();

    for j in 1..=cfg.max_iterations.max(1) {
        iterations = j;

        // Filter solution of the reduced problem in its condensed form
        // u = u0 + G (nu - B u0), with u0 = W^-2 (W_m^2 u_s + W_r^2 u_prev)
        // and G = W^-1 (B W^-1)^+; identical to E u_s + F u_prev + G nu.
        let idx: Vec<usize> = (0..m).filter(|&i| active[i]).collect();
        let na = idx.len();
        let mut winv = vec![0.0; na];
        let mut u0 = vec![0.0; na];
        for (k, &i) in idx.iter().enumerate() {
            let wm2 = weights.w_m[i] * weights.w_m[i];
            let wr2 = weights.w_r[i] * weights.w_r[i];
            let w2 = wm2 + wr2;
            if w2 <= 0.0 {
                return AllocationResult::from_u(acc, bm, nu.values(), iterations.max(1));
            }
            winv[k] = 1.0 / libm::sqrt(w2);
            u0[k] = (wm2 * target[i] + wr2 * anchor[i]) / w2;
        }
        let ba_winv = Mat::from_fn(bm.rows(), na, |r, c| bm[(r, idx[c])] * winv[c]);
        let pi = linalg::pinv(&ba_winv, cfg.rank_tol);
        let mut rhs = res.clone();
        for (k, &i) in idx.iter().enumerate() {
            if u0[k] != 0.0 {
                for r in 0..bm.rows() {
                    rhs[r] -= bm[(r, i)] * u0[k];
                }
            }
        }
        let mut cand = vec![0.0; m];
        for (k, &i) in idx.iter().enumerate() {
            let mut d = 0.0;
            for r in 0..bm.rows() {
                d += pi[(k, r)] * rhs[r];
            }
            cand[i] = u0[k] + winv[k] * d;
        }

        let mut s = vec![0.0; m];
        let mut newly = vec![false; m];
        let mut any_new = false;
        for i in 0..m {
            let (l, h) = bounds.window(i);
            s[i] = cand[i].clamp(l, h);
            if active[i] {
                if (s[i] - l).abs() <= SAT_DETECT_TOL {
                    newly[i] = true;
                    pins[i] = Pin::Lo;
                } else if (s[i] - h).abs() <= SAT_DETECT_TOL {
                    newly[i] = true;
                    pins[i] = Pin::Hi;
                }
                any_new |= newly[i];
            }
        }

        for i in 0..m {
            acc[i] += s[i];
        }
        let achieved = bm.mul_vec(&s);
        for (r, a) in res.iter_mut().zip(&achieved) {
            *r -= a;
        }
        let res_norm = linalg::norm2(&res);

        bounds.shift(&s);
        for i in 0..m {
            anchor[i] -= s[i];
        }
        if cfg.adjust_steady_state {
            for i in 0..m {
                target[i] -= s[i];
            }
        }

        if res_norm <= cfg.residual_tol {
            break;
        }

        // Anti-cycling bookkeeping: a released effector that pins again
        // without the residual shrinking is blocked until some other
        // step makes progress.
        if res_norm < best_res * (1.0 - 1e-12) {
            best_res = res_norm;
            for b in blocked.iter_mut() {
                *b = false;
            }
        } else if let Some(r) = last_released {
            if newly[r] {
                blocked[r] = true;
            }
        }
        last_released = None;

        if any_new {
            for i in 0..m {
                if newly[i] {
                    active[i] = false;
                }
            }
        } else {
            // No new saturation and residual unmet: the current reduced
            // problem is exhausted. Release the pinned effector whose
            // gradient points hardest back into the interior.
            let release_tol = 1e-12 * b_fro * res_norm;
            let mut pick: Option<(usize, f64)> = None;
            for i in 0..m {
                if active[i] || blocked[i] {
                    continue;
                }
                let g: f64 = (0..bm.rows()).map(|r| bm[(r, i)] * res[r]).sum();
                let violation = match pins[i] {
                    Pin::Lo => g,
                    Pin::Hi => -g,
                    Pin::None => 0.0,
                };
                if violation > release_tol && pick.map_or(true, |(_, v)| violation > v) {
                    pick = Some((i, violation));
                }
            }
            if let Some((i, _)) = pick {
                active[i] = true;
                pins[i] = Pin::None;
                last_released = Some(i);
            } else {
                if active.iter().all(|a| !a) {
                    break;
                }
                // Residual orthogonal to every active column: no further
                // progress is possible.
                let mut reach = 0.0f64;
                for i in 0..m {
                    if !active[i] {
                        continue;
                    }
                    let g: f64 = (0..bm.rows()).map(|r| bm[(r, i)] * res[r]).sum();
                    reach = reach.max(g.abs());
                }
                if reach <= 1e-12 * b_fro * res_norm {
                    break;
                }
            }
        }
    }

    AllocationResult::from_u(acc, bm, nu.values(), iterations.max(1))
}
