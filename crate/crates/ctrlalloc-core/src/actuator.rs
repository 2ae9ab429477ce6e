//! Domain types, saturation functions, and the feasible-set predicate
//! shared by every allocator.
//!
//! Units are fixed throughout: deflections in degrees, rates in deg/s,
//! moments in Nm, time in seconds. Rate limits are folded into per-step
//! magnitude windows around the previous deflection (zero-order hold), so
//! the feasible set at any instant is a plain box.

use alloc::vec::Vec;

use crate::linalg::Mat;
use crate::{Error, Result};

/// The `o x m` map from effector deflections (deg) to virtual moments (Nm).
#[derive(Clone, Debug)]
pub struct EffectivenessMatrix {
    mat: Mat,
}

impl EffectivenessMatrix {
    /// Requires `o >= 1`, `m >= o` (over-actuation) and finite entries.
    pub fn new(mat: Mat) -> Result<Self> {
        if mat.rows() < 1 || mat.cols() < mat.rows() {
            return Err(Error::Dimension {
                what: "effectiveness matrix needs m >= o >= 1",
            });
        }
        if !mat.is_finite() {
            return Err(Error::NonFinite("effectiveness matrix"));
        }
        Ok(EffectivenessMatrix { mat })
    }

    pub fn from_row_slice(o: usize, m: usize, data: &[f64]) -> Result<Self> {
        Self::new(Mat::from_row_slice(o, m, data))
    }

    /// Number of virtual axes `o`.
    pub fn axes(&self) -> usize {
        self.mat.rows()
    }

    /// Number of effectors `m`.
    pub fn effectors(&self) -> usize {
        self.mat.cols()
    }

    pub fn matrix(&self) -> &Mat {
        &self.mat
    }
}

/// Virtual moment demand, one entry per axis (Nm).
#[derive(Clone, Debug, PartialEq)]
pub struct VirtualCommand {
    values: Vec<f64>,
}

impl VirtualCommand {
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("virtual command"));
        }
        Ok(VirtualCommand { values })
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }
}

/// Per-effector magnitude bounds (deg) and rate bounds (deg/s).
#[derive(Clone, Debug)]
pub struct ActuatorLimits {
    pub u_min: Vec<f64>,
    pub u_max: Vec<f64>,
    pub rate_min: Vec<f64>,
    pub rate_max: Vec<f64>,
}

impl ActuatorLimits {
    /// Validates `u_min <= u_max` and `rate_min <= 0 <= rate_max`
    /// componentwise (rates bracket zero so holding position is always
    /// feasible).
    pub fn new(
        u_min: Vec<f64>,
        u_max: Vec<f64>,
        rate_min: Vec<f64>,
        rate_max: Vec<f64>,
    ) -> Result<Self> {
        let m = u_min.len();
        if u_max.len() != m || rate_min.len() != m || rate_max.len() != m {
            return Err(Error::Dimension {
                what: "limit vectors must share one length",
            });
        }
        for i in 0..m {
            if !(u_min[i].is_finite() && u_max[i].is_finite()) {
                return Err(Error::NonFinite("magnitude limits"));
            }
            if u_min[i] > u_max[i] {
                return Err(Error::BoundsOrder { index: i });
            }
            if !(rate_min[i] <= 0.0 && rate_max[i] >= 0.0) {
                return Err(Error::RateBracket { index: i });
            }
        }
        Ok(ActuatorLimits {
            u_min,
            u_max,
            rate_min,
            rate_max,
        })
    }

    /// Magnitude box only; rate limits wide enough to never bind.
    pub fn magnitude_only(u_min: Vec<f64>, u_max: Vec<f64>) -> Result<Self> {
        let m = u_min.len();
        let wide = 1e9;
        Self::new(u_min, u_max, alloc::vec![-wide; m], alloc::vec![wide; m])
    }

    pub fn len(&self) -> usize {
        self.u_min.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u_min.is_empty()
    }
}

/// Deflection history: `u(t-T)`, `u(t-2T)`, and the step `T`.
#[derive(Clone, Debug)]
pub struct ActuatorState {
    pub u_prev: Vec<f64>,
    pub u_prev2: Vec<f64>,
    pub dt: f64,
}

impl ActuatorState {
    pub fn new(u_prev: Vec<f64>, u_prev2: Vec<f64>, dt: f64) -> Result<Self> {
        if u_prev.len() != u_prev2.len() {
            return Err(Error::Dimension {
                what: "state vectors must share one length",
            });
        }
        if !dt.is_finite() || dt <= 0.0 {
            return Err(Error::NonFinite("time step"));
        }
        if u_prev.iter().chain(&u_prev2).any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("actuator state"));
        }
        Ok(ActuatorState {
            u_prev,
            u_prev2,
            dt,
        })
    }

    /// History at rest: both previous deflections equal to `u`.
    pub fn at_rest(u: Vec<f64>, dt: f64) -> Result<Self> {
        let u2 = u.clone();
        Self::new(u, u2, dt)
    }

    /// Backward-difference rate `(u(t-T) - u(t-2T)) / T`.
    pub fn rate(&self) -> Vec<f64> {
        self.u_prev
            .iter()
            .zip(&self.u_prev2)
            .map(|(a, b)| (a - b) / self.dt)
            .collect()
    }
}

/// Per-step box: magnitude limits intersected with the zero-order-hold
/// window reachable under the rate limits.
#[derive(Clone, Debug, PartialEq)]
pub struct EffectiveBounds {
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
}

impl EffectiveBounds {
    pub fn len(&self) -> usize {
        self.lo.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lo.is_empty()
    }
}

/// Clamp each rate into `[rate_min, rate_max]`.
pub fn saturate_rate(rate: &[f64], limits: &ActuatorLimits) -> Vec<f64> {
    rate.iter()
        .enumerate()
        .map(|(i, &r)| r.clamp(limits.rate_min[i], limits.rate_max[i]))
        .collect()
}

/// Intersect the magnitude box with the rate window around `u_prev`:
/// `lo = max(u_min, u_prev + rate_min*dt)`, `hi = min(u_max, u_prev + rate_max*dt)`.
///
/// If a scheduled magnitude bound jumps past the current deflection the
/// interval can come out empty; it then collapses to the single point
/// reachable by retracting at the maximum admissible rate, clamped into
/// the magnitude box.
pub fn effective_bounds(limits: &ActuatorLimits, state: &ActuatorState) -> EffectiveBounds {
    let m = limits.len();
    let mut lo = Vec::with_capacity(m);
    let mut hi = Vec::with_capacity(m);
    for i in 0..m {
        let zoh_lo = state.u_prev[i] + limits.rate_min[i] * state.dt;
        let zoh_hi = state.u_prev[i] + limits.rate_max[i] * state.dt;
        let mut l = limits.u_min[i].max(zoh_lo);
        let mut h = limits.u_max[i].min(zoh_hi);
        if l > h {
            // Empty intersection: the magnitude box moved past the rate
            // window. Pin to the window edge nearest the box, i.e. move
            // toward it as fast as the rate allows.
            let pinned = if limits.u_min[i] > zoh_hi {
                zoh_hi
            } else {
                zoh_lo
            };
            l = pinned;
            h = pinned;
        }
        lo.push(l);
        hi.push(h);
    }
    EffectiveBounds { lo, hi }
}

/// Componentwise clamp of `u` into the effective bounds. Idempotent.
pub fn saturate(u: &[f64], limits: &ActuatorLimits, state: &ActuatorState) -> Vec<f64> {
    let b = effective_bounds(limits, state);
    u.iter()
        .enumerate()
        .map(|(i, &x)| x.clamp(b.lo[i], b.hi[i]))
        .collect()
}

/// True iff `lo - tol <= u <= hi + tol` componentwise.
pub fn is_feasible(u: &[f64], limits: &ActuatorLimits, state: &ActuatorState, tol: f64) -> bool {
    let b = effective_bounds(limits, state);
    u.iter()
        .enumerate()
        .all(|(i, &x)| x >= b.lo[i] - tol && x <= b.hi[i] + tol)
}
