//! Diagonal weighting matrices for the dynamic allocator: deflection
//! magnitude scaled by a drag proxy, and rate proximity.

use alloc::vec::Vec;

use crate::actuator::{ActuatorLimits, ActuatorState};
use crate::{Error, Result};

/// Affine per-effector drag-coefficient model, `C_D(u_i) = c0 + c1 * u_i`,
/// floored at a small positive value. Drag stands in for thermal load:
/// surfaces that generate more drag run hotter and get penalized harder.
#[derive(Clone, Debug)]
pub struct DragModel {
    pub c0: Vec<f64>,
    pub c1: Vec<f64>,
    pub floor: f64,
}

impl DragModel {
    pub fn new(c0: Vec<f64>, c1: Vec<f64>, floor: f64) -> Result<Self> {
        if c0.len() != c1.len() {
            return Err(Error::Dimension {
                what: "drag coefficient vectors",
            });
        }
        if !floor.is_finite() || floor <= 0.0 {
            return Err(Error::NonFinite("drag floor"));
        }
        Ok(DragModel { c0, c1, floor })
    }

    /// Defaults for the four-fin layout: lower flaps carry twice the slope
    /// of the upper pair. Plumbing values, overridable per scenario.
    pub fn default_four_fin() -> Self {
        DragModel {
            c0: alloc::vec![0.001; 4],
            c1: alloc::vec![0.004, 0.004, 0.008, 0.008],
            floor: 1e-6,
        }
    }

    pub fn coefficient(&self, i: usize, u: f64) -> f64 {
        (self.c0[i] + self.c1[i] * u).max(self.floor)
    }
}

/// Epsilon floor plus drag model, as read from the scenario config.
#[derive(Clone, Debug)]
pub struct WeightingConfig {
    pub epsilon: f64,
    pub drag: DragModel,
}

impl WeightingConfig {
    pub fn new(epsilon: f64, drag: DragModel) -> Result<Self> {
        if !epsilon.is_finite() || epsilon <= 0.0 {
            return Err(Error::NonFinite("weighting epsilon"));
        }
        Ok(WeightingConfig { epsilon, drag })
    }
}

/// Diagonals of the two weighting matrices. Every entry is at least the
/// epsilon floor, so the combined weight `sqrt(W_m^2 + W_r^2)` is always
/// invertible.
#[derive(Clone, Debug, PartialEq)]
pub struct WeightingMatrices {
    pub w_m: Vec<f64>,
    pub w_r: Vec<f64>,
}

/// Deflection-magnitude weights: `w_m,i = (u_i / u_max,i) * (C_D,i / max_j C_D,j) + eps`.
///
/// `u_max` is the scheduled magnitude limit of the current step, before
/// intersecting with rate windows. Negative deflections (possible only
/// with a negative range) normalize by the larger magnitude bound; a
/// schedule that collapses the range to zero pins the entry at
/// `1 + eps`.
pub fn magnitude_weights(
    u: &[f64],
    limits: &ActuatorLimits,
    drag: &DragModel,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let m = u.len();
    if limits.len() != m || drag.c0.len() != m {
        return Err(Error::Dimension {
            what: "magnitude weight inputs",
        });
    }
    let mut cd = Vec::with_capacity(m);
    let mut cd_max = 0.0f64;
    for i in 0..m {
        let c = drag.coefficient(i, u[i]);
        cd_max = cd_max.max(c);
        cd.push(c);
    }
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        let w_t = cd[i] / cd_max;
        let entry = if u[i] >= 0.0 && limits.u_max[i] > 0.0 {
            (u[i] / limits.u_max[i]) * w_t + epsilon
        } else {
            let reference = limits.u_max[i].abs().max(limits.u_min[i].abs());
            if reference == 0.0 {
                1.0 + epsilon
            } else {
                (u[i].abs() / reference) * w_t + epsilon
            }
        };
        out.push(entry);
    }
    Ok(out)
}

/// Rate-proximity weights: `w_r,i = |udot_i(t-T)| / udot_crit,i + eps`,
/// where the critical rate is the bound the actuator is approaching.
pub fn rate_weights(
    state: &ActuatorState,
    limits: &ActuatorLimits,
    epsilon: f64,
) -> Result<Vec<f64>> {
    let m = state.u_prev.len();
    if limits.len() != m {
        return Err(Error::Dimension {
            what: "rate weight inputs",
        });
    }
    let rate = state.rate();
    let mut out = Vec::with_capacity(m);
    for i in 0..m {
        if limits.rate_max[i] == 0.0 || limits.rate_min[i] == 0.0 {
            return Err(Error::DegenerateLimits { index: i });
        }
        let crit = if rate[i] >= 0.0 {
            limits.rate_max[i].abs()
        } else {
            limits.rate_min[i].abs()
        };
        out.push(rate[i].abs() / crit + epsilon);
    }
    Ok(out)
}

/// Both weighting diagonals for the given deflection state.
pub fn weighting_matrices(
    u: &[f64],
    state: &ActuatorState,
    limits: &ActuatorLimits,
    cfg: &WeightingConfig,
) -> Result<WeightingMatrices> {
    Ok(WeightingMatrices {
        w_m: magnitude_weights(u, limits, &cfg.drag, cfg.epsilon)?,
        w_r: rate_weights(state, limits, cfg.epsilon)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use proptest::prelude::*;

    const EPS: f64 = 1e-3;

    fn limits4() -> ActuatorLimits {
        ActuatorLimits::new(vec![0.0; 4], vec![20.0; 4], vec![-20.0; 4], vec![20.0; 4]).unwrap()
    }

    fn equal_drag() -> DragModel {
        DragModel::new(vec![0.001; 4], vec![0.004; 4], 1e-6).unwrap()
    }

    #[test]
    fn half_deflection_equal_drag() {
        let w = magnitude_weights(&[10.0; 4], &limits4(), &equal_drag(), EPS).unwrap();
        for wi in w {
            assert!((wi - (0.5 + EPS)).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_deflection_is_pure_floor() {
        let w = magnitude_weights(&[0.0; 4], &limits4(), &equal_drag(), EPS).unwrap();
        for wi in w {
            assert!((wi - EPS).abs() < 1e-15);
        }
    }

    #[test]
    fn lower_flaps_with_double_slope_make_uppers_cheaper() {
        let drag = DragModel::default_four_fin();
        let u = [10.0; 4];
        let w = magnitude_weights(&u, &limits4(), &drag, EPS).unwrap();
        // C_D upper = 0.041, lower = 0.081 -> upper/lower ratio just over 0.5
        let ratio_upper = drag.coefficient(0, 10.0) / drag.coefficient(2, 10.0);
        assert!((w[0] - (0.5 * ratio_upper + EPS)).abs() < 1e-12);
        assert!((w[2] - (0.5 + EPS)).abs() < 1e-12);
        assert!(w[0] < w[2]);
    }

    #[test]
    fn zero_magnitude_limit_pins_weight() {
        let lim = ActuatorLimits::new(vec![0.0; 2], vec![0.0, 20.0], vec![-20.0; 2], vec![20.0; 2])
            .unwrap();
        let drag = DragModel::new(vec![0.001; 2], vec![0.004; 2], 1e-6).unwrap();
        let w = magnitude_weights(&[0.0, 0.0], &lim, &drag, EPS).unwrap();
        assert!((w[0] - (1.0 + EPS)).abs() < 1e-12);
    }

    #[test]
    fn rate_weight_examples() {
        let lim = limits4();
        // udot = 10 everywhere against rate_max 20 -> 0.5 + eps
        let st = ActuatorState::new(vec![1.0; 4], vec![0.9; 4], 0.01).unwrap();
        let w = rate_weights(&st, &lim, EPS).unwrap();
        for wi in &w {
            assert!((wi - (0.5 + EPS)).abs() < 1e-12);
        }
        // stationary history -> eps I
        let st0 = ActuatorState::at_rest(vec![3.0; 4], 0.01).unwrap();
        let w0 = rate_weights(&st0, &lim, EPS).unwrap();
        for wi in &w0 {
            assert!((wi - EPS).abs() < 1e-15);
        }
        // negative branch uses |rate_min|
        let lim2 = ActuatorLimits::new(vec![0.0], vec![20.0], vec![-30.0], vec![20.0]).unwrap();
        let st2 = ActuatorState::new(vec![0.0], vec![0.15], 0.01).unwrap();
        let w2 = rate_weights(&st2, &lim2, EPS).unwrap();
        assert!((w2[0] - (0.5 + EPS)).abs() < 1e-12);
    }

    #[test]
    fn zero_rate_bound_is_rejected() {
        let lim = ActuatorLimits::new(vec![0.0], vec![20.0], vec![0.0], vec![0.0]).unwrap();
        let st = ActuatorState::at_rest(vec![0.0], 0.01).unwrap();
        assert!(matches!(
            rate_weights(&st, &lim, EPS),
            Err(Error::DegenerateLimits { index: 0 })
        ));
    }

    proptest! {
        #[test]
        fn weights_floored_and_drag_scale_invariant(
            u in proptest::collection::vec(0.0f64..20.0, 4),
            scale in 0.1f64..50.0,
        ) {
            let lim = limits4();
            let drag = DragModel::default_four_fin();
            let scaled = DragModel::new(
                drag.c0.iter().map(|c| c * scale).collect(),
                drag.c1.iter().map(|c| c * scale).collect(),
                drag.floor * scale,
            ).unwrap();
            let w1 = magnitude_weights(&u, &lim, &drag, EPS).unwrap();
            let w2 = magnitude_weights(&u, &lim, &scaled, EPS).unwrap();
            for i in 0..4 {
                prop_assert!(w1[i] >= EPS);
                prop_assert!((w1[i] - w2[i]).abs() < 1e-12);
            }
        }

        #[test]
        fn rate_weight_in_unit_band_when_rate_admissible(
            frac in proptest::collection::vec(-1.0f64..1.0, 4),
        ) {
            let lim = limits4();
            let dt = 0.01;
            let u_prev2 = vec![5.0; 4];
            let u_prev: Vec<f64> = frac.iter()
                .map(|f| 5.0 + f * 20.0 * dt)
                .collect();
            let st = ActuatorState::new(u_prev, u_prev2, dt).unwrap();
            let w = rate_weights(&st, &lim, EPS).unwrap();
            for wi in w {
                prop_assert!((EPS..=1.0 + EPS + 1e-12).contains(&wi));
            }
        }
    }
}
