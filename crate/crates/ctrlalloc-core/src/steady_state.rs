//! Designer-preference steady-state target: sign-conditionalized
//! sparsification of the effectiveness matrix and a per-axis
//! pseudoinverse correction on top of the baseline input.
//!
//! Effector layout is the four-fin rear view: `u1` upper left, `u2` upper
//! right, `u3` lower left, `u4` lower right. Each virtual axis keeps only
//! the two surfaces preferred for that demand direction, e.g. a positive
//! pitch demand goes to the upper flaps and a negative one to the lower
//! flaps.

use alloc::vec::Vec;

use crate::actuator::{EffectivenessMatrix, VirtualCommand};
use crate::linalg::{self, Mat};
use crate::{Error, Result};

/// Sign-dependent sparsified rows of the effectiveness matrix, one per
/// virtual axis; zeroed entries are exactly zero.
#[derive(Clone, Debug)]
pub struct ConditionalizedMap {
    rows: Mat,
}

impl ConditionalizedMap {
    pub fn rows(&self) -> &Mat {
        &self.rows
    }

    /// Column indices kept in row `axis`.
    pub fn kept_columns(&self, axis: usize) -> Vec<usize> {
        (0..self.rows.cols())
            .filter(|&j| self.rows[(axis, j)] != 0.0)
            .collect()
    }
}

/// Columns kept per axis for the given demand sign. Zero demands take the
/// non-negative branch.
fn kept(axis: usize, value: f64) -> [usize; 2] {
    match (axis, value >= 0.0) {
        // roll: positive demand uses u2 (upper right) and u3 (lower left)
        (0, true) => [1, 2],
        (0, false) => [0, 3],
        // pitch: positive demand uses the upper flaps
        (1, true) => [0, 1],
        (1, false) => [2, 3],
        // yaw: positive demand uses the right-side pair
        (2, true) => [1, 3],
        (2, false) => [0, 2],
        _ => unreachable!("axis index out of range"),
    }
}

/// Build the conditionalized map for a (3 x 4) effectiveness matrix. The
/// selection rules are specific to the four-fin vehicle; other shapes are
/// rejected.
pub fn conditionalize(
    b: &EffectivenessMatrix,
    delta_nu: &VirtualCommand,
) -> Result<ConditionalizedMap> {
    if b.axes() != 3 || b.effectors() != 4 || delta_nu.len() != 3 {
        return Err(Error::Dimension {
            what: "conditionalization requires o = 3, m = 4",
        });
    }
    let mut rows = Mat::zeros(3, 4);
    for axis in 0..3 {
        for col in kept(axis, delta_nu.values()[axis]) {
            rows[(axis, col)] = b.matrix()[(axis, col)];
        }
    }
    Ok(ConditionalizedMap { rows })
}

/// Steady-state target `u_s = u_r + sum_axis row_axis^+ * delta_nu_axis`.
///
/// Each axis's correction is allocated on that axis's preferred surface
/// pair alone and the three corrections superpose, so a pure pitch demand
/// never moves the lower flaps. The result is a preference target, not a
/// solution: it may violate limits and need not reproduce the demand.
pub fn steady_state_target(
    b: &EffectivenessMatrix,
    u_r: &[f64],
    delta_nu: &VirtualCommand,
    rank_tol: f64,
) -> Result<Vec<f64>> {
    let cond = conditionalize(b, delta_nu)?;
    if u_r.len() != b.effectors() {
        return Err(Error::Dimension {
            what: "baseline input length",
        });
    }
    let mut u_s = u_r.to_vec();
    for axis in 0..3 {
        let row = Mat::from_fn(1, 4, |_, j| cond.rows()[(axis, j)]);
        let pi = linalg::pinv(&row, rank_tol);
        for i in 0..4 {
            u_s[i] += pi[(i, 0)] * delta_nu.values()[axis];
        }
    }
    Ok(u_s)
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;

    fn ghgv2() -> EffectivenessMatrix {
        EffectivenessMatrix::from_row_slice(
            3,
            4,
            &[
                -20.01, 20.01, 93.94, -93.94, //
                126.7, 126.7, -501.4, -501.4, //
                -127.5, 127.5, -45.72, 46.72,
            ],
        )
        .unwrap()
    }

    fn cmd(v: [f64; 3]) -> VirtualCommand {
        VirtualCommand::new(v.to_vec()).unwrap()
    }

    #[test]
    fn positive_branch_patterns() {
        let b = ghgv2();
        let c = conditionalize(&b, &cmd([0.0, 800.0, 0.0])).unwrap();
        // all three axes on the >= 0 branch
        assert_eq!(c.kept_columns(0), vec![1, 2]);
        assert_eq!(c.kept_columns(1), vec![0, 1]);
        assert_eq!(c.kept_columns(2), vec![1, 3]);
        // pitch row keeps the upper-flap entries verbatim
        assert_eq!(c.rows()[(1, 0)], 126.7);
        assert_eq!(c.rows()[(1, 1)], 126.7);
        assert_eq!(c.rows()[(1, 2)], 0.0);
        assert_eq!(c.rows()[(1, 3)], 0.0);
    }

    #[test]
    fn negative_branch_patterns() {
        let b = ghgv2();
        let c = conditionalize(&b, &cmd([-1.0, -1.0, -1.0])).unwrap();
        assert_eq!(c.kept_columns(0), vec![0, 3]);
        assert_eq!(c.kept_columns(1), vec![2, 3]);
        assert_eq!(c.kept_columns(2), vec![0, 2]);
    }

    #[test]
    fn sign_flip_complements_every_pattern() {
        let b = ghgv2();
        let pos = conditionalize(&b, &cmd([1.0, 2.0, 3.0])).unwrap();
        let neg = conditionalize(&b, &cmd([-1.0, -2.0, -3.0])).unwrap();
        for axis in 0..3 {
            let mut union: Vec<usize> = pos.kept_columns(axis);
            union.extend(neg.kept_columns(axis));
            union.sort_unstable();
            assert_eq!(union, vec![0, 1, 2, 3]);
            for j in pos.kept_columns(axis) {
                assert!(!neg.kept_columns(axis).contains(&j));
            }
        }
    }

    #[test]
    fn wrong_shape_is_rejected() {
        let b = EffectivenessMatrix::from_row_slice(2, 4, &[1.0; 8]).unwrap();
        assert!(matches!(
            conditionalize(&b, &cmd([0.0, 0.0, 0.0])),
            Err(Error::Dimension { .. })
        ));
    }

    #[test]
    fn zero_demand_returns_baseline() {
        let b = ghgv2();
        let u_r = [1.0, 2.0, 3.0, 4.0];
        let u_s = steady_state_target(&b, &u_r, &cmd([0.0, 0.0, 0.0]), 1e-12).unwrap();
        for i in 0..4 {
            assert!((u_s[i] - u_r[i]).abs() < 1e-12);
        }
    }

    // Oracle for a single conditionalized row: pinv(row) * d = row^T d / ||row||^2.
    fn axis_correction(b: &EffectivenessMatrix, axis: usize, d: f64) -> [f64; 4] {
        let cols = kept(axis, d);
        let mut out = [0.0; 4];
        let r0 = b.matrix()[(axis, cols[0])];
        let r1 = b.matrix()[(axis, cols[1])];
        let n2 = r0 * r0 + r1 * r1;
        out[cols[0]] = r0 * d / n2;
        out[cols[1]] = r1 * d / n2;
        out
    }

    #[test]
    fn pure_pitch_up_concentrates_on_upper_flaps() {
        let b = ghgv2();
        let u_s = steady_state_target(&b, &[0.0; 4], &cmd([0.0, 800.0, 0.0]), 1e-12).unwrap();
        let expect = axis_correction(&b, 1, 800.0);
        // 800 / (2 * 126.7) = 3.15706...
        assert!((expect[0] - 3.157064).abs() < 1e-5);
        for i in 0..4 {
            assert!(
                (u_s[i] - expect[i]).abs() < 1e-9,
                "component {i}: {} vs {}",
                u_s[i],
                expect[i]
            );
        }
        assert_eq!(u_s[2], 0.0);
        assert_eq!(u_s[3], 0.0);
    }

    #[test]
    fn pure_pitch_down_concentrates_on_lower_flaps() {
        let b = ghgv2();
        let u_s = steady_state_target(&b, &[0.0; 4], &cmd([0.0, -800.0, 0.0]), 1e-12).unwrap();
        let expect = axis_correction(&b, 1, -800.0);
        assert!(expect[2] > 0.0 && expect[3] > 0.0);
        for i in 0..4 {
            assert!((u_s[i] - expect[i]).abs() < 1e-9);
        }
        assert_eq!(u_s[0], 0.0);
        assert_eq!(u_s[1], 0.0);
    }

    #[test]
    fn mixed_demand_superposes_axis_corrections() {
        let b = ghgv2();
        let d = [-400.0, 800.0, -2000.0];
        let u_s = steady_state_target(&b, &[0.0; 4], &cmd(d), 1e-12).unwrap();
        let mut expect = [0.0; 4];
        for axis in 0..3 {
            let c = axis_correction(&b, axis, d[axis]);
            for i in 0..4 {
                expect[i] += c[i];
            }
        }
        for i in 0..4 {
            assert!((u_s[i] - expect[i]).abs() < 1e-9);
            // kept-column sign convention puts every correction in the
            // positive orthant
            assert!(u_s[i] >= 0.0);
        }
    }

    #[test]
    fn support_stays_inside_kept_union() {
        let b = ghgv2();
        // pure roll: union of kept columns is {u1, u4} for the roll row
        // plus the zero-demand branches of pitch {u1,u2} and yaw {u2,u4},
        // but the zero demands contribute nothing.
        let u_s = steady_state_target(&b, &[0.0; 4], &cmd([-500.0, 0.0, 0.0]), 1e-12).unwrap();
        assert_eq!(u_s[1], 0.0);
        assert_eq!(u_s[2], 0.0);
        assert!(u_s[0] > 0.0 && u_s[3] > 0.0);
    }

    #[test]
    fn linear_within_an_orthant() {
        let b = ghgv2();
        let d1 = cmd([-400.0, 800.0, -2000.0]);
        let d2 = cmd([-200.0, 400.0, -1000.0]);
        let u1 = steady_state_target(&b, &[0.0; 4], &d1, 1e-12).unwrap();
        let u2 = steady_state_target(&b, &[0.0; 4], &d2, 1e-12).unwrap();
        for i in 0..4 {
            assert!((u1[i] - 2.0 * u2[i]).abs() < 1e-9);
        }
    }
}
