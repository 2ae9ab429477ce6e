use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;

use super::*;
use crate::actuator::{ActuatorLimits, ActuatorState, EffectivenessMatrix, VirtualCommand};
use crate::steady_state::steady_state_target;
use crate::weighting::WeightingMatrices;
use crate::{is_feasible, IdcaConfig};

const RANK_TOL: f64 = 1e-12;
const RES_TOL: f64 = 1e-6;

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

fn ghgv2_nu() -> VirtualCommand {
    VirtualCommand::new(vec![-400.0, 800.0, -2000.0]).unwrap()
}

fn ghgv2_limits() -> ActuatorLimits {
    ActuatorLimits::magnitude_only(vec![0.0; 4], vec![20.0; 4]).unwrap()
}

fn rest4() -> ActuatorState {
    ActuatorState::at_rest(vec![0.0; 4], 0.01).unwrap()
}

fn toy_b() -> EffectivenessMatrix {
    EffectivenessMatrix::from_row_slice(1, 2, &[0.5, -0.5]).unwrap()
}

fn toy_nu() -> VirtualCommand {
    VirtualCommand::new(vec![0.5]).unwrap()
}

fn toy_limits() -> ActuatorLimits {
    ActuatorLimits::magnitude_only(vec![0.0; 2], vec![1.5; 2]).unwrap()
}

fn rest2() -> ActuatorState {
    ActuatorState::at_rest(vec![0.0; 2], 0.01).unwrap()
}

fn uniform_weights(m: usize, eps: f64) -> WeightingMatrices {
    WeightingMatrices {
        w_m: vec![eps; m],
        w_r: vec![eps; m],
    }
}

fn assert_vec_close(got: &[f64], want: &[f64], tol: f64) {
    assert_eq!(got.len(), want.len());
    for (i, (g, w)) in got.iter().zip(want).enumerate() {
        assert!((g - w).abs() <= tol, "component {i}: {g} vs {w}");
    }
}

// ---- toy problem, every algorithm -------------------------------------

#[test]
fn toy_pica_is_min_norm_and_infeasible() {
    let r = pica(&toy_b(), &toy_nu(), RANK_TOL);
    assert_vec_close(&r.u, &[0.5, -0.5], 1e-12);
    assert!(r.error_norm() <= 1e-12);
    assert!(!is_feasible(&r.u, &toy_limits(), &rest2(), 1e-9));
}

#[test]
fn toy_saturated_pica_clamps_and_loses_accuracy() {
    let r = saturated_pica(&toy_b(), &toy_nu(), &toy_limits(), &rest2(), RANK_TOL);
    assert_vec_close(&r.u, &[0.5, 0.0], 1e-12);
    assert!((r.error_norm() - 0.25).abs() <= 1e-12);
}

#[test]
fn toy_rpica_recovers_the_feasible_optimum() {
    let r = rpica(
        &toy_b(),
        &toy_nu(),
        &toy_limits(),
        &rest2(),
        8,
        RES_TOL,
        RANK_TOL,
    );
    assert_vec_close(&r.u, &[1.0, 0.0], 1e-9);
    assert!(r.error_norm() <= RES_TOL);
    assert_eq!(r.iterations, 2);
}

#[test]
fn toy_rspica_zero_lower_bound_gives_trivial_step() {
    // One component pushes negative against a zero lower bound, so the
    // scale factor collapses to zero and the command stays trivial.
    let r = rspica(
        &toy_b(),
        &toy_nu(),
        &toy_limits(),
        &rest2(),
        8,
        RES_TOL,
        RANK_TOL,
    );
    assert_vec_close(&r.u, &[0.0, 0.0], 0.0);
}

#[test]
fn rspica_scales_onto_the_most_exceeding_bound() {
    // Symmetric box: the raw step [2, -2] scales by a = 1.5/2 onto the
    // boundary, saturating both components at once.
    let b = EffectivenessMatrix::from_row_slice(1, 2, &[0.5, -0.5]).unwrap();
    let nu = VirtualCommand::new(vec![2.0]).unwrap();
    let lim = ActuatorLimits::magnitude_only(vec![-1.5; 2], vec![1.5; 2]).unwrap();
    let r = rspica(&b, &nu, &lim, &rest2(), 8, RES_TOL, RANK_TOL);
    assert_vec_close(&r.u, &[1.5, -1.5], 1e-12);
}

#[test]
fn rspica_interior_step_matches_rpica() {
    let b = ghgv2();
    let nu = VirtualCommand::new(vec![0.0, 100.0, 0.0]).unwrap();
    let lim = ActuatorLimits::magnitude_only(vec![-20.0; 4], vec![20.0; 4]).unwrap();
    let rs = rspica(&b, &nu, &lim, &rest4(), 8, RES_TOL, RANK_TOL);
    let rp = rpica(&b, &nu, &lim, &rest4(), 8, RES_TOL, RANK_TOL);
    assert_vec_close(&rs.u, &rp.u, 1e-12);
    assert_eq!(rs.iterations, 1);
}

#[test]
fn toy_qpca_and_idca_reach_the_optimum() {
    // Unregularized: the active set lands exactly on the vertex [1, 0].
    let q = qpca(
        &toy_b(),
        &toy_nu(),
        &toy_limits(),
        &rest2(),
        &QpWeight::Identity,
        0.0,
        &[0.0; 2],
        RANK_TOL,
    )
    .unwrap();
    assert_vec_close(&q.u, &[1.0, 0.0], 1e-9);

    // Tikhonov term pulls the minimizer toward u_ref by about 2 lambda / b^2.
    let qr = qpca(
        &toy_b(),
        &toy_nu(),
        &toy_limits(),
        &rest2(),
        &QpWeight::Identity,
        1e-6,
        &[0.0; 2],
        RANK_TOL,
    )
    .unwrap();
    assert_vec_close(&qr.u, &[0.9999920000639994, 0.0], 1e-10);

    let weights = uniform_weights(2, 1e-3);
    let r = idca(
        &toy_b(),
        &toy_nu(),
        &toy_limits(),
        &rest2(),
        &[0.0; 2],
        &weights,
        &IdcaConfig::default(),
    );
    assert_vec_close(&r.u, &[1.0, 0.0], 1e-9);
    assert!(r.error_norm() <= RES_TOL);
}

// ---- GHGV-2 stationary case --------------------------------------------

#[test]
fn ghgv2_pica_cost_and_error() {
    let r = pica(&ghgv2(), &ghgv2_nu(), RANK_TOL);
    assert!((r.cost - 11.3749).abs() <= 1e-3, "cost {}", r.cost);
    assert_vec_close(
        &r.u,
        &[8.1773074323, -7.8119966112, -1.1777018701, -0.3255193484],
        1e-8,
    );
    let nu_norm = linalg::norm2(ghgv2_nu().values());
    assert!(r.error_norm() <= 1e-9 * nu_norm);
}

#[test]
fn ghgv2_saturated_pica_error() {
    let r = saturated_pica(&ghgv2(), &ghgv2_nu(), &ghgv2_limits(), &rest4(), RANK_TOL);
    assert_vec_close(&r.u, &[8.1773074323, 0.0, 0.0, 0.0], 1e-8);
    assert!((r.cost - 8.177307432310725).abs() <= 1e-8);
    assert!(
        (r.error_norm() - 1014.0021247653898).abs() <= 1e-6,
        "err {}",
        r.error_norm()
    );
    assert!(is_feasible(&r.u, &ghgv2_limits(), &rest4(), 1e-9));
}

#[test]
fn ghgv2_rpica_stalls_after_one_redistribution() {
    // Three surfaces clamp at the zero lower bound in the first pass;
    // the single remaining column takes one least-squares step and the
    // rest of the residual is unreachable.
    let r = rpica(
        &ghgv2(),
        &ghgv2_nu(),
        &ghgv2_limits(),
        &rest4(),
        8,
        RES_TOL,
        RANK_TOL,
    );
    assert_vec_close(&r.u, &[11.139380097857138, 0.0, 0.0, 0.0], 1e-8);
    assert!((r.cost - 11.139380097857138).abs() <= 1e-8);
    assert!(
        (r.error_norm() - 860.936066165416).abs() <= 1e-6,
        "err {}",
        r.error_norm()
    );
    assert!(is_feasible(&r.u, &ghgv2_limits(), &rest4(), 1e-9));
}

#[test]
fn ghgv2_qpca_is_exact_and_near_min_norm() {
    let r = qpca(
        &ghgv2(),
        &ghgv2_nu(),
        &ghgv2_limits(),
        &rest4(),
        &QpWeight::Identity,
        1e-6,
        &[0.0; 4],
        RANK_TOL,
    )
    .unwrap();
    let nu_norm = linalg::norm2(ghgv2_nu().values());
    assert!(r.error_norm() <= 1e-9 * nu_norm, "err {}", r.error_norm());
    assert!(
        (r.cost - 16.108262526898166).abs() <= 1e-6,
        "cost {}",
        r.cost
    );
    assert_vec_close(
        &r.u,
        &[16.003690053, 0.0, 0.79968056819, 1.6487987491],
        1e-6,
    );
    assert!(is_feasible(&r.u, &ghgv2_limits(), &rest4(), 1e-9));
}

#[test]
fn ghgv2_idca_matches_qpca_accuracy_and_cost() {
    let b = ghgv2();
    let nu = ghgv2_nu();
    let u_s = steady_state_target(&b, &[0.0; 4], &nu, RANK_TOL).unwrap();
    let weights = uniform_weights(4, 1e-3);
    let r = idca(
        &b,
        &nu,
        &ghgv2_limits(),
        &rest4(),
        &u_s,
        &weights,
        &IdcaConfig::default(),
    );
    let nu_norm = linalg::norm2(nu.values());
    assert!(r.error_norm() <= 1e-9 * nu_norm, "err {}", r.error_norm());
    let qp_cost = 16.108262526898166;
    assert!(
        (r.cost - qp_cost).abs() <= 0.02 * qp_cost,
        "cost {}",
        r.cost
    );
    assert!(r.iterations <= 3);
    assert!(is_feasible(&r.u, &ghgv2_limits(), &rest4(), 1e-9));
}

#[test]
fn ghgv2_generic_qp_reference_agrees_with_qpca() {
    let r = qpca_generic_ref(
        &ghgv2(),
        &ghgv2_nu(),
        &ghgv2_limits(),
        &rest4(),
        &QpWeight::Identity,
        1e-6,
        &[0.0; 4],
        RANK_TOL,
    )
    .unwrap();
    assert!(
        (r.cost - 16.108262526898166).abs() <= 1e-4,
        "cost {}",
        r.cost
    );
    let nu_norm = linalg::norm2(ghgv2_nu().values());
    assert!(r.error_norm() <= 1e-6 * nu_norm, "err {}", r.error_norm());
}

// ---- structural properties ---------------------------------------------

#[test]
fn scalar_qpca_matches_closed_form() {
    // min (b u - v)^2 on [lo, hi] is clamp(v / b).
    let b = EffectivenessMatrix::from_row_slice(1, 1, &[2.0]).unwrap();
    let lim = ActuatorLimits::magnitude_only(vec![-1.0], vec![1.0]).unwrap();
    let st = ActuatorState::at_rest(vec![0.0], 0.01).unwrap();
    for v in [-5.0, -0.4, 0.0, 1.2, 9.0] {
        let nu = VirtualCommand::new(vec![v]).unwrap();
        let r = qpca(
            &b,
            &nu,
            &lim,
            &st,
            &QpWeight::Identity,
            0.0,
            &[0.0],
            RANK_TOL,
        )
        .unwrap();
        let expect = (v / 2.0).clamp(-1.0, 1.0);
        assert!(
            (r.u[0] - expect).abs() <= 1e-9,
            "v={v}: {} vs {expect}",
            r.u[0]
        );
    }
}

#[test]
fn idca_reduces_to_pica_without_binding_limits() {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(11);
    let wide = ActuatorLimits::magnitude_only(vec![-1e6; 4], vec![1e6; 4]).unwrap();
    let st = rest4();
    let weights = WeightingMatrices {
        w_m: vec![1e-3; 4],
        w_r: vec![0.0; 4],
    };
    for _ in 0..200 {
        let data: Vec<f64> = (0..12).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let b = match EffectivenessMatrix::from_row_slice(3, 4, &data) {
            Ok(b) => b,
            Err(_) => continue,
        };
        let nu = VirtualCommand::new((0..3).map(|_| rng.gen_range(-0.5..0.5)).collect()).unwrap();
        let r = idca(
            &b,
            &nu,
            &wide,
            &st,
            &[0.0; 4],
            &weights,
            &IdcaConfig::default(),
        );
        let p = pica(&b, &nu, RANK_TOL);
        assert_vec_close(&r.u, &p.u, 1e-10);
    }
}

#[test]
fn achieved_plus_residual_reconstructs_demand() {
    let r = pica(&ghgv2(), &ghgv2_nu(), RANK_TOL);
    for i in 0..3 {
        assert_eq!(r.achieved[i] + r.residual[i], ghgv2_nu().values()[i]);
    }
}

#[test]
fn allocators_are_deterministic() {
    let b = ghgv2();
    let nu = ghgv2_nu();
    let lim = ghgv2_limits();
    let st = rest4();
    let u_s = steady_state_target(&b, &[0.0; 4], &nu, RANK_TOL).unwrap();
    let w = uniform_weights(4, 1e-3);
    let cfg = IdcaConfig::default();
    let a = idca(&b, &nu, &lim, &st, &u_s, &w, &cfg);
    let b2 = idca(&b, &nu, &lim, &st, &u_s, &w, &cfg);
    assert_eq!(a.u, b2.u);
    let q1 = qpca(
        &b,
        &nu,
        &lim,
        &st,
        &QpWeight::Identity,
        1e-6,
        &[0.0; 4],
        RANK_TOL,
    )
    .unwrap();
    let q2 = qpca(
        &b,
        &nu,
        &lim,
        &st,
        &QpWeight::Identity,
        1e-6,
        &[0.0; 4],
        RANK_TOL,
    )
    .unwrap();
    assert_eq!(q1.u, q2.u);
}

#[test]
fn idca_respects_rate_windows() {
    let b = ghgv2();
    let nu = ghgv2_nu();
    let lim =
        ActuatorLimits::new(vec![0.0; 4], vec![20.0; 4], vec![-20.0; 4], vec![20.0; 4]).unwrap();
    let st = ActuatorState::at_rest(vec![1.0; 4], 0.01).unwrap();
    let u_s = steady_state_target(&b, &[0.0; 4], &nu, RANK_TOL).unwrap();
    let r = idca(
        &b,
        &nu,
        &lim,
        &st,
        &u_s,
        &uniform_weights(4, 1e-3),
        &IdcaConfig::default(),
    );
    assert!(is_feasible(&r.u, &lim, &st, 1e-9));
    for i in 0..4 {
        assert!(r.u[i] <= 1.0 + 20.0 * 0.01 + 1e-9);
        assert!(r.u[i] >= 1.0 - 20.0 * 0.01 - 1e-9);
    }
}

fn random_instance(
    rng: &mut impl rand::Rng,
) -> (
    EffectivenessMatrix,
    VirtualCommand,
    ActuatorLimits,
    ActuatorState,
) {
    let o = rng.gen_range(1..=3);
    let m = rng.gen_range(o..=5);
    let scale = [0.5, 10.0, 300.0][rng.gen_range(0..3)];
    let data: Vec<f64> = (0..o * m)
        .map(|_| rng.gen_range(-1.0..1.0) * scale)
        .collect();
    let b = EffectivenessMatrix::from_row_slice(o, m, &data).unwrap();
    let nu = VirtualCommand::new(
        (0..o)
            .map(|_| rng.gen_range(-2.0..2.0) * scale * 5.0)
            .collect(),
    )
    .unwrap();
    let mut u_min = Vec::new();
    let mut u_max = Vec::new();
    for _ in 0..m {
        let lo: f64 = rng.gen_range(-15.0..5.0);
        u_min.push(lo);
        u_max.push(lo + rng.gen_range(0.0..25.0));
    }
    let rate: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0..40.0)).collect();
    let lim = ActuatorLimits::new(
        u_min.clone(),
        u_max.clone(),
        rate.iter().map(|r| -r).collect(),
        rate.iter().map(|r| r * 0.7).collect(),
    )
    .unwrap();
    let u_prev: Vec<f64> = (0..m)
        .map(|i| rng.gen_range(u_min[i] - 2.0..u_max[i] + 2.0))
        .collect();
    let u_prev2: Vec<f64> = u_prev
        .iter()
        .map(|u| u + rng.gen_range(-0.2..0.2))
        .collect();
    let st = ActuatorState::new(u_prev, u_prev2, 0.01).unwrap();
    (b, nu, lim, st)
}

#[test]
fn constrained_allocators_always_feasible() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(23);
    for _ in 0..500 {
        let (b, nu, lim, st) = random_instance(&mut rng);
        let m = b.effectors();
        let u_s = vec![0.0; m];
        let w = uniform_weights(m, 1e-3);

        let sp = saturated_pica(&b, &nu, &lim, &st, RANK_TOL);
        assert!(is_feasible(&sp.u, &lim, &st, 1e-9), "saturated pica");
        let rp = rpica(&b, &nu, &lim, &st, 8, RES_TOL, RANK_TOL);
        assert!(is_feasible(&rp.u, &lim, &st, 1e-9), "rpica");
        let rs = rspica(&b, &nu, &lim, &st, 8, RES_TOL, RANK_TOL);
        assert!(is_feasible(&rs.u, &lim, &st, 1e-9), "rspica");
        let id = idca(&b, &nu, &lim, &st, &u_s, &w, &IdcaConfig::default());
        assert!(is_feasible(&id.u, &lim, &st, 1e-9), "idca");
        if let Ok(q) = qpca(
            &b,
            &nu,
            &lim,
            &st,
            &QpWeight::Identity,
            1e-6,
            &vec![0.0; m],
            RANK_TOL,
        ) {
            assert!(is_feasible(&q.u, &lim, &st, 1e-9), "qpca");
        }
    }
}

#[test]
fn idca_exact_on_attainable_demands_with_arbitrary_weights() {
    // Demands synthesized inside the effective box must be met to
    // tolerance even under adversarial weight and target combinations;
    // the release path has to avoid pin/release cycles to get there.
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(3141);
    for trial in 0..2000 {
        let o = rng.gen_range(1..=3);
        let m = rng.gen_range(o..=5);
        let scale = [0.5, 10.0, 300.0][rng.gen_range(0..3)];
        let data: Vec<f64> = (0..o * m).map(|_| rng.gen_range(-1.0f64..1.0) * scale).collect();
        let b = EffectivenessMatrix::from_row_slice(o, m, &data).unwrap();
        let mut u_min = Vec::new();
        let mut u_max = Vec::new();
        for _ in 0..m {
            let lo: f64 = rng.gen_range(-15.0..5.0);
            u_min.push(lo);
            u_max.push(lo + rng.gen_range(0.5..25.0));
        }
        let rate: Vec<f64> = (0..m).map(|_| rng.gen_range(1.0f64..400.0)).collect();
        let limits = ActuatorLimits::new(
            u_min.clone(),
            u_max.clone(),
            rate.iter().map(|r| -r).collect(),
            rate.iter().map(|r| r * 0.7).collect(),
        )
        .unwrap();
        let u_prev: Vec<f64> = (0..m).map(|i| rng.gen_range(u_min[i]..u_max[i])).collect();
        let u_prev2: Vec<f64> = u_prev.iter().map(|u| u + rng.gen_range(-0.1f64..0.1)).collect();
        let state = ActuatorState::new(u_prev, u_prev2, 0.01).unwrap();
        let eb = crate::effective_bounds(&limits, &state);
        let u_in: Vec<f64> = (0..m)
            .map(|i| {
                if eb.lo[i] >= eb.hi[i] {
                    eb.lo[i]
                } else {
                    rng.gen_range(eb.lo[i]..eb.hi[i])
                }
            })
            .collect();
        let nu = VirtualCommand::new(b.matrix().mul_vec(&u_in)).unwrap();
        let weights = WeightingMatrices {
            w_m: (0..m).map(|_| rng.gen_range(1e-3f64..1.0)).collect(),
            w_r: (0..m).map(|_| rng.gen_range(1e-3f64..1.0)).collect(),
        };
        let u_s: Vec<f64> = (0..m).map(|i| rng.gen_range(u_min[i]..u_max[i])).collect();

        let cfg = IdcaConfig { max_iterations: 4 * m, ..IdcaConfig::default() };
        let r = idca(&b, &nu, &limits, &state, &u_s, &weights, &cfg);
        let bar = 1e-6f64.max(1e-9 * linalg::norm2(nu.values()));
        assert!(
            r.error_norm() <= bar,
            "trial {trial}: err {:.3e} after {} iterations",
            r.error_norm(),
            r.iterations
        );
        assert!(is_feasible(&r.u, &limits, &state, 1e-9));
    }
}

#[test]
fn idca_final_residual_no_worse_than_first_iterate() {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(29);
    for _ in 0..200 {
        let (b, nu, lim, st) = random_instance(&mut rng);
        let m = b.effectors();
        let w = uniform_weights(m, 1e-3);
        let full = idca(
            &b,
            &nu,
            &lim,
            &st,
            &vec![0.0; m],
            &w,
            &IdcaConfig::default(),
        );
        let one = idca(
            &b,
            &nu,
            &lim,
            &st,
            &vec![0.0; m],
            &w,
            &IdcaConfig {
                max_iterations: 1,
                ..IdcaConfig::default()
            },
        );
        assert!(full.error_norm() <= one.error_norm() + 1e-9);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]
    #[test]
    fn qpca_beats_grid_search_on_2_effector_problems(
        b0 in -3.0f64..3.0, b1 in -3.0f64..3.0,
        v in -4.0f64..4.0,
        lo0 in -2.0f64..0.0, lo1 in -2.0f64..0.0,
        w0 in 0.5f64..3.0, w1 in 0.5f64..3.0,
    ) {
        let b = EffectivenessMatrix::from_row_slice(1, 2, &[b0, b1]).unwrap();
        let nu = VirtualCommand::new(vec![v]).unwrap();
        let hi = [lo0 + w0, lo1 + w1];
        let lim = ActuatorLimits::magnitude_only(vec![lo0, lo1], vec![hi[0], hi[1]]).unwrap();
        let st = ActuatorState::at_rest(vec![0.0; 2], 0.01).unwrap();
        let lam = 1e-6;
        let r = qpca(&b, &nu, &lim, &st, &QpWeight::Identity, lam, &[0.0; 2], RANK_TOL).unwrap();

        let objective = |u: &[f64]| {
            let bu = b0 * u[0] + b1 * u[1];
            0.5 * (bu - v) * (bu - v) + lam * (u[0] * u[0] + u[1] * u[1])
        };
        let f_solver = objective(&r.u);

        // Coarse exhaustive grid; the solver may beat it but never lose
        // by more than the grid resolution allows.
        let n = 60;
        let mut best = f64::INFINITY;
        for i in 0..=n {
            for j in 0..=n {
                let u = [
                    lo0 + w0 * (i as f64) / (n as f64),
                    lo1 + w1 * (j as f64) / (n as f64),
                ];
                best = best.min(objective(&u));
            }
        }
        let cell = (w0 / n as f64).max(w1 / n as f64);
        let slack = cell * (b0.abs() + b1.abs()) * (v.abs() + 3.0 * (b0.abs() + b1.abs())) + 1e-9;
        prop_assert!(f_solver <= best + slack, "{f_solver} vs grid {best}");
    }
}
