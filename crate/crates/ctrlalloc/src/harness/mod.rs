//! Scenario engine: stationary comparison, Monte Carlo study, and the
//! time-varying closed-iteration simulation.

pub mod monte_carlo;
pub mod timesim;

use std::time::Instant;

use ctrlalloc_core::weighting::weighting_matrices;
use ctrlalloc_core::{
    idca, pica, qpca, qpca_generic_ref, rpica, rspica, saturated_pica, steady_state_target,
    ActuatorLimits, ActuatorState, AllocationResult, QpWeight, VirtualCommand,
};

use crate::config::{Algorithm, ScenarioConfig};
use crate::error::CliError;

/// One allocator call with its position in the experiment.
#[derive(Clone, Debug)]
pub struct TrialRecord {
    /// Sample index (Monte Carlo) or step index (timesim); 0 for stationary.
    pub index: usize,
    /// Simulation time of the call, seconds; 0 for single-shot runs.
    pub t: f64,
    pub algorithm: Algorithm,
    pub result: AllocationResult,
}

/// Run one algorithm on an instantaneous allocation problem, timing the
/// call (including the weight and steady-state construction the dynamic
/// allocator performs per call) with a monotonic clock.
pub fn run_algorithm(
    alg: Algorithm,
    cfg: &ScenarioConfig,
    nu: &VirtualCommand,
    limits: &ActuatorLimits,
    state: &ActuatorState,
    t: f64,
) -> Result<AllocationResult, CliError> {
    let b = &cfg.b;
    let m = cfg.effectors();
    let rank_tol = cfg.rank_tol;
    let max_iter = cfg.idca.max_iterations;
    let res_tol = cfg.idca.residual_tol;

    let start = Instant::now();
    let mut result = match alg {
        Algorithm::Pica => pica(b, nu, rank_tol),
        Algorithm::SaturatedPica => saturated_pica(b, nu, limits, state, rank_tol),
        Algorithm::Rpica => rpica(b, nu, limits, state, max_iter, res_tol, rank_tol),
        Algorithm::Rspica => rspica(b, nu, limits, state, max_iter, res_tol, rank_tol),
        Algorithm::Qpca => qpca(
            b,
            nu,
            limits,
            state,
            &QpWeight::Identity,
            cfg.qp_reg_lambda,
            &vec![0.0; m],
            rank_tol,
        )
        .map_err(CliError::Numerical)?,
        Algorithm::QpcaGenericRef => qpca_generic_ref(
            b,
            nu,
            limits,
            state,
            &QpWeight::Identity,
            cfg.qp_reg_lambda,
            &vec![0.0; m],
            rank_tol,
        )
        .map_err(CliError::Numerical)?,
        Algorithm::Idca => {
            let u_r = cfg.u_r.at(t, m);
            let b_ur = b.matrix().mul_vec(&u_r);
            let delta: Vec<f64> = nu.values().iter().zip(&b_ur).map(|(n, a)| n - a).collect();
            let delta_nu = VirtualCommand::new(delta).map_err(CliError::Numerical)?;
            let u_s = match steady_state_target(b, &u_r, &delta_nu, rank_tol) {
                Ok(u_s) => u_s,
                // conditionalization is specific to the 3x4 layout; other
                // shapes fall back to the baseline as the target
                Err(_) => u_r.clone(),
            };
            let weights = weighting_matrices(&state.u_prev, state, limits, &cfg.weighting)
                .map_err(CliError::Numerical)?;
            idca(b, nu, limits, state, &u_s, &weights, &cfg.idca)
        }
    };
    result.elapsed_s = start.elapsed().as_secs_f64();
    Ok(result)
}

/// Rest state at the configured initial deflection.
pub fn initial_state(cfg: &ScenarioConfig) -> ActuatorState {
    ActuatorState::at_rest(cfg.initial_u.clone(), cfg.dt).expect("validated initial state")
}

/// The constant demand a single-shot run uses: the configured constant,
/// the Gaussian mean, or the sinusoid evaluated at t = 0.
pub fn representative_command(cfg: &ScenarioConfig) -> VirtualCommand {
    use crate::config::CommandSource::*;
    let v = match &cfg.command {
        Constant { value } => value.clone(),
        Gaussian { mean, .. } => mean.clone(),
        Sinusoid {
            amplitude, phase, ..
        } => {
            let amp = timesim::resolve_amplitude(cfg, amplitude.as_deref());
            amp.iter().zip(phase).map(|(a, p)| a * p.sin()).collect()
        }
    };
    VirtualCommand::new(v).expect("validated command")
}

/// Run every selected algorithm once on the scenario's representative
/// command.
pub fn run_stationary(cfg: &ScenarioConfig) -> Result<Vec<TrialRecord>, CliError> {
    let nu = representative_command(cfg);
    let limits = cfg.limits_at(0.0);
    let state = initial_state(cfg);
    let mut out = Vec::new();
    for &alg in &cfg.algorithms {
        let result = run_algorithm(alg, cfg, &nu, &limits, &state, 0.0)?;
        out.push(TrialRecord {
            index: 0,
            t: 0.0,
            algorithm: alg,
            result,
        });
    }
    Ok(out)
}

/// Median and percentile timings over repeated calls on the stationary
/// problem; used by the `compare` subcommand.
#[derive(Clone, Debug)]
pub struct TimingRow {
    pub algorithm: Algorithm,
    pub median_s: f64,
    pub p5_s: f64,
    pub p95_s: f64,
    pub cost: f64,
    pub error: f64,
}

/// Time `repeats` cold calls per algorithm on the representative command.
pub fn timing_comparison(
    cfg: &ScenarioConfig,
    algorithms: &[Algorithm],
    repeats: usize,
) -> Result<Vec<TimingRow>, CliError> {
    let nu = representative_command(cfg);
    let limits = cfg.limits_at(0.0);
    let state = initial_state(cfg);
    let mut out = Vec::new();
    for &alg in algorithms {
        let mut times = Vec::with_capacity(repeats);
        let mut last = None;
        for _ in 0..repeats.max(1) {
            let r = run_algorithm(alg, cfg, &nu, &limits, &state, 0.0)?;
            times.push(r.elapsed_s);
            last = Some(r);
        }
        let last = last.expect("at least one repeat");
        out.push(TimingRow {
            algorithm: alg,
            median_s: percentile(&mut times.clone(), 50.0),
            p5_s: percentile(&mut times.clone(), 5.0),
            p95_s: percentile(&mut times, 95.0),
            cost: last.cost,
            error: last.error_norm(),
        });
    }
    Ok(out)
}

/// Percentile with linear interpolation between closest ranks. Sorts in
/// place.
pub fn percentile(xs: &mut [f64], q: f64) -> f64 {
    assert!(!xs.is_empty(), "percentile of empty slice");
    xs.sort_by(|a, b| a.total_cmp(b));
    let rank = (q / 100.0) * (xs.len() as f64 - 1.0);
    let lo = rank.floor() as usize;
    let hi = rank.ceil() as usize;
    if lo == hi {
        xs[lo]
    } else {
        let w = rank - lo as f64;
        xs[lo] * (1.0 - w) + xs[hi] * w
    }
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len() as f64
}
