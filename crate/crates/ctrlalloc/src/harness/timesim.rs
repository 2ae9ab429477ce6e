//! Time-varying closed-iteration simulation: the dynamic allocator
//! drives the deflection state step by step under scheduled magnitude
//! and rate limits, with every step logged and auditable.

use ctrlalloc_core::ams::{axis_extents, moment_set};
use ctrlalloc_core::{contains, effective_bounds, ActuatorState, EffectiveBounds, VirtualCommand};

use crate::config::{Algorithm, CommandSource, ScenarioConfig};
use crate::error::CliError;
use crate::harness::{run_algorithm, TrialRecord};

/// One logged simulation step.
#[derive(Clone, Debug)]
pub struct TimesimRow {
    pub t: f64,
    pub nu_cmd: Vec<f64>,
    pub nu_ach: Vec<f64>,
    pub err: Vec<f64>,
    pub u: Vec<f64>,
    pub udot: Vec<f64>,
    /// Effective per-step box (magnitude intersected with rate window).
    pub lo: Vec<f64>,
    pub hi: Vec<f64>,
    /// Scheduled rate bounds of the step.
    pub rlo: Vec<f64>,
    pub rhi: Vec<f64>,
    pub iterations: usize,
    pub elapsed_s: f64,
}

pub struct TimesimOutput {
    pub rows: Vec<TimesimRow>,
    /// Per-step results of any additionally selected algorithms, run on
    /// the same instantaneous problems for comparison.
    pub compare: Vec<TrialRecord>,
}

/// Amplitude fallback: 1.2x the per-axis half-extent of the attainable
/// set over the magnitude box at t = 0.
pub fn resolve_amplitude(cfg: &ScenarioConfig, amplitude: Option<&[f64]>) -> Vec<f64> {
    if let Some(a) = amplitude {
        return a.to_vec();
    }
    let limits = cfg.limits_at(0.0);
    let bounds = EffectiveBounds {
        lo: limits.u_min.clone(),
        hi: limits.u_max.clone(),
    };
    let set = moment_set(&cfg.b, &bounds).expect("vertex enumeration");
    axis_extents(&set)
        .iter()
        .map(|(lo, hi)| 1.2 * (hi - lo) / 2.0)
        .collect()
}

fn command_at(cfg: &ScenarioConfig, amp: &[f64], t: f64) -> Vec<f64> {
    match &cfg.command {
        CommandSource::Constant { value } => value.clone(),
        CommandSource::Gaussian { mean, .. } => mean.clone(),
        CommandSource::Sinusoid {
            frequency_hz,
            phase,
            ..
        } => (0..cfg.axes())
            .map(|a| amp[a] * (2.0 * std::f64::consts::PI * frequency_hz[a] * t + phase[a]).sin())
            .collect(),
    }
}

/// Step the simulation over `t = 0, dt, ..., duration - dt`.
pub fn run_timesim(cfg: &ScenarioConfig) -> Result<TimesimOutput, CliError> {
    let m = cfg.effectors();
    let steps = (cfg.duration / cfg.dt).round() as usize;
    let amp = match &cfg.command {
        CommandSource::Sinusoid { amplitude, .. } => resolve_amplitude(cfg, amplitude.as_deref()),
        _ => vec![0.0; cfg.axes()],
    };

    let extra: Vec<Algorithm> = cfg
        .algorithms
        .iter()
        .copied()
        .filter(|&a| a != Algorithm::Idca)
        .collect();

    let mut u_prev = cfg.initial_u.clone();
    let mut u_prev2 = cfg.initial_u.clone();
    let mut rows = Vec::with_capacity(steps);
    let mut compare = Vec::new();

    for k in 0..steps {
        let t = k as f64 * cfg.dt;
        let limits = cfg.limits_at(t);
        let state = ActuatorState::new(u_prev.clone(), u_prev2.clone(), cfg.dt)
            .map_err(CliError::Numerical)?;
        let nu_vec = command_at(cfg, &amp, t);
        let nu = VirtualCommand::new(nu_vec.clone()).map_err(CliError::Numerical)?;

        let result = run_algorithm(Algorithm::Idca, cfg, &nu, &limits, &state, t)?;
        for &alg in &extra {
            let r = run_algorithm(alg, cfg, &nu, &limits, &state, t)?;
            compare.push(TrialRecord {
                index: k,
                t,
                algorithm: alg,
                result: r,
            });
        }

        let bounds = effective_bounds(&limits, &state);
        let udot: Vec<f64> = result
            .u
            .iter()
            .zip(&u_prev)
            .map(|(a, b)| (a - b) / cfg.dt)
            .collect();
        rows.push(TimesimRow {
            t,
            nu_cmd: nu_vec.clone(),
            nu_ach: result.achieved.clone(),
            err: result.residual.clone(),
            u: result.u.clone(),
            udot,
            lo: bounds.lo,
            hi: bounds.hi,
            rlo: limits.rate_min.clone(),
            rhi: limits.rate_max.clone(),
            iterations: result.iterations,
            elapsed_s: result.elapsed_s,
        });

        u_prev2 = std::mem::replace(&mut u_prev, result.u);
        let _ = m;
    }
    Ok(TimesimOutput { rows, compare })
}

/// Post-hoc log audit over a finished run.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct TimesimAudit {
    pub steps: usize,
    /// Steps with any `u` outside the logged effective box (tol 1e-9).
    pub magnitude_violations: usize,
    /// Steps with any `udot` outside the scheduled rate bounds (tol 1e-9).
    pub rate_violations: usize,
    /// Steps whose demand the membership oracle certifies attainable
    /// within the step's box.
    pub contained_steps: usize,
    /// Contained steps whose achieved error exceeded the tolerance.
    pub contained_misses: usize,
    /// Consecutively-pinned effector steps whose rate pushed past the
    /// (possibly moving) bound.
    pub pinned_rate_violations: usize,
    /// Number of consecutively-pinned effector steps examined.
    pub pinned_checks: usize,
}

/// Audit tolerances fixed by the experiment contract.
pub const AUDIT_BOUND_TOL: f64 = 1e-9;
pub const AUDIT_ERR_TOL: f64 = 1e-6;

pub fn audit_timesim(cfg: &ScenarioConfig, rows: &[TimesimRow]) -> TimesimAudit {
    let m = cfg.effectors();
    let mut a = TimesimAudit {
        steps: rows.len(),
        ..TimesimAudit::default()
    };
    for (k, row) in rows.iter().enumerate() {
        let mag_bad = (0..m).any(|i| {
            row.u[i] < row.lo[i] - AUDIT_BOUND_TOL || row.u[i] > row.hi[i] + AUDIT_BOUND_TOL
        });
        if mag_bad {
            a.magnitude_violations += 1;
        }
        let rate_bad = (0..m).any(|i| {
            row.udot[i] < row.rlo[i] - AUDIT_BOUND_TOL || row.udot[i] > row.rhi[i] + AUDIT_BOUND_TOL
        });
        if rate_bad {
            a.rate_violations += 1;
        }

        let bounds = EffectiveBounds {
            lo: row.lo.clone(),
            hi: row.hi.clone(),
        };
        if contains(&cfg.b, &bounds, &row.nu_cmd, AUDIT_ERR_TOL) {
            a.contained_steps += 1;
            let err: f64 = row.err.iter().map(|e| e * e).sum::<f64>().sqrt();
            if err > AUDIT_ERR_TOL {
                a.contained_misses += 1;
            }
        }

        if k > 0 {
            let prev = &rows[k - 1];
            for i in 0..m {
                let pinned_hi = (row.u[i] - row.hi[i]).abs() <= AUDIT_BOUND_TOL
                    && (prev.u[i] - prev.hi[i]).abs() <= AUDIT_BOUND_TOL;
                if pinned_hi {
                    a.pinned_checks += 1;
                    let drift = (row.hi[i] - prev.hi[i]) / cfg.dt;
                    if row.udot[i] - drift > AUDIT_BOUND_TOL {
                        a.pinned_rate_violations += 1;
                    }
                }
                let pinned_lo = (row.u[i] - row.lo[i]).abs() <= AUDIT_BOUND_TOL
                    && (prev.u[i] - prev.lo[i]).abs() <= AUDIT_BOUND_TOL;
                if pinned_lo {
                    a.pinned_checks += 1;
                    let drift = (row.lo[i] - prev.lo[i]) / cfg.dt;
                    if row.udot[i] - drift < -AUDIT_BOUND_TOL {
                        a.pinned_rate_violations += 1;
                    }
                }
            }
        }
    }
    a
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::validate_config;

    #[test]
    fn zero_command_holds_position() {
        let text = r#"
[problem]
b = [[-20.01, 20.01, 93.94, -93.94], [126.7, 126.7, -501.4, -501.4], [-127.5, 127.5, -45.72, 46.72]]

[limits]
u_min = [0.0, 0.0, 0.0, 0.0]
u_max = [20.0, 20.0, 20.0, 20.0]
rate_min = [-20.0, -20.0, -20.0, -20.0]
rate_max = [20.0, 20.0, 20.0, 20.0]

[command]
kind = "constant"
value = [0.0, 0.0, 0.0]

[run]
duration = 0.5
algorithms = ["idca"]
"#;
        let cfg = validate_config(text).unwrap();
        let out = run_timesim(&cfg).unwrap();
        assert_eq!(out.rows.len(), 50);
        for row in &out.rows {
            for i in 0..4 {
                assert!(row.u[i].abs() < 1e-12, "t={} u={:?}", row.t, row.u);
            }
            let err: f64 = row.err.iter().map(|e| e * e).sum::<f64>().sqrt();
            assert!(err < 1e-9);
        }
        let audit = audit_timesim(&cfg, &out.rows);
        assert_eq!(audit.magnitude_violations, 0);
        assert_eq!(audit.rate_violations, 0);
        assert_eq!(audit.contained_misses, 0);
    }

    #[test]
    fn amplitude_defaults_to_attainable_extents() {
        let text = r#"
[problem]
b = [[-20.01, 20.01, 93.94, -93.94], [126.7, 126.7, -501.4, -501.4], [-127.5, 127.5, -45.72, 46.72]]

[limits]
u_min = [0.0, 0.0, 0.0, 0.0]
u_max = [20.0, 20.0, 20.0, 20.0]

[command]
kind = "sinusoid"

[run]
duration = 1.0
algorithms = ["idca"]
"#;
        let cfg = validate_config(text).unwrap();
        let amp = resolve_amplitude(&cfg, None);
        // pitch: max 5068, min -20056 -> half-extent 12562, x 1.2
        assert!((amp[1] - 1.2 * (5068.0 + 20056.0) / 2.0).abs() < 1e-6);
    }
}
