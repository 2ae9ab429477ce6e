//! Scenario configuration: TOML schema, defaults, and validation.
//!
//! Validation is aggregated: every problem found is reported, each
//! diagnostic naming the offending key.

use std::fmt;
use std::path::Path;

use serde::Deserialize;

use ctrlalloc_core::{
    ActuatorLimits, DragModel, EffectivenessMatrix, IdcaConfig, Mat, WeightingConfig,
};

/// All algorithms the harness can run.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Algorithm {
    Pica,
    SaturatedPica,
    Rpica,
    Rspica,
    Qpca,
    QpcaGenericRef,
    Idca,
}

impl Algorithm {
    pub const ALL: [Algorithm; 7] = [
        Algorithm::Pica,
        Algorithm::SaturatedPica,
        Algorithm::Rpica,
        Algorithm::Rspica,
        Algorithm::Qpca,
        Algorithm::QpcaGenericRef,
        Algorithm::Idca,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Pica => "pica",
            Algorithm::SaturatedPica => "saturated_pica",
            Algorithm::Rpica => "rpica",
            Algorithm::Rspica => "rspica",
            Algorithm::Qpca => "qpca",
            Algorithm::QpcaGenericRef => "qpca_generic_ref",
            Algorithm::Idca => "idca",
        }
    }

    pub fn parse(s: &str) -> Option<Algorithm> {
        Algorithm::ALL.iter().copied().find(|a| a.name() == s)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Demand source for a scenario.
#[derive(Clone, Debug)]
pub enum CommandSource {
    Constant {
        value: Vec<f64>,
    },
    Gaussian {
        mean: Vec<f64>,
        sigma: Vec<f64>,
        samples: usize,
        seed: u64,
    },
    Sinusoid {
        /// Per-axis amplitude; `None` means 1.2x the AMS half-extent at t = 0.
        amplitude: Option<Vec<f64>>,
        frequency_hz: Vec<f64>,
        phase: Vec<f64>,
    },
}

/// Baseline input schedule.
#[derive(Clone, Debug)]
pub enum BaselineInput {
    Zero,
    Constant(Vec<f64>),
    /// Piecewise-linear table over time.
    Table {
        times: Vec<f64>,
        values: Vec<Vec<f64>>,
    },
}

impl BaselineInput {
    pub fn at(&self, t: f64, m: usize) -> Vec<f64> {
        match self {
            BaselineInput::Zero => vec![0.0; m],
            BaselineInput::Constant(v) => v.clone(),
            BaselineInput::Table { times, values } => {
                if t <= times[0] {
                    return values[0].clone();
                }
                if t >= *times.last().unwrap() {
                    return values.last().unwrap().clone();
                }
                let k = times.partition_point(|&x| x <= t) - 1;
                let w = (t - times[k]) / (times[k + 1] - times[k]);
                values[k]
                    .iter()
                    .zip(&values[k + 1])
                    .map(|(a, b)| a + w * (b - a))
                    .collect()
            }
        }
    }
}

/// Time-varying limit schedule: a raised-cosine modulation of the upper
/// magnitude bound plus linear ramps on both rate bounds.
#[derive(Clone, Debug)]
pub struct LimitSchedule {
    pub u_max_full: f64,
    pub lambda_peak: f64,
    pub rate_max_start: f64,
    pub rate_max_end: f64,
    pub rate_min_start: f64,
    pub rate_min_end: f64,
}

impl LimitSchedule {
    /// `u_max(t) = u_max_full * cos(lambda(t))` with
    /// `lambda(t) = peak * (1 - cos(2 pi t / duration)) / 2`.
    pub fn limits_at(&self, t: f64, duration: f64, m: usize) -> ActuatorLimits {
        let lambda =
            self.lambda_peak * (1.0 - (2.0 * std::f64::consts::PI * t / duration).cos()) / 2.0;
        let u_max = self.u_max_full * lambda.cos();
        let frac = (t / duration).clamp(0.0, 1.0);
        let rmax = self.rate_max_start + (self.rate_max_end - self.rate_max_start) * frac;
        let rmin = self.rate_min_start + (self.rate_min_end - self.rate_min_start) * frac;
        ActuatorLimits::new(vec![0.0; m], vec![u_max; m], vec![rmin; m], vec![rmax; m])
            .expect("validated schedule")
    }
}

/// Fully validated scenario.
#[derive(Clone, Debug)]
pub struct ScenarioConfig {
    pub b: EffectivenessMatrix,
    pub dt: f64,
    pub duration: f64,
    pub limits: ActuatorLimits,
    pub schedule: Option<LimitSchedule>,
    pub initial_u: Vec<f64>,
    pub command: CommandSource,
    pub u_r: BaselineInput,
    pub weighting: WeightingConfig,
    pub idca: IdcaConfig,
    pub qp_reg_lambda: f64,
    pub rank_tol: f64,
    pub algorithms: Vec<Algorithm>,
    pub timing_repeats: usize,
}

impl ScenarioConfig {
    pub fn axes(&self) -> usize {
        self.b.axes()
    }

    pub fn effectors(&self) -> usize {
        self.b.effectors()
    }

    /// Limits at time `t`: the schedule when present, the base box otherwise.
    pub fn limits_at(&self, t: f64) -> ActuatorLimits {
        match &self.schedule {
            Some(s) => s.limits_at(t, self.duration, self.effectors()),
            None => self.limits.clone(),
        }
    }
}

// ---- raw TOML layer ------------------------------------------------------

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawConfig {
    problem: RawProblem,
    limits: Option<RawLimits>,
    schedule: Option<RawSchedule>,
    command: RawCommand,
    u_r: Option<RawBaseline>,
    weighting: Option<RawWeighting>,
    idca: Option<RawIdca>,
    qpca: Option<RawQpca>,
    run: Option<RawRun>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawProblem {
    b: Vec<Vec<f64>>,
    dt: Option<f64>,
    initial_u: Option<Vec<f64>>,
    rank_tol: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawLimits {
    u_min: Vec<f64>,
    u_max: Vec<f64>,
    rate_min: Option<Vec<f64>>,
    rate_max: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawSchedule {
    u_max_full: f64,
    lambda_peak: f64,
    rate_max_start: f64,
    rate_max_end: f64,
    rate_min_start: f64,
    rate_min_end: f64,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawCommand {
    kind: String,
    value: Option<Vec<f64>>,
    mean: Option<Vec<f64>>,
    sigma: Option<Vec<f64>>,
    samples: Option<usize>,
    seed: Option<u64>,
    amplitude: Option<Vec<f64>>,
    frequency_hz: Option<Vec<f64>>,
    phase: Option<Vec<f64>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawBaseline {
    kind: String,
    value: Option<Vec<f64>>,
    times: Option<Vec<f64>>,
    values: Option<Vec<Vec<f64>>>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawWeighting {
    epsilon: Option<f64>,
    drag_c0: Option<Vec<f64>>,
    drag_c1: Option<Vec<f64>>,
    drag_floor: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawIdca {
    max_iterations: Option<usize>,
    residual_tol: Option<f64>,
    rank_tol: Option<f64>,
    adjust_steady_state: Option<bool>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQpca {
    reg_lambda: Option<f64>,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawRun {
    duration: Option<f64>,
    algorithms: Option<Vec<String>>,
    timing_repeats: Option<usize>,
}

/// Read and validate a scenario file. All diagnostics are collected, not
/// just the first.
pub fn load_config(path: &Path) -> Result<ScenarioConfig, Vec<String>> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| vec![format!("cannot read config {}: {e}", path.display())])?;
    validate_config(&text)
}

/// Parse and validate config text.
pub fn validate_config(text: &str) -> Result<ScenarioConfig, Vec<String>> {
    let raw: RawConfig = toml::from_str(text).map_err(|e| vec![format!("config parse: {e}")])?;
    let mut errs: Vec<String> = Vec::new();

    // problem.b
    let o = raw.problem.b.len();
    let m = raw.problem.b.first().map(|r| r.len()).unwrap_or(0);
    if o == 0 || m == 0 {
        errs.push("problem.b: matrix must be non-empty".into());
    }
    for (i, row) in raw.problem.b.iter().enumerate() {
        if row.len() != m {
            errs.push(format!(
                "problem.b: row {i} has {} entries, expected {m}",
                row.len()
            ));
        }
    }
    let flat: Vec<f64> = raw.problem.b.iter().flatten().copied().collect();
    let b = if errs.is_empty() {
        match EffectivenessMatrix::new(Mat::from_row_slice(o, m, &flat)) {
            Ok(b) => Some(b),
            Err(e) => {
                errs.push(format!("problem.b: {e}"));
                None
            }
        }
    } else {
        None
    };

    let dt = raw.problem.dt.unwrap_or(0.01);
    if !(dt > 0.0 && dt.is_finite()) {
        errs.push(format!("problem.dt: must be positive, got {dt}"));
    }
    let rank_tol = raw
        .problem
        .rank_tol
        .unwrap_or(ctrlalloc_core::DEFAULT_RANK_TOL);
    if !(rank_tol >= 0.0) {
        errs.push(format!(
            "problem.rank_tol: must be non-negative, got {rank_tol}"
        ));
    }

    let initial_u = raw
        .problem
        .initial_u
        .clone()
        .unwrap_or_else(|| vec![0.0; m]);
    if initial_u.len() != m {
        errs.push(format!(
            "problem.initial_u: {} entries, expected {m}",
            initial_u.len()
        ));
    }

    // limits
    let limits = match &raw.limits {
        Some(l) => {
            let wide = 1e9;
            let rate_min = l.rate_min.clone().unwrap_or_else(|| vec![-wide; m]);
            let rate_max = l.rate_max.clone().unwrap_or_else(|| vec![wide; m]);
            for (name, v) in [
                ("limits.u_min", &l.u_min),
                ("limits.u_max", &l.u_max),
                ("limits.rate_min", &rate_min),
                ("limits.rate_max", &rate_max),
            ] {
                if v.len() != m {
                    errs.push(format!("{name}: {} entries, expected {m}", v.len()));
                }
            }
            if l.u_min.len() == m && l.u_max.len() == m {
                for i in 0..m {
                    if l.u_min[i] > l.u_max[i] {
                        errs.push(format!(
                            "limits: u_min[{i}] = {} exceeds u_max[{i}] = {}",
                            l.u_min[i], l.u_max[i]
                        ));
                    }
                }
            }
            if rate_min.len() == m && rate_max.len() == m {
                for i in 0..m {
                    if !(rate_min[i] <= 0.0 && rate_max[i] >= 0.0) {
                        errs.push(format!(
                            "limits: rate bounds of effector {i} must bracket zero"
                        ));
                    }
                }
            }
            ActuatorLimits::new(l.u_min.clone(), l.u_max.clone(), rate_min, rate_max).ok()
        }
        None => {
            errs.push("limits: section is required".into());
            None
        }
    };

    // schedule
    let duration = raw.run.as_ref().and_then(|r| r.duration).unwrap_or(60.0);
    if !(duration > 0.0) {
        errs.push(format!("run.duration: must be positive, got {duration}"));
    }
    let schedule = raw.schedule.as_ref().map(|s| LimitSchedule {
        u_max_full: s.u_max_full,
        lambda_peak: s.lambda_peak,
        rate_max_start: s.rate_max_start,
        rate_max_end: s.rate_max_end,
        rate_min_start: s.rate_min_start,
        rate_min_end: s.rate_min_end,
    });
    if let Some(s) = &schedule {
        if !(s.u_max_full > 0.0) {
            errs.push(format!(
                "schedule.u_max_full: must be positive, got {}",
                s.u_max_full
            ));
        }
        // u_max(t) = u_max_full cos(lambda(t)) must stay positive
        if !(s.lambda_peak >= 0.0 && s.lambda_peak < std::f64::consts::FRAC_PI_2) {
            errs.push(format!(
                "schedule.lambda_peak: must lie in [0, pi/2) so u_max stays positive, got {}",
                s.lambda_peak
            ));
        }
        if !(s.rate_max_start > 0.0 && s.rate_max_end > 0.0) {
            errs.push("schedule.rate_max: ramp must stay positive".into());
        }
        if !(s.rate_min_start < 0.0 && s.rate_min_end < 0.0) {
            errs.push("schedule.rate_min: ramp must stay negative".into());
        }
    }

    // command
    let command = {
        let c = &raw.command;
        match c.kind.as_str() {
            "constant" => match &c.value {
                Some(v) if v.len() == o => Some(CommandSource::Constant { value: v.clone() }),
                Some(v) => {
                    errs.push(format!("command.value: {} entries, expected {o}", v.len()));
                    None
                }
                None => {
                    errs.push("command.value: required for kind = \"constant\"".into());
                    None
                }
            },
            "gaussian" => {
                let mut ok = true;
                for (name, v) in [("command.mean", &c.mean), ("command.sigma", &c.sigma)] {
                    match v {
                        Some(v) if v.len() == o => {}
                        Some(v) => {
                            errs.push(format!("{name}: {} entries, expected {o}", v.len()));
                            ok = false;
                        }
                        None => {
                            errs.push(format!("{name}: required for kind = \"gaussian\""));
                            ok = false;
                        }
                    }
                }
                if c.seed.is_none() {
                    errs.push("command.seed: required for kind = \"gaussian\"".into());
                    ok = false;
                }
                let samples = c.samples.unwrap_or(1000);
                if samples == 0 {
                    errs.push("command.samples: must be at least 1".into());
                    ok = false;
                }
                if ok {
                    Some(CommandSource::Gaussian {
                        mean: c.mean.clone().unwrap(),
                        sigma: c.sigma.clone().unwrap(),
                        samples,
                        seed: c.seed.unwrap(),
                    })
                } else {
                    None
                }
            }
            "sinusoid" => {
                let freq = c.frequency_hz.clone().unwrap_or_else(|| {
                    let defaults = [0.1, 0.15, 0.05];
                    (0..o).map(|i| defaults[i % 3]).collect()
                });
                let phase = c.phase.clone().unwrap_or_else(|| vec![0.0; o]);
                let mut ok = true;
                if freq.len() != o {
                    errs.push(format!(
                        "command.frequency_hz: {} entries, expected {o}",
                        freq.len()
                    ));
                    ok = false;
                }
                if phase.len() != o {
                    errs.push(format!(
                        "command.phase: {} entries, expected {o}",
                        phase.len()
                    ));
                    ok = false;
                }
                if let Some(a) = &c.amplitude {
                    if a.len() != o {
                        errs.push(format!(
                            "command.amplitude: {} entries, expected {o}",
                            a.len()
                        ));
                        ok = false;
                    }
                }
                if ok {
                    Some(CommandSource::Sinusoid {
                        amplitude: c.amplitude.clone(),
                        frequency_hz: freq,
                        phase,
                    })
                } else {
                    None
                }
            }
            other => {
                errs.push(format!(
                    "command.kind: unknown kind {other:?} (constant | gaussian | sinusoid)"
                ));
                None
            }
        }
    };

    // u_r
    let u_r = match &raw.u_r {
        None => Some(BaselineInput::Zero),
        Some(r) => match r.kind.as_str() {
            "zero" => Some(BaselineInput::Zero),
            "constant" => match &r.value {
                Some(v) if v.len() == m => Some(BaselineInput::Constant(v.clone())),
                Some(v) => {
                    errs.push(format!("u_r.value: {} entries, expected {m}", v.len()));
                    None
                }
                None => {
                    errs.push("u_r.value: required for kind = \"constant\"".into());
                    None
                }
            },
            "table" => {
                let (times, values) = (r.times.clone(), r.values.clone());
                match (times, values) {
                    (Some(times), Some(values)) if !times.is_empty() => {
                        let mut ok = times.len() == values.len();
                        if !ok {
                            errs.push("u_r.table: times and values lengths differ".into());
                        }
                        if !times.windows(2).all(|w| w[0] < w[1]) {
                            errs.push("u_r.times: must be strictly increasing".into());
                            ok = false;
                        }
                        for (k, v) in values.iter().enumerate() {
                            if v.len() != m {
                                errs.push(format!(
                                    "u_r.values[{k}]: {} entries, expected {m}",
                                    v.len()
                                ));
                                ok = false;
                            }
                        }
                        if ok {
                            Some(BaselineInput::Table { times, values })
                        } else {
                            None
                        }
                    }
                    _ => {
                        errs.push("u_r.table: needs non-empty times and values".into());
                        None
                    }
                }
            }
            other => {
                errs.push(format!(
                    "u_r.kind: unknown kind {other:?} (zero | constant | table)"
                ));
                None
            }
        },
    };

    // weighting
    let weighting = {
        let w = raw.weighting.as_ref();
        let epsilon = w.and_then(|w| w.epsilon).unwrap_or(1e-3);
        if !(epsilon > 0.0) {
            errs.push(format!(
                "weighting.epsilon: must be positive, got {epsilon}"
            ));
        }
        let defaults = DragModel::default_four_fin();
        let c0 = w.and_then(|w| w.drag_c0.clone()).unwrap_or_else(|| {
            if m == 4 {
                defaults.c0.clone()
            } else {
                vec![0.001; m]
            }
        });
        let c1 = w.and_then(|w| w.drag_c1.clone()).unwrap_or_else(|| {
            if m == 4 {
                defaults.c1.clone()
            } else {
                vec![0.004; m]
            }
        });
        let floor = w.and_then(|w| w.drag_floor).unwrap_or(1e-6);
        if c0.len() != m {
            errs.push(format!(
                "weighting.drag_c0: {} entries, expected {m}",
                c0.len()
            ));
        }
        if c1.len() != m {
            errs.push(format!(
                "weighting.drag_c1: {} entries, expected {m}",
                c1.len()
            ));
        }
        match DragModel::new(c0, c1, floor) {
            Ok(d) => WeightingConfig::new(epsilon.max(f64::MIN_POSITIVE), d).ok(),
            Err(e) => {
                errs.push(format!("weighting.drag: {e}"));
                None
            }
        }
    };

    // idca
    let idca = {
        let i = raw.idca.as_ref();
        let cfg = IdcaConfig {
            max_iterations: i.and_then(|i| i.max_iterations).unwrap_or(8),
            residual_tol: i.and_then(|i| i.residual_tol).unwrap_or(1e-6),
            rank_tol: i.and_then(|i| i.rank_tol).unwrap_or(rank_tol),
            adjust_steady_state: i.and_then(|i| i.adjust_steady_state).unwrap_or(true),
        };
        if cfg.max_iterations == 0 {
            errs.push("idca.max_iterations: must be at least 1".into());
        }
        if !(cfg.residual_tol > 0.0) {
            errs.push(format!(
                "idca.residual_tol: must be positive, got {}",
                cfg.residual_tol
            ));
        }
        cfg
    };

    let qp_reg_lambda = raw.qpca.as_ref().and_then(|q| q.reg_lambda).unwrap_or(1e-6);
    if !(qp_reg_lambda >= 0.0) {
        errs.push(format!(
            "qpca.reg_lambda: must be non-negative, got {qp_reg_lambda}"
        ));
    }

    // run
    let algorithms = match raw.run.as_ref().and_then(|r| r.algorithms.clone()) {
        None => vec![
            Algorithm::Pica,
            Algorithm::SaturatedPica,
            Algorithm::Rpica,
            Algorithm::Rspica,
            Algorithm::Qpca,
            Algorithm::Idca,
        ],
        Some(names) => {
            let mut out = Vec::new();
            for n in names {
                match Algorithm::parse(&n) {
                    Some(a) => out.push(a),
                    None => errs.push(format!("run.algorithms: unknown algorithm {n:?}")),
                }
            }
            out
        }
    };
    let timing_repeats = raw
        .run
        .as_ref()
        .and_then(|r| r.timing_repeats)
        .unwrap_or(1000);

    match (b, limits, command, u_r, weighting) {
        (Some(b), Some(limits), Some(command), Some(u_r), Some(weighting)) if errs.is_empty() => {
            Ok(ScenarioConfig {
                b,
                dt,
                duration,
                limits,
                schedule,
                initial_u,
                command,
                u_r,
                weighting,
                idca,
                qp_reg_lambda,
                rank_tol,
                algorithms,
                timing_repeats,
            })
        }
        _ => {
            if errs.is_empty() {
                errs.push("config: incomplete".into());
            }
            Err(errs)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
[problem]
b = [[0.5, -0.5]]

[limits]
u_min = [0.0, 0.0]
u_max = [1.5, 1.5]

[command]
kind = "constant"
value = [0.5]
"#;

    #[test]
    fn minimal_config_fills_defaults() {
        let cfg = validate_config(MINIMAL).unwrap();
        assert_eq!(cfg.dt, 0.01);
        assert_eq!(cfg.effectors(), 2);
        assert_eq!(cfg.idca.max_iterations, 8);
        assert_eq!(cfg.algorithms.len(), 6);
        assert_eq!(cfg.timing_repeats, 1000);
    }

    #[test]
    fn limit_order_violation_names_the_effector() {
        let text = MINIMAL.replace("u_min = [0.0, 0.0]", "u_min = [2.0, 0.0]");
        let errs = validate_config(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("u_min[0]")), "{errs:?}");
    }

    #[test]
    fn lambda_peak_out_of_range_is_reported() {
        let text = format!(
            "{MINIMAL}\n[schedule]\nu_max_full = 20.0\nlambda_peak = 1.8\nrate_max_start = 20.0\nrate_max_end = 10.0\nrate_min_start = -20.0\nrate_min_end = -30.0\n"
        );
        let errs = validate_config(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("lambda_peak")), "{errs:?}");
    }

    #[test]
    fn gaussian_requires_seed() {
        let text = MINIMAL.replace(
            "kind = \"constant\"\nvalue = [0.5]",
            "kind = \"gaussian\"\nmean = [0.5]\nsigma = [0.1]",
        );
        let errs = validate_config(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("command.seed")), "{errs:?}");
    }

    #[test]
    fn multiple_errors_are_all_reported() {
        let text = MINIMAL
            .replace("u_min = [0.0, 0.0]", "u_min = [2.0, 0.0]")
            .replace("value = [0.5]", "value = [0.5, 0.5]");
        let errs = validate_config(&text).unwrap_err();
        assert!(errs.len() >= 2, "{errs:?}");
    }

    #[test]
    fn unknown_algorithm_is_rejected() {
        let text = format!("{MINIMAL}\n[run]\nalgorithms = [\"pica\", \"simplex\"]\n");
        let errs = validate_config(&text).unwrap_err();
        assert!(errs.iter().any(|e| e.contains("simplex")), "{errs:?}");
    }

    #[test]
    fn baseline_table_interpolates() {
        let b = BaselineInput::Table {
            times: vec![0.0, 10.0],
            values: vec![vec![0.0, 0.0], vec![10.0, 20.0]],
        };
        assert_eq!(b.at(5.0, 2), vec![5.0, 10.0]);
        assert_eq!(b.at(-1.0, 2), vec![0.0, 0.0]);
        assert_eq!(b.at(99.0, 2), vec![10.0, 20.0]);
    }
}
