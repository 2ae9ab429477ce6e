//! Monte Carlo study: Gaussian demand samples, one allocation per
//! algorithm per sample, distribution summaries.
//!
//! Sampling is counter-based: sample `k` draws from its own ChaCha
//! stream, so the demand sequence is a pure function of `(seed, k)` and
//! does not depend on execution order.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use ctrlalloc_core::{contains, effective_bounds, VirtualCommand};

use crate::config::{Algorithm, CommandSource, ScenarioConfig};
use crate::error::CliError;
use crate::harness::{initial_state, mean, percentile, run_algorithm, TrialRecord};

/// One Monte Carlo sample with its demand and membership certificate.
#[derive(Clone, Debug)]
pub struct McSample {
    pub index: usize,
    pub nu: Vec<f64>,
    /// Demand certified attainable by the membership oracle.
    pub in_ams: bool,
    pub trials: Vec<TrialRecord>,
}

#[derive(Clone, Debug)]
pub struct McSummaryRow {
    pub algorithm: Algorithm,
    pub metric: &'static str,
    pub p5: f64,
    pub p50: f64,
    pub p95: f64,
    pub mean: f64,
}

pub struct McOutput {
    pub samples: Vec<McSample>,
    pub summary: Vec<McSummaryRow>,
}

/// Demand of sample `k` under `seed`: `nu = mean + sigma ⊙ z`,
/// `z ~ N(0, I)` drawn from stream `k`.
pub fn sample_command(mean: &[f64], sigma: &[f64], seed: u64, k: usize) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(k as u64);
    mean.iter()
        .zip(sigma)
        .map(|(m, s)| {
            let z: f64 = StandardNormal.sample(&mut rng);
            m + s * z
        })
        .collect()
}

/// Run the study. `seed_override` replaces the configured seed.
pub fn run_monte_carlo(
    cfg: &ScenarioConfig,
    seed_override: Option<u64>,
) -> Result<McOutput, CliError> {
    let CommandSource::Gaussian {
        mean: mu,
        sigma,
        samples,
        seed,
    } = &cfg.command
    else {
        return Err(CliError::Config(vec![
            "montecarlo requires command.kind = \"gaussian\"".into(),
        ]));
    };
    let seed = seed_override.unwrap_or(*seed);
    let limits = cfg.limits_at(0.0);
    let state = initial_state(cfg);
    let bounds = effective_bounds(&limits, &state);

    let mut out = Vec::with_capacity(*samples);
    for k in 0..*samples {
        let nu_vec = sample_command(mu, sigma, seed, k);
        let nu = VirtualCommand::new(nu_vec.clone()).map_err(CliError::Numerical)?;
        let in_ams = contains(&cfg.b, &bounds, &nu_vec, 1e-6);
        let mut trials = Vec::with_capacity(cfg.algorithms.len());
        for &alg in &cfg.algorithms {
            let result = run_algorithm(alg, cfg, &nu, &limits, &state, 0.0)?;
            trials.push(TrialRecord {
                index: k,
                t: 0.0,
                algorithm: alg,
                result,
            });
        }
        out.push(McSample {
            index: k,
            nu: nu_vec,
            in_ams,
            trials,
        });
    }

    let summary = summarize(&out, &cfg.algorithms);
    Ok(McOutput {
        samples: out,
        summary,
    })
}

fn summarize(samples: &[McSample], algorithms: &[Algorithm]) -> Vec<McSummaryRow> {
    let mut rows = Vec::new();
    for &alg in algorithms {
        let collect = |f: &dyn Fn(&TrialRecord) -> f64| -> Vec<f64> {
            samples
                .iter()
                .flat_map(|s| s.trials.iter().filter(|t| t.algorithm == alg).map(f))
                .collect()
        };
        for (metric, values) in [
            ("cost", collect(&|t| t.result.cost)),
            ("error", collect(&|t| t.result.error_norm())),
            ("time_s", collect(&|t| t.result.elapsed_s)),
        ] {
            if values.is_empty() {
                continue;
            }
            let mut v = values.clone();
            rows.push(McSummaryRow {
                algorithm: alg,
                metric,
                p5: percentile(&mut v.clone(), 5.0),
                p50: percentile(&mut v.clone(), 50.0),
                p95: percentile(&mut v, 95.0),
                mean: mean(&values),
            });
        }
    }
    rows
}
