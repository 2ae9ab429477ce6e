//! Command-line front end: parse a scenario config, dispatch the
//! requested experiment, write CSV outputs, print summary tables.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use ctrlalloc::config::{load_config, Algorithm, ScenarioConfig};
use ctrlalloc::error::CliError;
use ctrlalloc::{harness, output};

#[derive(Parser)]
#[command(
    name = "ctrlalloc",
    about = "Constrained control-allocation experiments for over-actuated vehicles",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct CommonArgs {
    /// Scenario configuration file (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory for CSV files.
    #[arg(long, default_value = "out")]
    out: PathBuf,
    /// Override the scenario seed (Monte Carlo only).
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated algorithm filter, e.g. "pica,qpca,idca".
    #[arg(long, value_delimiter = ',')]
    algorithms: Option<Vec<String>>,
    /// Suppress stdout tables.
    #[arg(long)]
    quiet: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Run every selected algorithm once on the scenario's command.
    #[command(name = "static")]
    Static(CommonArgs),
    /// Gaussian demand study with per-sample statistics.
    Montecarlo(CommonArgs),
    /// Closed-iteration simulation under scheduled limits.
    Timesim(CommonArgs),
    /// Export the attainable moment set (vertices.csv, facets.csv).
    Ams(CommonArgs),
    /// Stationary run plus repeated-call timing medians per algorithm.
    Compare(CommonArgs),
}

type CommandFn = fn(&ScenarioConfig, &CommonArgs) -> Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, CommandFn) = match &cli.command {
        Command::Static(a) => (a, cmd_static),
        Command::Montecarlo(a) => (a, cmd_montecarlo),
        Command::Timesim(a) => (a, cmd_timesim),
        Command::Ams(a) => (a, cmd_ams),
        Command::Compare(a) => (a, cmd_compare),
    };

    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(errs) => {
            eprintln!("{}", CliError::Config(errs));
            return ExitCode::from(1);
        }
    };
    if let Some(filter) = &args.algorithms {
        let mut selected = Vec::new();
        let mut errs = Vec::new();
        for name in filter {
            match Algorithm::parse(name) {
                Some(a) => selected.push(a),
                None => errs.push(format!("--algorithms: unknown algorithm {name:?}")),
            }
        }
        if !errs.is_empty() {
            eprintln!("{}", CliError::Config(errs));
            return ExitCode::from(1);
        }
        cfg.algorithms = selected;
    }

    match run(&cfg, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn cmd_static(cfg: &ScenarioConfig, args: &CommonArgs) -> Result<(), CliError> {
    let rows = harness::run_stationary(cfg)?;
    output::write_stationary(&args.out.join("stationary.csv"), &rows, cfg.effectors())?;
    if !args.quiet {
        output::print_stationary_table(&mut std::io::stdout(), &rows);
    }
    Ok(())
}

fn cmd_montecarlo(cfg: &ScenarioConfig, args: &CommonArgs) -> Result<(), CliError> {
    let out = harness::monte_carlo::run_monte_carlo(cfg, args.seed)?;
    output::write_mc_raw(&args.out.join("mc_raw.csv"), &out)?;
    output::write_mc_summary(&args.out.join("mc_summary.csv"), &out.summary)?;
    if !args.quiet {
        println!(
            "{} samples, {} in the attainable set",
            out.samples.len(),
            out.samples.iter().filter(|s| s.in_ams).count()
        );
        println!(
            "{:<18} {:<8} {:>14} {:>14} {:>14}",
            "algorithm", "metric", "p5", "p50", "p95"
        );
        for r in &out.summary {
            println!(
                "{:<18} {:<8} {:>14.6e} {:>14.6e} {:>14.6e}",
                r.algorithm.name(),
                r.metric,
                r.p5,
                r.p50,
                r.p95
            );
        }
    }
    Ok(())
}

fn cmd_timesim(cfg: &ScenarioConfig, args: &CommonArgs) -> Result<(), CliError> {
    let out = harness::timesim::run_timesim(cfg)?;
    output::write_timesim(
        &args.out.join("timesim.csv"),
        &out.rows,
        cfg.axes(),
        cfg.effectors(),
    )?;
    if !out.compare.is_empty() {
        output::write_timesim_compare(&args.out.join("timesim_compare.csv"), &out.compare)?;
    }
    let audit = harness::timesim::audit_timesim(cfg, &out.rows);
    if !args.quiet {
        println!(
            "{} steps | magnitude violations {} | rate violations {} | contained {} (misses {}) | pinned-rate violations {}",
            audit.steps,
            audit.magnitude_violations,
            audit.rate_violations,
            audit.contained_steps,
            audit.contained_misses,
            audit.pinned_rate_violations
        );
    }
    Ok(())
}

fn cmd_ams(cfg: &ScenarioConfig, args: &CommonArgs) -> Result<(), CliError> {
    let limits = cfg.limits_at(0.0);
    let bounds = ctrlalloc_core::EffectiveBounds {
        lo: limits.u_min.clone(),
        hi: limits.u_max.clone(),
    };
    let set = ctrlalloc_core::moment_set(&cfg.b, &bounds).map_err(CliError::Numerical)?;
    output::write_moment_set(&args.out, &set, cfg.axes())?;
    if !args.quiet {
        println!(
            "{} vertex images, {} hull facets",
            set.vertices.len(),
            set.hull_facets.len()
        );
    }
    Ok(())
}

fn cmd_compare(cfg: &ScenarioConfig, args: &CommonArgs) -> Result<(), CliError> {
    let rows = harness::run_stationary(cfg)?;
    output::write_stationary(&args.out.join("stationary.csv"), &rows, cfg.effectors())?;

    // Timing comparison always includes the generic QP reference path.
    let mut algs = cfg.algorithms.clone();
    if !algs.contains(&Algorithm::QpcaGenericRef) {
        algs.push(Algorithm::QpcaGenericRef);
    }
    let timing = harness::timing_comparison(cfg, &algs, cfg.timing_repeats)?;
    output::write_compare(&args.out.join("compare.csv"), &timing)?;
    if !args.quiet {
        output::print_stationary_table(&mut std::io::stdout(), &rows);
        println!();
        output::print_timing_table(&mut std::io::stdout(), &timing);
    }
    Ok(())
}
