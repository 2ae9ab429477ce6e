//! CSV writers with fixed schemas, plus the stdout tables.

use std::io::Write;
use std::path::Path;

use ctrlalloc_core::MomentSet;

use crate::error::CliError;
use crate::harness::monte_carlo::{McOutput, McSummaryRow};
use crate::harness::timesim::TimesimRow;
use crate::harness::{TimingRow, TrialRecord};

fn writer(path: &Path) -> Result<csv::Writer<std::fs::File>, CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(CliError::io(dir.display().to_string()))?;
    }
    let file = std::fs::File::create(path).map_err(CliError::io(path.display().to_string()))?;
    Ok(csv::Writer::from_writer(file))
}

fn axis_labels(o: usize) -> Vec<String> {
    if o == 3 {
        vec!["x".into(), "y".into(), "z".into()]
    } else {
        (1..=o).map(|i| i.to_string()).collect()
    }
}

/// `stationary.csv`: algorithm,cost,error,time_s,u1..um
pub fn write_stationary(path: &Path, rows: &[TrialRecord], m: usize) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let mut header = vec![
        "algorithm".to_string(),
        "cost".into(),
        "error".into(),
        "time_s".into(),
    ];
    header.extend((1..=m).map(|i| format!("u{i}")));
    w.write_record(&header).map_err(csv_err(path))?;
    for r in rows {
        let mut rec = vec![
            r.algorithm.name().to_string(),
            r.result.cost.to_string(),
            r.result.error_norm().to_string(),
            r.result.elapsed_s.to_string(),
        ];
        rec.extend(r.result.u.iter().map(|x| x.to_string()));
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush()
        .map_err(CliError::io(path.display().to_string()))?;
    Ok(())
}

/// `mc_raw.csv`: sample,algorithm,cost,error,time_s
pub fn write_mc_raw(path: &Path, out: &McOutput) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["sample", "algorithm", "cost", "error", "time_s"])
        .map_err(csv_err(path))?;
    for s in &out.samples {
        for t in &s.trials {
            w.write_record([
                s.index.to_string(),
                t.algorithm.name().to_string(),
                t.result.cost.to_string(),
                t.result.error_norm().to_string(),
                t.result.elapsed_s.to_string(),
            ])
            .map_err(csv_err(path))?;
        }
    }
    w.flush()
        .map_err(CliError::io(path.display().to_string()))?;
    Ok(())
}

/// `mc_summary.csv`: algorithm,metric,p5,p50,p95,mean
pub fn write_mc_summary(path: &Path, rows: &[McSummaryRow]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["algorithm", "metric", "p5", "p50", "p95", "mean"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            r.metric.to_string(),
            r.p5.to_string(),
            r.p50.to_string(),
            r.p95.to_string(),
            r.mean.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush()
        .map_err(CliError::io(path.display().to_string()))?;
    Ok(())
}

/// `timesim.csv`: t,nu_cmd_*,nu_ach_*,err_*,u*,udot*,lo*,hi*,rlo*,rhi*
pub fn write_timesim(path: &Path, rows: &[TimesimRow], o: usize, m: usize) -> Result<(), CliError> {
    let mut w = writer(path)?;
    let ax = axis_labels(o);
    let mut header = vec!["t".to_string()];
    for prefix in ["nu_cmd_", "nu_ach_", "err_"] {
        header.extend(ax.iter().map(|a| format!("{prefix}{a}")));
    }
    for prefix in ["u", "udot", "lo", "hi", "rlo", "rhi"] {
        header.extend((1..=m).map(|i| format!("{prefix}{i}")));
    }
    w.write_record(&header).map_err(csv_err(path))?;
    for r in rows {
        let mut rec = vec![r.t.to_string()];
        for block in [&r.nu_cmd, &r.nu_ach, &r.err] {
            rec.extend(block.iter().map(|x| x.to_string()));
        }
        for block in [&r.u, &r.udot, &r.lo, &r.hi, &r.rlo, &r.rhi] {
            rec.extend(block.iter().map(|x| x.to_string()));
        }
        w.write_record(&rec).map_err(csv_err(path))?;
    }
    w.flush()
        .map_err(CliError::io(path.display().to_string()))?;
    Ok(())
}

/// `timesim_compare.csv`: t,algorithm,cost,error,time_s
pub fn write_timesim_compare(path: &Path, rows: &[TrialRecord]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record(["t", "algorithm", "cost", "error", "time_s"])
        .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.t.to_string(),
            r.algorithm.name().to_string(),
            r.result.cost.to_string(),
            r.result.error_norm().to_string(),
            r.result.elapsed_s.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush()
        .map_err(CliError::io(path.display().to_string()))?;
    Ok(())
}

/// `vertices.csv` and `facets.csv` for the attainable set.
pub fn write_moment_set(dir: &Path, set: &MomentSet, o: usize) -> Result<(), CliError> {
    let vpath = dir.join("vertices.csv");
    let mut w = writer(&vpath)?;
    let ax = axis_labels(o);
    w.write_record(ax.iter().map(|a| format!("nu_{a}")))
        .map_err(csv_err(&vpath))?;
    for v in &set.vertices {
        w.write_record(v.iter().map(|x| x.to_string()))
            .map_err(csv_err(&vpath))?;
    }
    w.flush()
        .map_err(CliError::io(vpath.display().to_string()))?;

    let fpath = dir.join("facets.csv");
    let mut w = writer(&fpath)?;
    w.write_record(["v0", "v1", "v2"])
        .map_err(csv_err(&fpath))?;
    for f in &set.hull_facets {
        w.write_record(f.iter().map(|x| x.to_string()))
            .map_err(csv_err(&fpath))?;
    }
    w.flush()
        .map_err(CliError::io(fpath.display().to_string()))?;
    Ok(())
}

/// `compare.csv`: algorithm,median_time_s,p5_time_s,p95_time_s,cost,error
pub fn write_compare(path: &Path, rows: &[TimingRow]) -> Result<(), CliError> {
    let mut w = writer(path)?;
    w.write_record([
        "algorithm",
        "median_time_s",
        "p5_time_s",
        "p95_time_s",
        "cost",
        "error",
    ])
    .map_err(csv_err(path))?;
    for r in rows {
        w.write_record([
            r.algorithm.name().to_string(),
            r.median_s.to_string(),
            r.p5_s.to_string(),
            r.p95_s.to_string(),
            r.cost.to_string(),
            r.error.to_string(),
        ])
        .map_err(csv_err(path))?;
    }
    w.flush()
        .map_err(CliError::io(path.display().to_string()))?;
    Ok(())
}

fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> CliError + '_ {
    move |e| CliError::Io {
        path: path.display().to_string(),
        source: std::io::Error::other(e),
    }
}

pub fn print_stationary_table(out: &mut impl Write, rows: &[TrialRecord]) {
    let _ = writeln!(
        out,
        "{:<18} {:>14} {:>14} {:>12}",
        "algorithm", "cost", "error", "time_s"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<18} {:>14.6} {:>14.6e} {:>12.3e}",
            r.algorithm.name(),
            r.result.cost,
            r.result.error_norm(),
            r.result.elapsed_s
        );
    }
}

pub fn print_timing_table(out: &mut impl Write, rows: &[TimingRow]) {
    let _ = writeln!(
        out,
        "{:<18} {:>14} {:>14} {:>14} {:>14}",
        "algorithm", "median_time_s", "p95_time_s", "cost", "error"
    );
    for r in rows {
        let _ = writeln!(
            out,
            "{:<18} {:>14.3e} {:>14.3e} {:>14.6} {:>14.6e}",
            r.algorithm.name(),
            r.median_s,
            r.p95_s,
            r.cost,
            r.error
        );
    }
}
