//! CSV export of trajectories, quantile bands, and solver tables.
//!
//! All writers emit UTF-8 with a header row and `.` as the decimal
//! separator. Floats are printed with Rust's shortest round-trip
//! formatting, so identical inputs produce byte-identical files.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::grid::Grid;
use crate::params::ModelParams;
use crate::simulate::{BandSeries, Bands};
use crate::solver::{PolicyTable, ValueTable};
use crate::state::Regime;
use crate::trajectory::{OutputVar, Trajectory};

fn fmt(v: f64) -> String {
    format!("{v}")
}

/// Column label for a band probability: q025 for 2.5%, q500 for the median,
/// q975 for 97.5%.
pub fn quantile_label(p: f64) -> String {
    format!("q{:03.0}", p * 1000.0)
}

fn open(path: &Path) -> Result<BufWriter<File>> {
    let file = File::create(path)
        .map_err(|e| Error::Output(format!("create {}: {e}", path.display())))?;
    Ok(BufWriter::new(file))
}

/// One row per decision period with the charted variables in figure order.
///
/// Control columns (MIU, S, CPRICE and the derived YNET, DAMFCT) exist for
/// t = 0..N; rows stop at the decision horizon even though the terminal
/// state t = N is known.
pub fn write_reference_csv(
    path: &Path,
    traj: &Trajectory,
    params: &ModelParams,
    report_periods: Option<usize>,
) -> Result<()> {
    let mut w = open(path)?;
    let vars = OutputVar::charted();
    let mut header = vec!["t".to_string(), "year".to_string()];
    header.extend(vars.iter().map(|v| v.name().to_string()));
    writeln!(w, "{}", header.join(","))?;

    let last = report_periods
        .map(|r| r.min(traj.horizon().saturating_sub(1)))
        .unwrap_or(traj.horizon().saturating_sub(1));
    for t in 0..=last {
        let mut row = vec![t.to_string(), fmt(params.year(t))];
        for var in vars {
            let v = var.value(traj, t).ok_or_else(|| {
                Error::Output(format!("{} undefined at period {t}", var.name()))
            })?;
            row.push(fmt(v));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Long-format ensemble dump: one row per (trajectory, period, variable).
///
/// Covers the thirteen numeric outputs plus a REGIME row (0 normal,
/// 1 stressed) so the shock path of every trajectory can be reconstructed.
/// State variables appear through the terminal period t = N; controls and
/// flow variables stop at the last decision period.
pub fn write_trajectories_csv(
    path: &Path,
    scenario: &str,
    trajectories: &[Trajectory],
    report_periods: Option<usize>,
) -> Result<()> {
    let mut w = open(path)?;
    writeln!(w, "scenario,trajectory,t,variable,value")?;
    for (m, traj) in trajectories.iter().enumerate() {
        let last = report_periods
            .map(|r| r.min(traj.horizon()))
            .unwrap_or(traj.horizon());
        for t in 0..=last {
            for var in OutputVar::all() {
                if let Some(v) = var.value(traj, t) {
                    writeln!(w, "{scenario},{m},{t},{},{}", var.name(), fmt(v))?;
                }
            }
            let regime = match traj.states[t].regime {
                Regime::Normal => 0,
                Regime::Stressed => 1,
            };
            writeln!(w, "{scenario},{m},{t},REGIME,{regime}")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Wide band file for a single variable: t, one column per quantile, the
/// ensemble mean, and the deterministic reference when present.
pub fn write_band_csv(
    path: &Path,
    series: &BandSeries,
    probabilities: &[f64],
    report_periods: Option<usize>,
) -> Result<()> {
    if series.quantiles.len() != probabilities.len() {
        return Err(Error::Output(format!(
            "band for {} has {} quantile rows but {} probabilities",
            series.var.name(),
            series.quantiles.len(),
            probabilities.len()
        )));
    }
    let mut w = open(path)?;
    let mut header = vec!["t".to_string()];
    header.extend(probabilities.iter().map(|&p| quantile_label(p)));
    header.push("mean".to_string());
    if series.reference.is_some() {
        header.push("reference".to_string());
    }
    writeln!(w, "{}", header.join(","))?;

    for (i, &t) in series.t.iter().enumerate() {
        if let Some(r) = report_periods {
            if t > r {
                break;
            }
        }
        let mut row = vec![t.to_string()];
        for q in &series.quantiles {
            row.push(fmt(q[i]));
        }
        row.push(fmt(series.mean[i]));
        if let Some(reference) = &series.reference {
            row.push(fmt(reference[i]));
        }
        writeln!(w, "{}", row.join(","))?;
    }
    w.flush()?;
    Ok(())
}

/// Write one band file per variable into `dir`, named `band_MIU.csv` etc.
/// Returns the file names written, in the order the series appear.
pub fn write_all_band_csvs(
    dir: &Path,
    bands: &Bands,
    report_periods: Option<usize>,
) -> Result<Vec<String>> {
    let mut names = Vec::new();
    for series in &bands.series {
        let name = format!("band_{}.csv", series.var.name());
        write_band_csv(&dir.join(&name), series, &bands.probabilities, report_periods)?;
        names.push(name);
    }
    Ok(names)
}

fn coord_names(persistent: bool) -> &'static [&'static str] {
    if persistent {
        &["A", "K", "MAT", "MU", "ML", "TATM", "TOCEAN"]
    } else {
        &["K", "MAT", "MU", "ML", "TATM", "TOCEAN"]
    }
}

/// Node-table dump of the value function: one row per (period, regime, node)
/// with the node coordinates and the value there.
pub fn write_value_table_csv(path: &Path, grid: &Grid, values: &ValueTable) -> Result<()> {
    if values.len() != grid.len() {
        return Err(Error::Output(format!(
            "value table has {} periods, grid has {}",
            values.len(),
            grid.len()
        )));
    }
    let mut w = open(path)?;
    let coords = coord_names(grid.persistent());
    let mut header = vec!["t".to_string(), "regime".to_string(), "node".to_string()];
    header.extend(coords.iter().map(|c| c.to_string()));
    header.push("V".to_string());
    writeln!(w, "{}", header.join(","))?;

    for t in 0..values.len() {
        let pg = grid.period(t);
        for regime in [Regime::Normal, Regime::Stressed] {
            let slab = values.slab(t, regime);
            for node in 0..pg.slab_len() {
                let point = pg.point(node);
                let mut row = vec![
                    t.to_string(),
                    (regime.is_stressed() as u8).to_string(),
                    node.to_string(),
                ];
                row.extend(point.iter().map(|&x| fmt(x)));
                row.push(fmt(slab[node]));
                writeln!(w, "{}", row.join(","))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Node-table dump of the policy: one row per (period, regime, node) with
/// the optimal mitigation rate, savings rate, consumption, and value.
pub fn write_policy_table_csv(path: &Path, grid: &Grid, policy: &PolicyTable) -> Result<()> {
    if policy.len() + 1 != grid.len() {
        return Err(Error::Output(format!(
            "policy table has {} decision periods, grid has {} state periods",
            policy.len(),
            grid.len()
        )));
    }
    let mut w = open(path)?;
    let coords = coord_names(grid.persistent());
    let mut header = vec!["t".to_string(), "regime".to_string(), "node".to_string()];
    header.extend(coords.iter().map(|c| c.to_string()));
    header.extend(["MIU", "S", "C", "V"].iter().map(|c| c.to_string()));
    writeln!(w, "{}", header.join(","))?;

    for t in 0..policy.len() {
        let pg = grid.period(t);
        for regime in [Regime::Normal, Regime::Stressed] {
            let slab = policy.slab(t, regime);
            for node in 0..pg.slab_len() {
                let point = pg.point(node);
                let entry = slab[node];
                let mut row = vec![
                    t.to_string(),
                    (regime.is_stressed() as u8).to_string(),
                    node.to_string(),
                ];
                row.extend(point.iter().map(|&x| fmt(x)));
                row.push(fmt(entry.mu));
                row.push(fmt(entry.s));
                row.push(fmt(entry.c));
                row.push(fmt(entry.value));
                writeln!(w, "{}", row.join(","))?;
            }
        }
    }
    w.flush()?;
    Ok(())
}
