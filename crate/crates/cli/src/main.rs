//! `sdice`: solve the stochastic DICE model and simulate shocked-economy
//! trajectories, exporting CSV bands and optional SVG fan charts.

mod config;
mod pipeline;
mod svg;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdice_core::{ModelParams, OutputVar};

use pipeline::CliError;
use svg::FanChart;

#[derive(Parser)]
#[command(
    name = "sdice",
    version,
    about = "Stochastic DICE climate-economy model: dynamic-programming solver \
             and Monte Carlo simulator"
)]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run one scenario end to end and export results into a directory.
    Run(RunArgs),
    /// Render a fan chart from a previously exported band CSV.
    Chart(ChartArgs),
}

#[derive(Args)]
struct RunArgs {
    /// Configuration file (TOML). Omitted keys fall back to the built-in
    /// defaults, which reproduce the standard calibration.
    #[arg(long, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Scenario: A1, A2, B, C, deterministic, or custom.
    #[arg(long)]
    scenario: Option<String>,

    /// Monte Carlo seed.
    #[arg(long)]
    seed: Option<u64>,

    /// Ensemble size.
    #[arg(long, value_name = "M")]
    trajectories: Option<usize>,

    /// Desk-scale resolution: caps the horizon at 40 periods, the grid at
    /// 5 capital / 3 other nodes, and the ensemble at 200 trajectories.
    #[arg(long)]
    fast: bool,

    /// Output directory (default: out/<scenario>).
    #[arg(long, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Also render fan charts for the eleven charted variables.
    #[arg(long)]
    svg: bool,

    /// Override one configuration key, e.g. `--set n-periods=40`,
    /// `--set preferences.alpha=1.4`, `--set grid.k=7`. Bare keys address
    /// the model parameter block; repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args)]
struct ChartArgs {
    /// Band CSV produced by `sdice run` (for example band_TATM.csv).
    #[arg(long, value_name = "PATH")]
    band: PathBuf,

    /// Variable the band describes; used for labeling.
    #[arg(long, value_name = "NAME")]
    variable: String,

    /// Output SVG path.
    #[arg(long, value_name = "PATH")]
    out: PathBuf,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .format_target(false)
        .init();
    let cli = Cli::parse();
    let result = match cli.cmd {
        Cmd::Run(args) => run_cmd(args),
        Cmd::Chart(args) => chart_cmd(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run_cmd(args: RunArgs) -> Result<(), CliError> {
    let mut cfg = config::load(args.config.as_deref(), &args.set)?;
    if let Some(scenario) = args.scenario {
        cfg.scenario = scenario;
    }
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    if let Some(m) = args.trajectories {
        cfg.trajectories = m;
    }
    if args.fast {
        cfg.fast = true;
    }
    if args.svg {
        cfg.svg = true;
    }
    cfg.validate()?;

    let out_dir = args
        .out
        .unwrap_or_else(|| Path::new("out").join(cfg.scenario_id().unwrap().name()));
    let manifest = pipeline::run(&cfg, &out_dir)?;
    println!(
        "{}: {} files in {}",
        manifest.scenario,
        manifest.files.len(),
        out_dir.display()
    );
    Ok(())
}

/// Column layout of a parsed band CSV.
struct BandFile {
    t: Vec<usize>,
    lower: Vec<f64>,
    upper: Vec<f64>,
    mean: Vec<f64>,
    reference: Option<Vec<f64>>,
}

fn chart_cmd(args: ChartArgs) -> Result<(), CliError> {
    let name = args.variable.to_uppercase();
    if OutputVar::from_name(&name).is_none() {
        let available: Vec<&str> = OutputVar::all().iter().map(|v| v.name()).collect();
        return Err(CliError::Config(config::ConfigError(format!(
            "unknown variable `{}`; available: {}",
            args.variable,
            available.join(", ")
        ))));
    }

    let band = read_band_csv(&args.band).map_err(|message| CliError::Stage {
        stage: "chart".to_string(),
        message,
    })?;

    // Band files carry period indices; the chart axis shows calendar years
    // under the standard 5-year calendar.
    let params = ModelParams::default();
    let years: Vec<f64> = band.t.iter().map(|&t| params.year(t)).collect();
    let chart = FanChart {
        title: &name,
        years: &years,
        lower: &band.lower,
        upper: &band.upper,
        mean: &band.mean,
        reference: band.reference.as_deref(),
    };
    std::fs::write(&args.out, chart.render()).map_err(|e| CliError::Stage {
        stage: "chart".to_string(),
        message: format!("cannot write {}: {e}", args.out.display()),
    })?;
    println!("wrote {}", args.out.display());
    Ok(())
}

fn read_band_csv(path: &Path) -> Result<BandFile, String> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let mut lines = text.lines();
    let header: Vec<&str> = lines
        .next()
        .ok_or_else(|| format!("{} is empty", path.display()))?
        .split(',')
        .collect();

    let col = |name: &str| header.iter().position(|h| *h == name);
    let quantile_cols: Vec<usize> = header
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with('q') && h[1..].chars().all(|c| c.is_ascii_digit()))
        .map(|(i, _)| i)
        .collect();
    let (Some(t_col), Some(mean_col)) = (col("t"), col("mean")) else {
        return Err(format!(
            "{} lacks required columns `t` and `mean`; available columns: {}",
            path.display(),
            header.join(", ")
        ));
    };
    if quantile_cols.is_empty() {
        return Err(format!(
            "{} has no quantile columns (q025-style); available columns: {}",
            path.display(),
            header.join(", ")
        ));
    }
    let lower_col = quantile_cols[0];
    let upper_col = *quantile_cols.last().unwrap();
    let ref_col = col("reference");

    let mut band = BandFile {
        t: Vec::new(),
        lower: Vec::new(),
        upper: Vec::new(),
        mean: Vec::new(),
        reference: ref_col.map(|_| Vec::new()),
    };
    for (i, line) in lines.enumerate() {
        let fields: Vec<&str> = line.split(',').collect();
        let cell = |c: usize| -> Result<f64, String> {
            fields
                .get(c)
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| {
                    format!(
                        "{} row {}: cannot parse column `{}`",
                        path.display(),
                        i + 2,
                        header.get(c).copied().unwrap_or("?")
                    )
                })
        };
        band.t.push(cell(t_col)? as usize);
        band.lower.push(cell(lower_col)?);
        band.upper.push(cell(upper_col)?);
        band.mean.push(cell(mean_col)?);
        if let (Some(rc), Some(refs)) = (ref_col, band.reference.as_mut()) {
            refs.push(cell(rc)?);
        }
    }
    if band.t.is_empty() {
        return Err(format!("{} has no data rows", path.display()));
    }
    Ok(band)
}
