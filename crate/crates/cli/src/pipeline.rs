//! The run pipeline: reference solve, grid, backward induction, Monte
//! Carlo, bands, exports, and the run manifest. Stage boundaries are also
//! the failure boundaries reported to the user.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

use sdice_core::{
    backward_induction, build_exogenous_paths, grid_ranges_from_reference, quantile_bands,
    simulate_trajectories, solve_deterministic, write_all_band_csvs, write_policy_table_csv,
    write_reference_csv, write_trajectories_csv, write_value_table_csv, Bands, DpSolution, Grid,
    ModelParams, OutputVar, PolicyInput, PolicySource, ReferenceOptions, ScenarioConfig,
    ScenarioId, SolverOptions,
};

use crate::config::{ConfigError, RunConfig};
use crate::svg::FanChart;

#[derive(Debug)]
pub enum CliError {
    Config(ConfigError),
    Stage { stage: String, message: String },
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Config(e) => write!(f, "configuration error: {e}"),
            CliError::Stage { stage, message } => write!(f, "stage `{stage}` failed: {message}"),
        }
    }
}

impl std::error::Error for CliError {}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Stage { .. } => 1,
        }
    }
}

impl From<ConfigError> for CliError {
    fn from(e: ConfigError) -> Self {
        CliError::Config(e)
    }
}

/// Record of one completed run: what was configured, how long each stage
/// took, and a hash inventory of every emitted file.
#[derive(Debug, Serialize)]
pub struct Manifest {
    pub version: String,
    pub scenario: String,
    pub config_sha256: String,
    pub config: RunConfig,
    pub timings_ms: BTreeMap<String, u128>,
    pub files: Vec<FileEntry>,
}

#[derive(Debug, Serialize)]
pub struct FileEntry {
    pub name: String,
    pub bytes: u64,
    pub sha256: String,
}

fn stage<T, E: std::fmt::Display>(
    timings: &mut BTreeMap<String, u128>,
    name: &str,
    f: impl FnOnce() -> Result<T, E>,
) -> Result<T, CliError> {
    let tick = Instant::now();
    let out = f().map_err(|e| CliError::Stage {
        stage: name.to_string(),
        message: e.to_string(),
    })?;
    let ms = tick.elapsed().as_millis();
    timings.insert(name.to_string(), ms);
    log::info!("{name}: {:.1} s", ms as f64 / 1000.0);
    Ok(out)
}

/// Execute the full pipeline into `out_dir` and return the manifest (also
/// written there as `manifest.json`).
pub fn run(cfg: &RunConfig, out_dir: &Path) -> Result<Manifest, CliError> {
    let id = cfg.scenario_id()?;
    let scenario = build_scenario(cfg, id);
    let mut params = cfg.params.clone();
    params.n_periods = cfg.effective_n();
    let report = Some(cfg.report_periods);
    let counts = cfg.effective_counts();
    let opts = SolverOptions::default();

    let mut timings = BTreeMap::new();
    let mut files: Vec<PathBuf> = Vec::new();

    fs::create_dir_all(out_dir).map_err(|e| CliError::Stage {
        stage: "setup".to_string(),
        message: format!("cannot create {}: {e}", out_dir.display()),
    })?;

    // Resolved-configuration snapshot; replaying it reproduces the run.
    let config_path = out_dir.join("config.toml");
    let config_text = toml::to_string_pretty(cfg).map_err(|e| CliError::Stage {
        stage: "setup".to_string(),
        message: format!("cannot serialize configuration: {e}"),
    })?;
    fs::write(&config_path, &config_text).map_err(|e| CliError::Stage {
        stage: "setup".to_string(),
        message: format!("cannot write {}: {e}", config_path.display()),
    })?;
    let config_sha256 = hex::encode(Sha256::digest(config_text.as_bytes()));
    files.push(config_path);

    log::info!(
        "scenario {} | N = {} | grid {}x{}x{} | {} trajectories | seed {}",
        id.name(),
        params.n_periods,
        counts.a,
        counts.k,
        counts.other,
        scenario.trajectories,
        scenario.seed
    );

    let paths = stage(&mut timings, "exogenous", || build_exogenous_paths(&params))?;
    let reference = stage(&mut timings, "reference", || {
        solve_deterministic(&params, &ReferenceOptions::default())
    })?;
    log::info!("reference objective: {:.4}", reference.objective);

    let reference_path = out_dir.join("reference.csv");
    stage(&mut timings, "reference-export", || {
        write_reference_csv(&reference_path, &reference.trajectory, &params, report)
    })?;
    files.push(reference_path);

    // The dynamic program is only needed when controls are re-optimized
    // along the way; fixed-rate scenarios replay the reference directly.
    let solved: Option<(Grid, DpSolution)> = match scenario.policy {
        PolicySource::StochasticOptimal => {
            let grid = stage(&mut timings, "grid", || {
                let ranges = grid_ranges_from_reference(&reference)?;
                Grid::build(&ranges, &counts, scenario.shock.persistent)
            })?;
            let solution = stage(&mut timings, "solve", || {
                backward_induction(&grid, &paths, &params, &scenario.shock, &opts)
            })?;
            Some((grid, solution))
        }
        PolicySource::DeterministicFixed => None,
    };

    let policy = match &solved {
        Some((grid, solution)) => PolicyInput::StochasticOptimal {
            grid,
            solution,
            opts: &opts,
        },
        None => PolicyInput::DeterministicFixed,
    };
    let trajectories = stage(&mut timings, "simulate", || {
        simulate_trajectories(&scenario, &policy, &reference, &paths, &params)
    })?;

    let bands = stage(&mut timings, "bands", || {
        quantile_bands(&trajectories, &cfg.quantiles, Some(&reference.trajectory))
    })?;

    stage(&mut timings, "export", || -> sdice_core::Result<()> {
        for name in write_all_band_csvs(out_dir, &bands, report)? {
            files.push(out_dir.join(name));
        }
        if cfg.export.trajectories {
            let path = out_dir.join("trajectories.csv");
            write_trajectories_csv(&path, id.name(), &trajectories, report)?;
            files.push(path);
        }
        if cfg.export.tables {
            if let Some((grid, solution)) = &solved {
                let values = out_dir.join("value_table.csv");
                write_value_table_csv(&values, grid, &solution.values)?;
                files.push(values);
                let policy_path = out_dir.join("policy_table.csv");
                write_policy_table_csv(&policy_path, grid, &solution.policy)?;
                files.push(policy_path);
            }
        }
        Ok(())
    })?;

    if cfg.svg {
        stage(&mut timings, "charts", || -> Result<(), String> {
            for var in OutputVar::charted() {
                let path = out_dir.join(format!("fan_{}.svg", var.name()));
                render_band(&bands, var, &params, cfg.report_periods, &path)?;
                files.push(path);
            }
            Ok(())
        })?;
    }

    let tick = Instant::now();
    let entries = hash_files(out_dir, &files).map_err(|message| CliError::Stage {
        stage: "manifest".to_string(),
        message,
    })?;
    timings.insert("manifest".to_string(), tick.elapsed().as_millis());
    let config_sha_check = entries
        .iter()
        .find(|e| e.name == "config.toml")
        .map(|e| e.sha256.clone())
        .unwrap_or(config_sha256);
    let manifest = Manifest {
        version: env!("CARGO_PKG_VERSION").to_string(),
        scenario: id.name().to_string(),
        config_sha256: config_sha_check,
        config: cfg.clone(),
        timings_ms: timings,
        files: entries,
    };
    let manifest_path = out_dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| CliError::Stage {
        stage: "manifest".to_string(),
        message: e.to_string(),
    })?;
    fs::write(&manifest_path, json + "\n").map_err(|e| CliError::Stage {
        stage: "manifest".to_string(),
        message: format!("cannot write {}: {e}", manifest_path.display()),
    })?;
    log::info!("manifest: {}", manifest_path.display());
    Ok(manifest)
}

fn build_scenario(cfg: &RunConfig, id: ScenarioId) -> ScenarioConfig {
    let mut scenario = ScenarioConfig::preset(id);
    scenario.trajectories = cfg.effective_trajectories();
    scenario.seed = cfg.seed;
    if id == ScenarioId::Custom {
        scenario.shock = cfg.custom.shock;
        scenario.policy = if cfg.custom.policy == "deterministic-fixed" {
            PolicySource::DeterministicFixed
        } else {
            PolicySource::StochasticOptimal
        };
        scenario.forced_prefix = cfg.custom.forced_prefix;
    }
    scenario
}

fn render_band(
    bands: &Bands,
    var: OutputVar,
    params: &ModelParams,
    report_periods: usize,
    path: &Path,
) -> Result<(), String> {
    let series = bands
        .series_for(var)
        .ok_or_else(|| format!("no band series for {}", var.name()))?;
    let take = series
        .t
        .iter()
        .take_while(|&&t| t <= report_periods)
        .count();
    let years: Vec<f64> = series.t[..take].iter().map(|&t| params.year(t)).collect();
    let chart = FanChart {
        title: var.name(),
        years: &years,
        lower: &series.quantiles[0][..take],
        upper: &series.quantiles[series.quantiles.len() - 1][..take],
        mean: &series.mean[..take],
        reference: series.reference.as_deref().map(|r| &r[..take]),
    };
    fs::write(path, chart.render()).map_err(|e| format!("cannot write {}: {e}", path.display()))
}

fn hash_files(out_dir: &Path, files: &[PathBuf]) -> Result<Vec<FileEntry>, String> {
    let mut entries = Vec::new();
    for path in files {
        let bytes = fs::read(path).map_err(|e| format!("cannot hash {}: {e}", path.display()))?;
        let name = path
            .strip_prefix(out_dir)
            .unwrap_or(path)
            .to_string_lossy()
            .into_owned();
        entries.push(FileEntry {
            name,
            bytes: bytes.len() as u64,
            sha256: hex::encode(Sha256::digest(&bytes)),
        });
    }
    entries.sort_by(|a, b| a.name.cmp(&b.name));
    Ok(entries)
}
