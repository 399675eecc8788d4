//! Run configuration: a TOML file with a complete embedded default, merged
//! with `--set key=value` overrides and the dedicated command-line flags.
//!
//! Precedence, lowest to highest: built-in defaults, config file, `--set`
//! pairs, dedicated flags (`--scenario`, `--seed`, ...). The `fast` switch
//! is not a mutation of the stored values but a cap applied when the
//! pipeline reads them, so `--fast --set n-periods=12` still runs 12
//! periods.

use std::fmt;
use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use sdice_core::{GridCounts, ModelParams, ScenarioId, ShockSpec};

/// Everything one run depends on. Serialized back into the output directory
/// as `config.toml`, which can be replayed with `sdice run --config`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Scenario name: A1, A2, B, C, deterministic, or custom.
    pub scenario: String,
    /// Monte Carlo seed.
    pub seed: u64,
    /// Ensemble size.
    pub trajectories: usize,
    /// Last period written to CSVs and charts.
    pub report_periods: usize,
    /// Desk-scale mode: caps the horizon at 40 periods, the grid at
    /// 5 capital / 3 other nodes per axis, and the ensemble at 200.
    pub fast: bool,
    /// Render fan charts for the charted variables.
    pub svg: bool,
    /// Band probabilities, strictly ascending, in (0, 1).
    pub quantiles: Vec<f64>,
    /// Grid node counts per axis kind.
    pub grid: GridCounts,
    pub export: ExportConfig,
    /// Shock and policy description used when `scenario = "custom"`.
    pub custom: CustomScenario,
    pub params: ModelParams,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            scenario: "deterministic".to_string(),
            seed: 42,
            trajectories: 1000,
            report_periods: 40,
            fast: false,
            svg: false,
            quantiles: vec![0.025, 0.975],
            grid: GridCounts::full(),
            export: ExportConfig::default(),
            custom: CustomScenario::default(),
            params: ModelParams::default(),
        }
    }
}

/// Optional bulky exports beyond the reference and band CSVs.
#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExportConfig {
    /// Long-format dump of every simulated trajectory.
    pub trajectories: bool,
    /// Node-level value and policy tables (large at full resolution).
    pub tables: bool,
}

/// Free-form experiment used when the scenario is `custom`. Named scenarios
/// ignore this block: their shock processes are fixed definitions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CustomScenario {
    /// `stochastic-optimal` or `deterministic-fixed`.
    pub policy: String,
    /// Force the regime sequence to start normal, then stressed at t = 1.
    pub forced_prefix: bool,
    pub shock: ShockSpec,
}

impl Default for CustomScenario {
    fn default() -> Self {
        CustomScenario {
            policy: "stochastic-optimal".to_string(),
            forced_prefix: false,
            shock: ShockSpec::none(),
        }
    }
}

impl RunConfig {
    pub fn scenario_id(&self) -> Result<ScenarioId, ConfigError> {
        ScenarioId::parse(&self.scenario).ok_or_else(|| {
            ConfigError(format!(
                "unknown scenario `{}`; expected one of A1, A2, B, C, deterministic, custom",
                self.scenario
            ))
        })
    }

    /// Horizon after the fast cap.
    pub fn effective_n(&self) -> usize {
        if self.fast {
            self.params.n_periods.min(40)
        } else {
            self.params.n_periods
        }
    }

    /// Grid counts after the fast cap.
    pub fn effective_counts(&self) -> GridCounts {
        if self.fast {
            let cap = GridCounts::fast();
            GridCounts {
                a: self.grid.a.min(cap.a),
                k: self.grid.k.min(cap.k),
                other: self.grid.other.min(cap.other),
            }
        } else {
            self.grid
        }
    }

    /// Ensemble size after the fast cap.
    pub fn effective_trajectories(&self) -> usize {
        if self.fast {
            self.trajectories.min(200)
        } else {
            self.trajectories
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        self.scenario_id()?;
        if self.trajectories < 2 {
            return Err(ConfigError(
                "trajectories: band quantiles need an ensemble of at least 2".to_string(),
            ));
        }
        if self.quantiles.is_empty()
            || self.quantiles.iter().any(|p| !(0.0..1.0).contains(p) || *p <= 0.0)
            || self.quantiles.windows(2).any(|w| w[0] >= w[1])
        {
            return Err(ConfigError(format!(
                "quantiles: must be strictly ascending within (0, 1), got {:?}",
                self.quantiles
            )));
        }
        match self.custom.policy.as_str() {
            "stochastic-optimal" | "deterministic-fixed" => {}
            other => {
                return Err(ConfigError(format!(
                    "custom.policy: unknown policy `{other}`; expected \
                     `stochastic-optimal` or `deterministic-fixed`"
                )))
            }
        }
        self.params
            .validate()
            .map_err(|e| ConfigError(format!("params: {e}")))?;
        Ok(())
    }
}

/// A configuration problem, phrased to name the offending key.
#[derive(Debug)]
pub struct ConfigError(pub String);

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl std::error::Error for ConfigError {}

const TOP_LEVEL_KEYS: &[&str] = &[
    "scenario",
    "seed",
    "trajectories",
    "report_periods",
    "fast",
    "svg",
    "quantiles",
    "grid",
    "export",
    "custom",
    "params",
];

/// Load the configuration: file (when given), then `--set` pairs.
pub fn load(path: Option<&Path>, sets: &[String]) -> Result<RunConfig, ConfigError> {
    let mut value = match path {
        Some(p) => {
            let text = fs::read_to_string(p)
                .map_err(|e| ConfigError(format!("cannot read config {}: {e}", p.display())))?;
            // Validate the file on its own first: parsing from text keeps
            // line/column positions in the diagnostics.
            toml::from_str::<RunConfig>(&text)
                .map_err(|e| ConfigError(format!("config {}: {e}", p.display())))?;
            text.parse::<toml::Table>()
                .map_err(|e| ConfigError(format!("config {}: {e}", p.display())))?
        }
        None => toml::Table::new(),
    };

    for pair in sets {
        apply_set(&mut value, pair)?;
    }

    let cfg: RunConfig = toml::Value::Table(value)
        .try_into()
        .map_err(|e| ConfigError(format!("invalid configuration: {e}")))?;
    cfg.validate()?;
    Ok(cfg)
}

/// Apply one `key=value` override. Dashes normalize to underscores; a
/// dotted key addresses nested tables; a bare key that is not a top-level
/// field is looked up under `params`.
fn apply_set(root: &mut toml::Table, pair: &str) -> Result<(), ConfigError> {
    let (key, raw) = pair
        .split_once('=')
        .ok_or_else(|| ConfigError(format!("--set `{pair}`: expected key=value")))?;
    let normalized = key.trim().replace('-', "_");
    if normalized.is_empty() {
        return Err(ConfigError(format!("--set `{pair}`: empty key")));
    }
    let mut segments: Vec<&str> = normalized.split('.').collect();
    if segments.iter().any(|s| s.is_empty()) {
        return Err(ConfigError(format!("--set `{pair}`: empty key segment")));
    }
    let prefixed;
    if segments.len() == 1 && !TOP_LEVEL_KEYS.contains(&segments[0]) {
        prefixed = format!("params.{}", segments[0]);
        segments = prefixed.split('.').collect();
    }

    let mut table = root;
    for seg in &segments[..segments.len() - 1] {
        table = table
            .entry(seg.to_string())
            .or_insert_with(|| toml::Value::Table(toml::Table::new()))
            .as_table_mut()
            .ok_or_else(|| {
                ConfigError(format!("--set `{pair}`: `{seg}` is not a table of keys"))
            })?;
    }
    table.insert(segments[segments.len() - 1].to_string(), parse_value(raw));
    Ok(())
}

/// Parse a `--set` value as TOML (numbers, booleans, arrays, quoted
/// strings); anything that does not parse is taken as a bare string.
fn parse_value(raw: &str) -> toml::Value {
    format!("v = {raw}")
        .parse::<toml::Table>()
        .ok()
        .and_then(|mut t| t.remove("v"))
        .unwrap_or_else(|| toml::Value::String(raw.trim().to_string()))
}
