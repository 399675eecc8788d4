//! Stochastic DICE climate-economy model: calibration, equations, a finite
//! horizon dynamic-programming solver over a tensor-product state grid, and a
//! forward Monte Carlo simulator for regime-switching output shocks.
//!
//! The crate is organized bottom-up:
//!
//! - [`params`] / [`state`] / [`exogenous`]: calibration, state/control
//!   types, and the deterministic driver paths.
//! - [`model`]: the period equations and one-step state transition.
//! - [`reference`]: direct trajectory optimization of the shock-free model,
//!   used for grid calibration, fixed-policy simulation, and as an
//!   independent check on the dynamic-programming solver.
//! - [`grid`] / [`solver`]: discretization, multilinear interpolation, and
//!   backward value iteration.
//! - [`simulate`]: forward Monte Carlo under a chosen policy source plus
//!   quantile-band summarization.
//! - [`output`]: CSV export of trajectories, bands, and solver tables.

pub mod error;
pub mod exogenous;
pub mod golden;
pub mod grid;
pub mod model;
pub mod output;
pub mod params;
pub mod reference;
pub mod simulate;
pub mod solver;
pub mod state;
pub mod trajectory;

pub use error::{Error, Result};
pub use exogenous::{build_exogenous_paths, ExogenousPaths};
pub use grid::{Grid, GridCounts, PeriodRanges};
pub use output::{
    quantile_label, write_all_band_csvs, write_band_csv, write_policy_table_csv,
    write_reference_csv, write_trajectories_csv, write_value_table_csv,
};
pub use params::{ModelParams, ShockSpec};
pub use reference::{
    grid_ranges_from_reference, solve_deterministic, ReferenceOptions, ReferenceTrajectory,
};
pub use simulate::{
    quantile_bands, simulate_trajectories, Bands, BandSeries, PolicyInput, PolicySource,
    ScenarioConfig, ScenarioId,
};
pub use solver::{
    backward_induction, expected_continuation, optimize_controls, DpSolution, PolicyEntry,
    PolicyTable, SolveDiagnostics, SolverOptions, ValueTable,
};
pub use state::{Controls, Regime, StateVector};
pub use trajectory::{derived_outputs, OutputVar, Trajectory};
