//! Finite-horizon backward value iteration over the tensor grid.
//!
//! The terminal value is identically zero. Sweeping backward, every node's
//! value is the maximum over (mitigation rate, savings rate) of period
//! utility plus the discounted regime-expectation of the next period's
//! interpolated value table.
//!
//! The inner loop exploits the transition structure: with the node state
//! fixed, only next-period capital and atmospheric carbon depend on the
//! controls, while productivity, the two ocean carbon boxes, and both
//! temperatures are already determined. The successor value table is
//! therefore pre-collapsed onto the (K, M_AT) plane once per node — a
//! partial multilinear interpolation over the fixed dimensions, mixed across
//! regimes by the transition probabilities — after which each candidate
//! control pair costs a single bilinear lookup. The collapse is exact: it
//! evaluates the same multilinear interpolant, factored dimension by
//! dimension.

use std::time::Instant;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::exogenous::ExogenousPaths;
use crate::golden::golden_max;
use crate::grid::{Grid, PeriodGrid, MAX_DIMS};
use crate::model::{self, K_FLOOR, Q_FLOOR};
use crate::params::{ModelParams, ShockSpec};
use crate::state::{Controls, Regime, StateVector};

/// Inner-optimizer tuning.
#[derive(Debug, Clone)]
pub struct SolverOptions {
    /// Bracket tolerance of each 1-D golden-section search.
    pub golden_tol: f64,
    /// Cap on (mu, s) alternation rounds per node.
    pub max_alternations: usize,
    /// Lattice size of the coarse fallback scan (per control).
    pub fallback_scan: usize,
    /// Step of the local-maximum verification probe.
    pub perturbation: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            golden_tol: 1e-8,
            max_alternations: 100,
            fallback_scan: 17,
            perturbation: 1e-4,
        }
    }
}

/// Per-period value arrays. Each period holds one flat slab per regime,
/// normal first: index = regime * slab_len + grid flat index.
#[derive(Debug, Clone)]
pub struct ValueTable {
    periods: Vec<Vec<f64>>,
}

impl ValueTable {
    /// Values for period `t`, both regime slabs concatenated.
    pub fn period(&self, t: usize) -> &[f64] {
        &self.periods[t]
    }

    /// Values for one regime slab at period `t`.
    pub fn slab(&self, t: usize, regime: Regime) -> &[f64] {
        let half = self.periods[t].len() / 2;
        &self.periods[t][regime.index() * half..(regime.index() + 1) * half]
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }
}

/// Optimal controls and attained value at one grid node.
#[derive(Debug, Clone, Copy)]
pub struct PolicyEntry {
    pub mu: f64,
    pub s: f64,
    pub c: f64,
    pub value: f64,
}

/// Per-period policy arrays for decision periods t = 0..N, indexed like the
/// value slabs.
#[derive(Debug, Clone)]
pub struct PolicyTable {
    periods: Vec<Vec<PolicyEntry>>,
}

impl PolicyTable {
    pub fn period(&self, t: usize) -> &[PolicyEntry] {
        &self.periods[t]
    }

    /// Policy entries for one regime slab at period `t`.
    pub fn slab(&self, t: usize, regime: Regime) -> &[PolicyEntry] {
        let half = self.periods[t].len() / 2;
        &self.periods[t][regime.index() * half..(regime.index() + 1) * half]
    }

    pub fn len(&self) -> usize {
        self.periods.len()
    }

    pub fn is_empty(&self) -> bool {
        self.periods.is_empty()
    }
}

/// Counters and timings from a backward sweep.
#[derive(Debug, Clone, Default)]
pub struct SolveDiagnostics {
    /// Wall-clock seconds spent per period, index t.
    pub period_seconds: Vec<f64>,
    /// Nodes where the golden search failed and the coarse scan engaged.
    pub fallback_nodes: usize,
    /// Nodes where the perturbation check found an improvement and the
    /// search was restarted.
    pub perturbation_restarts: usize,
}

/// Result of a backward sweep.
#[derive(Debug, Clone)]
pub struct DpSolution {
    pub values: ValueTable,
    pub policy: PolicyTable,
    pub diagnostics: SolveDiagnostics,
}

/// Control-independent quantities of one period shared by every node.
struct PeriodCtx {
    t: usize,
    delta: f64,
    disc: f64,
    l: f64,
    sigma: f64,
    e_land: f64,
    /// l^(1 - gamma), hoisted out of the production function.
    l_pow: f64,
    gamma: f64,
    /// sigma_t * backstop_t; the abatement share is sb * mu^theta2 / (1000 theta2).
    sb: f64,
    theta2: f64,
    cost_denom: f64,
    pi2: f64,
    /// (1 - delta_K)^Delta.
    k_keep: f64,
    /// Delta * beta conversion of emissions into atmospheric carbon.
    d_beta: f64,
    alpha: f64,
    /// Delta * L / (1 - alpha) (unused in the log branch).
    util_coef: f64,
    log_utility: bool,
    phi_m: [[f64; 3]; 3],
    phi_t: [[f64; 2]; 2],
    xi1: f64,
    trans: [[f64; 2]; 2],
    mu_bounds: (f64, f64),
    s_bounds: (f64, f64),
}

impl PeriodCtx {
    fn new(params: &ModelParams, paths: &ExogenousPaths, shock: &ShockSpec, t: usize) -> PeriodCtx {
        let l = paths.l[t];
        let alpha = params.preferences.alpha;
        let gamma = params.economy.gamma;
        let theta2 = params.abatement.theta2;
        PeriodCtx {
            t,
            delta: params.delta_years,
            disc: params.discount_factor(),
            l,
            sigma: paths.sigma[t],
            e_land: paths.e_land[t],
            l_pow: l.powf(1.0 - gamma),
            gamma,
            sb: paths.sigma[t] * params.backstop(t),
            theta2,
            cost_denom: 1000.0 * theta2,
            pi2: params.damage.pi2,
            k_keep: (1.0 - params.economy.delta_k).powf(params.delta_years),
            d_beta: params.delta_years * params.carbon_cycle.beta,
            alpha,
            util_coef: params.delta_years * l / (1.0 - alpha),
            log_utility: (alpha - 1.0).abs() < 1e-12,
            phi_m: params.phi_m(),
            phi_t: params.phi_t(),
            xi1: params.climate.xi1,
            trans: model::shock_transition_matrix(shock, params),
            mu_bounds: params.mu_bounds(t),
            s_bounds: (params.savings.s_min, params.savings.s_max),
        }
    }
}

/// Reusable per-worker buffers for the node collapse.
#[derive(Default)]
struct Scratch {
    corner_w: Vec<f64>,
    corner_off: Vec<usize>,
    collapsed: Vec<f64>,
}

/// Everything needed to price a (mu, s) candidate at one node: precomputed
/// node constants plus the successor value table collapsed onto the
/// (K', M_AT') plane.
struct NodeEval<'a> {
    ctx: &'a PeriodCtx,
    /// Gross output at this node's regime.
    y: f64,
    /// Damage share pi2 * T_AT^2.
    dmg: f64,
    /// Capital surviving depreciation.
    k_dec: f64,
    /// Atmospheric carbon next period before the emission inflow.
    m_at_passive: f64,
    k_axis: &'a crate::grid::Axis,
    mat_axis: &'a crate::grid::Axis,
    mat_n: usize,
    collapsed: &'a [f64],
}

impl NodeEval<'_> {
    fn net_output(&self, mu: f64) -> f64 {
        let share = self.ctx.sb * mu.powf(self.ctx.theta2) / self.ctx.cost_denom;
        let omega = 1.0 - share - self.dmg;
        (omega * self.y).max(Q_FLOOR)
    }

    fn utility(&self, c: f64) -> f64 {
        let per_capita = c / self.ctx.l;
        if self.ctx.log_utility {
            self.ctx.delta * self.ctx.l * per_capita.ln()
        } else {
            self.ctx.util_coef * (per_capita.powf(1.0 - self.ctx.alpha) - 1.0)
        }
    }

    /// Expected continuation value at the successor implied by (mu, s),
    /// via bilinear lookup in the collapsed table.
    fn continuation(&self, mu: f64, q: f64, c: f64) -> f64 {
        let k_next = (self.k_dec + self.ctx.delta * (q - c)).max(K_FLOOR);
        let e = (1.0 - mu) * self.ctx.sigma * self.y + self.ctx.e_land;
        let m_at_next = self.m_at_passive + self.ctx.d_beta * e;

        // Below-range capital extends the first cell linearly (matching the
        // grid's interpolation rule) so dis-saving past the box is charged
        // its marginal value instead of being refunded by the clamp.
        let pk = self.k_axis.locate_extend_low(k_next);
        let pm = self.mat_axis.locate(m_at_next);
        let base = pk.cell * self.mat_n + pm.cell;
        let c00 = self.collapsed[base];
        let c01 = self.collapsed[base + 1];
        let c10 = self.collapsed[base + self.mat_n];
        let c11 = self.collapsed[base + self.mat_n + 1];
        (1.0 - pk.frac) * ((1.0 - pm.frac) * c00 + pm.frac * c01)
            + pk.frac * ((1.0 - pm.frac) * c10 + pm.frac * c11)
    }

    /// Bellman objective of a candidate control pair.
    fn value(&self, mu: f64, s: f64) -> f64 {
        let q = self.net_output(mu);
        let c = (1.0 - s) * q;
        self.utility(c) + self.ctx.disc * self.continuation(mu, q, c)
    }
}

/// Collapse the successor value table (both regime slabs, mixed by the
/// transition probabilities of `regime`) onto the full (K, M_AT) node plane
/// of `next_grid`, with all other successor coordinates fixed.
#[allow(clippy::too_many_arguments)]
fn collapse_continuation(
    scratch: &mut Scratch,
    next_grid: &PeriodGrid,
    v_next: &[f64],
    regime: Regime,
    trans: &[[f64; 2]; 2],
    include_a: bool,
    a_next: f64,
    m_up_next: f64,
    m_lo_next: f64,
    temp_next: &[f64; 2],
) -> Result<()> {
    let d = next_grid.dims();
    let slab = next_grid.slab_len();
    if v_next.len() != 2 * slab {
        return Err(Error::Grid(format!(
            "successor table has {} entries, expected {}",
            v_next.len(),
            2 * slab
        )));
    }
    let (k_dim, mat_dim) = if include_a { (1, 2) } else { (0, 1) };
    let strides = next_grid.strides();

    // Locate every control-independent successor coordinate on its axis.
    let mut cells = [0usize; MAX_DIMS];
    let mut fracs = [0.0f64; MAX_DIMS];
    let mut fixed_dims = [0usize; MAX_DIMS];
    let mut nf = 0;
    for dim in 0..d {
        if dim == k_dim || dim == mat_dim {
            continue;
        }
        let coord = match (include_a, dim) {
            (true, 0) => a_next,
            (true, 3) | (false, 2) => m_up_next,
            (true, 4) | (false, 3) => m_lo_next,
            (true, 5) | (false, 4) => temp_next[0],
            (true, 6) | (false, 5) => temp_next[1],
            _ => unreachable!("dimension {dim} is control-dependent"),
        };
        if !coord.is_finite() {
            return Err(Error::NonFinite("collapse_continuation"));
        }
        let pos = next_grid.axis(dim).locate(coord);
        cells[nf] = pos.cell * strides[dim];
        fracs[nf] = pos.frac;
        fixed_dims[nf] = strides[dim];
        nf += 1;
    }

    // Corner weights and offsets over the fixed dimensions.
    scratch.corner_w.clear();
    scratch.corner_off.clear();
    for corner in 0..1usize << nf {
        let mut w = 1.0;
        let mut off = 0usize;
        for j in 0..nf {
            if corner >> j & 1 == 1 {
                w *= fracs[j];
                off += cells[j] + fixed_dims[j];
            } else {
                w *= 1.0 - fracs[j];
                off += cells[j];
            }
        }
        scratch.corner_w.push(w);
        scratch.corner_off.push(off);
    }

    let row = &trans[regime.index()];
    let (v0, v1) = v_next.split_at(slab);
    let k_n = next_grid.axis(k_dim).len();
    let mat_n = next_grid.axis(mat_dim).len();
    let (sk, sm) = (strides[k_dim], strides[mat_dim]);
    scratch.collapsed.clear();
    scratch.collapsed.reserve(k_n * mat_n);
    for ki in 0..k_n {
        for mi in 0..mat_n {
            let base = ki * sk + mi * sm;
            let mut acc = 0.0;
            for (w, off) in scratch.corner_w.iter().zip(&scratch.corner_off) {
                let idx = base + off;
                acc += w * (row[0] * v0[idx] + row[1] * v1[idx]);
            }
            scratch.collapsed.push(acc);
        }
    }
    Ok(())
}

/// Outcome of one node optimization.
struct NodeOutcome {
    entry: PolicyEntry,
    fallback: bool,
    restarts: usize,
}

/// Maximize the Bellman objective at one node state.
#[allow(clippy::too_many_arguments)]
fn optimize_node(
    scratch: &mut Scratch,
    ctx: &PeriodCtx,
    state: &StateVector,
    next_grid: &PeriodGrid,
    v_next: &[f64],
    include_a: bool,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
    opts: &SolverOptions,
    warm: Option<(f64, f64)>,
) -> Result<NodeOutcome> {
    // Control-independent successor coordinates.
    let passive = model::passive_carbon(&state.m, &ctx.phi_m);
    let forcing = model::radiative_forcing(state.m[0], ctx.t, paths, params)?;
    let temp_next = model::temperature_update(&state.temp, forcing, &ctx.phi_t, ctx.xi1);
    let a_next = model::productivity_update(state.a, state.regime, ctx.t, paths, params, shock);
    collapse_continuation(
        scratch,
        next_grid,
        v_next,
        state.regime,
        &ctx.trans,
        include_a,
        a_next,
        passive[1],
        passive[2],
        &temp_next,
    )?;

    let chi = shock.chi(state.regime);
    let (k_dim, mat_dim) = if include_a { (1, 2) } else { (0, 1) };
    let eval = NodeEval {
        ctx,
        y: (1.0 - chi) * state.a * state.k.powf(ctx.gamma) * ctx.l_pow,
        dmg: ctx.pi2 * state.temp[0] * state.temp[0],
        k_dec: state.k * ctx.k_keep,
        m_at_passive: passive[0],
        k_axis: next_grid.axis(k_dim),
        mat_axis: next_grid.axis(mat_dim),
        mat_n: next_grid.axis(mat_dim).len(),
        collapsed: &scratch.collapsed,
    };

    let (mu_lo, mu_hi) = ctx.mu_bounds;
    let (s_lo, s_hi) = ctx.s_bounds;
    let center = (0.5 * (mu_lo + mu_hi), 0.5 * (s_lo + s_hi));
    let (mut mu, mut s) = warm
        .map(|(m, sv)| (m.clamp(mu_lo, mu_hi), sv.clamp(s_lo, s_hi)))
        .unwrap_or(center);

    let mut value = f64::NEG_INFINITY;
    let mut restarts = 0usize;
    loop {
        for _ in 0..opts.max_alternations {
            let (prev_mu, prev_s) = (mu, s);
            let rm = golden_max(|m| eval.value(m, s), mu_lo, mu_hi, opts.golden_tol);
            mu = rm.x;
            let rs = golden_max(|sv| eval.value(mu, sv), s_lo, s_hi, opts.golden_tol);
            s = rs.x;
            value = rs.value;
            if (mu - prev_mu).abs() <= opts.golden_tol && (s - prev_s).abs() <= opts.golden_tol {
                break;
            }
        }

        // Local-maximum verification: a small box move must not improve.
        let tol = 1e-12 * value.abs().max(1.0);
        let probes = [
            ((mu - opts.perturbation).clamp(mu_lo, mu_hi), s),
            ((mu + opts.perturbation).clamp(mu_lo, mu_hi), s),
            (mu, (s - opts.perturbation).clamp(s_lo, s_hi)),
            (mu, (s + opts.perturbation).clamp(s_lo, s_hi)),
        ];
        let better = probes
            .into_iter()
            .map(|(m, sv)| (eval.value(m, sv), m, sv))
            .filter(|(v, _, _)| *v > value + tol)
            .max_by(|a, b| a.0.total_cmp(&b.0));
        match better {
            Some((v, m, sv)) if restarts < 3 => {
                restarts += 1;
                mu = m;
                s = sv;
                value = v;
            }
            _ => break,
        }
    }

    // Degenerate searches fall back to a coarse lattice scan.
    let mut fallback = false;
    if !value.is_finite() {
        fallback = true;
        let n = opts.fallback_scan.max(2);
        for i in 0..n {
            for j in 0..n {
                let m = mu_lo + (mu_hi - mu_lo) * i as f64 / (n - 1) as f64;
                let sv = s_lo + (s_hi - s_lo) * j as f64 / (n - 1) as f64;
                let v = eval.value(m, sv);
                if v > value || !value.is_finite() {
                    value = v;
                    mu = m;
                    s = sv;
                }
            }
        }
        let rm = golden_max(|m| eval.value(m, s), mu_lo, mu_hi, opts.golden_tol);
        if rm.value > value {
            mu = rm.x;
            value = rm.value;
        }
        let rs = golden_max(|sv| eval.value(mu, sv), s_lo, s_hi, opts.golden_tol);
        if rs.value > value {
            s = rs.x;
            value = rs.value;
        }
    }
    if !value.is_finite() {
        return Err(Error::Solver {
            period: ctx.t,
            reason: format!("non-finite node value at state {state:?}"),
        });
    }

    let q = eval.net_output(mu);
    Ok(NodeOutcome {
        entry: PolicyEntry {
            mu,
            s,
            c: (1.0 - s) * q,
            value,
        },
        fallback,
        restarts,
    })
}

/// Optimal controls for an arbitrary (off-grid) state, maximizing against
/// the interpolated successor value table. This is the same optimization the
/// backward sweep performs at grid nodes; the forward simulator uses it to
/// re-optimize at realized states.
#[allow(clippy::too_many_arguments)]
pub fn optimize_controls(
    state: &StateVector,
    t: usize,
    v_next: &[f64],
    next_grid: &PeriodGrid,
    include_a: bool,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
    opts: &SolverOptions,
    warm: Option<(f64, f64)>,
) -> Result<PolicyEntry> {
    let ctx = PeriodCtx::new(params, paths, shock, t);
    let mut scratch = Scratch::default();
    let outcome = optimize_node(
        &mut scratch,
        &ctx,
        state,
        next_grid,
        v_next,
        include_a,
        paths,
        params,
        shock,
        opts,
        warm,
    )?;
    Ok(outcome.entry)
}

/// Expected next-period value for explicit controls: enumerate successor
/// regimes, weight by the transition row of the current regime, interpolate
/// the successor table at the (control-dependent) successor state. This is
/// the reference implementation of the continuation term; the sweep itself
/// uses the algebraically identical collapsed form.
#[allow(clippy::too_many_arguments)]
pub fn expected_continuation(
    v_next: &[f64],
    next_grid: &PeriodGrid,
    state: &StateVector,
    controls: &Controls,
    t: usize,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
) -> Result<f64> {
    let slab = next_grid.slab_len();
    if v_next.len() != 2 * slab {
        return Err(Error::Grid(format!(
            "successor table has {} entries, expected {}",
            v_next.len(),
            2 * slab
        )));
    }
    let include_a = next_grid.dims() == MAX_DIMS;
    let next = model::step_state(state, controls, Regime::Normal, t, paths, params, shock)?;
    let x = next.coords(include_a);
    let row = model::shock_transition_matrix(shock, params)[state.regime.index()];
    let v0 = next_grid.interpolate(&v_next[..slab], &x)?;
    let v1 = next_grid.interpolate(&v_next[slab..], &x)?;
    Ok(row[0] * v0 + row[1] * v1)
}

/// Backward induction over the whole horizon: terminal values are zero, and
/// each earlier period is filled by optimizing every node against the frozen
/// successor table. Node work parallelizes freely; results do not depend on
/// the worker count.
pub fn backward_induction(
    grid: &Grid,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
    opts: &SolverOptions,
) -> Result<DpSolution> {
    params.validate()?;
    shock.validate()?;
    let n = params.n_periods;
    if grid.len() != n + 1 || paths.len() != n + 1 {
        return Err(Error::Grid(format!(
            "horizon mismatch: {} grid periods, {} path entries, N = {n}",
            grid.len(),
            paths.len()
        )));
    }
    if grid.persistent() != shock.persistent {
        return Err(Error::Grid(
            "grid and shock specification disagree on whether productivity is a state".to_string(),
        ));
    }
    let include_a = grid.persistent();

    let mut values: Vec<Vec<f64>> = vec![Vec::new(); n + 1];
    values[n] = vec![0.0; grid.nodes_per_period(n)];
    let mut policies: Vec<Vec<PolicyEntry>> = vec![Vec::new(); n];
    let mut diagnostics = SolveDiagnostics {
        period_seconds: vec![0.0; n],
        ..SolveDiagnostics::default()
    };

    for t in (0..n).rev() {
        let tick = Instant::now();
        let ctx = PeriodCtx::new(params, paths, shock, t);
        let next_grid = grid.period(t + 1);
        let v_next = &values[t + 1];
        let warm_src = if t + 1 < n { Some(&policies[t + 1]) } else { None };
        let slab = grid.period(t).slab_len();
        let a_base_t = paths.a_base[t];

        let outcomes: Vec<NodeOutcome> = (0..2 * slab)
            .into_par_iter()
            .map_init(Scratch::default, |scratch, node| {
                let regime = if node < slab { Regime::Normal } else { Regime::Stressed };
                let state = grid.state_at(t, node % slab, regime, a_base_t);
                let warm = warm_src.map(|p| {
                    let e = &p[node];
                    (e.mu, e.s)
                });
                optimize_node(
                    scratch, &ctx, &state, next_grid, v_next, include_a, paths, params, shock,
                    opts, warm,
                )
            })
            .collect::<Result<_>>()?;

        let mut vals = Vec::with_capacity(outcomes.len());
        let mut entries = Vec::with_capacity(outcomes.len());
        for o in outcomes {
            vals.push(o.entry.value);
            entries.push(o.entry);
            diagnostics.fallback_nodes += o.fallback as usize;
            diagnostics.perturbation_restarts += o.restarts;
        }
        values[t] = vals;
        policies[t] = entries;
        diagnostics.period_seconds[t] = tick.elapsed().as_secs_f64();
        log::info!(
            "period {t}: {} nodes optimized in {:.2}s",
            2 * slab,
            diagnostics.period_seconds[t]
        );
    }

    Ok(DpSolution {
        values: ValueTable { periods: values },
        policy: PolicyTable { periods: policies },
        diagnostics,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exogenous::build_exogenous_paths;
    use crate::grid::GridCounts;
    use crate::reference::{grid_ranges_from_reference, solve_deterministic, ReferenceOptions};
    use approx::assert_relative_eq;

    struct Fixture {
        params: ModelParams,
        paths: ExogenousPaths,
        grid: Grid,
        shock: ShockSpec,
    }

    fn fixture(n: usize, shock: ShockSpec) -> Fixture {
        let params = ModelParams {
            n_periods: n,
            ..ModelParams::default()
        };
        let reference = solve_deterministic(
            &params,
            &ReferenceOptions {
                restarts: 2,
                max_sweeps: 40,
                ..ReferenceOptions::default()
            },
        )
        .unwrap();
        let ranges = grid_ranges_from_reference(&reference).unwrap();
        let grid = Grid::build(&ranges, &GridCounts::fast(), shock.persistent).unwrap();
        let paths = build_exogenous_paths(&params).unwrap();
        Fixture {
            params,
            paths,
            grid,
            shock,
        }
    }

    fn a1_shock() -> ShockSpec {
        ShockSpec {
            p_annual: 0.01,
            chi_stressed: 0.05,
            phi_stressed: 0.0,
            persistent: false,
        }
    }

    #[test]
    fn terminal_period_consumes_maximally_and_abates_nothing() {
        let f = fixture(3, a1_shock());
        let sol = backward_induction(&f.grid, &f.paths, &f.params, &f.shock, &SolverOptions::default())
            .unwrap();
        let t = 2; // last decision period
        for entry in sol.policy.period(t) {
            assert_eq!(entry.mu, 0.0);
            assert_eq!(entry.s, f.params.savings.s_min);
        }
    }

    #[test]
    fn terminal_values_are_zero_and_all_finite() {
        let f = fixture(3, a1_shock());
        let sol = backward_induction(&f.grid, &f.paths, &f.params, &f.shock, &SolverOptions::default())
            .unwrap();
        assert!(sol.values.period(3).iter().all(|v| *v == 0.0));
        for t in 0..=3 {
            assert!(sol.values.period(t).iter().all(|v| v.is_finite()));
        }
        assert_eq!(sol.values.len(), 4);
        assert_eq!(sol.policy.len(), 3);
    }

    #[test]
    fn collapsed_continuation_matches_reference_continuation() {
        // The sweep's collapsed interpolation and the explicit two-regime
        // interpolation must price identical controls identically.
        let f = fixture(4, a1_shock());
        let sol = backward_induction(&f.grid, &f.paths, &f.params, &f.shock, &SolverOptions::default())
            .unwrap();
        for t in 0..3 {
            let slab = f.grid.period(t).slab_len();
            for node in [0usize, slab / 3, slab - 1, slab + 1, 2 * slab - 1] {
                let regime = if node < slab { Regime::Normal } else { Regime::Stressed };
                let state = f.grid.state_at(t, node % slab, regime, f.paths.a_base[t]);
                let e = &sol.policy.period(t)[node];
                let direct = expected_continuation(
                    sol.values.period(t + 1),
                    f.grid.period(t + 1),
                    &state,
                    &Controls { mu: e.mu, c: e.c },
                    t,
                    &f.paths,
                    &f.params,
                    &f.shock,
                )
                .unwrap();
                let bellman = crate::model::utility(e.c, f.paths.l[t], &f.params).unwrap()
                    + f.params.discount_factor() * direct;
                assert_relative_eq!(bellman, e.value, max_relative = 1e-9);
            }
        }
    }

    #[test]
    fn optimizer_beats_box_center_everywhere() {
        let f = fixture(3, a1_shock());
        let sol = backward_induction(&f.grid, &f.paths, &f.params, &f.shock, &SolverOptions::default())
            .unwrap();
        let t = 0;
        let slab = f.grid.period(t).slab_len();
        let (mu_lo, mu_hi) = f.params.mu_bounds(t);
        let center_mu = 0.5 * (mu_lo + mu_hi);
        let center_s = 0.5 * (f.params.savings.s_min + f.params.savings.s_max);
        for node in (0..2 * slab).step_by(97) {
            let regime = if node < slab { Regime::Normal } else { Regime::Stressed };
            let state = f.grid.state_at(t, node % slab, regime, f.paths.a_base[t]);
            let q = model::net_output(&state, center_mu, t, &f.paths, &f.params, &f.shock).unwrap();
            let c = (1.0 - center_s) * q;
            let center_value = crate::model::utility(c, f.paths.l[t], &f.params).unwrap()
                + f.params.discount_factor()
                    * expected_continuation(
                        sol.values.period(t + 1),
                        f.grid.period(t + 1),
                        &state,
                        &Controls { mu: center_mu, c },
                        t,
                        &f.paths,
                        &f.params,
                        &f.shock,
                    )
                    .unwrap();
            assert!(
                sol.policy.period(t)[node].value >= center_value - 1e-9,
                "node {node}"
            );
        }
    }

    #[test]
    fn optimize_controls_matches_dense_scan_on_synthetic_table() {
        // Smooth synthetic successor values, quadratic in capital: the
        // golden search must land within one cell of a dense 201x201 scan.
        let f = fixture(2, ShockSpec::none());
        let next_grid = f.grid.period(1);
        let slab = next_grid.slab_len();
        let k_axis = next_grid.axis(0);
        let v_next: Vec<f64> = (0..2 * slab)
            .map(|node| {
                let k = k_axis.node(next_grid.multi_index(node % slab)[0]);
                let kn = (k - k_axis.lo()) / (k_axis.hi() - k_axis.lo());
                120.0 * kn - 80.0 * (kn - 0.55) * (kn - 0.55)
            })
            .collect();
        let state = f.grid.state_at(0, slab / 2, Regime::Normal, f.paths.a_base[0]);
        let opts = SolverOptions::default();
        let entry = optimize_controls(
            &state, 0, &v_next, next_grid, false, &f.paths, &f.params, &f.shock, &opts, None,
        )
        .unwrap();

        let ctx = PeriodCtx::new(&f.params, &f.paths, &f.shock, 0);
        let mut scratch = Scratch::default();
        // Rebuild the evaluator directly to run the dense scan.
        let passive = model::passive_carbon(&state.m, &ctx.phi_m);
        let forcing = model::radiative_forcing(state.m[0], 0, &f.paths, &f.params).unwrap();
        let temp_next = model::temperature_update(&state.temp, forcing, &ctx.phi_t, ctx.xi1);
        collapse_continuation(
            &mut scratch,
            next_grid,
            &v_next,
            Regime::Normal,
            &ctx.trans,
            false,
            f.paths.a_base[1],
            passive[1],
            passive[2],
            &temp_next,
        )
        .unwrap();
        let eval = NodeEval {
            ctx: &ctx,
            y: (1.0 - 0.0) * state.a * state.k.powf(ctx.gamma) * ctx.l_pow,
            dmg: ctx.pi2 * state.temp[0] * state.temp[0],
            k_dec: state.k * ctx.k_keep,
            m_at_passive: passive[0],
            k_axis: next_grid.axis(0),
            mat_axis: next_grid.axis(1),
            mat_n: next_grid.axis(1).len(),
            collapsed: &scratch.collapsed,
        };
        let (mu_lo, mu_hi) = ctx.mu_bounds;
        let (s_lo, s_hi) = ctx.s_bounds;
        let n = 201;
        let mut best = (f64::NEG_INFINITY, 0.0, 0.0);
        for i in 0..n {
            for j in 0..n {
                let m = mu_lo + (mu_hi - mu_lo) * i as f64 / (n - 1) as f64;
                let sv = s_lo + (s_hi - s_lo) * j as f64 / (n - 1) as f64;
                let v = eval.value(m, sv);
                if v > best.0 {
                    best = (v, m, sv);
                }
            }
        }
        let cell_mu = (mu_hi - mu_lo) / (n - 1) as f64;
        let cell_s = (s_hi - s_lo) / (n - 1) as f64;
        assert!(
            (entry.mu - best.1).abs() <= cell_mu + 1e-12,
            "mu {} vs scan {}",
            entry.mu,
            best.1
        );
        assert!(
            (entry.s - best.2).abs() <= cell_s + 1e-12,
            "s {} vs scan {}",
            entry.s,
            best.2
        );
        assert!(entry.value >= best.0 - 1e-9);
    }

    #[test]
    fn zero_probability_regime_collapses_expectation_to_single_branch() {
        let f = fixture(2, ShockSpec::none());
        let next_grid = f.grid.period(1);
        let slab = next_grid.slab_len();
        // Distinct slabs so a leak from the wrong regime would be visible.
        let mut v_next = vec![1.0; 2 * slab];
        for v in v_next.iter_mut().skip(slab) {
            *v = 500.0;
        }
        let state = f.grid.state_at(0, 0, Regime::Normal, f.paths.a_base[0]);
        let c = Controls { mu: 0.1, c: 60.0 };
        let got = expected_continuation(
            &v_next, next_grid, &state, &c, 0, &f.paths, &f.params, &f.shock,
        )
        .unwrap();
        // A leak from the stressed slab would pull the result toward 500.
        assert_relative_eq!(got, 1.0, max_relative = 1e-12);

        // From the stressed regime the successor is surely normal.
        let stressed = StateVector {
            regime: Regime::Stressed,
            ..state
        };
        let got = expected_continuation(
            &v_next, next_grid, &stressed, &c, 0, &f.paths, &f.params, &a1_shock(),
        )
        .unwrap();
        assert_relative_eq!(got, 1.0, max_relative = 1e-12);
    }

    #[test]
    fn generic_expectation_is_probability_weighted_sum() {
        let f = fixture(2, a1_shock());
        let next_grid = f.grid.period(1);
        let slab = next_grid.slab_len();
        let v_next: Vec<f64> = (0..2 * slab).map(|i| i as f64 * 0.25).collect();
        let state = f.grid.state_at(0, slab / 2, Regime::Normal, f.paths.a_base[0]);
        let c = Controls { mu: 0.2, c: 55.0 };
        let got = expected_continuation(
            &v_next, next_grid, &state, &c, 0, &f.paths, &f.params, &f.shock,
        )
        .unwrap();

        let next =
            model::step_state(&state, &c, Regime::Normal, 0, &f.paths, &f.params, &f.shock).unwrap();
        let x = next.coords(false);
        let q = 0.99f64.powi(5);
        let by_hand = q * next_grid.interpolate(&v_next[..slab], &x).unwrap()
            + (1.0 - q) * next_grid.interpolate(&v_next[slab..], &x).unwrap();
        assert_relative_eq!(got, by_hand, max_relative = 1e-14);
    }

    #[test]
    fn values_nondecreasing_in_capital() {
        let f = fixture(4, a1_shock());
        let sol = backward_induction(&f.grid, &f.paths, &f.params, &f.shock, &SolverOptions::default())
            .unwrap();
        for t in 0..=3 {
            let g = f.grid.period(t);
            let k_n = g.axis(0).len();
            let vals = sol.values.period(t);
            let slab = g.slab_len();
            for start in 0..2 * slab {
                let idx = g.multi_index(start % slab);
                if idx[0] + 1 >= k_n {
                    continue;
                }
                let stride = g.strides()[0];
                let lower = vals[start];
                let upper = vals[start + stride];
                assert!(
                    upper >= lower - 1e-7,
                    "value fell in K at t={t}, node {start}: {lower} -> {upper}"
                );
            }
        }
    }

    #[test]
    fn horizon_mismatch_rejected() {
        let f = fixture(3, a1_shock());
        let short_params = ModelParams {
            n_periods: 2,
            ..f.params.clone()
        };
        let err = backward_induction(&f.grid, &f.paths, &short_params, &f.shock, &SolverOptions::default());
        assert!(err.is_err());

        let persistent_shock = ShockSpec {
            persistent: true,
            ..a1_shock()
        };
        let err = backward_induction(&f.grid, &f.paths, &f.params, &persistent_shock, &SolverOptions::default());
        assert!(err.is_err());
    }

    #[test]
    fn sweep_is_deterministic_across_repeat_runs() {
        let f = fixture(3, a1_shock());
        let a = backward_induction(&f.grid, &f.paths, &f.params, &f.shock, &SolverOptions::default())
            .unwrap();
        let b = backward_induction(&f.grid, &f.paths, &f.params, &f.shock, &SolverOptions::default())
            .unwrap();
        for t in 0..=3 {
            assert_eq!(a.values.period(t), b.values.period(t));
        }
    }
}
