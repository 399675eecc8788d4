//! Model equations: production, damages, emissions, forcing, utility, and the
//! one-period state transition. Everything here is a pure function; solver and
//! simulator layers own all iteration and randomness.

use crate::error::{Error, Result};
use crate::exogenous::ExogenousPaths;
use crate::params::{ModelParams, ShockSpec};
use crate::state::{Controls, Regime, StateVector};

/// Net output is floored at this level so that consumption bounds and
/// log-utility stay well-defined at grid corners where the damage/abatement
/// factor could otherwise drive output non-positive.
pub const Q_FLOOR: f64 = 1e-6;

/// Capital is floored at this level in the state transition for the same
/// reason: extreme corners must stay numerically harmless.
pub const K_FLOOR: f64 = 1e-6;

/// Period utility of aggregate consumption `c` for population `l`, already
/// scaled by the period length.
pub fn utility(c: f64, l: f64, params: &ModelParams) -> Result<f64> {
    if !(c > 0.0 && c.is_finite()) {
        return Err(Error::domain("utility", format!("consumption must be > 0, got {c}")));
    }
    if !(l > 0.0 && l.is_finite()) {
        return Err(Error::domain("utility", format!("population must be > 0, got {l}")));
    }
    let alpha = params.preferences.alpha;
    let per_capita = c / l;
    let u = if (alpha - 1.0).abs() < 1e-12 {
        // Analytic limit of the CRRA form as alpha -> 1.
        params.delta_years * l * per_capita.ln()
    } else {
        params.delta_years * l / (1.0 - alpha) * (per_capita.powf(1.0 - alpha) - 1.0)
    };
    Ok(u)
}

/// Cobb-Douglas gross production (1 - chi) A K^gamma L^(1-gamma).
pub fn gross_output(a: f64, k: f64, l: f64, chi: f64, params: &ModelParams) -> Result<f64> {
    if !(a > 0.0 && k > 0.0 && l > 0.0) || !(a.is_finite() && k.is_finite() && l.is_finite()) {
        return Err(Error::domain(
            "gross_output",
            format!("inputs must be positive and finite, got a={a}, k={k}, l={l}"),
        ));
    }
    if !(0.0..1.0).contains(&chi) {
        return Err(Error::domain("gross_output", format!("chi must lie in [0, 1), got {chi}")));
    }
    let gamma = params.economy.gamma;
    Ok((1.0 - chi) * a * k.powf(gamma) * l.powf(1.0 - gamma))
}

/// Combined damage and abatement-cost factor multiplying gross output:
/// 1 - (abatement cost share) - (damage share). Can go negative for extreme
/// temperatures; callers decide how to handle that (net output floors it).
pub fn damage_abatement_factor(
    mu: f64,
    sigma_t: f64,
    t_at: f64,
    t: usize,
    params: &ModelParams,
) -> Result<f64> {
    if !(mu >= 0.0 && mu.is_finite()) {
        return Err(Error::domain(
            "damage_abatement_factor",
            format!("mitigation rate must be >= 0, got {mu}"),
        ));
    }
    let theta2 = params.abatement.theta2;
    let abatement_share = sigma_t * params.backstop(t) * mu.powf(theta2) / (1000.0 * theta2);
    let damage_share = params.damage.pi2 * t_at * t_at;
    Ok(1.0 - abatement_share - damage_share)
}

/// Output net of damages and abatement cost, floored at `Q_FLOOR`.
pub fn net_output(
    state: &StateVector,
    mu: f64,
    t: usize,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
) -> Result<f64> {
    let y = gross_output(state.a, state.k, paths.l[t], shock.chi(state.regime), params)?;
    let omega = damage_abatement_factor(mu, paths.sigma[t], state.temp[0], t, params)?;
    Ok((omega * y).max(Q_FLOOR))
}

/// Carbon emissions: unabated industrial emissions plus land use, GtCO2/yr.
/// The stressed regime reduces the industrial term through gross output.
pub fn emissions(
    state: &StateVector,
    mu: f64,
    t: usize,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
) -> Result<f64> {
    let y = gross_output(state.a, state.k, paths.l[t], shock.chi(state.regime), params)?;
    Ok((1.0 - mu) * paths.sigma[t] * y + paths.e_land[t])
}

/// Radiative forcing from the atmospheric carbon mass plus the exogenous
/// component.
pub fn radiative_forcing(m_at: f64, t: usize, paths: &ExogenousPaths, params: &ModelParams) -> Result<f64> {
    if !(m_at > 0.0 && m_at.is_finite()) {
        return Err(Error::domain(
            "radiative_forcing",
            format!("atmospheric carbon must be > 0, got {m_at}"),
        ));
    }
    Ok(params.climate.eta * (m_at / params.carbon_cycle.m_eq[0]).log2() + paths.f_ex[t])
}

/// Carbon price implied by the mitigation rate: backstop price times
/// mu^(theta2 - 1). Zero mitigation prices carbon at zero.
pub fn carbon_price(mu: f64, t: usize, params: &ModelParams) -> f64 {
    debug_assert!(mu >= 0.0, "carbon_price called with negative mu");
    params.backstop(t) * mu.powf(params.abatement.theta2 - 1.0)
}

/// Row-stochastic regime transition matrix over one period. Row 0 is the
/// normal regime: stay with probability q = (1 - p_annual)^Delta. Row 1 is
/// the stressed regime, which always reverts to normal.
pub fn shock_transition_matrix(spec: &ShockSpec, params: &ModelParams) -> [[f64; 2]; 2] {
    let q = (1.0 - spec.p_annual).powf(params.delta_years);
    [[q, 1.0 - q], [1.0, 0.0]]
}

/// Carbon masses transported by the cycle alone (no emission inflow).
pub(crate) fn passive_carbon(m: &[f64; 3], phi_m: &[[f64; 3]; 3]) -> [f64; 3] {
    let mut out = [0.0; 3];
    for (row, v) in out.iter_mut().enumerate() {
        *v = phi_m[row][0] * m[0] + phi_m[row][1] * m[1] + phi_m[row][2] * m[2];
    }
    out
}

/// Temperature pair after one period given current temperatures and the
/// current-period forcing.
pub(crate) fn temperature_update(temp: &[f64; 2], forcing: f64, phi_t: &[[f64; 2]; 2], xi1: f64) -> [f64; 2] {
    [
        phi_t[0][0] * temp[0] + phi_t[0][1] * temp[1] + xi1 * forcing,
        phi_t[1][0] * temp[0] + phi_t[1][1] * temp[1],
    ]
}

/// Productivity after one period. In persistent-shock configurations the
/// stressed regime permanently erodes the level; otherwise the baseline path
/// is followed regardless of history.
pub(crate) fn productivity_update(
    a: f64,
    regime: Regime,
    t: usize,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
) -> f64 {
    if shock.persistent {
        a * (1.0 + params.growth_a(t)) * (1.0 - shock.phi(regime))
    } else {
        paths.a_base[t + 1]
    }
}

/// Advance the state one period under the given controls, with the successor
/// regime chosen by the caller (sampled in simulation, enumerated in the
/// expectation of the Bellman step). All continuous disturbances are zero.
pub fn step_state(
    state: &StateVector,
    controls: &Controls,
    next_regime: Regime,
    t: usize,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
) -> Result<StateVector> {
    if t + 1 >= paths.len() {
        return Err(Error::domain(
            "step_state",
            format!("period {t} has no successor on a horizon of {} periods", paths.len() - 1),
        ));
    }
    if !state.is_finite() {
        return Err(Error::domain("step_state", "non-finite state"));
    }
    if !(controls.c > 0.0 && controls.c.is_finite() && controls.mu.is_finite()) {
        return Err(Error::domain(
            "step_state",
            format!("invalid controls mu={}, c={}", controls.mu, controls.c),
        ));
    }
    let delta = params.delta_years;

    let q = net_output(state, controls.mu, t, paths, params, shock)?;
    let k_next = (state.k * (1.0 - params.economy.delta_k).powf(delta) + delta * (q - controls.c))
        .max(K_FLOOR);

    let e = emissions(state, controls.mu, t, paths, params, shock)?;
    let mut m_next = passive_carbon(&state.m, &params.phi_m());
    m_next[0] += delta * params.carbon_cycle.beta * e;

    let f = radiative_forcing(state.m[0], t, paths, params)?;
    let temp_next = temperature_update(&state.temp, f, &params.phi_t(), params.climate.xi1);

    let next = StateVector {
        a: productivity_update(state.a, state.regime, t, paths, params, shock),
        k: k_next,
        m: m_next,
        temp: temp_next,
        regime: next_regime,
    };
    if !next.is_finite() {
        return Err(Error::NonFinite("step_state"));
    }
    Ok(next)
}
