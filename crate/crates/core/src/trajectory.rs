//! Time series produced by the reference solver and the Monte Carlo
//! simulator, plus the derived reporting variables layered on top of states
//! and controls.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exogenous::ExogenousPaths;
use crate::model;
use crate::params::{ModelParams, ShockSpec};
use crate::state::{Controls, StateVector};

/// One simulated or optimized path. States cover t = 0..=N; controls and the
/// control-derived series cover decision periods t = 0..N. The state-derived
/// series (damage fraction, forcing) cover t = 0..=N.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Trajectory {
    pub states: Vec<StateVector>,
    pub controls: Vec<Controls>,
    /// Savings rate applied at each decision period. When the trajectory was
    /// produced by a rate-parameterized policy this is the exact applied
    /// rate; otherwise it is reconstructed as 1 - c/Q.
    pub savings: Vec<f64>,
    /// Net output at each decision period.
    pub q: Vec<f64>,
    /// Emissions at each decision period, GtCO2/yr.
    pub e: Vec<f64>,
    /// Carbon price implied by the applied mitigation rate.
    pub price: Vec<f64>,
    /// Radiative forcing at each state.
    pub forcing: Vec<f64>,
    /// Damage share of output pi2 * T_AT^2 at each state.
    pub damage_frac: Vec<f64>,
}

impl Trajectory {
    /// Wrap raw states and controls; derived series start empty and are
    /// populated by [`derived_outputs`].
    pub fn from_states_controls(states: Vec<StateVector>, controls: Vec<Controls>) -> Trajectory {
        Trajectory {
            states,
            controls,
            savings: Vec::new(),
            q: Vec::new(),
            e: Vec::new(),
            price: Vec::new(),
            forcing: Vec::new(),
            damage_frac: Vec::new(),
        }
    }

    /// Number of decision periods.
    pub fn horizon(&self) -> usize {
        self.controls.len()
    }

    /// Discounted utility realized along the path.
    pub fn discounted_utility(&self, paths: &ExogenousPaths, params: &ModelParams) -> Result<f64> {
        let disc = params.discount_factor();
        let mut weight = 1.0;
        let mut total = 0.0;
        for (t, c) in self.controls.iter().enumerate() {
            total += weight * model::utility(c.c, paths.l[t], params)?;
            weight *= disc;
        }
        Ok(total)
    }
}

/// Compute the reporting series (savings rate, net output, emissions, carbon
/// price, forcing, damage fraction) from the stored states and controls. An
/// already-populated savings series is kept as-is so that rate-parameterized
/// policies stay bitwise exact; everything else is recomputed.
pub fn derived_outputs(
    traj: &mut Trajectory,
    paths: &ExogenousPaths,
    params: &ModelParams,
    shock: &ShockSpec,
) -> Result<()> {
    let n = traj.controls.len();
    if traj.states.len() != n + 1 {
        return Err(Error::Simulation(format!(
            "trajectory has {} states for {} decision periods",
            traj.states.len(),
            n
        )));
    }
    let fill_savings = traj.savings.is_empty();
    if !fill_savings && traj.savings.len() != n {
        return Err(Error::Simulation(format!(
            "savings series has {} entries for {} decision periods",
            traj.savings.len(),
            n
        )));
    }

    let mut savings = Vec::with_capacity(n);
    let mut q = Vec::with_capacity(n);
    let mut e = Vec::with_capacity(n);
    let mut price = Vec::with_capacity(n);
    for t in 0..n {
        let state = &traj.states[t];
        let c = &traj.controls[t];
        let qt = model::net_output(state, c.mu, t, paths, params, shock)?;
        q.push(qt);
        e.push(model::emissions(state, c.mu, t, paths, params, shock)?);
        price.push(model::carbon_price(c.mu, t, params));
        if fill_savings {
            savings.push(1.0 - c.c / qt);
        }
    }
    if fill_savings {
        traj.savings = savings;
    }
    traj.q = q;
    traj.e = e;
    traj.price = price;

    traj.forcing = traj
        .states
        .iter()
        .enumerate()
        .map(|(t, s)| model::radiative_forcing(s.m[0], t, paths, params))
        .collect::<Result<_>>()?;
    traj.damage_frac = traj
        .states
        .iter()
        .map(|s| params.damage.pi2 * s.temp[0] * s.temp[0])
        .collect();
    Ok(())
}

/// Reporting variables available on a trajectory. The first eleven are the
/// charted set; emissions and forcing are additionally exported in the long
/// CSV format.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum OutputVar {
    Miu,
    S,
    K,
    Ynet,
    Tatm,
    Tocean,
    Cprice,
    Damfct,
    Mat,
    Mu,
    Ml,
    Emissions,
    Forcing,
}

impl OutputVar {
    /// Column/file name.
    pub fn name(self) -> &'static str {
        match self {
            OutputVar::Miu => "MIU",
            OutputVar::S => "S",
            OutputVar::K => "K",
            OutputVar::Ynet => "YNET",
            OutputVar::Tatm => "TATM",
            OutputVar::Tocean => "TOCEAN",
            OutputVar::Cprice => "CPRICE",
            OutputVar::Damfct => "DAMFCT",
            OutputVar::Mat => "MAT",
            OutputVar::Mu => "MU",
            OutputVar::Ml => "ML",
            OutputVar::Emissions => "E",
            OutputVar::Forcing => "FORC",
        }
    }

    /// The eleven charted variables, in presentation order.
    pub fn charted() -> [OutputVar; 11] {
        [
            OutputVar::Miu,
            OutputVar::S,
            OutputVar::K,
            OutputVar::Ynet,
            OutputVar::Tatm,
            OutputVar::Tocean,
            OutputVar::Cprice,
            OutputVar::Damfct,
            OutputVar::Mat,
            OutputVar::Mu,
            OutputVar::Ml,
        ]
    }

    /// All exported variables.
    pub fn all() -> [OutputVar; 13] {
        [
            OutputVar::Miu,
            OutputVar::S,
            OutputVar::K,
            OutputVar::Ynet,
            OutputVar::Tatm,
            OutputVar::Tocean,
            OutputVar::Cprice,
            OutputVar::Damfct,
            OutputVar::Mat,
            OutputVar::Mu,
            OutputVar::Ml,
            OutputVar::Emissions,
            OutputVar::Forcing,
        ]
    }

    pub fn from_name(name: &str) -> Option<OutputVar> {
        OutputVar::all().into_iter().find(|v| v.name() == name)
    }

    /// Whether the variable is defined at every state period t = 0..=N (true)
    /// or only at decision periods t = 0..N (false).
    pub fn is_state_variable(self) -> bool {
        matches!(
            self,
            OutputVar::K
                | OutputVar::Tatm
                | OutputVar::Tocean
                | OutputVar::Damfct
                | OutputVar::Mat
                | OutputVar::Mu
                | OutputVar::Ml
                | OutputVar::Forcing
        )
    }

    /// Value of this variable at period `t`, if defined there.
    pub fn value(self, traj: &Trajectory, t: usize) -> Option<f64> {
        let state = traj.states.get(t);
        match self {
            OutputVar::Miu => traj.controls.get(t).map(|c| c.mu),
            OutputVar::S => traj.savings.get(t).copied(),
            OutputVar::K => state.map(|s| s.k),
            OutputVar::Ynet => traj.q.get(t).copied(),
            OutputVar::Tatm => state.map(|s| s.temp[0]),
            OutputVar::Tocean => state.map(|s| s.temp[1]),
            OutputVar::Cprice => traj.price.get(t).copied(),
            OutputVar::Damfct => traj.damage_frac.get(t).copied(),
            OutputVar::Mat => state.map(|s| s.m[0]),
            OutputVar::Mu => state.map(|s| s.m[1]),
            OutputVar::Ml => state.map(|s| s.m[2]),
            OutputVar::Emissions => traj.e.get(t).copied(),
            OutputVar::Forcing => traj.forcing.get(t).copied(),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::exogenous::build_exogenous_paths;
    use crate::state::Regime;
    use approx::assert_relative_eq;

    fn short_path() -> (ModelParams, ExogenousPaths, Trajectory) {
        let params = ModelParams {
            n_periods: 3,
            ..ModelParams::default()
        };
        let paths = build_exogenous_paths(&params).unwrap();
        let shock = ShockSpec::none();
        let mut states = vec![StateVector {
            a: params.productivity.a0,
            k: params.economy.k0,
            m: params.carbon_cycle.m0,
            temp: params.climate.t0,
            regime: Regime::Normal,
        }];
        let mut controls = Vec::new();
        for t in 0..3 {
            let q = model::net_output(&states[t], 0.1, t, &paths, &params, &shock).unwrap();
            let c = Controls { mu: 0.1, c: 0.75 * q };
            let next =
                model::step_state(&states[t], &c, Regime::Normal, t, &paths, &params, &shock).unwrap();
            states.push(next);
            controls.push(c);
        }
        (params, paths, Trajectory::from_states_controls(states, controls))
    }

    #[test]
    fn derived_outputs_fill_all_series() {
        let (params, paths, mut traj) = short_path();
        derived_outputs(&mut traj, &paths, &params, &ShockSpec::none()).unwrap();
        assert_eq!(traj.savings.len(), 3);
        assert_eq!(traj.q.len(), 3);
        assert_eq!(traj.forcing.len(), 4);
        assert_eq!(traj.damage_frac.len(), 4);
        // c was set to 0.75 Q, so the reconstructed savings rate is 0.25.
        for s in &traj.savings {
            assert_relative_eq!(*s, 0.25, max_relative = 1e-12);
        }
        // Damage fraction at T_AT = 2 would be 4 * pi2; check the formula at t=0.
        assert_relative_eq!(traj.damage_frac[0], 0.00236 * 0.85 * 0.85, max_relative = 1e-15);
    }

    #[test]
    fn consumption_equal_to_output_gives_zero_savings() {
        let (params, paths, mut traj) = short_path();
        // Set consumption equal to net output period by period, stepping as
        // we go so controls and states stay mutually consistent.
        for t in 0..traj.controls.len() {
            let q = model::net_output(&traj.states[t], traj.controls[t].mu, t, &paths, &params, &ShockSpec::none())
                .unwrap();
            traj.controls[t].c = q;
            traj.states[t + 1] = model::step_state(
                &traj.states[t],
                &traj.controls[t],
                Regime::Normal,
                t,
                &paths,
                &params,
                &ShockSpec::none(),
            )
            .unwrap();
        }
        derived_outputs(&mut traj, &paths, &params, &ShockSpec::none()).unwrap();
        for s in &traj.savings {
            assert_eq!(*s, 0.0);
        }
    }

    #[test]
    fn prefilled_savings_series_is_preserved_bitwise() {
        let (params, paths, mut traj) = short_path();
        traj.savings = vec![0.25, 0.25, 0.25];
        derived_outputs(&mut traj, &paths, &params, &ShockSpec::none()).unwrap();
        assert_eq!(traj.savings, vec![0.25, 0.25, 0.25]);
    }

    #[test]
    fn output_var_lookup_and_ranges() {
        let (params, paths, mut traj) = short_path();
        derived_outputs(&mut traj, &paths, &params, &ShockSpec::none()).unwrap();
        assert_eq!(OutputVar::from_name("TATM"), Some(OutputVar::Tatm));
        assert_eq!(OutputVar::from_name("nope"), None);
        // State variables extend one period past the controls.
        assert!(OutputVar::Tatm.value(&traj, 3).is_some());
        assert!(OutputVar::Miu.value(&traj, 3).is_none());
        assert!(OutputVar::Miu.value(&traj, 2).is_some());
        assert_eq!(OutputVar::K.value(&traj, 0), Some(223.0));
    }

    #[test]
    fn discounted_utility_matches_manual_sum() {
        let (params, paths, mut traj) = short_path();
        derived_outputs(&mut traj, &paths, &params, &ShockSpec::none()).unwrap();
        let disc = params.discount_factor();
        let mut expected = 0.0;
        for t in 0..3 {
            expected +=
                disc.powi(t as i32) * model::utility(traj.controls[t].c, paths.l[t], &params).unwrap();
        }
        assert_relative_eq!(
            traj.discounted_utility(&paths, &params).unwrap(),
            expected,
            max_relative = 1e-14
        );
    }

    #[test]
    fn mismatched_lengths_rejected() {
        let (params, paths, mut traj) = short_path();
        traj.states.pop();
        assert!(derived_outputs(&mut traj, &paths, &params, &ShockSpec::none()).is_err());
    }
}
