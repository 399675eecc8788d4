use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::state::Regime;

/// Preference block: risk aversion and pure time discounting.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Preferences {
    /// Coefficient of relative risk aversion (elasticity of marginal utility).
    pub alpha: f64,
    /// Annual utility discount rate.
    pub rho: f64,
}

impl Default for Preferences {
    fn default() -> Self {
        Preferences {
            alpha: 1.45,
            rho: 0.015,
        }
    }
}

/// Production-side constants and the initial capital stock.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Economy {
    /// Capital elasticity in the Cobb-Douglas production function.
    pub gamma: f64,
    /// Annual capital depreciation rate.
    pub delta_k: f64,
    /// Initial capital, trillion 2010 USD.
    pub k0: f64,
}

impl Default for Economy {
    fn default() -> Self {
        Economy {
            gamma: 0.3,
            delta_k: 0.1,
            k0: 223.0,
        }
    }
}

/// Population recursion L_{t+1} = L_t (asymptote / L_t)^exponent, billions.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Population {
    pub l0: f64,
    pub asymptote: f64,
    pub exponent: f64,
}

impl Default for Population {
    fn default() -> Self {
        Population {
            l0: 7.403,
            asymptote: 11.5,
            exponent: 0.134,
        }
    }
}

/// Total factor productivity recursion A_{t+1} = A_t (1 + g_A(t)).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Productivity {
    pub a0: f64,
    /// Initial annualized growth coefficient.
    pub g0: f64,
    /// Annual decay rate inside the growth exponential.
    pub decay: f64,
}

impl Default for Productivity {
    fn default() -> Self {
        Productivity {
            a0: 5.115,
            g0: 0.076,
            decay: 0.005,
        }
    }
}

/// Industrial emission intensity sigma_t (kgCO2 per output dollar, scaled so
/// that sigma * Y is GtCO2/yr). The initial level is calibrated from initial
/// emissions, initial gross output, and the initial mitigation rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmissionIntensity {
    /// Initial industrial emissions, GtCO2/yr.
    pub e0: f64,
    /// Initial gross output used in the calibration, trillion USD/yr.
    pub q0: f64,
    /// Initial mitigation rate used in the calibration.
    pub mu0: f64,
    /// Initial annual growth rate of sigma (negative: intensity declines).
    pub g0: f64,
    /// Annual decay applied to the growth rate itself.
    pub decay: f64,
}

impl Default for EmissionIntensity {
    fn default() -> Self {
        EmissionIntensity {
            e0: 35.85,
            q0: 105.5,
            mu0: 0.03,
            g0: -0.0152,
            decay: 0.001,
        }
    }
}

/// Land-use emissions E_land_t = e0 (1 - decay)^t, GtCO2/yr.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LandEmissions {
    pub e0: f64,
    pub decay: f64,
}

impl Default for LandEmissions {
    fn default() -> Self {
        LandEmissions {
            e0: 2.6,
            decay: 0.115,
        }
    }
}

/// Three-box carbon cycle (atmosphere / upper ocean / deep ocean).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CarbonCycle {
    /// Per-period transfer fraction atmosphere -> upper ocean.
    pub phi_at_up: f64,
    /// Per-period transfer fraction upper ocean -> deep ocean.
    pub phi_up_lo: f64,
    /// Equilibrium masses [M_AT, M_UP, M_LO], GtC; fix the reverse flows.
    pub m_eq: [f64; 3],
    /// Conversion from emitted GtCO2 to atmospheric GtC (1/3.666).
    pub beta: f64,
    /// Initial carbon masses, GtC.
    pub m0: [f64; 3],
}

impl Default for CarbonCycle {
    fn default() -> Self {
        CarbonCycle {
            phi_at_up: 0.12,
            phi_up_lo: 0.007,
            m_eq: [588.0, 360.0, 1720.0],
            beta: 1.0 / 3.666,
            m0: [851.0, 460.0, 1740.0],
        }
    }
}

/// Two-layer temperature dynamics and radiative forcing constants.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Climate {
    /// Forcing-to-atmospheric-temperature speed (per period).
    pub xi1: f64,
    /// Atmosphere -> ocean heat exchange coefficient.
    pub xi3: f64,
    /// Ocean warming speed.
    pub xi4: f64,
    /// Forcing of a CO2 doubling, W/m^2.
    pub eta: f64,
    /// Equilibrium warming per CO2 doubling, degrees C.
    pub t2x: f64,
    /// Initial temperatures [T_AT, T_LO], degrees C above 1900.
    pub t0: [f64; 2],
    /// Exogenous forcing start level, W/m^2.
    pub f_ex0: f64,
    /// Exogenous forcing plateau level, W/m^2.
    pub f_ex1: f64,
    /// Periods over which exogenous forcing ramps linearly to the plateau.
    pub f_ex_ramp: usize,
}

impl Default for Climate {
    fn default() -> Self {
        Climate {
            xi1: 0.1005,
            xi3: 0.088,
            xi4: 0.025,
            eta: 3.6813,
            t2x: 3.1,
            t0: [0.85, 0.0068],
            f_ex0: 0.5,
            f_ex1: 1.0,
            f_ex_ramp: 17,
        }
    }
}

/// Quadratic damage function coefficient.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Damage {
    pub pi2: f64,
}

impl Default for Damage {
    fn default() -> Self {
        Damage { pi2: 0.00236 }
    }
}

/// Abatement cost curve and mitigation-rate bounds.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Abatement {
    /// Abatement cost exponent.
    pub theta2: f64,
    /// Initial backstop price, USD per ton CO2.
    pub backstop0: f64,
    /// Per-period decline rate of the backstop price.
    pub backstop_decline: f64,
    /// Upper bound on mu before negative-emission technologies are allowed.
    pub mu_max: f64,
    /// Upper bound on mu afterwards.
    pub mu_max_late: f64,
    /// Calendar year from which the relaxed bound applies.
    pub mu_late_year: f64,
}

impl Default for Abatement {
    fn default() -> Self {
        Abatement {
            theta2: 2.6,
            backstop0: 550.0,
            backstop_decline: 0.025,
            mu_max: 1.0,
            mu_max_late: 1.2,
            mu_late_year: 2160.0,
        }
    }
}

/// Bounds for the savings-rate control s = 1 - c/Q.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SavingsBounds {
    pub s_min: f64,
    pub s_max: f64,
}

impl Default for SavingsBounds {
    fn default() -> Self {
        SavingsBounds {
            s_min: 0.05,
            s_max: 0.60,
        }
    }
}

/// Complete model calibration. `Default` reproduces the DICE-2016 values; any
/// field can be overridden via the configuration file or CLI.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelParams {
    /// Number of decision periods N (the horizon); states run t = 0..=N.
    pub n_periods: usize,
    /// Years per period (Delta).
    pub delta_years: f64,
    /// Calendar year of t = 0.
    pub base_year: f64,
    pub preferences: Preferences,
    pub economy: Economy,
    pub population: Population,
    pub productivity: Productivity,
    pub emission_intensity: EmissionIntensity,
    pub land_emissions: LandEmissions,
    pub carbon_cycle: CarbonCycle,
    pub climate: Climate,
    pub damage: Damage,
    pub abatement: Abatement,
    pub savings: SavingsBounds,
}

impl Default for ModelParams {
    fn default() -> Self {
        ModelParams {
            n_periods: 80,
            delta_years: 5.0,
            base_year: 2015.0,
            preferences: Preferences::default(),
            economy: Economy::default(),
            population: Population::default(),
            productivity: Productivity::default(),
            emission_intensity: EmissionIntensity::default(),
            land_emissions: LandEmissions::default(),
            carbon_cycle: CarbonCycle::default(),
            climate: Climate::default(),
            damage: Damage::default(),
            abatement: Abatement::default(),
            savings: SavingsBounds::default(),
        }
    }
}

impl ModelParams {
    /// Continuously compounded utility discount rate ln(1 + rho).
    pub fn rho_tilde(&self) -> f64 {
        (1.0 + self.preferences.rho).ln()
    }

    /// Per-period discount factor e^{-rho_tilde * Delta} = (1 + rho)^{-Delta}.
    pub fn discount_factor(&self) -> f64 {
        (1.0 + self.preferences.rho).powf(-self.delta_years)
    }

    /// Calendar year of period t.
    pub fn year(&self, t: usize) -> f64 {
        self.base_year + self.delta_years * t as f64
    }

    /// Initial emission intensity sigma_0 = e0 / (q0 (1 - mu0)).
    pub fn sigma0(&self) -> f64 {
        let e = &self.emission_intensity;
        e.e0 / (e.q0 * (1.0 - e.mu0))
    }

    /// Productivity growth over the period starting at index t:
    /// g_A(t) = x / (1 - x) with x = g0 * exp(-decay * (t + 1) * Delta).
    pub fn growth_a(&self, t: usize) -> f64 {
        let p = &self.productivity;
        let x = p.g0 * (-p.decay * (t as f64 + 1.0) * self.delta_years).exp();
        x / (1.0 - x)
    }

    /// Backstop price at period t, USD per ton CO2.
    pub fn backstop(&self, t: usize) -> f64 {
        self.abatement.backstop0 * (1.0 - self.abatement.backstop_decline).powi(t as i32)
    }

    /// Inclusive bounds for the mitigation rate at period t.
    pub fn mu_bounds(&self, t: usize) -> (f64, f64) {
        if self.year(t) < self.abatement.mu_late_year {
            (0.0, self.abatement.mu_max)
        } else {
            (0.0, self.abatement.mu_max_late)
        }
    }

    /// Per-period carbon transition matrix; each column sums to one so total
    /// carbon mass is conserved absent emissions.
    pub fn phi_m(&self) -> [[f64; 3]; 3] {
        let c = &self.carbon_cycle;
        let back_up = c.phi_at_up * c.m_eq[0] / c.m_eq[1];
        let back_lo = c.phi_up_lo * c.m_eq[1] / c.m_eq[2];
        [
            [1.0 - c.phi_at_up, back_up, 0.0],
            [c.phi_at_up, 1.0 - back_up - c.phi_up_lo, back_lo],
            [0.0, c.phi_up_lo, 1.0 - back_lo],
        ]
    }

    /// Per-period temperature transition matrix; the forcing term xi1 * F is
    /// added to the first component separately in the state step.
    pub fn phi_t(&self) -> [[f64; 2]; 2] {
        let c = &self.climate;
        let xi2 = c.eta / c.t2x;
        [
            [1.0 - c.xi1 * xi2 - c.xi1 * c.xi3, c.xi1 * c.xi3],
            [c.xi4, 1.0 - c.xi4],
        ]
    }

    pub fn validate(&self) -> Result<()> {
        fn finite(name: &'static str, v: f64) -> Result<f64> {
            if v.is_finite() {
                Ok(v)
            } else {
                Err(Error::param(name, "must be finite"))
            }
        }
        fn positive(name: &'static str, v: f64) -> Result<()> {
            if finite(name, v)? > 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be > 0, got {v}")))
            }
        }
        fn nonneg(name: &'static str, v: f64) -> Result<()> {
            if finite(name, v)? >= 0.0 {
                Ok(())
            } else {
                Err(Error::param(name, format!("must be >= 0, got {v}")))
            }
        }

        if self.n_periods < 1 {
            return Err(Error::param("n_periods", "horizon must be at least 1"));
        }
        positive("delta_years", self.delta_years)?;
        nonneg("preferences.alpha", self.preferences.alpha)?;
        if finite("preferences.rho", self.preferences.rho)? <= -1.0 {
            return Err(Error::param("preferences.rho", "must exceed -1"));
        }
        let g = self.economy.gamma;
        if !(finite("economy.gamma", g)? > 0.0 && g < 1.0) {
            return Err(Error::param("economy.gamma", format!("must lie in (0, 1), got {g}")));
        }
        nonneg("economy.delta_k", self.economy.delta_k)?;
        if self.economy.delta_k > 1.0 {
            return Err(Error::param("economy.delta_k", "must be <= 1"));
        }
        positive("economy.k0", self.economy.k0)?;
        positive("population.l0", self.population.l0)?;
        positive("population.asymptote", self.population.asymptote)?;
        positive("population.exponent", self.population.exponent)?;
        positive("productivity.a0", self.productivity.a0)?;
        finite("productivity.g0", self.productivity.g0)?;
        finite("productivity.decay", self.productivity.decay)?;
        positive("emission_intensity.e0", self.emission_intensity.e0)?;
        positive("emission_intensity.q0", self.emission_intensity.q0)?;
        if self.emission_intensity.mu0 >= 1.0 {
            return Err(Error::param("emission_intensity.mu0", "must be < 1"));
        }
        finite("emission_intensity.g0", self.emission_intensity.g0)?;
        nonneg("land_emissions.e0", self.land_emissions.e0)?;
        nonneg("carbon_cycle.phi_at_up", self.carbon_cycle.phi_at_up)?;
        nonneg("carbon_cycle.phi_up_lo", self.carbon_cycle.phi_up_lo)?;
        for (i, m) in self.carbon_cycle.m_eq.iter().enumerate() {
            if !(m.is_finite() && *m > 0.0) {
                return Err(Error::param("carbon_cycle.m_eq", format!("component {i} must be > 0")));
            }
        }
        for (i, m) in self.carbon_cycle.m0.iter().enumerate() {
            if !(m.is_finite() && *m > 0.0) {
                return Err(Error::param("carbon_cycle.m0", format!("component {i} must be > 0")));
            }
        }
        positive("carbon_cycle.beta", self.carbon_cycle.beta)?;
        nonneg("climate.xi1", self.climate.xi1)?;
        nonneg("climate.xi3", self.climate.xi3)?;
        nonneg("climate.xi4", self.climate.xi4)?;
        nonneg("climate.eta", self.climate.eta)?;
        positive("climate.t2x", self.climate.t2x)?;
        finite("climate.t0", self.climate.t0[0])?;
        finite("climate.t0", self.climate.t0[1])?;
        nonneg("damage.pi2", self.damage.pi2)?;
        nonneg("abatement.theta2", self.abatement.theta2)?;
        nonneg("abatement.backstop0", self.abatement.backstop0)?;
        if !(self.abatement.backstop_decline >= 0.0 && self.abatement.backstop_decline < 1.0) {
            return Err(Error::param("abatement.backstop_decline", "must lie in [0, 1)"));
        }
        nonneg("abatement.mu_max", self.abatement.mu_max)?;
        nonneg("abatement.mu_max_late", self.abatement.mu_max_late)?;
        let s = &self.savings;
        if !(s.s_min.is_finite() && s.s_max.is_finite() && 0.0 <= s.s_min && s.s_min < s.s_max && s.s_max < 1.0)
        {
            return Err(Error::param(
                "savings",
                format!("need 0 <= s_min < s_max < 1, got [{}, {}]", s.s_min, s.s_max),
            ));
        }
        Ok(())
    }
}

/// Regime-shock specification: how often the stressed regime arrives and how
/// hard it hits output (transitory) and productivity (persistent).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ShockSpec {
    /// Annual probability of entering the stressed regime.
    pub p_annual: f64,
    /// Fraction of gross output lost while stressed.
    pub chi_stressed: f64,
    /// Fraction of productivity growth permanently lost after a stressed
    /// period; only meaningful when `persistent` is set.
    pub phi_stressed: f64,
    /// Whether productivity is a state variable eroded by shocks.
    pub persistent: bool,
}

impl Default for ShockSpec {
    fn default() -> Self {
        ShockSpec::none()
    }
}

impl ShockSpec {
    /// No shocks at all: the deterministic model.
    pub fn none() -> Self {
        ShockSpec {
            p_annual: 0.0,
            chi_stressed: 0.0,
            phi_stressed: 0.0,
            persistent: false,
        }
    }

    /// Gross-output reduction in the given regime.
    pub fn chi(&self, regime: Regime) -> f64 {
        match regime {
            Regime::Normal => 0.0,
            Regime::Stressed => self.chi_stressed,
        }
    }

    /// Productivity reduction applied when stepping out of the given regime.
    pub fn phi(&self, regime: Regime) -> f64 {
        match regime {
            Regime::Normal => 0.0,
            Regime::Stressed => self.phi_stressed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.p_annual.is_finite() && (0.0..=1.0).contains(&self.p_annual)) {
            return Err(Error::param("shock.p_annual", "must lie in [0, 1]"));
        }
        if !(self.chi_stressed.is_finite() && (0.0..1.0).contains(&self.chi_stressed)) {
            return Err(Error::param("shock.chi_stressed", "must lie in [0, 1)"));
        }
        if !(self.phi_stressed.is_finite() && (0.0..1.0).contains(&self.phi_stressed)) {
            return Err(Error::param("shock.phi_stressed", "must lie in [0, 1)"));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn defaults_validate() {
        ModelParams::default().validate().unwrap();
        ShockSpec::none().validate().unwrap();
    }

    #[test]
    fn discounting_identities() {
        let p = ModelParams::default();
        assert_relative_eq!(p.rho_tilde(), 0.014888612493750654, max_relative = 1e-15);
        // e^{-rho_tilde * Delta} and (1+rho)^{-Delta} are the same number.
        assert_relative_eq!(p.discount_factor(), 0.9282603254056394, max_relative = 1e-15);
        assert_relative_eq!(
            p.discount_factor(),
            (-p.rho_tilde() * p.delta_years).exp(),
            max_relative = 1e-14
        );
    }

    #[test]
    fn sigma0_calibration() {
        let p = ModelParams::default();
        assert_relative_eq!(p.sigma0(), 0.3503200273611179, max_relative = 1e-15);
    }

    #[test]
    fn carbon_matrix_columns_sum_to_one_exactly() {
        let phi = ModelParams::default().phi_m();
        for col in 0..3 {
            let sum: f64 = (0..3).map(|row| phi[row][col]).sum();
            assert_eq!(sum, 1.0, "column {col} sums to {sum:e}");
        }
        // Spot-check the derived entries.
        assert_relative_eq!(phi[0][1], 0.196, max_relative = 1e-15);
        assert_relative_eq!(phi[1][1], 0.797, max_relative = 1e-15);
        assert_relative_eq!(phi[2][2], 1.0 - 0.007 * 360.0 / 1720.0, max_relative = 1e-15);
    }

    #[test]
    fn temperature_matrix_entries() {
        let phi = ModelParams::default().phi_t();
        assert_relative_eq!(phi[0][0], 0.8718106290322581, max_relative = 1e-15);
        assert_relative_eq!(phi[0][1], 0.008844, max_relative = 1e-15);
        assert_eq!(phi[1][0], 0.025);
        assert_eq!(phi[1][1], 0.975);
    }

    #[test]
    fn mu_bounds_relax_from_configured_year() {
        let p = ModelParams::default();
        assert_eq!(p.mu_bounds(0), (0.0, 1.0));
        assert_eq!(p.mu_bounds(28), (0.0, 1.0)); // year 2155
        assert_eq!(p.mu_bounds(29), (0.0, 1.2)); // year 2160
        assert_eq!(p.mu_bounds(80), (0.0, 1.2));
    }

    #[test]
    fn backstop_declines_geometrically() {
        let p = ModelParams::default();
        assert_eq!(p.backstop(0), 550.0);
        assert_relative_eq!(p.backstop(1), 536.25, max_relative = 1e-15);
        assert_relative_eq!(p.backstop(10), 550.0 * 0.975f64.powi(10), max_relative = 1e-15);
    }

    #[test]
    fn toml_round_trip_preserves_params() {
        let p = ModelParams::default();
        let text = toml::to_string_pretty(&p).unwrap();
        let back: ModelParams = toml::from_str(&text).unwrap();
        assert_eq!(format!("{p:?}"), format!("{back:?}"));
    }

    #[test]
    fn partial_config_fills_defaults() {
        let p: ModelParams = toml::from_str("n_periods = 40\n[economy]\nk0 = 100.0\n").unwrap();
        assert_eq!(p.n_periods, 40);
        assert_eq!(p.economy.k0, 100.0);
        assert_eq!(p.economy.gamma, 0.3);
        assert_eq!(p.preferences.alpha, 1.45);
    }

    #[test]
    fn unknown_keys_are_rejected_with_key_name() {
        let err = toml::from_str::<ModelParams>("[economy]\ngama = 0.3\n").unwrap_err();
        assert!(err.to_string().contains("gama"), "diagnostic: {err}");
    }

    #[test]
    fn validation_catches_bad_fields() {
        let mut p = ModelParams::default();
        p.economy.gamma = 1.0;
        assert!(p.validate().is_err());

        let mut p = ModelParams::default();
        p.n_periods = 0;
        assert!(p.validate().is_err());

        let mut p = ModelParams::default();
        p.savings = SavingsBounds {
            s_min: 0.7,
            s_max: 0.6,
        };
        assert!(p.validate().is_err());

        let bad = ShockSpec {
            p_annual: 1.5,
            ..ShockSpec::none()
        };
        assert!(bad.validate().is_err());
    }
}
