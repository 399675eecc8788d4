use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::params::ModelParams;

/// Precomputed deterministic driver sequences, each of length N + 1.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExogenousPaths {
    /// Population, billions.
    pub l: Vec<f64>,
    /// Baseline total factor productivity (the path A_t follows when shocks
    /// are transitory).
    pub a_base: Vec<f64>,
    /// Industrial emission intensity.
    pub sigma: Vec<f64>,
    /// Land-use emissions, GtCO2/yr.
    pub e_land: Vec<f64>,
    /// Exogenous radiative forcing, W/m^2.
    pub f_ex: Vec<f64>,
}

impl ExogenousPaths {
    /// Number of entries (N + 1).
    pub fn len(&self) -> usize {
        self.l.len()
    }

    pub fn is_empty(&self) -> bool {
        self.l.is_empty()
    }
}

/// Evaluate every exogenous recursion for t = 0..=N.
pub fn build_exogenous_paths(params: &ModelParams) -> Result<ExogenousPaths> {
    params.validate()?;
    let n = params.n_periods;
    let delta = params.delta_years;

    let pop = &params.population;
    let mut l = Vec::with_capacity(n + 1);
    l.push(pop.l0);
    for t in 1..=n {
        let prev = l[t - 1];
        l.push(prev * (pop.asymptote / prev).powf(pop.exponent));
    }

    let mut a_base = Vec::with_capacity(n + 1);
    a_base.push(params.productivity.a0);
    for t in 1..=n {
        a_base.push(a_base[t - 1] * (1.0 + params.growth_a(t - 1)));
    }

    let ei = &params.emission_intensity;
    let mut sigma = Vec::with_capacity(n + 1);
    let mut g = ei.g0;
    sigma.push(params.sigma0());
    for t in 1..=n {
        sigma.push(sigma[t - 1] * (g * delta).exp());
        g *= (1.0 - ei.decay).powf(delta);
    }

    let land = &params.land_emissions;
    let e_land: Vec<f64> = (0..=n)
        .map(|t| land.e0 * (1.0 - land.decay).powi(t as i32))
        .collect();

    let cl = &params.climate;
    let f_ex: Vec<f64> = (0..=n)
        .map(|t| {
            if t < cl.f_ex_ramp {
                cl.f_ex0 + (cl.f_ex1 - cl.f_ex0) * t as f64 / cl.f_ex_ramp as f64
            } else {
                cl.f_ex1
            }
        })
        .collect();

    let paths = ExogenousPaths {
        l,
        a_base,
        sigma,
        e_land,
        f_ex,
    };
    for (name, series) in [
        ("l", &paths.l),
        ("a_base", &paths.a_base),
        ("sigma", &paths.sigma),
        ("e_land", &paths.e_land),
        ("f_ex", &paths.f_ex),
    ] {
        if series.iter().any(|v| !v.is_finite()) {
            return Err(Error::Domain {
                op: "build_exogenous_paths",
                reason: format!("non-finite value in path `{name}`"),
            });
        }
    }
    Ok(paths)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn paths_n(n: usize) -> ExogenousPaths {
        let params = ModelParams {
            n_periods: n,
            ..ModelParams::default()
        };
        build_exogenous_paths(&params).unwrap()
    }

    #[test]
    fn initial_values() {
        let p = paths_n(80);
        assert_eq!(p.l[0], 7.403);
        assert_eq!(p.a_base[0], 5.115);
        assert_relative_eq!(p.sigma[0], 0.3503200273611179, max_relative = 1e-15);
        assert_eq!(p.e_land[0], 2.6);
        assert_eq!(p.f_ex[0], 0.5);
        assert_eq!(p.len(), 81);
    }

    #[test]
    fn first_step_of_each_recursion() {
        let p = paths_n(80);
        assert_relative_eq!(p.l[1], 7.853090847672712, max_relative = 1e-14);
        assert_relative_eq!(p.a_base[1], 5.524495215651099, max_relative = 1e-14);
        assert_relative_eq!(p.sigma[1], 0.3246822788406103, max_relative = 1e-14);
        assert_relative_eq!(p.e_land[1], 2.6 * 0.885, max_relative = 1e-15);
    }

    #[test]
    fn sigma_growth_rate_decays() {
        // After one period g becomes g0 * 0.999^Delta; check via sigma[2].
        let p = paths_n(80);
        let g1 = -0.0152 * 0.999f64.powf(5.0);
        assert_relative_eq!(g1, -0.015124151848075985, max_relative = 1e-14);
        assert_relative_eq!(p.sigma[2], p.sigma[1] * (g1 * 5.0).exp(), max_relative = 1e-14);
    }

    #[test]
    fn population_rises_to_asymptote() {
        let p = paths_n(400);
        for t in 1..p.len() {
            // Strictly rising over the model horizon; far beyond it the series
            // converges onto the asymptote and may stall bitwise.
            if t <= 80 {
                assert!(p.l[t] > p.l[t - 1], "population must rise at t={t}");
            } else {
                assert!(p.l[t] >= p.l[t - 1], "population must not fall at t={t}");
            }
            assert!(p.l[t] < 11.5 + 1e-12);
        }
        assert_relative_eq!(p.l[400], 11.5, max_relative = 1e-6);
    }

    #[test]
    fn productivity_rises_and_intensity_falls() {
        let p = paths_n(80);
        for t in 1..p.len() {
            assert!(p.a_base[t] > p.a_base[t - 1]);
            assert!(p.sigma[t] < p.sigma[t - 1]);
        }
    }

    #[test]
    fn exogenous_forcing_ramp_is_continuous() {
        let p = paths_n(80);
        // Value the ramp formula would give exactly at the switch period
        // equals the plateau.
        let ramp_at_switch = 0.5 + (1.0 - 0.5) * 17.0 / 17.0;
        assert_eq!(ramp_at_switch, p.f_ex[17]);
        assert_eq!(p.f_ex[16], 0.5 + 16.0 / 34.0);
        assert_eq!(p.f_ex[40], 1.0);
    }

    #[test]
    fn rejects_degenerate_horizon() {
        let params = ModelParams {
            n_periods: 0,
            ..ModelParams::default()
        };
        assert!(build_exogenous_paths(&params).is_err());
    }
}
