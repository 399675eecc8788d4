use serde::{Deserialize, Serialize};

use crate::params::ModelParams;

/// Output regime indicator: `Normal` leaves production untouched, `Stressed`
/// scales gross output down by the shock fraction chi (and, when shocks are
/// persistent, permanently knocks productivity down by phi on exit).
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Regime {
    Normal,
    Stressed,
}

impl Regime {
    /// Index used for transition-matrix rows and value-table slabs.
    pub fn index(self) -> usize {
        match self {
            Regime::Normal => 0,
            Regime::Stressed => 1,
        }
    }

    pub fn from_index(i: usize) -> Option<Regime> {
        match i {
            0 => Some(Regime::Normal),
            1 => Some(Regime::Stressed),
            _ => None,
        }
    }

    pub fn is_stressed(self) -> bool {
        self == Regime::Stressed
    }
}

/// Full model state at the start of a period.
///
/// `a` is total factor productivity. When shocks are transitory it simply
/// mirrors the exogenous baseline path; when shocks are persistent it is a
/// genuine state variable eroded by each stressed episode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StateVector {
    /// Total factor productivity.
    pub a: f64,
    /// Capital stock (trillion 2010 USD).
    pub k: f64,
    /// Carbon masses [atmosphere, upper ocean, lower ocean] (GtC).
    pub m: [f64; 3],
    /// Temperatures [atmosphere, lower ocean] (degrees C above 1900).
    pub temp: [f64; 2],
    /// Current output regime.
    pub regime: Regime,
}

impl StateVector {
    /// Calibrated 2015 state in the normal regime.
    pub fn initial(params: &ModelParams) -> StateVector {
        StateVector {
            a: params.productivity.a0,
            k: params.economy.k0,
            m: params.carbon_cycle.m0,
            temp: params.climate.t0,
            regime: Regime::Normal,
        }
    }

    pub fn m_at(&self) -> f64 {
        self.m[0]
    }

    pub fn t_at(&self) -> f64 {
        self.temp[0]
    }

    /// Continuous coordinates in canonical grid order, skipping or including
    /// productivity depending on whether it is a grid dimension.
    pub fn coords(&self, include_a: bool) -> Vec<f64> {
        let mut out = Vec::with_capacity(7);
        if include_a {
            out.push(self.a);
        }
        out.extend_from_slice(&[
            self.k,
            self.m[0],
            self.m[1],
            self.m[2],
            self.temp[0],
            self.temp[1],
        ]);
        out
    }

    pub fn is_finite(&self) -> bool {
        self.a.is_finite()
            && self.k.is_finite()
            && self.m.iter().all(|v| v.is_finite())
            && self.temp.iter().all(|v| v.is_finite())
    }
}

/// Controls chosen each period: abatement rate and aggregate consumption.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Controls {
    /// Emission control rate mu.
    pub mu: f64,
    /// Consumption (trillion 2010 USD over the period, annualized).
    pub c: f64,
}
