//! Potential theory on a finite landscape: equilibrium potentials,
//! capacities, a priori bounds, the reduced prefactor Θ and hitting times.

mod bounds;
mod capacity;
pub mod linsolve;
mod metastable;
mod theta;

use serde::{Deserialize, Serialize};

pub use bounds::{apriori, capacity_bracket, Apriori, Sandwich};
pub use capacity::{
    capacity, equilibrium_potential, mean_hitting_time, mean_time_from_capacity, path_capacity, Capacity,
    HittingTimes, PotentialField,
};
pub use linsolve::{Method, SolveInfo, SolverOptions};
pub use metastable::{decay_rate, metastable_pair_ratio, triviality_profile, PairRatio, TrivialityRow};
pub use theta::{theta_quotient, ThetaReport};

use crate::landscape::Level;

/// A positive quantity held as `mantissa · e^{log_scale}`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Scaled {
    pub mantissa: f64,
    pub log_scale: f64,
}

impl Scaled {
    pub fn new(mantissa: f64, log_scale: f64) -> Self {
        Self { mantissa, log_scale }
    }

    pub fn ln(&self) -> f64 {
        self.mantissa.ln() + self.log_scale
    }

    /// May underflow or overflow; prefer [`Scaled::ln`] for comparisons.
    pub fn value(&self) -> f64 {
        self.mantissa * self.log_scale.exp()
    }

    /// The mantissa expressed at another scale.
    pub fn at_scale(&self, log_scale: f64) -> f64 {
        self.mantissa * (self.log_scale - log_scale).exp()
    }

    pub fn plus(&self, other: &Scaled) -> Scaled {
        Scaled::new(self.mantissa + other.at_scale(self.log_scale), self.log_scale)
    }
}

/// `exp(−β (level − reference) / denom)`.
#[inline]
pub fn weight(beta: f64, level: Level, reference: Level, denom: i64) -> f64 {
    (-beta * (level as f64 - reference as f64) / denom as f64).exp()
}

/// `−β · level / denom`, the log of the scale attached to `reference`.
#[inline]
pub fn log_scale(beta: f64, reference: Level, denom: i64) -> f64 {
    -beta * reference as f64 / denom as f64
}
