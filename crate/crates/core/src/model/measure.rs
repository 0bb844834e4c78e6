use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum HorizonVariant {
    InfiniteHorizon,
    /// Consumption on `[0, T)` only.
    FiniteConsumption {
        horizon: f64,
    },
    /// Consumption on `[0, T)` plus `U(X_T)` at `T`.
    FiniteConsumptionTerminalWealth {
        horizon: f64,
    },
}

/// The discount measure `kappa` on `[0, inf]`, the density reciprocal `zeta`
/// turning deflators into the dual integrand, and the income cut-off, for the
/// three horizon variants. All three are written as infinite-horizon
/// problems so the same estimators serve each of them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiscountMeasure {
    pub variant: HorizonVariant,
    pub delta: f64,
}

impl DiscountMeasure {
    pub fn infinite(delta: f64) -> Self {
        DiscountMeasure {
            variant: HorizonVariant::InfiniteHorizon,
            delta,
        }
    }

    pub fn finite_consumption(delta: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(DiscountMeasure {
            variant: HorizonVariant::FiniteConsumption { horizon },
            delta,
        })
    }

    pub fn terminal_wealth(delta: f64, horizon: f64) -> Result<Self> {
        check_horizon(horizon)?;
        Ok(DiscountMeasure {
            variant: HorizonVariant::FiniteConsumptionTerminalWealth { horizon },
            delta,
        })
    }

    /// Finite horizon `T`, if any.
    pub fn horizon(&self) -> Option<f64> {
        match self.variant {
            HorizonVariant::InfiniteHorizon => None,
            HorizonVariant::FiniteConsumption { horizon }
            | HorizonVariant::FiniteConsumptionTerminalWealth { horizon } => Some(horizon),
        }
    }

    /// Cumulative measure `kappa_t = kappa([0, t])`.
    pub fn kappa(&self, t: f64) -> f64 {
        let d = self.delta;
        let lebesgue = |s: f64| -(-d * s).exp_m1() / d;
        match self.variant {
            HorizonVariant::InfiniteHorizon => lebesgue(t),
            HorizonVariant::FiniteConsumption { horizon } => lebesgue(t.min(horizon)),
            HorizonVariant::FiniteConsumptionTerminalWealth { horizon } => {
                lebesgue(t.min(horizon)) + if t >= horizon { 1.0 } else { 0.0 }
            }
        }
    }

    /// Density of the absolutely continuous part of `kappa`.
    pub fn density(&self, t: f64) -> f64 {
        match self.horizon() {
            Some(horizon) if t >= horizon => 0.0,
            _ => (-self.delta * t).exp(),
        }
    }

    /// Point mass `(t, mass)` of `kappa`, if any.
    pub fn atom(&self) -> Option<(f64, f64)> {
        match self.variant {
            HorizonVariant::FiniteConsumptionTerminalWealth { horizon } => Some((horizon, 1.0)),
            _ => None,
        }
    }

    pub fn zeta(&self, t: f64) -> f64 {
        match self.variant {
            HorizonVariant::FiniteConsumptionTerminalWealth { horizon } if t >= horizon => 1.0,
            _ => (self.delta * t).exp(),
        }
    }

    /// Multiplier applied to the income rate `f_t`.
    pub fn income_cutoff(&self, t: f64) -> f64 {
        match self.variant {
            HorizonVariant::FiniteConsumptionTerminalWealth { horizon } if t >= horizon => 0.0,
            _ => 1.0,
        }
    }

    /// Total mass `kappa([0, inf])`.
    pub fn total_mass(&self) -> f64 {
        self.kappa(f64::INFINITY)
    }
}

fn check_horizon(horizon: f64) -> Result<()> {
    if horizon > 0.0 && horizon.is_finite() {
        Ok(())
    } else {
        Err(Error::Domain(format!(
            "horizon must be positive, got {horizon}"
        )))
    }
}
