use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::hjb::FeedbackPolicy;
use crate::model::{merton_value, perpetual_value, MarketParams};

/// Time grid, ensemble size and seeding of a Monte Carlo run.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PathConfig {
    pub dt: f64,
    pub t_max: f64,
    pub n_paths: usize,
    pub seed: u64,
    pub antithetic: bool,
}

impl Default for PathConfig {
    fn default() -> Self {
        PathConfig {
            dt: 0.01,
            t_max: 25.0,
            n_paths: 20_000,
            seed: 42,
            antithetic: true,
        }
    }
}

impl PathConfig {
    pub fn with_paths(mut self, n_paths: usize) -> Self {
        self.n_paths = n_paths;
        self
    }

    pub fn with_dt(mut self, dt: f64) -> Self {
        self.dt = dt;
        self
    }

    pub fn with_t_max(mut self, t_max: f64) -> Self {
        self.t_max = t_max;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }

    /// Number of time steps, `t_max / dt`.
    pub fn n_steps(&self) -> usize {
        (self.t_max / self.dt).round() as usize
    }

    /// Grid-only checks: positive step, `t_max` a multiple of `dt`, at least
    /// two paths, an even count when paths are paired.
    pub fn check_grid(&self) -> Result<()> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::Config(format!(
                "dt must be positive, got {}",
                self.dt
            )));
        }
        if !(self.t_max > 0.0 && self.t_max.is_finite()) {
            return Err(Error::Config(format!(
                "t_max must be positive, got {}",
                self.t_max
            )));
        }
        let steps = self.t_max / self.dt;
        if (steps - steps.round()).abs() > 1e-6 * steps.max(1.0) {
            return Err(Error::Config(format!(
                "t_max = {} is not a multiple of dt = {}",
                self.t_max, self.dt
            )));
        }
        if self.n_paths < 2 {
            return Err(Error::Config(format!(
                "need at least 2 paths, got {}",
                self.n_paths
            )));
        }
        if self.antithetic && !self.n_paths.is_multiple_of(2) {
            return Err(Error::Config(format!(
                "antithetic sampling needs an even path count, got {}",
                self.n_paths
            )));
        }
        Ok(())
    }

    /// `e^{-delta t_max} u_inf(x_ref + a/r)`, the truncation bound at reference wealth.
    pub fn tail_bound(&self, params: &MarketParams, x_ref: f64) -> Result<f64> {
        Ok((-params.delta * self.t_max).exp()
            * perpetual_value(x_ref + params.perpetual_income_value(), params)?)
    }

    /// Grid checks plus the truncation requirement
    /// `tail_bound(x_ref) < 0.5% u0(x_ref)`.
    pub fn validate(&self, params: &MarketParams, x_ref: f64) -> Result<()> {
        self.check_grid()?;
        let bound = self.tail_bound(params, x_ref)?;
        let scale = merton_value(x_ref, params)?;
        if !(bound < 5e-3 * scale) {
            return Err(Error::Config(format!(
                "t_max = {} leaves a truncation tail of {bound:.3e}, above 0.5% of u0({x_ref}) = {scale:.3e}",
                self.t_max
            )));
        }
        Ok(())
    }
}

/// Constant dual control `gamma` and initial dual value `y` of the deflator
/// `Y_t = y e^{-rt} E(-lambda W)_t E(-gamma M)_t`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DeflatorSpec {
    pub gamma: f64,
    pub y: f64,
}

impl DeflatorSpec {
    pub fn new(gamma: f64, y: f64) -> Result<Self> {
        let spec = DeflatorSpec { gamma, y };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.gamma > -1.0 && self.gamma.is_finite()) {
            return Err(Error::Config(format!(
                "gamma must exceed -1, got {}",
                self.gamma
            )));
        }
        if !(self.y > 0.0 && self.y.is_finite()) {
            return Err(Error::Config(format!("y must be positive, got {}", self.y)));
        }
        Ok(())
    }

    /// `E(-gamma M)_t = e^{-eta gamma (t min tau)} (1+gamma)^{1{t >= tau}}`.
    pub fn jump_factor(&self, t: f64, tau: f64, eta: f64) -> f64 {
        let decay = (-eta * self.gamma * t.min(tau)).exp();
        if t >= tau {
            decay * (1.0 + self.gamma)
        } else {
            decay
        }
    }

    /// `rho = r + eta (1 + gamma)`: `E[N_t Y_t] = y e^{-rho t}`.
    pub fn income_decay(&self, params: &MarketParams) -> f64 {
        params.r + params.eta * (1.0 + self.gamma)
    }
}

/// Consumption and investment rule driving the wealth SDE.
#[derive(Debug, Clone)]
pub enum ControlSpec {
    /// `c = K x`, `pi = lambda/(sigma(1-p)) x`.
    MertonNoIncome,
    /// Merton policy at `x + a/r`.
    MertonPerpetual,
    /// Solved pre-termination policy, used whether or not income has stopped.
    SolvedPolicy(Arc<FeedbackPolicy>),
    /// `c = c_bar`, nothing in the stock.
    ConstantConsumption(f64),
    /// `pre` while income flows, Merton no-income policy after it stops.
    RegimeSwitch { pre: Arc<FeedbackPolicy> },
    /// Consume current income plus interest on wealth, nothing in the stock.
    IncomePlusInterest,
}

impl ControlSpec {
    pub fn validate(&self) -> Result<()> {
        match self {
            ControlSpec::ConstantConsumption(c) if !(*c >= 0.0 && c.is_finite()) => Err(
                Error::Config(format!("constant consumption must be nonnegative, got {c}")),
            ),
            _ => Ok(()),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            ControlSpec::MertonNoIncome => "merton_no_income",
            ControlSpec::MertonPerpetual => "merton_perpetual",
            ControlSpec::SolvedPolicy(_) => "solved_policy",
            ControlSpec::ConstantConsumption(_) => "constant_consumption",
            ControlSpec::RegimeSwitch { .. } => "regime_switch",
            ControlSpec::IncomePlusInterest => "income_plus_interest",
        }
    }
}
