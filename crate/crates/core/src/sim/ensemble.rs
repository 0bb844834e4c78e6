use std::io::{self, Write};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::model::MarketParams;
use crate::sim::{ControlSpec, DeflatorSpec, PathConfig};
use crate::stats::{merge_pairwise, Moments};

/// Salt separating the termination-clock streams from the Brownian ones.
const CLOCK_SALT: u64 = 0x9e37_79b9_7f4a_7c15;

/// Sampling units reduced sequentially inside one parallel task.
const CHUNK: usize = 64;

/// One simulated path on the uniform time grid `t_j = j dt`, `j = 0..=n_steps`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Path {
    /// Income termination time; `+inf` when `eta = 0`.
    pub tau: f64,
    /// `W_{t_j}`.
    pub brownian: Vec<f64>,
    pub wealth: Vec<f64>,
    /// Consumption rate applied over `[t_j, t_{j+1})`.
    pub consumption: Vec<f64>,
    /// Wealth held in the stock over `[t_j, t_{j+1})`.
    pub stock: Vec<f64>,
    /// `E(-lambda W)_{t_j}`.
    pub bs_deflator: Vec<f64>,
    /// First node at which wealth was absorbed at the floor.
    pub absorbed_at: Option<usize>,
}

impl Path {
    fn resize(&mut self, len: usize) {
        for v in [
            &mut self.brownian,
            &mut self.wealth,
            &mut self.consumption,
            &mut self.stock,
            &mut self.bs_deflator,
        ] {
            v.clear();
            v.resize(len, 0.0);
        }
    }

    /// `N_t = 1{t < tau}`.
    pub fn income_indicator(&self, t: f64) -> f64 {
        if t < self.tau {
            1.0
        } else {
            0.0
        }
    }

    pub fn is_absorbed(&self, j: usize) -> bool {
        self.absorbed_at.is_some_and(|k| j >= k)
    }
}

/// Per-path quantities available from [`PathEnsemble::write_raw`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RawQuantity {
    Brownian,
    Wealth,
    Consumption,
    Stock,
    BrownianDeflator,
    JumpDeflator,
    IncomeIndicator,
}

impl RawQuantity {
    pub const ALL: [RawQuantity; 7] = [
        RawQuantity::Brownian,
        RawQuantity::Wealth,
        RawQuantity::Consumption,
        RawQuantity::Stock,
        RawQuantity::BrownianDeflator,
        RawQuantity::JumpDeflator,
        RawQuantity::IncomeIndicator,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            RawQuantity::Brownian => "brownian",
            RawQuantity::Wealth => "wealth",
            RawQuantity::Consumption => "consumption",
            RawQuantity::Stock => "stock",
            RawQuantity::BrownianDeflator => "bs_deflator",
            RawQuantity::JumpDeflator => "jump_deflator",
            RawQuantity::IncomeIndicator => "income_indicator",
        }
    }
}

/// A seeded ensemble of controlled wealth paths.
///
/// Paths are not stored: each one is regenerated on demand from
/// `(seed, path index)`, so every pass over the ensemble sees bit-identical
/// paths whatever the thread count. With antithetic sampling, paths `2k`
/// and `2k+1` share Brownian stream `k` with opposite signs and form one
/// sampling unit; the termination clock of every path comes from its own
/// stream.
#[derive(Debug, Clone)]
pub struct PathEnsemble {
    x0: f64,
    control: ControlSpec,
    deflator: DeflatorSpec,
    params: MarketParams,
    cfg: PathConfig,
    k: f64,
    fraction: f64,
    floor: f64,
}

/// Absorbing wealth level: zero while income can stop, `-a/r` when it never
/// does and future income can be borrowed against.
fn wealth_floor(params: &MarketParams) -> f64 {
    if params.eta == 0.0 {
        -params.perpetual_income_value()
    } else {
        0.0
    }
}

pub fn simulate_ensemble(
    x0: f64,
    control: ControlSpec,
    deflator: DeflatorSpec,
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<PathEnsemble> {
    cfg.validate(params, if x0 > 0.0 { x0 } else { 1.0 })?;
    build(x0, control, deflator, params, cfg)
}

/// As [`simulate_ensemble`] but without the truncation-tail requirement on
/// `t_max`, for statistics read at fixed finite times only.
pub fn simulate_window(
    x0: f64,
    control: ControlSpec,
    deflator: DeflatorSpec,
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<PathEnsemble> {
    cfg.check_grid()?;
    build(x0, control, deflator, params, cfg)
}

fn build(
    x0: f64,
    control: ControlSpec,
    deflator: DeflatorSpec,
    params: &MarketParams,
    cfg: &PathConfig,
) -> Result<PathEnsemble> {
    if !(x0 >= 0.0 && x0.is_finite()) {
        return Err(Error::Config(format!(
            "initial wealth must be nonnegative, got {x0}"
        )));
    }
    let k = params.derive_constants()?.k;
    control.validate()?;
    deflator.validate()?;
    Ok(PathEnsemble {
        x0,
        control,
        deflator,
        params: *params,
        cfg: *cfg,
        k,
        fraction: params.merton_fraction(),
        floor: wealth_floor(params),
    })
}

impl PathEnsemble {
    pub fn x0(&self) -> f64 {
        self.x0
    }

    pub fn control(&self) -> &ControlSpec {
        &self.control
    }

    pub fn deflator(&self) -> &DeflatorSpec {
        &self.deflator
    }

    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn config(&self) -> &PathConfig {
        &self.cfg
    }

    pub fn n_steps(&self) -> usize {
        self.cfg.n_steps()
    }

    pub fn n_paths(&self) -> usize {
        self.cfg.n_paths
    }

    pub fn time(&self, j: usize) -> f64 {
        j as f64 * self.cfg.dt
    }

    pub fn times(&self) -> Vec<f64> {
        (0..=self.n_steps()).map(|j| self.time(j)).collect()
    }

    /// Node index of time `t` (nearest).
    pub fn index_of(&self, t: f64) -> usize {
        ((t / self.cfg.dt).round() as usize).min(self.n_steps())
    }

    /// Independent sampling units: antithetic pairs, or single paths.
    pub fn n_units(&self) -> usize {
        if self.cfg.antithetic {
            self.cfg.n_paths / 2
        } else {
            self.cfg.n_paths
        }
    }

    fn paths_per_unit(&self) -> usize {
        if self.cfg.antithetic {
            2
        } else {
            1
        }
    }

    /// `Y_{t_j} = y e^{-r t_j} Z_{t_j} Gamma_{t_j}` for the given deflator.
    pub fn deflator_at(&self, path: &Path, j: usize, deflator: &DeflatorSpec) -> f64 {
        let t = self.time(j);
        deflator.y
            * (-self.params.r * t).exp()
            * path.bs_deflator[j]
            * deflator.jump_factor(t, path.tau, self.params.eta)
    }

    /// Path `i` in full.
    pub fn path(&self, i: usize) -> Path {
        assert!(i < self.n_paths(), "path index {i} out of range");
        let per = self.paths_per_unit();
        let mut normals = Vec::new();
        self.draw_normals(i / per, &mut normals);
        let mut path = Path::default();
        self.fill(
            i,
            if i.is_multiple_of(per) { 1.0 } else { -1.0 },
            &normals,
            &mut path,
        );
        path
    }

    fn draw_normals(&self, unit: usize, out: &mut Vec<f64>) {
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed);
        rng.set_stream(unit as u64);
        out.clear();
        out.extend((0..self.n_steps()).map(|_| rng.sample::<f64, _>(StandardNormal)));
    }

    fn draw_tau(&self, path_index: usize) -> f64 {
        if self.params.eta == 0.0 {
            return f64::INFINITY;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.cfg.seed ^ CLOCK_SALT);
        rng.set_stream(path_index as u64);
        let u: f64 = 1.0 - rng.random::<f64>();
        -u.ln() / self.params.eta
    }

    fn control_at(&self, x: f64, income_on: bool) -> (f64, f64) {
        let p = &self.params;
        match &self.control {
            ControlSpec::MertonNoIncome => (self.k * x, self.fraction * x),
            ControlSpec::MertonPerpetual => {
                let z = x + p.perpetual_income_value();
                (self.k * z, self.fraction * z)
            }
            ControlSpec::SolvedPolicy(policy) => policy.evaluate(x),
            ControlSpec::ConstantConsumption(c) => (*c, 0.0),
            ControlSpec::RegimeSwitch { pre } => {
                if income_on {
                    pre.evaluate(x)
                } else {
                    (self.k * x, self.fraction * x)
                }
            }
            ControlSpec::IncomePlusInterest => (if income_on { p.a } else { 0.0 } + p.r * x, 0.0),
        }
    }

    /// Euler scheme for the wealth, exact log-normal steps for `E(-lambda W)`.
    fn fill(&self, index: usize, sign: f64, normals: &[f64], path: &mut Path) {
        let p = &self.params;
        let n = self.n_steps();
        let dt = self.cfg.dt;
        let sqrt_dt = dt.sqrt();
        let z_drift = 0.5 * p.lambda * p.lambda * dt;

        path.resize(n + 1);
        path.tau = self.draw_tau(index);
        path.absorbed_at = None;

        let (mut x, mut z, mut w) = (self.x0, 1.0, 0.0);
        #[allow(clippy::needless_range_loop)]
        for j in 0..=n {
            let t = j as f64 * dt;
            let on = t < path.tau;
            let (c, pi) = if path.absorbed_at.is_some() {
                (0.0, 0.0)
            } else {
                self.control_at(x, on)
            };
            path.wealth[j] = x;
            path.consumption[j] = c;
            path.stock[j] = pi;
            path.bs_deflator[j] = z;
            path.brownian[j] = w;
            if j == n {
                break;
            }
            let dw = sign * normals[j] * sqrt_dt;
            if path.absorbed_at.is_none() {
                let income = if on { p.a } else { 0.0 };
                let next = x + (p.r * x - c + income) * dt + p.sigma * pi * (p.lambda * dt + dw);
                if next < self.floor {
                    x = self.floor;
                    path.absorbed_at = Some(j + 1);
                } else {
                    x = next;
                }
            }
            z *= (-p.lambda * dw - z_drift).exp();
            w += dw;
        }
    }

    /// Sample moments of `k` per-path statistics.
    ///
    /// `f` writes the statistics of one path into its output slice; an
    /// antithetic pair contributes the average of its two paths as a single
    /// sample. The reduction order is fixed, so results are bit-reproducible.
    pub fn moments<F>(&self, k: usize, f: F) -> Vec<Moments>
    where
        F: Fn(&Path, &mut [f64]) + Sync,
    {
        let units = self.n_units();
        let per = self.paths_per_unit();
        let parts: Vec<Vec<Moments>> = (0..units.div_ceil(CHUNK))
            .into_par_iter()
            .map(|chunk| {
                let mut acc = vec![Moments::default(); k];
                let mut normals = Vec::with_capacity(self.n_steps());
                let mut path = Path::default();
                let mut out = vec![0.0; k];
                let mut sum = vec![0.0; k];
                for unit in chunk * CHUNK..((chunk + 1) * CHUNK).min(units) {
                    self.draw_normals(unit, &mut normals);
                    sum.iter_mut().for_each(|s| *s = 0.0);
                    for leg in 0..per {
                        let sign = if leg == 0 { 1.0 } else { -1.0 };
                        self.fill(unit * per + leg, sign, &normals, &mut path);
                        out.iter_mut().for_each(|o| *o = 0.0);
                        f(&path, &mut out);
                        sum.iter_mut().zip(&out).for_each(|(s, o)| *s += o);
                    }
                    for (m, s) in acc.iter_mut().zip(&sum) {
                        m.push(s / per as f64);
                    }
                }
                acc
            })
            .collect();
        (0..k)
            .map(|i| {
                let column: Vec<Moments> = parts.iter().map(|p| p[i]).collect();
                merge_pairwise(&column)
            })
            .collect()
    }

    /// Fraction of paths absorbed at the wealth floor before `t_max`.
    pub fn absorbed_fraction(&self) -> f64 {
        self.moments(1, |path, out| {
            out[0] = if path.absorbed_at.is_some() { 1.0 } else { 0.0 };
        })[0]
            .mean
    }

    /// One line per path (path-major), one column per time node.
    pub fn write_raw<W: Write>(&self, quantity: RawQuantity, mut out: W) -> io::Result<()> {
        let eta = self.params.eta;
        for i in 0..self.n_paths() {
            let path = self.path(i);
            let values: Vec<f64> = match quantity {
                RawQuantity::Brownian => path.brownian.clone(),
                RawQuantity::Wealth => path.wealth.clone(),
                RawQuantity::Consumption => path.consumption.clone(),
                RawQuantity::Stock => path.stock.clone(),
                RawQuantity::BrownianDeflator => path.bs_deflator.clone(),
                RawQuantity::JumpDeflator => (0..=self.n_steps())
                    .map(|j| self.deflator.jump_factor(self.time(j), path.tau, eta))
                    .collect(),
                RawQuantity::IncomeIndicator => (0..=self.n_steps())
                    .map(|j| path.income_indicator(self.time(j)))
                    .collect(),
            };
            let line: Vec<String> = values.iter().map(|v| v.to_string()).collect();
            writeln!(out, "{}", line.join(","))?;
        }
        Ok(())
    }
}
