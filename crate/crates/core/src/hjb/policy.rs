use serde::Serialize;

use crate::error::{Error, Result};
use crate::hjb::{ValueSolution, WealthGrid};
use crate::model::{MarketParams, PowerUtility};
use crate::stats::linear_fit;

/// Optimal feedback controls read off a [`ValueSolution`].
///
/// `theta1` is the stock proportion `pi1 / x`; at `x = 0` it holds `pi1`
/// itself.
#[derive(Debug, Clone, Serialize)]
pub struct FeedbackPolicy {
    pub grid: WealthGrid,
    pub c1: Vec<f64>,
    pub pi1: Vec<f64>,
    pub theta1: Vec<f64>,
    params: MarketParams,
}

/// `c1 = I(u1')`, `pi1 = -(lambda/sigma) u1'/u1''`.
pub fn extract_feedback(sol: &ValueSolution, params: &MarketParams) -> Result<FeedbackPolicy> {
    let utility = PowerUtility::new(params.p);
    let ratio = params.lambda / params.sigma;
    let n = sol.len();
    let mut c1 = Vec::with_capacity(n);
    let mut pi1 = Vec::with_capacity(n);
    let mut theta1 = Vec::with_capacity(n);
    for (i, &x) in sol.grid.nodes().iter().enumerate() {
        let (du, ddu) = (sol.du1[i], sol.ddu1[i]);
        let (c, pi) = if du.is_infinite() {
            // Pinned no-income origin: the Merton policy vanishes there.
            (0.0, 0.0)
        } else {
            if !(ddu.abs() >= 1e-14) {
                return Err(Error::DivisionGuard {
                    node: i,
                    value: ddu,
                });
            }
            (utility.inverse_marginal(du), -ratio * du / ddu)
        };
        c1.push(c);
        pi1.push(pi);
        theta1.push(if x > 0.0 { pi / x } else { pi });
    }
    Ok(FeedbackPolicy {
        grid: sol.grid.clone(),
        c1,
        pi1,
        theta1,
        params: *params,
    })
}

impl FeedbackPolicy {
    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    /// `(c, pi)` at any `x >= 0`: linear interpolation of `c1` and `pi1` on
    /// the grid, and above `x_max` the Merton policy at `x + a/(r+eta)`.
    ///
    /// `pi` is interpolated rather than `theta1` so the map stays continuous
    /// through the origin.
    pub fn evaluate(&self, x: f64) -> (f64, f64) {
        let x = x.max(0.0);
        if x > self.grid.x_max() {
            let p = &self.params;
            let z = x + p.a / (p.r + p.eta);
            let k = p.derive_constants().map(|d| d.k).unwrap_or(f64::NAN);
            return (k * z, p.merton_fraction() * z);
        }
        let (i, w) = self.grid.locate(x);
        (
            (1.0 - w) * self.c1[i] + w * self.c1[i + 1],
            (1.0 - w) * self.pi1[i] + w * self.pi1[i + 1],
        )
    }

    pub fn c_at_zero(&self) -> f64 {
        self.c1[self.c1.len() - 1]
    }

    /// `R^2` of least-squares lines through `c1` and `pi1` over nodes in `[0, x_hi]`.
    pub fn linear_fit_r2(&self, x_hi: f64) -> (f64, f64) {
        let idx: Vec<usize> = (0..self.grid.len())
            .filter(|&i| self.grid.node(i) <= x_hi)
            .collect();
        let xs: Vec<f64> = idx.iter().map(|&i| self.grid.node(i)).collect();
        let cs: Vec<f64> = idx.iter().map(|&i| self.c1[i]).collect();
        let ps: Vec<f64> = idx.iter().map(|&i| self.pi1[i]).collect();
        (linear_fit(&xs, &cs).2, linear_fit(&xs, &ps).2)
    }
}
