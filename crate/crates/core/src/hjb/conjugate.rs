use serde::Serialize;

use crate::error::{Error, Result};
use crate::hjb::ValueSolution;

/// Discrete Legendre-Fenchel transform of a solved value function.
#[derive(Debug, Clone, Serialize)]
pub struct ConjugateTransform {
    pub y: Vec<f64>,
    /// `v_num(y) = max_i (u1(x_i) - x_i y)`.
    pub v: Vec<f64>,
    /// Maximising node wealth for each `y` (smallest among ties).
    pub argmax_x: Vec<f64>,
    /// `u_hat(x_i) = min_j (v_num(y_j) + x_i y_j)`, one entry per grid node.
    pub round_trip: Vec<f64>,
}

/// Brute-force transform over all grid nodes for every `y` in `y_grid`.
///
/// Every `y` must lie in `(0, y_star)`.
pub fn conjugate_transform(sol: &ValueSolution, y_grid: &[f64]) -> Result<ConjugateTransform> {
    if y_grid.is_empty() {
        return Err(Error::EmptyRange("empty y grid".into()));
    }
    if let Some(&bad) = y_grid.iter().find(|&&y| !(y > 0.0 && y < sol.y_star)) {
        return Err(Error::EmptyRange(format!(
            "y = {bad} outside (0, y_star = {})",
            sol.y_star
        )));
    }
    let nodes = sol.grid.nodes();
    let mut v = Vec::with_capacity(y_grid.len());
    let mut argmax_x = Vec::with_capacity(y_grid.len());
    for &y in y_grid {
        let mut best = f64::NEG_INFINITY;
        let mut best_x = f64::NAN;
        // Nodes run downward in x, so `>=` keeps the smallest maximiser.
        for (&x, &u) in nodes.iter().zip(&sol.u1) {
            let val = u - x * y;
            if val >= best {
                best = val;
                best_x = x;
            }
        }
        v.push(best);
        argmax_x.push(best_x);
    }
    let round_trip = nodes
        .iter()
        .map(|&x| {
            y_grid
                .iter()
                .zip(&v)
                .map(|(&y, &vy)| vy + x * y)
                .fold(f64::INFINITY, f64::min)
        })
        .collect();
    Ok(ConjugateTransform {
        y: y_grid.to_vec(),
        v,
        argmax_x,
        round_trip,
    })
}

impl ConjugateTransform {
    /// `m` evenly spaced points from `u1'(x_max)` up to (excluding) the
    /// largest finite nodal slope.
    pub fn uniform_y_grid(sol: &ValueSolution, m: usize) -> Vec<f64> {
        let lo = sol.du1[0];
        let hi = sol
            .du1
            .iter()
            .rev()
            .copied()
            .find(|d| d.is_finite())
            .unwrap_or(lo);
        let step = (hi - lo) / m as f64;
        (0..m).map(|j| lo + step * j as f64).collect()
    }

    /// Largest spacing of the y grid.
    pub fn dy(&self) -> f64 {
        self.y
            .windows(2)
            .map(|w| (w[1] - w[0]).abs())
            .fold(0.0, f64::max)
    }

    /// `max_i |u_hat(x_i) - u1(x_i)|`.
    pub fn round_trip_error(&self, sol: &ValueSolution) -> f64 {
        self.round_trip
            .iter()
            .zip(&sol.u1)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Forward-difference slope over the last two y nodes.
    pub fn terminal_slope(&self) -> f64 {
        let m = self.y.len();
        if m < 2 {
            return f64::NAN;
        }
        (self.v[m - 1] - self.v[m - 2]) / (self.y[m - 1] - self.y[m - 2])
    }

    pub fn is_nonincreasing(&self) -> bool {
        self.v.windows(2).all(|w| w[1] <= w[0])
    }

    /// Second differences nonnegative up to `tol` (scaled by the values).
    pub fn is_convex(&self, tol: f64) -> bool {
        self.y.windows(3).zip(self.v.windows(3)).all(|(y, v)| {
            let left = (v[1] - v[0]) / (y[1] - y[0]);
            let right = (v[2] - v[1]) / (y[2] - y[1]);
            right - left >= -tol * (1.0 + left.abs() + right.abs())
        })
    }
}
