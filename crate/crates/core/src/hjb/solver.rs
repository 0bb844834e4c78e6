//! Backward fourth-order Runge-Kutta solve of the pre-termination ODE
//!
//! ```text
//! V(u') + eta u0(x) + (r x + a) u' - (lambda^2 / 2) (u')^2 / u'' - alpha u = 0
//! ```
//!
//! started at a large wealth `x_max` from the shifted Merton value
//! `u0(x_max + a/(r + eta))` and marched down to `x = 0`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::hjb::WealthGrid;
use crate::model::{merton_value, perpetual_value, DerivedConstants, MarketParams, PowerUtility};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SolverOptions {
    /// RK4 steps taken per grid interval.
    pub substeps: usize,
    /// Abort once `u'` or `|u''|` exceeds this.
    pub overflow_guard: f64,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            substeps: 8,
            overflow_guard: 1e15,
        }
    }
}

/// Starting data for the backward march.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct BoundaryValues {
    pub x: f64,
    pub u: f64,
    pub du: f64,
    /// `a / (r + eta)`.
    pub shift: f64,
    /// `(u_inf(x) - u0(x)) / u0(x)`; above 1% the large-wealth approximation is loose.
    pub approximation_gap: f64,
}

/// `u1(x_bar) = u0(x_bar + a/(r+eta))` and the matching derivative.
pub fn boundary_condition(x_bar: f64, params: &MarketParams) -> Result<BoundaryValues> {
    let eq = Equation::new(params)?;
    if !(x_bar > 0.0 && x_bar.is_finite()) {
        return Err(Error::Domain(format!(
            "boundary wealth must be positive, got {x_bar}"
        )));
    }
    let shift = params.a / (params.r + params.eta);
    let z = x_bar + shift;
    let u0 = eq.u0(x_bar);
    let gap = (perpetual_value(x_bar, params)? - u0) / u0;
    if gap > 0.01 {
        log::warn!(
            "x_max = {x_bar}: perpetual and no-income values differ by {:.2}% (> 1%); \
             the large-wealth boundary approximation is loose",
            100.0 * gap
        );
    }
    Ok(BoundaryValues {
        x: x_bar,
        u: eq.u0(z),
        du: eq.du0(z),
        shift,
        approximation_gap: gap,
    })
}

/// `u''` from the ODE given `(x, u, u')`: `u'' = (lambda^2/2) (u')^2 / D` with
/// `D = V(u') + eta u0(x) + (r x + a) u' - alpha u`.
pub fn hjb_curvature(x: f64, u: f64, du: f64, params: &MarketParams) -> Result<f64> {
    Equation::new(params)?.curvature(x, u, du)
}

/// Left-hand side of the ODE; zero on an exact solution.
pub fn hjb_residual(x: f64, u: f64, du: f64, ddu: f64, params: &MarketParams) -> Result<f64> {
    let eq = Equation::new(params)?;
    Ok(eq.denominator(x, u, du) - 0.5 * eq.lambda_sq * du * du / ddu)
}

/// Precomputed coefficients of the ODE.
#[derive(Debug, Clone, Copy)]
struct Equation {
    params: MarketParams,
    derived: DerivedConstants,
    utility: PowerUtility,
    /// `K^{-(1-p)}`.
    merton_scale: f64,
    lambda_sq: f64,
}

impl Equation {
    fn new(params: &MarketParams) -> Result<Self> {
        let derived = params.derive_constants()?;
        if params.lambda == 0.0 {
            return Err(Error::DegenerateMarket);
        }
        Ok(Equation {
            params: *params,
            derived,
            utility: PowerUtility::new(params.p),
            merton_scale: derived.k.powf(-(1.0 - params.p)),
            lambda_sq: params.lambda * params.lambda,
        })
    }

    fn u0(&self, x: f64) -> f64 {
        self.merton_scale * self.utility.value(x)
    }

    fn du0(&self, x: f64) -> f64 {
        self.merton_scale * self.utility.marginal(x)
    }

    fn denominator(&self, x: f64, u: f64, du: f64) -> f64 {
        let p = &self.params;
        self.utility.conjugate(du) + p.eta * self.u0(x) + (p.r * x + p.a) * du
            - self.derived.alpha * u
    }

    fn curvature(&self, x: f64, u: f64, du: f64) -> Result<f64> {
        if !(du > 0.0) || !du.is_finite() {
            return Err(Error::Domain(format!(
                "u' must be positive and finite, got {du} at x = {x}"
            )));
        }
        let d = self.denominator(x, u, du);
        let tol = 1e-12 * (1.0 + (self.derived.alpha * u).abs());
        if !(d.abs() >= tol) {
            return Err(Error::SingularDenominator { x, denominator: d });
        }
        Ok(0.5 * self.lambda_sq * du * du / d)
    }
}

/// Solution of the pre-termination ODE on a [`WealthGrid`].
///
/// Vectors are indexed like the grid: entry 0 is `x_max`, the last entry is
/// `x = 0`. `ddu1` holds the curvature evaluated by the integrator itself.
#[derive(Debug, Clone, Serialize)]
pub struct ValueSolution {
    pub grid: WealthGrid,
    pub u1: Vec<f64>,
    pub du1: Vec<f64>,
    pub ddu1: Vec<f64>,
    /// `u1'(0)`; infinite only in the no-income case.
    pub y_star: f64,
    /// Largest ODE residual over interior nodes, with `u''` from centred differences.
    pub residual_max: f64,
    pub boundary: BoundaryValues,
    params: MarketParams,
}

pub fn solve_hjb(params: &MarketParams, grid: &WealthGrid) -> Result<ValueSolution> {
    solve_hjb_with(params, grid, &SolverOptions::default())
}

pub fn solve_hjb_with(
    params: &MarketParams,
    grid: &WealthGrid,
    opts: &SolverOptions,
) -> Result<ValueSolution> {
    let eq = Equation::new(params)?;
    if opts.substeps == 0 {
        return Err(Error::Config("substeps must be at least 1".into()));
    }
    let n = grid.len();
    let boundary = boundary_condition(grid.x_max(), params)?;

    let mut u1 = vec![0.0; n];
    let mut du1 = vec![0.0; n];
    let mut ddu1 = vec![0.0; n];
    u1[0] = boundary.u;
    du1[0] = boundary.du;
    ddu1[0] = eq.curvature(grid.node(0), boundary.u, boundary.du)?;

    // Without income u1 = u0, whose slope is infinite at the origin; the
    // last node takes that limit instead of a step into the singularity.
    let singular_origin = params.a == 0.0;
    let last = if singular_origin { n - 2 } else { n - 1 };

    let (mut u, mut du) = (boundary.u, boundary.du);
    for i in 1..=last {
        let x_from = grid.node(i - 1);
        let x_to = grid.node(i);
        let blowup = |x: f64| Error::SolverBlowup {
            x,
            node: i,
            reached: x_from,
        };
        for j in 0..opts.substeps {
            let xa = x_from - (x_from - x_to) * (j as f64 / opts.substeps as f64);
            let xb = if j + 1 == opts.substeps {
                x_to
            } else {
                x_from - (x_from - x_to) * ((j + 1) as f64 / opts.substeps as f64)
            };
            let (nu, ndu) = rk4_backward(&eq, xa, xb, u, du).map_err(|e| match e {
                Error::Domain(_) => blowup(xa),
                other => other,
            })?;
            u = nu;
            du = ndu;
            if !u.is_finite() || !du.is_finite() || du > opts.overflow_guard {
                return Err(blowup(xb));
            }
        }
        let ddu = eq.curvature(x_to, u, du).map_err(|e| match e {
            Error::Domain(_) => blowup(x_to),
            other => other,
        })?;
        if ddu.abs() > opts.overflow_guard {
            return Err(blowup(x_to));
        }
        u1[i] = u;
        du1[i] = du;
        ddu1[i] = ddu;
    }
    if singular_origin {
        u1[n - 1] = 0.0;
        du1[n - 1] = f64::INFINITY;
        ddu1[n - 1] = f64::NEG_INFINITY;
    }

    let residual_max = residual_max(&eq, grid, &u1, &du1, singular_origin);
    let sol = ValueSolution {
        grid: grid.clone(),
        y_star: du1[n - 1],
        u1,
        du1,
        ddu1,
        residual_max,
        boundary,
        params: *params,
    };
    sol.check_invariants()?;
    Ok(sol)
}

/// One classical RK4 step of `(u, u')' = (u', F(x, u, u'))` from `xa` down to `xb < xa`.
fn rk4_backward(eq: &Equation, xa: f64, xb: f64, u: f64, du: f64) -> Result<(f64, f64)> {
    let h = xa - xb;
    let xm = (xa - 0.5 * h).max(0.0);
    let xb = xb.max(0.0);

    let k1u = du;
    let k1v = eq.curvature(xa, u, du)?;
    let k2u = du - 0.5 * h * k1v;
    let k2v = eq.curvature(xm, u - 0.5 * h * k1u, k2u)?;
    let k3u = du - 0.5 * h * k2v;
    let k3v = eq.curvature(xm, u - 0.5 * h * k2u, k3u)?;
    let k4u = du - h * k3v;
    let k4v = eq.curvature(xb, u - h * k3u, k4u)?;

    Ok((
        u - h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
        du - h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
    ))
}

fn residual_max(
    eq: &Equation,
    grid: &WealthGrid,
    u: &[f64],
    du: &[f64],
    singular_origin: bool,
) -> f64 {
    let h = grid.h();
    let n = grid.len();
    let end = if singular_origin { n - 2 } else { n - 1 };
    (1..end)
        .map(|i| {
            let ddu_fd = (u[i - 1] - 2.0 * u[i] + u[i + 1]) / (h * h);
            let x = grid.node(i);
            (eq.denominator(x, u[i], du[i]) - 0.5 * eq.lambda_sq * du[i] * du[i] / ddu_fd).abs()
        })
        .fold(0.0, f64::max)
}

/// Relative sandwich tolerance when a bound is itself an exact solution.
pub const REDUCTION_SLACK: f64 = 1e-6;

impl ValueSolution {
    pub fn params(&self) -> &MarketParams {
        &self.params
    }

    pub fn len(&self) -> usize {
        self.u1.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u1.is_empty()
    }

    pub fn u_at_zero(&self) -> f64 {
        self.u1[self.len() - 1]
    }

    /// First node violating `u0 <= u1 <= u_inf` with no tolerance, if any.
    pub fn sandwich_violation(&self) -> Option<usize> {
        self.sandwich_violation_with(0.0, 0.0)
    }

    fn sandwich_violation_with(&self, lower_rel: f64, upper_rel: f64) -> Option<usize> {
        self.grid.nodes().iter().enumerate().find_map(|(i, &x)| {
            let lo = merton_value(x, &self.params).ok()?;
            let hi = perpetual_value(x, &self.params).ok()?;
            let u = self.u1[i];
            let ok = u >= lo - lower_rel * (1.0 + lo) && u <= hi + upper_rel * (1.0 + hi);
            (!ok).then_some(i)
        })
    }

    /// Monotonicity, concavity, the no-income / perpetual-income sandwich and
    /// finiteness of `u1'(0)` when there is income.
    ///
    /// Where a bound is itself an exact solution (no income, or no
    /// termination) the solution coincides with it and the sandwich is
    /// checked to within [`REDUCTION_SLACK`] relative instead of exactly.
    pub fn check_invariants(&self) -> Result<()> {
        let nodes = self.grid.nodes();
        for (i, &x) in nodes.iter().enumerate() {
            if !(self.du1[i] > 0.0) {
                return Err(Error::InvariantViolation {
                    invariant: "u1' > 0",
                    node: i,
                    x,
                });
            }
            if !(self.ddu1[i] < 0.0) {
                return Err(Error::InvariantViolation {
                    invariant: "u1'' < 0",
                    node: i,
                    x,
                });
            }
        }
        let lower_slack = if self.params.a == 0.0 {
            REDUCTION_SLACK
        } else {
            0.0
        };
        let upper_slack = if self.params.a == 0.0 || self.params.eta == 0.0 {
            REDUCTION_SLACK
        } else {
            0.0
        };
        if let Some(i) = self.sandwich_violation_with(lower_slack, upper_slack) {
            return Err(Error::InvariantViolation {
                invariant: "u0 <= u1 <= u_inf",
                node: i,
                x: nodes[i],
            });
        }
        if self.params.a > 0.0 && !self.y_star.is_finite() {
            return Err(Error::InvariantViolation {
                invariant: "u1'(0) finite",
                node: self.len() - 1,
                x: 0.0,
            });
        }
        Ok(())
    }

    /// Cubic Hermite interpolation of `(u1, u1')` at `x` in `[0, x_max]`.
    pub fn interpolate(&self, x: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.grid.x_max()).contains(&x) {
            return Err(Error::Domain(format!(
                "x = {x} outside the solved range [0, {}]",
                self.grid.x_max()
            )));
        }
        if let Some(i) = self.grid.index_of(x) {
            if (self.grid.node(i) - x).abs() <= 1e-12 * (1.0 + x) {
                return Ok((self.u1[i], self.du1[i]));
            }
        }
        let (i, w) = self.grid.locate(x);
        // Interval [x_{i+1}, x_i] parametrised from the left end.
        let h = self.grid.h();
        let s = 1.0 - w;
        let (ul, ur) = (self.u1[i + 1], self.u1[i]);
        let (dl, dr) = (self.du1[i + 1], self.du1[i]);
        if !dl.is_finite() {
            // Singular origin: fall back to linear interpolation on the first cell.
            return Ok((ul + s * (ur - ul), (ur - ul) / h));
        }
        let h00 = 2.0 * s.powi(3) - 3.0 * s * s + 1.0;
        let h10 = s.powi(3) - 2.0 * s * s + s;
        let h01 = -2.0 * s.powi(3) + 3.0 * s * s;
        let h11 = s.powi(3) - s * s;
        let u = h00 * ul + h10 * h * dl + h01 * ur + h11 * h * dr;
        let d00 = 6.0 * s * s - 6.0 * s;
        let d10 = 3.0 * s * s - 4.0 * s + 1.0;
        let d01 = -6.0 * s * s + 6.0 * s;
        let d11 = 3.0 * s * s - 2.0 * s;
        let du = (d00 * ul + d01 * ur) / h + d10 * dl + d11 * dr;
        Ok((u, du))
    }

    pub fn value_at(&self, x: f64) -> Result<f64> {
        self.interpolate(x).map(|(u, _)| u)
    }

    pub fn marginal_at(&self, x: f64) -> Result<f64> {
        self.interpolate(x).map(|(_, du)| du)
    }

    /// Largest `|u1 - other|` over the nodes this solution shares with a finer one.
    pub fn max_difference_on_shared_nodes(&self, finer: &ValueSolution) -> f64 {
        let stride = (finer.len() - 1) / (self.len() - 1);
        self.u1
            .iter()
            .enumerate()
            .map(|(i, u)| (u - finer.u1[i * stride]).abs())
            .fold(0.0, f64::max)
    }
}
