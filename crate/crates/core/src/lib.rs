//! Optimal consumption with randomly terminating income in a Black-Scholes
//! market.
//!
//! The crate is organised bottom-up:
//!
//! - [`model`]: market parameters, power utility and its conjugate, discount
//!   measures and the closed-form Merton limits (no income, perpetual income).
//! - [`hjb`]: backward Runge-Kutta solve of the pre-termination HJB ODE on a
//!   wealth grid, feedback policy extraction and a discrete Legendre-Fenchel
//!   transform of the solution.
//! - [`sim`]: seeded Monte Carlo ensembles of the controlled wealth SDE with
//!   an exponential income-termination clock, together with the deflator
//!   family `y e^{-rt} E(-lambda W) E(-gamma M)` and the path-integral
//!   estimators built on them.
//! - [`verify`]: quantitative checks of the duality relations (budget
//!   constraint, weak duality, conjugacy, derivative identity, supermartingale
//!   and potential properties) collected into a [`verify::DualityReport`].

// `!(x > 0.0)` guards are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod error;
pub mod hjb;
pub mod model;
pub mod sim;
pub mod stats;
pub mod verify;

pub use error::{Error, Result};
pub use hjb::{
    boundary_condition, conjugate_transform, extract_feedback, hjb_curvature, solve_hjb,
    solve_hjb_with, ConjugateTransform, FeedbackPolicy, SolverOptions, ValueSolution, WealthGrid,
};
pub use model::{
    merton_feedback, merton_value, merton_wealth_closed_form, perpetual_value, DerivedConstants,
    DiscountMeasure, IncomeShift, MarketParams, PowerUtility,
};
pub use sim::{
    deflated_wealth_curves, estimate_dual, estimate_primal, simulate_ensemble, ControlSpec,
    DeflatorSpec, PathConfig, PathEnsemble,
};
pub use stats::Estimate;
pub use verify::{
    run_report, sweep_sensitivity, CheckResult, DualityReport, ReportOptions, SensitivityTable,
    Severity,
};
