//! Monte Carlo engine for the controlled wealth SDE
//!
//! ```text
//! dX = (r X - c + a N) dt + sigma pi (lambda dt + dW),   N_t = 1{t < tau}
//! ```
//!
//! with `tau ~ Exp(eta)` independent of `W`, and the deflator family
//! `Y_t = y e^{-rt} E(-lambda W)_t E(-gamma M)_t` for constant `gamma`.

mod config;
mod ensemble;
mod estimators;

pub use config::{ControlSpec, DeflatorSpec, PathConfig};
pub use ensemble::{simulate_ensemble, simulate_window, Path, PathEnsemble, RawQuantity};
pub use estimators::{
    conjugate_tail, deflated_wealth_curves, estimate_budget, estimate_dual, estimate_dual_surface,
    estimate_income_value, estimate_marginal_identity, estimate_primal, income_tail,
    lambda_increments, BudgetEstimate, DeflatedCurves, DualEstimate, PrimalEstimate,
};
