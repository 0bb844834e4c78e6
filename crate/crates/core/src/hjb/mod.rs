//! Pre-termination HJB ODE: backward RK4 solve, feedback policy and
//! discrete conjugate.

mod conjugate;
mod grid;
mod policy;
mod solver;

pub use conjugate::{conjugate_transform, ConjugateTransform};
pub use grid::WealthGrid;
pub use policy::{extract_feedback, FeedbackPolicy};
pub use solver::{
    boundary_condition, hjb_curvature, hjb_residual, solve_hjb, solve_hjb_with, BoundaryValues,
    SolverOptions, ValueSolution,
};

use std::io::{self, Write};

use crate::model::{merton_value, perpetual_value};

/// Write the solution and its feedback policy as CSV
/// (`x,u1,du1,ddu1,u0,u_inf,c1,theta1`), rows in descending `x`.
pub fn write_solution_csv<W: Write>(
    mut out: W,
    sol: &ValueSolution,
    policy: &FeedbackPolicy,
) -> io::Result<()> {
    writeln!(out, "x,u1,du1,ddu1,u0,u_inf,c1,theta1")?;
    let params = sol.params();
    for (i, &x) in sol.grid.nodes().iter().enumerate() {
        let u0 = merton_value(x, params).unwrap_or(f64::NAN);
        let uinf = perpetual_value(x, params).unwrap_or(f64::NAN);
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            x, sol.u1[i], sol.du1[i], sol.ddu1[i], u0, uinf, policy.c1[i], policy.theta1[i]
        )?;
    }
    Ok(())
}
