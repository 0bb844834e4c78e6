use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter {name} = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },

    /// `K <= 0`: the Merton problem has infinite value.
    #[error("ill-posed problem: K = {k} must be strictly positive")]
    WellPosedness { k: f64 },

    #[error("argument outside domain: {0}")]
    Domain(String),

    #[error("degenerate market: lambda = 0 removes the second-order term of the HJB ODE")]
    DegenerateMarket,

    #[error("HJB denominator {denominator:e} is numerically zero at x = {x}")]
    SingularDenominator { x: f64, denominator: f64 },

    #[error(
        "HJB integration blew up at x = {x} (grid node {node}, smallest node reached {reached})"
    )]
    SolverBlowup { x: f64, node: usize, reached: f64 },

    #[error("invariant `{invariant}` violated at grid node {node} (x = {x})")]
    InvariantViolation {
        invariant: &'static str,
        node: usize,
        x: f64,
    },

    #[error("second derivative {value:e} too small to form the portfolio at grid node {node}")]
    DivisionGuard { node: usize, value: f64 },

    #[error("dual grid leaves (0, y*): {0}")]
    EmptyRange(String),

    #[error("invalid configuration: {0}")]
    Config(String),
}
