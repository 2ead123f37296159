use thiserror::Error;

/// Errors produced by the solver suite.
#[derive(Debug, Clone, Error, PartialEq)]
pub enum Error {
    #[error("grid size {m} too small for {n} modes (need M >= 2N+2)")]
    GridTooSmall { m: usize, n: usize },

    #[error("mode count {n} too large for grid of size {m} (need N <= M/2-1)")]
    ModeCountTooLarge { n: usize, m: usize },

    #[error("pointwise map undefined at grid index {index} (value {value})")]
    DomainViolation { index: usize, value: f64 },

    #[error("log-difference kernel is singular at (eps, theta) = ({eps}, {theta})")]
    SingularPoint { eps: f64, theta: f64 },

    #[error("denominator w(eps) vanished (min {min_w} at grid index {index})")]
    DenominatorVanished { min_w: f64, index: usize },

    #[error("exponent overflow guard tripped: max 3*Psi = {max_arg}")]
    OverflowGuard { max_arg: f64 },

    #[error("dense eigensolver failed to converge within {iters} iterations")]
    NonConvergence { iters: usize },

    #[error("singular system incompatible: rhs eigen-component {component} exceeds tolerance")]
    IncompatibleSingularSystem { component: f64 },

    #[error("no real constant satisfies the solvability condition at series order {order}")]
    SolvabilityFailure { order: usize },

    #[error("series order {order} exceeds dealiasing capacity for N = {n_modes}")]
    OrderTooHigh { order: usize, n_modes: usize },

    #[error("complement Newton diverged after {iters} iterations (residual {residual})")]
    ComplementNewtonDiverged { iters: usize, residual: f64 },

    #[error("Newton diverged after {iters} iterations (residual {residual})")]
    NewtonDiverged { iters: usize, residual: f64 },

    #[error("root-curve fit ill-conditioned (condition estimate {cond:e})")]
    FitIllConditioned { cond: f64 },

    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;
