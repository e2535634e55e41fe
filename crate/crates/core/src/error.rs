use alloc::string::String;

/// Errors raised by the solver pipeline.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid parameter `{name}` = {value}: {reason}")]
    InvalidParameter {
        name: &'static str,
        value: f64,
        reason: &'static str,
    },
    #[error("bad x-extent [{x_left}, {x_right}]: need x_left < 0 < x_right")]
    BadExtent { x_left: f64, x_right: f64 },
    #[error("anchor (0, -L/2) is not a grid node ({axis} axis)")]
    AnchorNotOnGrid { axis: &'static str },
    #[error("state does not match the grid: {0}")]
    ShapeMismatch(String),
    #[error("linear solve failed: {0}")]
    LinearSolveFailed(String),
    #[error("Newton did not converge in {iterations} iterations (|R| = {residual:e})")]
    MaxItersExceeded { iterations: usize, residual: f64 },
    #[error("Newton line search stalled at damping {lambda:e} (|R| = {residual:e})")]
    StepUnderflow { lambda: f64, residual: f64 },
    #[error("Newton converged to a non-positive speed c = {0}")]
    NegativeSpeed(f64),
    #[error("shooting bracket [{lo}, {hi}] does not straddle the wave speed")]
    BracketNotFound { lo: f64, hi: f64 },
    #[error("continuation step collapsed below {min_step:e} at parameter {parameter}: {cause}")]
    StepCollapse {
        parameter: f64,
        min_step: f64,
        cause: String,
    },
    #[error("continuation target {target} is behind the current parameter {current}")]
    ParameterNotMonotone { current: f64, target: f64 },
    #[error("x-extent too small at parameter {parameter}: {reason}")]
    ExtentTooSmall { parameter: f64, reason: String },
    #[error("check needs an exchange-family state")]
    WrongFamily,
    #[error("no node with max_y psi <= theta: the front touches x_left")]
    ThresholdNotCrossed,
    #[error("dispersion relation has no root in (0, {gamma_lim})")]
    NoRoot { gamma_lim: f64 },
    #[error("no nodes in the right-decay fitting window")]
    WindowEmpty,
    #[error("states live on different grids or families")]
    GridMismatch,
    #[error("argument outside the domain: {0}")]
    DomainError(&'static str),
    #[error("record sink failed: {0}")]
    Sink(String),
}

pub type Result<T> = core::result::Result<T, Error>;
