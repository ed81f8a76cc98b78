use thiserror::Error;

/// Crate-wide error type.
#[derive(Debug, Error)]
pub enum Error {
    #[error("numeric escape at orbit step {step}")]
    NumericEscape { step: usize },

    #[error("no complex extension for system `{0}`")]
    NoComplexExtension(String),

    #[error("no jet available for system `{0}`")]
    NoJet(String),

    #[error("resolution insufficient: grid step {step:e} exceeds {limit:e}")]
    ResolutionInsufficient { step: f64, limit: f64 },

    #[error("parameter out of range: {0}")]
    ParamOutOfRange(String),

    #[error("non-unimodular matrix: det = {0}")]
    NonUnimodular(i64),

    #[error("no i <= {max_i} achieves sup||D psi^(1/i)|| < {target}")]
    SuspensionTargetUnreachable { max_i: u64, target: f64 },

    #[error("scale too small for the log-log term: ln C_n = {0}")]
    ScaleTooSmall(f64),

    #[error("n = {n} is below the schedule threshold N = {threshold}")]
    BelowThreshold { n: usize, threshold: usize },

    #[error("lipschitz precondition violated: L~ = {ltilde} >= L0 = {l0}")]
    LipschitzPrecondition { ltilde: f64, l0: f64 },

    #[error("unknown system `{0}`")]
    UnknownSystem(String),

    #[error("config error: {0}")]
    Config(String),

    #[error("budget exceeded: {0}")]
    BudgetExceeded(String),

    #[error("empty region")]
    EmptyRegion,

    #[error("fit window too small: {got} points, need {need}")]
    WindowTooSmall { got: usize, need: usize },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
