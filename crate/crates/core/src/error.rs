use alloc::string::String;

pub type Result<T, E = CoreError> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum CoreError {
    #[error("input width {got} does not match layout width {expected}")]
    Shape { expected: usize, got: usize },

    #[error("need at least {needed} distinct time steps for fold {fold}, found {found}")]
    TooFewSteps { fold: usize, needed: usize, found: usize },

    #[error("positive fraction {0} is outside (0, 1)")]
    PositiveFraction(f64),

    #[error("training set has no positive examples")]
    NoPositives,

    #[error("empty input: {0}")]
    Empty(&'static str),

    #[error("non-finite value in {0}")]
    NonFinite(String),

    #[error("linear system is singular; use a ridge strength above zero")]
    Singular,

    #[error("invalid argument: {0}")]
    Invalid(String),
}
