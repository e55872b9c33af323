use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("step too large at node {node}: lipschitz constant times step is {product} (must be < 1); refine the grid")]
    StepSizeTooLarge { node: usize, product: f64 },

    #[error("underdetermined regression: {paths} paths for {basis} basis functions")]
    UnderdeterminedRegression { paths: usize, basis: usize },

    #[error("inconsistent barriers at node {node}: lower {lower} exceeds upper {upper}")]
    InconsistentBarriers { node: usize, lower: f64, upper: f64 },

    #[error("inconsistent solution data: {0}")]
    Inconsistency(String),

    #[error("implicit step did not converge at node {node}")]
    ImplicitStep { node: usize },

    #[error("penalty level {n}: {source}")]
    AtPenalty {
        n: u64,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable snake_case name of the variant (the innermost one for `AtPenalty`).
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidArgument(_) => "invalid_argument",
            Error::StepSizeTooLarge { .. } => "step_size_too_large",
            Error::UnderdeterminedRegression { .. } => "underdetermined_regression",
            Error::InconsistentBarriers { .. } => "inconsistent_barriers",
            Error::Inconsistency(_) => "inconsistency",
            Error::ImplicitStep { .. } => "implicit_step",
            Error::AtPenalty { source, .. } => source.kind(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn invalid(msg: impl Into<String>) -> Error {
    Error::InvalidArgument(msg.into())
}
