use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("graph has no edges")]
    NoEdges,

    #[error("index {index} out of range for {n} agents")]
    IndexOutOfRange { index: usize, n: usize },

    /// A sufficiency condition of the form `lhs > rhs` that a bound formula
    /// depends on does not hold.
    #[error("condition {condition} violated ({lhs} <= {rhs})")]
    ConditionViolated {
        condition: &'static str,
        lhs: f64,
        rhs: f64,
    },

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("{what}: expected length {expected}, found {found}")]
    LengthMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },

    /// Exact inverse (gamma = 0) hit a zero argument.
    #[error("singular inverse at t={t} for agent {agent}{}", neighbor.map(|j| format!(" (edge to {j})")).unwrap_or_default())]
    Singularity {
        t: f64,
        agent: usize,
        neighbor: Option<usize>,
    },

    #[error("non-finite state at t={t} in component {component}")]
    NonFinite { t: f64, component: usize },

    #[error("trajectory has no {0} records")]
    MissingRecords(&'static str),

    #[error("scenario schema error at `{path}`: {message}")]
    Schema { path: String, message: String },

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// Failures of the numerical run itself, as opposed to bad input.
    pub fn is_runtime(&self) -> bool {
        matches!(self, Error::Singularity { .. } | Error::NonFinite { .. })
    }
}
