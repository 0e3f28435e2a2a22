use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// A numeric kernel was called outside the region where it is defined.
    #[error("{function}: argument out of domain ({detail})")]
    Domain { function: &'static str, detail: String },

    /// A model or configuration parameter violates its invariant.
    #[error("invalid {field}: {reason}")]
    InvalidParameter { field: &'static str, reason: String },

    /// The distinct-geometry formula was asked to handle repeated distances.
    #[error("cluster geometry is not distinct: {0}")]
    NotDistinct(String),

    #[error("cluster size {0} is outside the supported range 1..=12")]
    ClusterSize(usize),

    /// The simulation could not realise the requested configuration.
    #[error("simulation: {0}")]
    Simulation(String),
}

impl Error {
    pub(crate) fn domain(function: &'static str, detail: impl Into<String>) -> Self {
        Error::Domain { function, detail: detail.into() }
    }

    pub(crate) fn invalid(field: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter { field, reason: reason.into() }
    }
}
