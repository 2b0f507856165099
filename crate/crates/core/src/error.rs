use thiserror::Error;

/// Errors raised while building or evaluating q-series objects.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("degenerate denominator: {0}")]
    DegenerateDenominator(String),

    #[error("degenerate coefficient: {0}")]
    DegenerateCoefficient(String),

    #[error(
        "series did not converge within {max_layers} layers (last layer max |term| = {last_max:e})"
    )]
    NoConvergence { max_layers: usize, last_max: f64 },

    #[error("argument outside the convergence domain: {0}")]
    DomainError(String),

    #[error("unsupported relation: {0}")]
    UnsupportedRelation(String),

    #[error("unknown identity: {0}")]
    UnknownIdentity(String),

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("non-finite value: {0}")]
    NonFinite(String),

    #[error("term {index}: {source}")]
    InTerm {
        index: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// Stable short name of the variant, used in CLI diagnostics.
    pub fn kind_name(&self) -> &'static str {
        match self {
            Error::DegenerateDenominator(_) => "DegenerateDenominator",
            Error::DegenerateCoefficient(_) => "DegenerateCoefficient",
            Error::NoConvergence { .. } => "NoConvergence",
            Error::DomainError(_) => "DomainError",
            Error::UnsupportedRelation(_) => "UnsupportedRelation",
            Error::UnknownIdentity(_) => "UnknownIdentity",
            Error::InvalidParameter(_) => "InvalidParameter",
            Error::NonFinite(_) => "NonFinite",
            Error::InTerm { source, .. } => source.kind_name(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
