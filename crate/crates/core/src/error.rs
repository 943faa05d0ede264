use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// Shapes or lengths that do not fit together.
    #[error("structural error: {0}")]
    Structural(String),

    /// Argument outside the domain of an operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A non-finite number showed up where a finite one was required.
    #[error("numeric error: {0}")]
    Numeric(String),

    /// A precondition the caller was responsible for was not met.
    #[error("contract violation: {0}")]
    Contract(String),

    #[error("mass tensor is not positive semidefinite: min eigenvalue {min_eigenvalue:e} < -{tolerance:e}")]
    PsdViolation { min_eigenvalue: f64, tolerance: f64 },

    #[error("insufficient source pool for entity `{entity}`: requested {requested}, available {available}")]
    InsufficientSource {
        entity: String,
        requested: f64,
        available: f64,
    },

    #[error("second-law violation: overhead {overhead} does not cover internal entropy drop {drop}")]
    SecondLaw { overhead: f64, drop: f64 },

    #[error("divergence at t={t} in entity `{entity}`: |intrinsic|={term_int:e}, |coupling|={term_coup:e}, |external|={term_ext:e}")]
    Divergence {
        entity: String,
        t: f64,
        term_int: f64,
        term_coup: f64,
        term_ext: f64,
    },

    #[error("ambiguous sign structure: {0}")]
    Ambiguity(String),

    #[error("unknown entity `{0}`")]
    UnknownEntity(String),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}
