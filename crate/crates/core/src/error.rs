use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("λ = {lambda} lies outside the exponential-moment domain {domain}")]
    Domain { lambda: f64, domain: String },

    #[error("quadrature failed to reach tolerance: {0}")]
    Quadrature(String),

    #[error("moment undefined: {0}")]
    Moment(String),

    #[error("E(I^{gamma}) is infinite: ψ({gamma}) = {psi} ≥ 0")]
    Finiteness { gamma: f64, psi: f64 },

    #[error("no Cramér root: ψ < 0 on (0, {upper}]")]
    NoRoot { upper: f64 },

    #[error("sampler did not terminate: {0}")]
    NonTerminating(String),

    #[error("unsupported model: {0}")]
    UnsupportedModel(String),

    #[error("degenerate sample: {0}")]
    DegenerateSample(String),

    #[error("invalid `{field}`: {reason}")]
    Validation { field: String, reason: String },

    #[error("regime certificate failed: {0}")]
    Certificate(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn invalid(field: impl Into<String>, reason: impl Into<String>) -> Self {
        Error::Validation {
            field: field.into(),
            reason: reason.into(),
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;
