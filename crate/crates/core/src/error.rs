use thiserror::Error;

/// Errors produced anywhere in the library.
#[derive(Debug, Error)]
pub enum Error {
    /// An angular momentum label beyond the precomputed tables was requested.
    #[error("ell = {ell} exceeds the supported maximum of {limit}")]
    Capability { ell: usize, limit: usize },

    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested coupled irrep is not contained in ell1 x ell2.
    #[error(
        "selection rule violated: ell = {ell} is outside [|{ell1} - {ell2}|, {ell1} + {ell2}]"
    )]
    SelectionRule {
        ell1: usize,
        ell2: usize,
        ell: usize,
    },

    /// Two points closer than the minimum resolvable separation.
    #[error("degenerate geometry: separation {radius:e} is not above r_min = {r_min:e}")]
    Degeneracy { radius: f64, r_min: f64 },

    #[error("non-finite loss in epoch {epoch}: {detail}")]
    NonFinite { epoch: usize, detail: String },

    #[error("{source_name}:{line}: {message}")]
    Parse {
        source_name: String,
        line: usize,
        message: String,
    },

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn arg_err<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Argument(msg.into()))
}
