use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument outside the domain of the operation (non-positive power, zero noise, ...).
    #[error("domain error: {0}")]
    Domain(String),

    /// LQ factorization found a (numerically) dependent channel row.
    #[error("singular channel: row {row} has pivot {pivot:e} below tolerance")]
    Singular { row: usize, pivot: f64 },

    /// Adaptive quadrature ran out of its panel budget; carries the best estimate so far.
    #[error("quadrature did not converge in {panels} panels (best {value}, error estimate {abs_error:e})")]
    Quadrature { value: f64, abs_error: f64, panels: usize },

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}
