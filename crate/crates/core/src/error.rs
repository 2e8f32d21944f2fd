use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument lies outside the domain where the formula is valid.
    #[error("domain error: {0}")]
    Domain(String),

    #[error("value out of range: {0}")]
    Range(String),

    /// A sampled profile or grid was queried outside its support.
    #[error("coordinate {value} outside sampled range [{min}, {max}] of {what}")]
    OutOfGrid {
        what: &'static str,
        value: f64,
        min: f64,
        max: f64,
    },

    #[error("mismatched support: {0}")]
    MismatchedSupport(String),

    #[error("invalid profile: {0}")]
    InvalidProfile(String),

    #[error("config error at `{path}`: {message}")]
    Config { path: String, message: String },

    #[error("parameters not identifiable from data: {}", .0.join(", "))]
    Identifiability(Vec<&'static str>),

    #[error("numerical failure: {0}")]
    Numerical(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn config(path: impl Into<String>, message: impl Into<String>) -> Self {
        Error::Config {
            path: path.into(),
            message: message.into(),
        }
    }
}
