use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("{context}: quadrature did not converge (estimated error {achieved:.3e}, requested {requested:.3e})")]
    Accuracy {
        context: String,
        achieved: f64,
        requested: f64,
    },
    #[error("singular map: {0}")]
    Singular(String),
    #[error("no crossing: {0}")]
    NoCrossing(String),
    #[error("diagnostic: {0}")]
    Diagnostic(String),
    #[error("config error: {0}")]
    Config(String),
    #[error("comparison error: {0}")]
    Comparison(String),
    #[error("io error: {0}")]
    Io(String),
}

impl Error {
    /// Prefix the message context, used when a kernel failure bubbles up through a generator.
    pub fn within(self, ctx: &str) -> Self {
        match self {
            Error::Accuracy {
                context,
                achieved,
                requested,
            } => Error::Accuracy {
                context: format!("{ctx}: {context}"),
                achieved,
                requested,
            },
            other => other,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
