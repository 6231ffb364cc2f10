use thiserror::Error;

/// Failure modes shared by every module.
///
/// The variants line up with the exit-code classes of the command-line
/// runner: structural and argument problems are caller mistakes, resource
/// errors carry the estimated cost so that callers can fall back to a
/// sampled method, and I/O errors come from table import/export.
#[derive(Debug, Error)]
pub enum Error {
    /// Operands that do not belong together (different groups, wrong lengths).
    #[error("structural mismatch: {0}")]
    Structural(String),

    /// A parameter outside its documented domain.
    #[error("invalid argument: {0}")]
    Argument(String),

    /// The requested exact computation exceeds its budget.
    #[error("{what}: estimated cost {estimated} exceeds budget {limit}")]
    Resource {
        what: String,
        estimated: u128,
        limit: u128,
    },

    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),

    #[error("malformed data: {0}")]
    Format(String),
}

impl Error {
    pub(crate) fn structural(msg: impl Into<String>) -> Self {
        Error::Structural(msg.into())
    }

    pub(crate) fn argument(msg: impl Into<String>) -> Self {
        Error::Argument(msg.into())
    }

    pub(crate) fn resource(what: impl Into<String>, estimated: u128, limit: u128) -> Self {
        Error::Resource {
            what: what.into(),
            estimated,
            limit,
        }
    }

    /// True for budget overruns, the only class the runner suggests a
    /// Monte-Carlo fallback for.
    pub fn is_resource(&self) -> bool {
        matches!(self, Error::Resource { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
