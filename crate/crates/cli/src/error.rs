use thiserror::Error;

pub const EXIT_ARGUMENT: i32 = 2;
pub const EXIT_RESOURCE: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Debug, Error)]
pub enum CliError {
    /// Schema or value problem in the config; `pointer` is a JSON pointer
    /// into the config document.
    #[error("invalid config at {pointer}: {message}")]
    Config { pointer: String, message: String },

    #[error(transparent)]
    Core(#[from] gowers_core::Error),

    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

impl CliError {
    pub fn config(pointer: impl Into<String>, message: impl Into<String>) -> Self {
        CliError::Config {
            pointer: pointer.into(),
            message: message.into(),
        }
    }

    pub fn io(path: &std::path::Path, source: std::io::Error) -> Self {
        CliError::Io {
            path: path.display().to_string(),
            source,
        }
    }

    pub fn exit_code(&self) -> i32 {
        use gowers_core::Error as E;
        match self {
            CliError::Config { .. } => EXIT_ARGUMENT,
            CliError::Core(E::Resource { .. }) => EXIT_RESOURCE,
            CliError::Core(E::Io(_)) | CliError::Io { .. } => EXIT_IO,
            CliError::Core(_) => EXIT_ARGUMENT,
        }
    }

    /// Hint printed after the message; exact methods are never swapped for
    /// sampled ones behind the caller's back.
    pub fn hint(&self) -> Option<&'static str> {
        match self {
            CliError::Core(e) if e.is_resource() => Some(
                "raise --budget, or set \"method\": \"monte_carlo\" with \"samples\" and a seed to estimate instead",
            ),
            _ => None,
        }
    }
}

/// Core errors raised while building a config item are attributed to it.
pub(crate) fn at(pointer: &str) -> impl Fn(gowers_core::Error) -> CliError + '_ {
    move |e| match e {
        gowers_core::Error::Argument(m) | gowers_core::Error::Structural(m) | gowers_core::Error::Format(m) => {
            CliError::config(pointer, m)
        }
        other => CliError::Core(other),
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;
