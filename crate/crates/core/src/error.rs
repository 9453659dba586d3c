use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("mechanism `{mechanism}` is missing required argument `{arg}`")]
    MissingArgument {
        mechanism: &'static str,
        arg: &'static str,
    },

    #[error("cannot ground argument `{arg}` for mechanism `{mechanism}`: unsupported parameter")]
    UnsupportedArgument { mechanism: String, arg: String },

    #[error("unknown mechanism `{0}`")]
    UnknownMechanism(String),

    #[error("mechanism `{mechanism}` failed on {context}: {source}")]
    Execution {
        mechanism: String,
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error(
        "no candidate event survived the count filter (need at least {min_count:.1} hits per event); \
         increase n_select"
    )]
    NoCandidate { min_count: f64 },
}

impl Error {
    pub(crate) fn invalid(msg: impl Into<String>) -> Self {
        Error::InvalidParameter(msg.into())
    }
}
