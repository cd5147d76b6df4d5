use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid theta: {0}")]
    InvalidTheta(String),

    #[error("invalid prior: {0}")]
    InvalidPrior(String),

    #[error("channel {channel} out of range for {channels} channels")]
    ChannelOutOfRange { channel: usize, channels: usize },

    /// The observation has probability zero under every atom of the prior.
    #[error("observation has zero likelihood under every atom")]
    ZeroLikelihood,

    #[error("invalid history: {0}")]
    InvalidHistory(String),

    #[error("state space exceeded: more than {cap} states")]
    StateSpaceExceeded { cap: usize },

    #[error("state not present in value table")]
    UnknownState,

    #[error("channel {0} has not been sensed yet")]
    UninitializedChannel(usize),

    #[error("divergence D({p}||{q}) is infinite")]
    DivergenceInfinite { p: f64, q: f64 },

    #[error("every channel has zero availability")]
    AllChannelsBusy,

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("invalid config field `{field}`: {message}")]
    ConfigInvalid { field: String, message: String },

    #[error("no result rows to emit")]
    EmptyResults,

    #[error("i/o error: {0}")]
    Io(String),
}

impl Error {
    pub fn config(field: impl Into<String>, message: impl Into<String>) -> Self {
        Error::ConfigInvalid {
            field: field.into(),
            message: message.into(),
        }
    }

    /// Stable machine-readable name of the variant.
    pub fn kind(&self) -> &'static str {
        match self {
            Error::InvalidTheta(_) => "InvalidTheta",
            Error::InvalidPrior(_) => "InvalidPrior",
            Error::ChannelOutOfRange { .. } => "ChannelOutOfRange",
            Error::ZeroLikelihood => "ZeroLikelihood",
            Error::InvalidHistory(_) => "InvalidHistory",
            Error::StateSpaceExceeded { .. } => "StateSpaceExceeded",
            Error::UnknownState => "UnknownState",
            Error::UninitializedChannel(_) => "UninitializedChannel",
            Error::DivergenceInfinite { .. } => "DivergenceInfinite",
            Error::AllChannelsBusy => "AllChannelsBusy",
            Error::InvalidArgument(_) => "InvalidArgument",
            Error::ConfigInvalid { .. } => "ConfigInvalid",
            Error::EmptyResults => "EmptyResults",
            Error::Io(_) => "IoError",
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
