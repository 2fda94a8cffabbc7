use std::fmt;

pub type Result<T> = std::result::Result<T, Error>;

/// Stage of the integrated sensing pipeline, carried by [`Error::Stage`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Welch,
    Router,
    EnergyPath,
    WaveletPath,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            Stage::Welch => "welch",
            Stage::Router => "router",
            Stage::EnergyPath => "energy path",
            Stage::WaveletPath => "wavelet path",
        };
        f.write_str(name)
    }
}

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid argument `{name}`: {reason}")]
    InvalidArgument { name: &'static str, reason: String },

    #[error("length {0} is not a power of two")]
    NotPowerOfTwo(usize),

    #[error("buffer of {len} samples is too short: {reason}")]
    TooShort { len: usize, reason: String },

    #[error("band selection contains no frequency bins")]
    EmptyBand,

    #[error("scale index {scale_index} needs at least {required} PSD bins, got {bins}")]
    ScaleTooLarge {
        scale_index: u32,
        required: usize,
        bins: usize,
    },

    #[error("threshold inversion did not converge after {iterations} iterations")]
    NoConvergence { iterations: usize },

    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub(crate) fn invalid(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidArgument {
            name,
            reason: reason.into(),
        }
    }

    pub(crate) fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }
}
