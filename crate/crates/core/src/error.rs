use crate::linalg::LinalgError;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("numerical failure in frequency bin {bin}: {source}")]
    Numerical {
        bin: usize,
        #[source]
        source: LinalgError,
    },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("invalid number of sources K={k} for {channels} channels ({reason})")]
    InvalidK {
        k: usize,
        channels: usize,
        reason: &'static str,
    },
    #[error("ip2 requires K=1 (got K={k})")]
    Ip2RequiresSingleSource { k: usize },
    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(&'static str),
}

impl Error {
    pub(crate) fn at_bin(bin: usize) -> impl FnOnce(LinalgError) -> Error {
        move |source| Error::Numerical { bin, source }
    }

    /// Frequency bin of a numerical failure, when known.
    pub fn bin(&self) -> Option<usize> {
        match self {
            Error::Numerical { bin, .. } => Some(*bin),
            _ => None,
        }
    }
}
