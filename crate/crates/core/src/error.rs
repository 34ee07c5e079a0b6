use std::path::PathBuf;

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("format error: {0}")]
    Format(String),

    #[error("shape mismatch: {left:?} vs {right:?}")]
    ShapeMismatch { left: [usize; 3], right: [usize; 3] },

    #[error("label code {code} is outside the declared scheme")]
    LabelRange { code: u8 },

    #[error("invalid parameter: {0}")]
    InvalidParams(String),

    #[error("degenerate phantom: {0}")]
    DegeneratePhantom(String),

    #[error("brain mask has {found} voxels, need at least {required}")]
    InsufficientForeground { found: usize, required: usize },

    #[error("k-means produced an empty cluster")]
    DegenerateClusters,

    #[error("harmonization control points are not strictly increasing")]
    NonMonotoneMap,

    #[error("training contrast ({0:.6}, {1:.6}) is not T1-w plausible")]
    ImplausibleTrainingContrast(f64, f64),

    #[error("contrast ({0:.6}, {1:.6}) is not T1-w plausible")]
    ImplausibleContrast(f64, f64),

    #[error("external segmenter failed: {0}")]
    ExternalFailure(String),

    #[error("empty input")]
    EmptyInput,

    #[error("every Dice entry is undefined")]
    AllUndefined,

    #[error("all paired differences are zero")]
    DegenerateSample,

    #[error("no paired data supplied")]
    InsufficientData,

    #[error("invalid grid: {0}")]
    InvalidGrid(String),

    #[error("grid has no plausible cells")]
    NoPlausibleCells,

    #[error("{context}: {source}")]
    Context {
        context: String,
        #[source]
        source: Box<Error>,
    },

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl Error {
    pub fn context(self, context: impl Into<String>) -> Self {
        Error::Context {
            context: context.into(),
            source: Box::new(self),
        }
    }

    /// Innermost error, skipping any context wrappers.
    pub fn root(&self) -> &Error {
        match self {
            Error::Context { source, .. } => source.root(),
            other => other,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }
}
