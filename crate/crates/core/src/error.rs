use std::path::PathBuf;

/// Errors produced anywhere in the toolkit.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("malformed header in {path}: {reason}")]
    MalformedHeader { path: PathBuf, reason: String },

    #[error("column count: expected {expected}, found {found} (line {line})")]
    ColumnCount {
        expected: usize,
        found: usize,
        line: usize,
    },

    #[error("NaN run of {len} samples in column {column} exceeds the {max}-sample repair limit")]
    NanGap { column: usize, len: usize, max: usize },

    #[error("invalid trajectory: {0}")]
    InvalidTrajectory(String),

    #[error("cutoff {cutoff_hz} Hz is at or above Nyquist ({nyquist_hz} Hz)")]
    CutoffAboveNyquist { cutoff_hz: f64, nyquist_hz: f64 },

    #[error("trajectory too short for filtering: {len} samples, need at least {min}")]
    TooShort { len: usize, min: usize },

    #[error("no crossings of the {threshold_n} N threshold found")]
    NoCrossings { threshold_n: f64 },

    #[error("insufficient cycles: need {needed} heel strikes, found {found}")]
    InsufficientCycles { needed: usize, found: usize },

    #[error("rank-deficient input: {0}")]
    RankDeficient(String),

    #[error("fewer than 4 components with nonzero variance (found {0})")]
    FewerThanFourComponents(usize),

    #[error("flat spectrum: no dominant frequency")]
    FlatSpectrum,

    #[error("did not converge after {iterations} iterations: {what}")]
    NonConvergence { what: String, iterations: usize },

    #[error("coefficient of motion {0} outside [-5, 5]")]
    AlphaOutOfRange(f64),

    #[error("degenerate bounding box: all projected points coincide")]
    DegenerateBoundingBox,

    #[error("empty frame sequence")]
    EmptyFrames,

    #[error("ambient dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),

    #[error("missing events: {0}")]
    MissingEvents(String),

    #[error("zero denominator in symmetry index")]
    ZeroDenominator,

    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),

    #[error("need at least {needed} {what}, got {got}")]
    TooFew {
        what: &'static str,
        needed: usize,
        got: usize,
    },

    #[error("singular design: {0}")]
    SingularDesign(String),

    #[error("insufficient repeats: {0} selection(s)")]
    InsufficientRepeats(usize),

    #[error("protocol violation: {0}")]
    Protocol(String),

    #[error("not found: {0}")]
    NotFound(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("I/O error on {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error(transparent)]
    Csv(#[from] csv::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

impl Error {
    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        Error::Io {
            path: path.into(),
            source,
        }
    }

    pub(crate) fn protocol(msg: impl Into<String>) -> Self {
        Error::Protocol(msg.into())
    }
}
