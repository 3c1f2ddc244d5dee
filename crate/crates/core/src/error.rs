use crate::bohmengine::Path;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid frame: |v| = {speed} must be strictly below 1")]
    InvalidFrame { speed: f64 },

    #[error("dimension mismatch in {context}: expected {expected}, found {found}")]
    DimensionMismatch {
        context: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("non-finite value in {0}")]
    NonFinite(&'static str),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("point {point:?} at t = {time} lies outside the grid extents")]
    OutOfDomain {
        time: f64,
        point: Vec<f64>,
        /// Path integrated up to the last in-domain sample, when available.
        partial: Option<Box<Path>>,
    },

    #[error(
        "boundary contamination: probability mass {mass:e} inside the guard band at t = {time}"
    )]
    BoundaryContamination { time: f64, mass: f64 },

    #[error("time {time} outside the available range [{lo}, {hi}]")]
    TimeOutOfRange { time: f64, lo: f64, hi: f64 },

    #[error("no hyperplane crossing for particle {particle} in window [{lo}, {hi}]")]
    NoRoot { particle: usize, lo: f64, hi: f64 },

    #[error(
        "ambiguous hyperplane crossing for particle {particle}: {roots} roots, \
         superluminal segment over t in [{seg_lo}, {seg_hi}]"
    )]
    AmbiguousRoot {
        particle: usize,
        roots: usize,
        seg_lo: f64,
        seg_hi: f64,
    },

    #[error("solver did not converge: {0}")]
    NoConvergence(String),

    #[error("inconclusive fork: bundle separation {separation} is below 6 x width {width}")]
    InconclusiveFork { separation: f64, width: f64 },

    #[error("insufficient samples for {what}: {found} < {required}")]
    InsufficientSamples {
        what: &'static str,
        found: usize,
        required: usize,
    },

    #[error("worlds are not synchronized: anchor times {a} and {b} differ")]
    Unsynchronized { a: f64, b: f64 },

    #[error("config: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    /// Input-validation failures, as opposed to numerical or domain failures
    /// discovered while computing.
    pub fn is_validation(&self) -> bool {
        matches!(
            self,
            Error::InvalidFrame { .. }
                | Error::DimensionMismatch { .. }
                | Error::NonFinite(_)
                | Error::InvalidArgument(_)
                | Error::Unsynchronized { .. }
                | Error::Config(_)
                | Error::Io(_)
                | Error::Json(_)
        )
    }

    pub(crate) fn dims(context: &'static str, expected: usize, found: usize) -> Self {
        Error::DimensionMismatch {
            context,
            expected,
            found,
        }
    }
}
