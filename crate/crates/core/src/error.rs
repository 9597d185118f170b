use thiserror::Error;

/// Errors raised by the library.
#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid symbol {0:?}: words are over {{0,1}}")]
    InvalidSymbol(char),
    #[error("cannot shift a window whose future is empty")]
    EmptyFuture,
    #[error("parameter out of range: {0}")]
    Parameter(String),
    #[error("depth {requested} exceeds the depth cap {cap}")]
    DepthCap { requested: usize, cap: usize },
    #[error("table of {requested} entries exceeds the budget of {budget}")]
    Budget { requested: usize, budget: usize },
    #[error("system failed validation: {0}")]
    Validation(String),
    #[error("distortion envelope violated: |log ratio| = {observed:e} > {bound:e} on word {word}")]
    Distortion { observed: f64, bound: f64, word: String },
    #[error("point lies in the gap of level {level} (word {word:?})")]
    InGap { level: usize, word: String },
    #[error("degenerate interval [{left}, {right}]")]
    Degenerate { left: f64, right: f64 },
    #[error("ratio triple ({l}, {g}, {r}) is outside the open simplex")]
    OutsideSimplex { l: f64, g: f64, r: f64 },
    #[error("Hölder bound violated between {y} and {w}: {lhs:e} > {bound:e}")]
    Holder { y: String, w: String, lhs: f64, bound: f64 },
    #[error("scenery identity failed at endpoint {index}: difference {diff:e}")]
    IdentityMismatch { index: usize, diff: f64 },
    #[error("empty set")]
    EmptySet,
    #[error("grids are incompatible and resampling was not permitted")]
    IncompatibleGrids,
    #[error("grid too coarse: {0}")]
    Resolution(String),
    #[error("scaling functions differ at {word}: {diff:e} > tolerance {tol:e}")]
    ScalingMismatch { word: String, diff: f64, tol: f64 },
    #[error("eigen iteration did not converge after {0} steps")]
    EigenNonConvergence(usize),
    #[error("root is not bracketed on [{lo}, {hi}]")]
    NonBracketing { lo: f64, hi: f64 },
    #[error("zero-probability branch after context {0:?}")]
    ZeroProbability(String),
    #[error("cylinder {0:?} carries zero mass")]
    ZeroMass(String),
    #[error("orbit of length {have} is too short, need {need}")]
    InsufficientOrbit { need: usize, have: usize },
    #[error("invariant violated: {0}")]
    Invariant(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    /// True for errors that signal a violated mathematical invariant or bound.
    pub fn is_invariant_violation(&self) -> bool {
        matches!(
            self,
            Error::Validation(_)
                | Error::Distortion { .. }
                | Error::OutsideSimplex { .. }
                | Error::Holder { .. }
                | Error::IdentityMismatch { .. }
                | Error::ScalingMismatch { .. }
                | Error::NonBracketing { .. }
                | Error::Invariant(_)
        )
    }

    /// True for errors caused by a configured resource limit.
    pub fn is_resource_cap(&self) -> bool {
        matches!(self, Error::DepthCap { .. } | Error::Budget { .. })
    }
}

pub type Result<T> = std::result::Result<T, Error>;
