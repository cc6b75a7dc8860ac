use alloc::string::String;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("invalid signal spec: {0}")]
    InvalidSpec(String),
    #[error("signal of length {len} too short for window (needs more than {needed} points)")]
    Window { len: usize, needed: usize },
    #[error("range weight {index} is not strictly positive ({value})")]
    Domain { index: usize, value: f64 },
    #[error("range weights sum to zero")]
    DegenerateWeights,
    #[error("constraint violated: {0}")]
    Constraint(String),
    #[error("time step {t} outside window 1..={l_max}")]
    Range { t: usize, l_max: usize },
    #[error("time step {t} is not inside segment {k} of variable {m}")]
    Segment { m: usize, k: usize, t: usize },
    #[error("index out of range: {0}")]
    Index(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("correlation undefined for constant or too-short input")]
    UndefinedCorrelation,
    #[error("loss became non-finite at iteration {iteration}")]
    Divergence { iteration: usize },
    #[error("invalid config: {0}")]
    Validation(String),
    #[error("instance too large for exhaustive search ({0} candidates)")]
    Size(u128),
}
