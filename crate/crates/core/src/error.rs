use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("operation requires a nonempty window")]
    EmptyWindow,

    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("schedule sizes must be strictly increasing and positive: {0:?}")]
    NonMonotoneSchedule(Vec<i64>),

    #[error("covers live on different complexes")]
    ComplexMismatch,

    #[error("not a cover: {uncovered} cells are uncovered")]
    NotACover { uncovered: usize },

    #[error("open set is not closed under cofaces (cell {cell})")]
    NotOpen { cell: usize },

    #[error("no admissible witness at resolution {resolution}: vertex {vertex} has no admissible member; refine the grid")]
    ResolutionTooCoarse { resolution: u32, vertex: usize },

    #[error("resolution {requested} is not a multiple of the base resolution {base}")]
    ResolutionMismatch { requested: u32, base: u32 },

    #[error("epsilon {epsilon} is below the grid quantum {quantum}")]
    EpsilonBelowGrid { epsilon: f64, quantum: f64 },

    #[error("window too small for the metric truncation: need {required} elements, window has {found}")]
    WindowTooSmall { required: usize, found: usize },

    #[error("cocycle identity fails at s={s:?}, t={t:?}, y={y}")]
    CocycleViolation { s: Vec<i64>, t: Vec<i64>, y: usize },

    #[error("measure is not invariant: {0}")]
    NonInvariantMeasure(String),

    #[error("model is invalid: {0}")]
    InvalidModel(String),

    #[error("empty fiber over base vertex {0}")]
    EmptyFiber(usize),

    #[error("search budget exhausted")]
    BudgetExhausted,

    #[error("experiment file: {0}")]
    Experiment(String),

    #[error("io: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}
