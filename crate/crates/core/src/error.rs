use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid parameter `{name}`: {reason}")]
    InvalidParameter { name: &'static str, reason: String },

    #[error("zero virtual gap: E2 = E1 leaves the virtual temperature undefined")]
    ZeroVirtualGap,

    #[error("target spacing {target} is not resonant with the virtual gap E2 - E1 = {gap}")]
    NotResonant { target: f64, gap: f64 },

    #[error("Hilbert-space dimension {dim} exceeds the cap of {cap} for {context}")]
    DimensionCap {
        dim: usize,
        cap: usize,
        context: &'static str,
    },

    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("the reset model is defined for qubit factors only; factor {factor} has dimension {dim}")]
    NonQubitReset { factor: usize, dim: usize },

    #[error("unknown observable `{0}`")]
    UnknownObservable(String),

    #[error("not a valid density matrix: {0}")]
    InvalidState(String),

    #[error("step size {dt} violates the stability guard (max {max_dt})")]
    StepGuard { dt: f64, max_dt: f64 },

    #[error("numerical guard breached: {0}")]
    NumericalGuard(String),

    #[error("stationary state is not unique: null space has dimension {dim}")]
    AmbiguousStationary {
        dim: usize,
        singular_values: Vec<f64>,
        candidates: Vec<crate::state::CMatrix>,
    },

    #[error("operation not supported: {0}")]
    Unsupported(String),

    #[error("outside the machine's operating regime: {0}")]
    Regime(String),

    #[error("break-even energy diverges: the virtual qubit has zero bias (infinite virtual temperature)")]
    InfiniteBreakEven,

    #[error("configuration error: {0}")]
    Config(String),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

impl Error {
    pub(crate) fn param(name: &'static str, reason: impl Into<String>) -> Self {
        Error::InvalidParameter {
            name,
            reason: reason.into(),
        }
    }
}
