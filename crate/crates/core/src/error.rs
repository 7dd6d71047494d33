use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid graph: {0}")]
    InvalidGraph(String),

    #[error("vertex {vertex} out of range for a graph on {n} vertices")]
    VertexOutOfRange { vertex: usize, n: usize },

    #[error("length mismatch: expected {expected}, got {actual}")]
    LengthMismatch { expected: usize, actual: usize },

    #[error("observable {0} is not Hermitian (phase must be +1 or -1)")]
    NonHermitian(String),

    #[error("cannot parse Pauli string {0:?}")]
    PauliParse(String),

    #[error("dense register of {qubits} qubits exceeds the cap of {cap} qubits")]
    DenseCapExceeded { qubits: usize, cap: usize },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("value {value} outside the allowed range {range}")]
    OutOfRange { value: f64, range: &'static str },

    #[error("invalid tableau: {0}")]
    InvalidTableau(String),

    #[error("measurement angle {0} is not a multiple of pi/2; the tableau backend cannot measure it")]
    NonCliffordAngle(f64),

    #[error("invalid protocol parameters: {0}")]
    InvalidParams(String),

    #[error("strategy is inconsistent with the parameters: {0}")]
    InvalidStrategy(String),

    #[error("copy {copy}: {reason}")]
    CopyState { copy: usize, reason: String },

    #[error("inconsistent inputs: {0}")]
    InconsistentInputs(String),

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}
