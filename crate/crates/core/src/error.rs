use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("state vector is zero")]
    ZeroVector,
    #[error("length {0} is not a power of two >= 2")]
    NotPowerOfTwo(usize),
    #[error("state norm {0} is not within tolerance of 1")]
    NotNormalized(f64),
    #[error("qubit count {n} outside supported range {min}..={max}")]
    QubitRange { n: usize, min: usize, max: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("invalid gate targets: {0}")]
    InvalidTargets(String),
    #[error("matrix is not unitary (residual {0:e})")]
    NotUnitary(f64),
    #[error("dense matrix of {qubits} qubits exceeds the cap of {cap}")]
    DimensionCap { qubits: usize, cap: usize },
    #[error("circuit does not factor against basis {basis}: {reason}")]
    NoFactorization { basis: String, reason: String },
    #[error("invalid probability vector: {0}")]
    InvalidProbabilities(String),
    #[error("invalid noise scale {0}; must lie in [0, 1]")]
    InvalidLambda(f64),
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("invalid counts: {0}")]
    InvalidCounts(String),
    #[error("missing measurement setting `{0}`")]
    MissingSetting(String),
    #[error("unsupported protocol {0}")]
    UnsupportedProtocol(u8),
    #[error("gate cannot be expressed in OpenQASM 2.0: {0}")]
    Inexpressible(String),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
