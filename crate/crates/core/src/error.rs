use thiserror::Error;

/// Errors produced anywhere in the simulator.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("expected {expected} entries for {n_qubits} qubit(s), got {got}")]
    Dimension {
        n_qubits: usize,
        expected: usize,
        got: usize,
    },
    #[error("state is not normalized (norm^2 = {0})")]
    NotNormalized(f64),
    #[error("matrix is not Hermitian (max deviation {0:e})")]
    NotHermitian(f64),
    #[error("matrix is not unitary (max deviation {0:e})")]
    NotUnitary(f64),
    #[error("density matrix has trace {0}, expected 1")]
    BadTrace(f64),
    #[error("density matrix has negative eigenvalue {0:e}")]
    NotPositive(f64),
    #[error("reference state for a pure-state fidelity is mixed (purity {0})")]
    NotPure(f64),
    #[error("gate of dimension {gate_dim} cannot act on {n_targets} target(s)")]
    GateDimension { gate_dim: usize, n_targets: usize },
    #[error("qubit index {index} out of range for a {n_qubits}-qubit register")]
    QubitOutOfRange { index: usize, n_qubits: usize },
    #[error("qubit index {0} repeated")]
    RepeatedQubit(usize),
    #[error("partial trace needs at least one kept qubit")]
    EmptyKeepSet,
    #[error("post-selection needs a register of at least two qubits")]
    PostSelectSingleQubit,
    #[error("theta = {0} lies outside [0, pi/2]")]
    ThetaOutOfRange(f64),
    #[error("Gram matrix mismatch: <in+|in-> = {input}, <out+|out-> = {output}")]
    GramMismatch { input: f64, output: f64 },
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid circuit layout: {0}")]
    InvalidLayout(String),
    #[error("layout search needs at least 3 interior grid angles, got {0}")]
    GridTooSmall(usize),
    #[error("no coupling between spins {0} and {1}")]
    ZeroCoupling(char, char),
    #[error("pulse flip angle {0} outside (-2pi, 2pi]")]
    FlipOutOfRange(f64),
    #[error("negative delay {0}")]
    NegativeDelay(f64),
    #[error("evolution time must be non-negative, got {0}")]
    NegativeTime(f64),
    #[error("polarization {0} outside (0, 1]")]
    EpsilonOutOfRange(f64),
    #[error("the probe qubit cannot be read out; observe qubit b or c")]
    ProbeReadout,
    #[error("parse error on line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("layout cache {0} not found; run `pqcm find-layout` first")]
    MissingLayoutCache(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("i/o error: {0}")]
    Io(String),
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T> = std::result::Result<T, Error>;
