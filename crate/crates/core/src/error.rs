use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("site {site} out of range for {qubits} qubits")]
    SiteOutOfRange { site: usize, qubits: usize },
    #[error("repeated site {0} in a Pauli term")]
    RepeatedSite(usize),
    #[error("capacity exceeded: {requested} qubits requested, limit is {limit}")]
    Capacity { requested: usize, limit: usize },
    #[error("dimension mismatch: {left} vs {right}")]
    DimensionMismatch { left: usize, right: usize },
    #[error("matrix is not square or its dimension {0} is not a power of two")]
    BadShape(usize),
    #[error("non-finite matrix entries")]
    NonFinite,
    #[error("empty site set")]
    EmptySiteSet,
    #[error("operator is not Hermitian (defect {0:e})")]
    NotHermitian(f64),
    #[error("vectors are not orthonormal (defect {0:e})")]
    NotOrthonormal(f64),
    #[error("matrix is not an orthogonal projector (defect {0:e})")]
    NotProjector(f64),
    #[error("generators do not commute (commutator norm {0:e})")]
    NonCommuting(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("model error: {0}")]
    Model(String),
    #[error("Hamiltonian leaks out of the protected subspace (commutator norm {0:e})")]
    Leakage(f64),
    #[error("ramp segment {0} passed to the piecewise-constant evolver")]
    RampInPiecewise(usize),
    #[error("integration did not converge: {0}")]
    Integration(String),
    #[error("trajectory grid mismatch: {states} states for {steps} steps")]
    GridMismatch { states: usize, steps: usize },
    #[error("schedule is not cyclic")]
    NonCyclic,
    #[error("spectral gap closes: {0}")]
    GapClosure(String),
    #[error("adiabaticity margin {margin:.3} below required {required}")]
    Adiabaticity { margin: f64, required: f64 },
    #[error("rotation angle is commensurate with pi (close to {p}/{q})")]
    SynthesisDegeneracy { p: i64, q: i64 },
    #[error("no power up to {cap} reaches tolerance {epsilon:e}")]
    SynthesisCapacity { cap: u64, epsilon: f64 },
    #[error("phase table is missing combination ({0}, {1})")]
    MissingPhase(u8, u8),
    #[error("state is not normalized (norm {0})")]
    Unnormalized(f64),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}
