use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum GenomeError {
    #[error("invalid symbol {0:?}: not in the 64-symbol alphabet")]
    InvalidSymbol(char),
    #[error("malformed genome: {0}")]
    Malformed(String),
    #[error("empty advance string")]
    EmptyAdvance,
    #[error("encoding error: {0}")]
    Encoding(String),
    #[error("assembler error at line {line}: {message}")]
    Asm { line: usize, message: String },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NetError {
    #[error("input length {got} does not match network input width {expected}")]
    Shape { expected: usize, got: usize },
    #[error("{occupied} occupied slots exceed capacity {capacity}")]
    Capacity { occupied: usize, capacity: usize },
    #[error("weight count {got} does not match network shape ({expected})")]
    Weights { expected: usize, got: usize },
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EnergyError {
    #[error("connection count {n} exceeds maximum {max}")]
    Capacity { n: usize, max: usize },
    #[error("timestep too large: U*dt = {0} >= 1")]
    TimestepTooLarge(f64),
    #[error("photon source distance must be positive (got {0})")]
    Singularity(f64),
    #[error("no light reaches the cell (P*dS = 0); sustainable energy undefined")]
    NoLight,
    #[error("decay rate must be positive (got {0})")]
    NonPositiveDecay(f64),
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SimError {
    #[error("numeric blowup at step {step}: cell {cell} has non-finite state")]
    NumericBlowup { step: u64, cell: u64 },
    #[error(transparent)]
    Genome(#[from] GenomeError),
    #[error(transparent)]
    Energy(#[from] EnergyError),
    #[error(transparent)]
    Net(#[from] NetError),
    #[error("configuration error: {0}")]
    Config(String),
}

#[derive(Debug, Error)]
pub enum SnapshotError {
    #[error("not a bookcell snapshot (bad magic)")]
    BadMagic,
    #[error("unsupported snapshot version {found} (this build reads version {expected})")]
    Version { found: u32, expected: u32 },
    #[error("checksum mismatch: stored {stored:#010x}, computed {computed:#010x}")]
    Checksum { stored: u32, computed: u32 },
    #[error("corrupt snapshot at byte offset {offset}: {message}")]
    Corrupt { offset: usize, message: String },
    #[error("snapshot configuration is invalid: {0}")]
    Config(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
