use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum Error {
    #[error("no remainder bits (m = 0)")]
    NoRemainderBits,
    #[error("invalid fixed-point format: n = {n}, p = {p}")]
    InvalidFormat { n: u32, p: u32 },
    #[error("value {bits:#b} does not fit in {width} bits")]
    ValueOutOfRange { bits: u128, width: u32 },
    #[error("rounding up saturates the {n}-bit register")]
    Saturation { n: u32 },
    #[error("random source required for {0} rounding")]
    MissingRng(&'static str),
    #[error("sample count must be at least 1")]
    NoSamples,
    #[error("parse error: {0}")]
    Parse(String),
    #[error("unknown macro gate `{0}`")]
    UnknownMacro(String),
    #[error("invalid gate: {0}")]
    InvalidGate(String),
    #[error("invalid circuit: {0}")]
    InvalidCircuit(String),
    #[error("rotation precision must be set to cost RY gates in the fault-tolerant regime")]
    MissingRotationEps,
    #[error("constant {constant} does not fit in a {width}-bit register")]
    ConstantWidth { constant: u128, width: usize },
    #[error("unsupported rounding configuration: {0}")]
    Unsupported(String),
    #[error("circuit needs {required} qubits, simulator cap is {cap}")]
    QubitCap { required: usize, cap: usize },
    #[error("parameter out of range: {0}")]
    OutOfRange(String),
    #[error("no register size below {cap} meets the error target")]
    NoFeasibleSize { cap: u32 },
    #[error("regime mismatch: {0} vs {1}")]
    RegimeMismatch(String, String),
    #[error("serialization: {0}")]
    Serde(String),
}

pub type Result<T> = std::result::Result<T, Error>;
