use thiserror::Error;

use crate::ledger::OracleLedger;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid fixed-point format: {0}")]
    InvalidFormat(String),

    #[error("value {value} does not fit in {total_bits}-bit fixed point with {frac_bits} fraction bits")]
    Overflow {
        value: f64,
        total_bits: u32,
        frac_bits: u32,
    },

    #[error("coordinate {index} of point cannot be encoded: {source}")]
    CoordinateEncoding {
        index: usize,
        #[source]
        source: Box<Error>,
    },

    #[error("value {value} is not exactly representable with {frac_bits} fraction bits")]
    NotRepresentable { value: f64, frac_bits: u32 },

    #[error("bit string width {actual} does not match expected width {expected}")]
    WidthMismatch { expected: u32, actual: u32 },

    #[error("invalid register layout: {0}")]
    InvalidLayout(String),

    #[error("basis map is not injective on the support: {first:#x} and {second:#x} both map to {image:#x}")]
    Collision { first: u128, second: u128, image: u128 },

    #[error("state norm {norm} deviates from 1")]
    Normalization { norm: f64 },

    #[error("target set for state preparation is empty")]
    EmptyTargets,

    #[error("duplicate point in search set: {0}")]
    DuplicatePoint(String),

    #[error("domain error: {0}")]
    Domain(String),

    #[error("QSearch reached the safety cap after {rounds} rounds without a desired measurement")]
    SafetyCapReached { rounds: u64, ledger: OracleLedger },

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("directions do not positively span R^{0}")]
    NotPositiveSpanning(usize),

    #[error("generating matrix is singular (|det| = {0:e})")]
    SingularGenerator(f64),

    #[error("mesh exhausted: requested {requested} distinct representable points, found {available}")]
    MeshExhausted { requested: usize, available: usize },

    #[error("objective returned a non-finite value {value} at {point:?}")]
    NonFiniteObjective { value: f64, point: Vec<f64> },

    #[error("invalid configuration: {0}")]
    Config(String),

    #[error("unknown objective '{name}'; available: {available}")]
    UnknownObjective { name: String, available: String },
}
