use thiserror::Error;

/// Everything that can go wrong while validating, solving or simulating a scenario.
///
/// Issue and type indices carried by the variants are 1-based, matching the
/// scenario file format.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("{field}: probabilities sum to {sum}, expected 1")]
    ProbabilitySum { field: &'static str, sum: f64 },

    #[error("{field}: entry {index} is negative or not finite ({value})")]
    InvalidProbability {
        field: &'static str,
        index: usize,
        value: f64,
    },

    #[error("{field}: expected length {expected}, found {found}")]
    Shape {
        field: &'static str,
        expected: usize,
        found: usize,
    },

    #[error("{field} must be positive")]
    NotPositive { field: &'static str },

    #[error("discounts: issue {issue} has discount factor {value}, expected a value in (0, 1]")]
    DiscountOutOfRange { issue: usize, value: f64 },

    #[error("{field}: type index {value} out of range 1..={r}")]
    TypeIndexOutOfRange {
        field: &'static str,
        value: usize,
        r: usize,
    },

    #[error("K: weight for type {type_index}, issue {issue} is {value}; setting {setting} requires strictly positive weights")]
    NonPositiveWeight {
        type_index: usize,
        issue: usize,
        value: f64,
        setting: &'static str,
    },

    #[error("K: weight for type {type_index}, issue {issue} is not finite")]
    NonFiniteWeight { type_index: usize, issue: usize },

    #[error("partition: overlap on issue {issue}")]
    PartitionOverlap { issue: usize },

    #[error("partition: issue {issue} is not covered")]
    PartitionMissing { issue: usize },

    #[error("partition: issue {issue} is out of range 1..={m}")]
    PartitionOutOfRange { issue: usize, m: usize },

    #[error("partition: part {part} is empty")]
    PartitionEmptyPart { part: usize },

    #[error("interdependence: {0}")]
    Interdependence(String),

    #[error("tradeoff target {target} outside the achievable interval [{low}, {high}]")]
    InfeasibleTarget { target: f64, low: f64, high: f64 },

    #[error("tie enumeration needs {required} packages, above the cap of {cap}")]
    EnumerationCap { required: u128, cap: usize },

    #[error("belief support became empty at t = {t} ({agent} updating)")]
    EmptySupport { t: usize, agent: &'static str },

    #[error("oracle budget exceeded: {0}")]
    Budget(String),

    #[error("no grid allocation meets the constraint at step {step}")]
    NoFeasibleGridPoint { step: f64 },

    #[error("line {line}, column {column}: {message}")]
    Parse {
        line: usize,
        column: usize,
        message: String,
    },
}

pub type Result<T> = std::result::Result<T, Error>;
