use thiserror::Error;

pub type Result<T> = core::result::Result<T, Error>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("node index {index} out of range for {n} nodes")]
    NodeOutOfRange { index: usize, n: usize },
    #[error("edge ({u}, {v}) has invalid weight {weight}")]
    InvalidWeight { u: usize, v: usize, weight: f64 },
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("row {row} is not a probability distribution (sum {sum})")]
    NotStochastic { row: usize, sum: f64 },
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("class {class} has no weighted support")]
    DegenerateClass { class: usize },
    #[error("no node carries label information")]
    NoAnchor,
    #[error("selection is empty")]
    EmptySelection,
    #[error("evaluation set is empty")]
    EmptyEvalSet,
    #[error("iteration diverged after {iterations} steps")]
    Diverged { iterations: usize },
    #[error("singular system")]
    Singular,
    #[error("{method} is not defined in setting {setting}")]
    UnsupportedCombination { method: &'static str, setting: u8 },
}
