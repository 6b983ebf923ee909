use thiserror::Error;

/// Errors shared across the crate.
#[derive(Debug, Error)]
pub enum Error {
    /// Lattice enumeration is capped at four sources; the node count grows
    /// like the Dedekind numbers (7579 nodes already for n = 5).
    #[error("unsupported source count {0}: must be between 1 and 4")]
    UnsupportedOrder(usize),

    #[error("antichains refer to different source counts ({0} vs {1})")]
    MismatchedSources(usize, usize),

    #[error("set {{{0}}} is nested inside another set of the same antichain")]
    NestedSets(String),

    #[error("source index {index} outside 1..={n}")]
    SourceIndexOutOfRange { index: usize, n: usize },

    #[error("empty source set in antichain")]
    EmptySet,

    #[error("cannot parse antichain from {0:?}")]
    ParseAntichain(String),

    #[error("lattice value missing for antichain {0}")]
    IncompleteLattice(String),

    #[error("probability masses sum to {0}, expected 1")]
    UnnormalizedPmf(f64),

    #[error("negative probability mass {mass} at state {state:?}")]
    NegativeMass { mass: f64, state: Vec<usize> },

    #[error("state {0:?} outside the declared alphabets")]
    StateOutOfRange(Vec<usize>),

    #[error("local redundancy undefined: {0}")]
    UndefinedLocalValue(String),

    #[error("unknown gate name {0:?}")]
    UnknownGate(String),

    #[error("covariance block is not positive definite")]
    NotPositiveDefinite,

    #[error("gate parameter out of range: {0}")]
    InvalidGate(String),

    #[error("finite-difference step too large: perturbed density not positive")]
    StepTooLarge,

    #[error("need at least {needed} samples, got {got}")]
    InsufficientSamples { needed: usize, got: usize },

    #[error("non-finite value at row {row}, column {col}")]
    NonFiniteValue { row: usize, col: usize },

    #[error("column {0} is constant; cannot standardize")]
    DegenerateColumn(usize),

    #[error("column groups are invalid: {0}")]
    BadLayout(String),

    #[error("digamma undefined for argument {0}")]
    DigammaDomain(u64),
}

pub type Result<T> = std::result::Result<T, Error>;
