use thiserror::Error;

use crate::word::BinWord;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("cannot parse {what} from {input:?}: {reason}")]
    Parse {
        what: &'static str,
        input: String,
        reason: String,
    },
    #[error("slope of a degenerate pair x = y = {0}")]
    DegeneratePair(String),
    #[error("empty interval [{0}, {1}]")]
    EmptyInterval(String, String),
    #[error("invalid parameter: {0}")]
    Parameter(String),
    #[error("point {0} outside [0, 1]")]
    OutOfRange(String),
    #[error("malformed piecewise function: {0}")]
    Piecewise(String),
    #[error("prefix of length {available} too short for depth {needed}")]
    InsufficientPrefix { needed: usize, available: usize },
    #[error("word {word} is deeper than table depth {depth}")]
    Depth { word: BinWord, depth: usize },
    #[error("resolution 2^-{level} exceeds table depth {depth}")]
    Resolution { level: u32, depth: usize },
    #[error("table is missing the value at {0}")]
    IncompleteTable(BinWord),
    #[error("unfair table at {word}: children sum minus twice parent is {residual}")]
    Unfair { word: BinWord, residual: String },
    #[error("negative martingale value {value} at {word}")]
    Negative { word: BinWord, value: String },
    #[error("table violates declared bounds at {word}: value {value}")]
    InvalidBounds { word: BinWord, value: String },
    #[error("staging error: {0}")]
    Staging(String),
    #[error("machine error: {0}")]
    Machine(String),
    #[error("oracle is not additive at stage {stage}, word {word}: worst residual {residual}")]
    NonAdditiveOracle {
        stage: usize,
        word: BinWord,
        residual: String,
    },
    #[error("schedule error: {0}")]
    Schedule(String),
    #[error("zigzag spec error: {0}")]
    Spec(String),
    #[error("contract violated: {0}")]
    Contract(String),
    #[error("no level up to {cap} witnesses the measure bound for stage {stage}")]
    NonAtomicWitnessMissing { stage: usize, cap: usize },
    #[error("precondition failed: {0}")]
    Precondition(String),
    #[error("point has a dyadic coordinate and cannot be placed in a unique cube: {0}")]
    Ambiguity(String),
    #[error("point lies on a cube boundary: {0}")]
    Boundary(String),
    #[error("dimension mismatch: {0} vs {1}")]
    DimensionMismatch(usize, usize),
    #[error("refinement to level {requested} not built (have {built})")]
    NotBuilt { requested: usize, built: usize },
}

impl Error {
    /// Stable module-qualified code, used by the CLI when reporting.
    pub fn code(&self) -> &'static str {
        match self {
            Error::Parse { .. } => "io.parse",
            Error::DegeneratePair(_) => "exact-core.degenerate-pair",
            Error::EmptyInterval(..) => "exact-core.empty-interval",
            Error::Parameter(_) => "exact-core.parameter",
            Error::OutOfRange(_) => "exact-core.range",
            Error::Piecewise(_) => "exact-core.piecewise",
            Error::InsufficientPrefix { .. } => "exact-core.insufficient-prefix",
            Error::Depth { .. } | Error::Resolution { .. } => "martingale-kernel.depth",
            Error::IncompleteTable(_) => "martingale-kernel.incomplete-table",
            Error::Unfair { .. } => "martingale-kernel.unfair",
            Error::Negative { .. } => "martingale-kernel.negative",
            Error::InvalidBounds { .. } => "martingale-kernel.invalid-bounds",
            Error::Staging(_) => "martingale-kernel.staging",
            Error::Machine(_) => "interval-re.machine",
            Error::NonAdditiveOracle { .. } => "interval-re.non-additive-oracle",
            Error::Schedule(_) => "variation-synthesis.schedule",
            Error::Spec(_) => "variation-synthesis.spec",
            Error::Contract(_) => "contract",
            Error::NonAtomicWitnessMissing { .. } => {
                "variation-synthesis.non-atomic-witness-missing"
            }
            Error::Precondition(_) => "oscillator.precondition",
            Error::Ambiguity(_) => "schnorr-lebesgue.ambiguity",
            Error::Boundary(_) => "schnorr-lebesgue.boundary",
            Error::DimensionMismatch(..) => "schnorr-lebesgue.dimension",
            Error::NotBuilt { .. } => "schnorr-lebesgue.depth",
        }
    }

    pub(crate) fn parse(what: &'static str, input: &str, reason: impl Into<String>) -> Self {
        Error::Parse {
            what,
            input: input.to_string(),
            reason: reason.into(),
        }
    }
}
