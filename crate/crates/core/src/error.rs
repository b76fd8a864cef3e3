use thiserror::Error;

use crate::population::MeritLabel;

#[derive(Debug, Error)]
pub enum Error {
    #[error("line {line}: {message}")]
    Parse { line: u64, message: String },

    #[error("line {line}: duplicate id `{id}`")]
    DuplicateId { line: u64, id: String },

    #[error("duplicate id `{0}`")]
    DuplicateMember(String),

    #[error("invalid individual: {0}")]
    InvalidIndividual(String),

    #[error("unknown id `{0}`")]
    UnknownId(String),

    #[error("individual `{0}` has no determinant criterion X; a deterministic procedure is required")]
    MissingCriterion(String),

    #[error("individual `{id}` has no value for attribute `{attribute}`")]
    MissingAttribute { id: String, attribute: String },

    #[error("rate undefined: group has no members with J={}", .0.as_u8())]
    UndefinedRate(MeritLabel),

    #[error("group spans members with different configured rates ({0})")]
    AmbiguousRate(String),

    #[error("no configured rates for {attribute}={value}")]
    MissingRate { attribute: String, value: String },

    #[error("group-fair procedure needs at least one attribute value")]
    EmptyValueSet,

    #[error("invalid probability `{0}`: expected a decimal or a/b rational in [0, 1]")]
    InvalidProbability(String),

    #[error("invalid procedure description: {0}")]
    InvalidProcedure(String),

    #[error("tolerance must be a finite non-negative number, got {0}")]
    InvalidTolerance(f64),

    #[error("epsilon must satisfy 0 <= eps < 1/4, got {0}")]
    EpsilonOutOfRange(f64),

    #[error("population of {size} exceeds the exhaustive-search limit of {max_n}; use singletons mode instead")]
    PopulationTooLarge { size: usize, max_n: usize },

    #[error("exhaustive-search limit {0} is above the supported maximum of {max}", max = crate::fairness::MAX_EXHAUSTIVE_N)]
    SearchLimitTooLarge(usize),

    #[error("population is empty")]
    EmptyPopulation,

    #[error("trials must be at least 1")]
    ZeroTrials,

    #[error("duplicate point label `{0}`")]
    DuplicateLabel(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
