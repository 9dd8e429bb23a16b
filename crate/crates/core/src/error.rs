use std::fmt;
use std::path::PathBuf;

use thiserror::Error;

/// Pipeline stage, used to tag errors raised by [`crate::attribute`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stage {
    Load,
    Graph,
    Validate,
    Loss,
    Weights,
    Game,
    Shapley,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::Load => "load",
            Stage::Graph => "graph",
            Stage::Validate => "validate",
            Stage::Loss => "loss",
            Stage::Weights => "weights",
            Stage::Game => "game",
            Stage::Shapley => "shapley",
        };
        f.write_str(s)
    }
}

#[derive(Debug, Error)]
pub enum Error {
    // graph
    #[error("graph syntax error: {0}")]
    GraphSyntax(String),
    #[error("node {node:?} lists unknown parent {parent:?}")]
    UnknownParent { node: String, parent: String },
    #[error("duplicate node {0:?}")]
    DuplicateNode(String),
    #[error("graph contains a cycle through node {0:?}")]
    Cycle(String),
    #[error("invalid node {node:?}: {reason}")]
    InvalidNode { node: String, reason: String },

    // schema
    #[error("column {0:?} is missing from the dataset")]
    MissingColumn(String),
    #[error("column {0:?} is not assigned to any graph node")]
    UnassignedColumn(String),
    #[error("column {column:?} is assigned to both {first:?} and {second:?}")]
    DuplicateColumn {
        column: String,
        first: String,
        second: String,
    },
    #[error("source and target schemas differ")]
    SchemaMismatch,

    // data
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error: {0}")]
    Csv(String),
    #[error("row {row}, column {column:?}: cannot parse {value:?} as a number")]
    NonNumeric {
        row: usize,
        column: String,
        value: String,
    },
    #[error("row {row}, column {column:?}: value is not finite")]
    NonFinite { row: usize, column: String },
    #[error("invalid metric: {0}")]
    InvalidMetric(String),
    #[error("row {row}: prediction {value} outside [0, 1]")]
    PredictionOutOfRange { row: usize, value: f64 },
    #[error("row {row}: label {value} is not 0 or 1")]
    LabelNotBinary { row: usize, value: f64 },
    #[error("loss vector is empty")]
    EmptyLosses,
    #[error("invalid weights: {0}")]
    InvalidWeights(String),
    #[error("cannot split {n} samples with fraction {fraction} into two non-empty parts")]
    SplitTooSmall { n: usize, fraction: f64 },

    // estimation
    #[error("need at least {min} samples, got {n}")]
    TooFewSamples { n: usize, min: usize },
    #[error("labels contain a single class")]
    SingleClass,
    #[error("features contain non-finite values")]
    NonFiniteFeature,
    #[error("environment {0} is empty")]
    EmptyEnvironment(&'static str),
    #[error("split mismatch: {0}")]
    SplitMismatch(String),

    // game
    #[error("{k} players exceeds the exact enumeration limit of {max}")]
    TooManyPlayers { k: usize, max: usize },
    #[error("permutation sampling needs at least 2 permutations, got {0}")]
    TooFewPermutations(usize),

    // oracle
    #[error("joint support of {0} configurations is too large to enumerate")]
    SupportTooLarge(usize),
    #[error("invalid discrete SCM: {0}")]
    InvalidScm(String),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),

    #[error("{stage}: {source}")]
    Stage {
        stage: Stage,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    pub fn at(self, stage: Stage) -> Self {
        Error::Stage {
            stage,
            source: Box::new(self),
        }
    }

    /// Stage tag of an error produced by the end-to-end pipeline, if any.
    pub fn stage(&self) -> Option<Stage> {
        match self {
            Error::Stage { stage, .. } => Some(*stage),
            _ => None,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) trait StageExt<T> {
    fn stage(self, stage: Stage) -> Result<T>;
}

impl<T> StageExt<T> for Result<T> {
    fn stage(self, stage: Stage) -> Result<T> {
        self.map_err(|e| e.at(stage))
    }
}
