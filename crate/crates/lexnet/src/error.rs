//! Crate-wide error type.

use thiserror::Error;

use crate::lexicon::Attribute;

#[derive(Debug, Error)]
pub enum Error {
    #[error("unknown word `{0}`")]
    UnknownWord(String),

    #[error("self-loop `{word}` in layer `{layer}`")]
    SelfLoop { layer: String, word: String },

    #[error("unknown layer `{0}`")]
    UnknownLayer(String),

    #[error("{path}:{line}: {message}")]
    Parse {
        path: String,
        line: u64,
        message: String,
    },

    #[error("{path}: missing required column `{column}`")]
    MissingColumn { path: String, column: String },

    #[error("{path}: word `{word}` has no feature row (strict mode)")]
    InconsistentWord { path: String, word: String },

    #[error("rank override: no acquisition month for {0:?}; cannot assign AoA bins")]
    MissingAoa(Vec<String>),

    #[error("binning: bin count for {attribute:?} must be >= 2 (got {requested})")]
    InvalidBinCount {
        attribute: Attribute,
        requested: usize,
    },

    #[error("boundaries must be strictly increasing")]
    InvalidBoundaries,

    #[error("AoA threshold must lie in (0, 1], got {0}")]
    InvalidThreshold(f64),

    #[error("alpha must be finite and >= 0, got {0}")]
    InvalidAlpha(f64),

    #[error("word `{word}` has no {attribute:?} bin; run feature binning first")]
    UnbinnedWord { word: String, attribute: Attribute },

    #[error("rewiring failed to produce a simple graph after {retries} retries")]
    RewireFailure { retries: u32 },

    #[error("ensemble size must be >= 1")]
    InvalidInstances,

    #[error("k = {k} exceeds the {distinct} distinct points available")]
    DegenerateK { k: usize, distinct: usize },

    #[error("elbow selection needs at least 3 distinct k values, got {0}")]
    InvalidKRange(usize),

    #[error("core is empty")]
    EmptyCore,

    #[error("graph is empty after exclusion")]
    EmptyGraph,

    #[error("core induces no internal edge with tagged endpoints")]
    NoCoreEdges,

    #[error("lexicon has no words")]
    EmptyLexicon,

    #[error("unknown CDI `{0}`")]
    UnknownCdi(String),

    #[error("unknown AoA bin `{0}`")]
    UnknownBin(String),

    #[error(
        "significance needs two equal-length run lists with n >= 2 (got {model} and {baseline})"
    )]
    InvalidRuns { model: usize, baseline: usize },

    #[error("normative rank has no AoA bins; assign bins first")]
    UnassignedBins,

    #[error(transparent)]
    Io(#[from] std::io::Error),

    #[error(transparent)]
    Csv(#[from] csv::Error),
}

pub type Result<T> = std::result::Result<T, Error>;
