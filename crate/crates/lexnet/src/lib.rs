//! Feature-rich multiplex lexical network analysis.
//!
//! A lexicon is a set of words carrying categorical features (frequency,
//! length, polysemy bins) connected across named layers; all analysis runs
//! on the aggregated simple graph. The crate provides:
//!
//! - the multi-scale conformity score per word per attribute, with
//!   label-shuffle and degree-preserving-rewire null baselines;
//! - kernel detection by clustering conformity vectors (K-Means + elbow),
//!   categorical features (K-Modes), and k-core decomposition;
//! - core quality metrics, degree curves, and bigram part-of-speech
//!   profiles;
//! - four biased graph-walk models of word acquisition plus a random
//!   baseline, evaluated per CDI and age-of-acquisition bin with z-scored
//!   significance.
//!
//! Everything randomized takes an explicit seed and is reproducible
//! bit-for-bit under it.

pub mod clustering;
pub mod conformity;
pub mod error;
pub mod evaluation;
pub mod ingest;
pub mod lexicon;
pub mod quality;
pub mod randomization;
pub mod seeds;
#[cfg(test)]
pub(crate) mod testutil;
pub mod walks;

pub use error::{Error, Result};
pub use lexicon::{Attribute, LayerId, MultiplexLexicon, WordId, WordRecord};
