//! Inter-lingual visually grounded word embeddings.
//!
//! Pre-trained textual word vectors are mapped into a visually grounded
//! space through a single shared linear alignment. The alignment is trained
//! by encoding captions in one or more languages with per-language LSTM
//! encoders whose outputs are regressed onto precomputed image vectors; the
//! per-language mean-squared errors are summed into one joint objective.
//! After training, the alignment alone grounds any word vector, including
//! words never seen in a caption.
//!
//! The crate also ships the evaluation battery used to compare textual and
//! grounded spaces: Spearman similarity/relatedness scoring, k-means +
//! purity categorization, per-relation cosine profiling over
//! concept/relation/relatum tuples, and nearest-neighbor diffing.

pub mod cli;
pub mod data;
pub mod error;
pub mod eval;
pub mod model;
pub mod numcore;
pub mod seeding;
pub mod train;

pub use error::{Error, Result};
