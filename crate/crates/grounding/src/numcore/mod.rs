//! Dense-matrix numerics: forward ops, reverse-mode differentiation over a
//! per-batch tape, and the NAdam update rule.

pub mod matrix;
pub mod nadam;
pub mod tape;

pub use matrix::{sigmoid, Matrix};
pub use nadam::{NadamConfig, NadamState};
pub use tape::{Gradients, NodeId, Tape};
