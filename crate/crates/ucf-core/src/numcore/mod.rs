//! Minimal dense numerics with reverse-mode automatic differentiation.
//!
//! Just enough to train the encoder and its classification head: a row-major
//! `f64` [`Matrix`], an append-only autodiff [`Tape`], a deterministic
//! SplitMix64 [`Rng`], and a finite-difference gradient oracle.

mod fdcheck;
mod matrix;
mod rng;
mod tape;

pub use fdcheck::finite_diff_check;
pub use matrix::Matrix;
pub use rng::{derive_seed, Rng};
pub use tape::{Gradients, NodeId, Tape};

use thiserror::Error;

/// Numeric-layer errors.
#[derive(Debug, Error)]
pub enum NumError {
    #[error("{op}: shape mismatch {}x{} vs {}x{}", lhs.0, lhs.1, rhs.0, rhs.1)]
    ShapeMismatch {
        op: &'static str,
        lhs: (usize, usize),
        rhs: (usize, usize),
    },
    #[error("matrix init: {rows}x{cols} needs {} values, got {len}", rows * cols)]
    BadInit { rows: usize, cols: usize, len: usize },
    #[error("backward requires a scalar output, got {}x{}", shape.0, shape.1)]
    NonScalarOutput { shape: (usize, usize) },
    #[error("{op}: result would not be finite")]
    NonFinite { op: &'static str },
    #[error("{0}")]
    Contract(&'static str),
}
