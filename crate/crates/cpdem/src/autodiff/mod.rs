//! Nested automatic differentiation: forward-mode tangent bundles that are
//! composable under a reverse-mode gradient tape.
//!
//! Spatial derivatives of the network output are carried as forward-mode
//! tangent slots ([`TangentValue`], at most three slots, one per spatial
//! coordinate). The scalar payload of a tangent bundle is anything that
//! implements [`Scalar`]: plain `f64` for evaluation, a tape variable
//! [`Var`] for parameter gradients, or another `TangentValue` for second
//! derivatives. Gradients of an energy with respect to the trainable
//! parameters are then a single reverse sweep over the tape even though the
//! energy contains spatial derivatives of the network output: the input
//! dimension is at most five, which makes forward mode cheap, while the
//! parameter dimension is in the thousands, which makes reverse mode
//! mandatory.
//!
//! The primitive set is closed: add, sub, mul, div, neg, scale/shift (affine
//! with a plain constant), recip, powi, exp, ln, tanh, relu, min, max.
//! Adding a primitive requires a forward-tangent rule, a reverse-adjoint
//! rule, and a finite-difference test.
//!
//! Convention: `relu` is differentiated with subgradient 0 at exactly 0;
//! `min`/`max` select their first operand on ties.

mod dual;
mod scalar;
mod tape;

pub use dual::{TangentValue, MAX_TANGENTS};
pub use scalar::Scalar;
pub use tape::{dual_eval, tape_gradient, GradientVector, OpKind, Tape, Var};

use std::fmt;

/// Errors raised by the differentiation engine.
#[derive(Debug, Clone, PartialEq)]
pub enum AdError {
    /// `ln` of a non-positive value.
    LnDomain { value: f64 },
    /// Division by a value recorded as exactly zero.
    DivisionByZero,
    /// A tape node holds a non-finite value; `node` is the first such index.
    NonFinite { node: usize, op: OpKind, value: f64 },
    /// Seed direction index out of range in `dual_eval`.
    SeedOutOfRange { seed: usize, len: usize },
}

impl fmt::Display for AdError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            AdError::LnDomain { value } => write!(f, "ln of non-positive value {value}"),
            AdError::DivisionByZero => write!(f, "division by zero"),
            AdError::NonFinite { node, op, value } => {
                write!(f, "non-finite value {value} at tape node {node} ({op:?})")
            }
            AdError::SeedOutOfRange { seed, len } => {
                write!(f, "seed index {seed} out of range for {len} inputs")
            }
        }
    }
}

impl std::error::Error for AdError {}
