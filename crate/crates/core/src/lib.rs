//! Ruijsenaars difference operators `D_r`, the Wronski-type family `H_l`,
//! and numerical and exact verification of the identities relating them.
//!
//! The numeric side works with arbitrary-precision complex numbers over a
//! bracket function `[z]` (elliptic, trigonometric or rational). The
//! [`macdonald`] module works in exact rational arithmetic with the
//! multiplicative (Macdonald) form of the operators.

pub mod bracket;
pub mod diffop;
pub mod error;
pub mod kernels;
pub mod macdonald;
pub mod precision;
pub mod qseries;
pub mod residual;
pub mod ruijsenaars;
pub mod sampling;

pub use bracket::{BracketFunction, FlavorKind};
pub use diffop::{DiffOperator, ModelParams, MultiIndex, ResidualReport};
pub use error::{Error, Result};
pub use precision::Precision;
pub use residual::Weighted;
pub use sampling::Sampler;
