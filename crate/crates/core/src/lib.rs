//! SO(3)-covariant N-body networks.
//!
//! The crate is layered bottom-up:
//!
//! - [`so3`]: Wigner D-matrices, Clebsch-Gordan coefficients, Euler angles and
//!   Haar sampling.
//! - [`covariant`]: typed covariant vectors, their tensor products reduced by
//!   Clebsch-Gordan transforms, and the equivariant mixing operation.
//! - [`gates`]: aggregation rules that combine child states with relative
//!   positions (zeroth order, first order, moment gates).
//! - [`network`]: composition schemes, the forward pass producing a scalar
//!   potential, reverse-mode gradients, forces and training.
//! - [`harness`]: synthetic datasets, the self-test runner and CG table export.

#![allow(clippy::needless_range_loop, clippy::neg_cmp_op_on_partial_ord)]

pub mod covariant;
pub mod error;
pub mod gates;
pub mod harness;
pub mod network;
pub mod so3;

pub use covariant::{CovariantVector, MixWeights, RepType};
pub use error::{Error, Result};
pub use gates::{GateConfig, GateKind, GateSpec, Nonlinearity, RelativePosition};
pub use network::{CompositionScheme, GradientTape, Gradients, Model, ModelConfig, System};
pub use so3::{EulerAngles, WignerD};

pub use num_complex::Complex64;
