//! Covariant aggregation rules.
//!
//! A gate turns the states of a node's children, together with their
//! positions relative to the node, into the node's own state. Every gate has
//! the same three stages: a sum over children (or pairs of children) of
//! Clebsch-Gordan products scaled by inverse powers of the distance, a
//! direct sum over the radial powers, and an equivariant [`mix`].
//!
//! The gate bodies are written once against [`GateAlgebra`] so the same code
//! drives plain evaluation and the recording forward pass of the network.
//!
//! [`mix`]: crate::covariant::mix

mod algebra;
mod config;
mod moment;
mod position;
mod rules;

pub use algebra::{Eager, GateAlgebra, GateChild};
pub use config::{gate_output_type, GateConfig, GateKind, GateSpec, Nonlinearity};
pub use moment::{moment_tensor, MomentTensor};
pub use position::{embed_relative_position, RelativePosition, R_MIN};
pub use rules::{apply_gate, evaluate_gate, first_order_gate, moment_gate, zeroth_order_gate};

pub(crate) use algebra::{apply_nonlinearity, nonlinearity_adjoint};
