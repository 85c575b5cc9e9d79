//! N-body networks over point clouds.
//!
//! A [`System`] is decomposed into a [`CompositionScheme`]: one leaf per
//! atom, `depth` levels of per-atom neighbourhood nodes, and a root covering
//! every atom. Leaves carry learned species embeddings; every other node
//! evaluates its level's gate on its children. The root's scalar channels
//! are read out as the energy.

mod model;
mod scheme;
mod system;
mod tape;
mod train;

pub use model::{Checkpoint, Model, ModelConfig, CHECKPOINT_VERSION};
pub use scheme::{build_scheme, validate_scheme, Anchor, CompositionScheme, SchemeNode, Violation};
pub use system::System;
pub use tape::{backward, forces, forward, GradientTape, Gradients};
pub use train::{evaluate, train, EpochMetrics, EvalMetrics, TrainOptions};
