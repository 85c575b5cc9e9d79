//! Typed SO(3)-covariant vectors and the operations that preserve covariance.
//!
//! A vector of type `tau = (tau_0, tau_1, ...)` holds, for every `ell`, a
//! complex `(2 ell + 1) x tau_ell` matrix whose columns (fragments) each
//! transform by `D^ell(R)`.

mod ops;
mod rep_type;
mod vector;
mod weights;

pub use ops::{
    cg_product, cg_product_chain, cg_product_truncated, direct_sum, invariant_part, kappa, mix,
    rotate,
};
pub(crate) use ops::{cg_product_adjoint, mix_adjoint};
pub use rep_type::RepType;
pub use vector::CovariantVector;
pub use weights::MixWeights;
