//! Representation theory of SO(3) in the Condon-Shortley convention.
//!
//! Irreps are labelled by a non-negative integer `ell` and act on
//! `2 ell + 1` dimensional spaces whose basis is indexed by
//! `m = -ell..=ell`. Everywhere in the crate the row/column for `m` is
//! stored at index `m + ell`.

mod basis;
mod clebsch;
mod euler;
mod sampling;
mod wigner;

pub use basis::{cartesian_to_spherical_basis, to_spherical, Mat3};
pub use clebsch::{cg_block, cg_coefficient, CgBlock};
pub(crate) use euler::apply_matrix as euler_apply;
pub use euler::EulerAngles;
pub use sampling::{random_rotation, random_rotation_from};
pub use wigner::{wigner_d, WignerD};

/// Largest `ell` served by the Wigner and Clebsch-Gordan tables.
pub const L_CG: usize = 8;

/// Dimension `2 ell + 1` of the irrep `ell`.
#[inline]
pub const fn irrep_dim(ell: usize) -> usize {
    2 * ell + 1
}

pub(crate) fn check_ell(ell: usize) -> crate::Result<()> {
    if ell > L_CG {
        Err(crate::Error::Capability { ell, limit: L_CG })
    } else {
        Ok(())
    }
}
