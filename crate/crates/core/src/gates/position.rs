use crate::covariant::CovariantVector;
use crate::so3::to_spherical;
use crate::{Error, Result};

/// Smallest separation (in length units) treated as two distinct points.
pub const R_MIN: f64 = 1e-6;

/// A child's offset from its parent, with its spherical embedding.
#[derive(Clone, Debug, PartialEq)]
pub struct RelativePosition {
    pub cartesian: [f64; 3],
    pub radius: f64,
    /// Type `(0, 1)` vector `U * cartesian`.
    pub sph1: CovariantVector,
}

impl RelativePosition {
    pub fn from_offset(offset: [f64; 3]) -> Result<Self> {
        let radius = offset.iter().map(|x| x * x).sum::<f64>().sqrt();
        if !(radius > R_MIN) {
            return Err(Error::Degeneracy {
                radius,
                r_min: R_MIN,
            });
        }
        Ok(Self {
            cartesian: offset,
            radius,
            sph1: CovariantVector::spherical_vector(to_spherical(offset)),
        })
    }
}

/// Offset of `child_pos` from `parent_pos`.
pub fn embed_relative_position(
    parent_pos: [f64; 3],
    child_pos: [f64; 3],
) -> Result<RelativePosition> {
    RelativePosition::from_offset([
        child_pos[0] - parent_pos[0],
        child_pos[1] - parent_pos[1],
        child_pos[2] - parent_pos[2],
    ])
}
