use serde::{Deserialize, Serialize};

use crate::error::arg_err;
use crate::gates::R_MIN;
use crate::so3::EulerAngles;
use crate::{Error, Result};

/// A point cloud of atoms, optionally labelled with a reference energy.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct System {
    pub positions: Vec<[f64; 3]>,
    pub species: Vec<usize>,
    #[serde(rename = "energy", default, skip_serializing_if = "Option::is_none")]
    pub target_energy: Option<f64>,
}

pub(crate) fn distance(a: [f64; 3], b: [f64; 3]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
}

impl System {
    pub fn new(positions: Vec<[f64; 3]>, species: Vec<usize>) -> Result<Self> {
        let s = Self {
            positions,
            species,
            target_energy: None,
        };
        s.validate()?;
        Ok(s)
    }

    pub fn with_energy(mut self, energy: f64) -> Self {
        self.target_energy = Some(energy);
        self
    }

    pub fn len(&self) -> usize {
        self.positions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.positions.is_empty()
    }

    pub fn validate(&self) -> Result<()> {
        if self.positions.is_empty() {
            return arg_err("a system needs at least one atom");
        }
        if self.positions.len() != self.species.len() {
            return arg_err(format!(
                "{} positions but {} species",
                self.positions.len(),
                self.species.len()
            ));
        }
        if self.positions.iter().flatten().any(|x| !x.is_finite()) {
            return arg_err("non-finite coordinate");
        }
        for (i, a) in self.positions.iter().enumerate() {
            for b in &self.positions[i + 1..] {
                let d = distance(*a, *b);
                if !(d > R_MIN) {
                    return Err(Error::Degeneracy {
                        radius: d,
                        r_min: R_MIN,
                    });
                }
            }
        }
        Ok(())
    }

    pub fn rotated(&self, rotation: &EulerAngles) -> Self {
        let m = rotation.to_matrix();
        Self {
            positions: self
                .positions
                .iter()
                .map(|p| crate::so3::euler_apply(&m, *p))
                .collect(),
            ..self.clone()
        }
    }

    pub fn translated(&self, shift: [f64; 3]) -> Self {
        Self {
            positions: self
                .positions
                .iter()
                .map(|p| [p[0] + shift[0], p[1] + shift[1], p[2] + shift[2]])
                .collect(),
            ..self.clone()
        }
    }

    /// Atom `i` of the result is atom `perm[i]` of `self`.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        Self {
            positions: perm.iter().map(|&i| self.positions[i]).collect(),
            species: perm.iter().map(|&i| self.species[i]).collect(),
            target_energy: self.target_energy,
        }
    }
}
