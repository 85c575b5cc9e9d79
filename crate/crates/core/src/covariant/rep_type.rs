use std::fmt;

use serde::{Deserialize, Serialize};

use crate::so3::irrep_dim;

/// Multiplicities `(tau_0, tau_1, ..., tau_L)` of each irrep.
///
/// Trailing zeros are stripped on construction, so equality ignores them.
#[derive(Clone, Debug, Default, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(from = "Vec<usize>", into = "Vec<usize>")]
pub struct RepType(Vec<usize>);

impl From<Vec<usize>> for RepType {
    fn from(v: Vec<usize>) -> Self {
        Self::new(v)
    }
}

impl From<RepType> for Vec<usize> {
    fn from(t: RepType) -> Self {
        t.0
    }
}

impl RepType {
    pub fn new(mut multiplicities: Vec<usize>) -> Self {
        while multiplicities.last() == Some(&0) {
            multiplicities.pop();
        }
        Self(multiplicities)
    }

    /// `c` copies of the scalar irrep.
    pub fn scalars(c: usize) -> Self {
        Self::new(vec![c])
    }

    /// The type `(0, 1)` of a single spherical vector.
    pub fn vector() -> Self {
        Self::new(vec![0, 1])
    }

    /// `(c, c, ..., c)` up to `max_ell`.
    pub fn uniform(c: usize, max_ell: usize) -> Self {
        Self::new(vec![c; max_ell + 1])
    }

    pub fn multiplicity(&self, ell: usize) -> usize {
        self.0.get(ell).copied().unwrap_or(0)
    }

    pub fn multiplicities(&self) -> &[usize] {
        &self.0
    }

    /// Number of stored `ell` slots (`L + 1`), zero for the empty type.
    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn max_ell(&self) -> Option<usize> {
        self.0.len().checked_sub(1)
    }

    /// Total complex dimension `sum (2 ell + 1) tau_ell`.
    pub fn dim(&self) -> usize {
        self.0
            .iter()
            .enumerate()
            .map(|(l, &t)| irrep_dim(l) * t)
            .sum()
    }

    /// Elementwise sum (the type of a direct sum).
    pub fn add(&self, other: &RepType) -> RepType {
        let n = self.len().max(other.len());
        RepType::new(
            (0..n)
                .map(|l| self.multiplicity(l) + other.multiplicity(l))
                .collect(),
        )
    }

    pub fn scale(&self, c: usize) -> RepType {
        RepType::new(self.0.iter().map(|t| t * c).collect())
    }

    /// Drops every `ell > max_ell`.
    pub fn truncate(&self, max_ell: usize) -> RepType {
        RepType::new(self.0.iter().take(max_ell + 1).copied().collect())
    }
}

impl fmt::Display for RepType {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(")?;
        for (i, t) in self.0.iter().enumerate() {
            if i > 0 {
                write!(f, ",")?;
            }
            write!(f, "{t}")?;
        }
        write!(f, ")")
    }
}
