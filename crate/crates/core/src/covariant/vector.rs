use std::collections::BTreeMap;

use ndarray::{Array2, ArrayView1};
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RepType;
use crate::error::arg_err;
use crate::so3::irrep_dim;
use crate::{Error, Result};

/// A covariant vector stored part by part.
///
/// `parts[ell]` has shape `(2 ell + 1, tau_ell)`; column `i` is the fragment
/// `psi^ell_i`. Parts for `ell` below the maximum with zero multiplicity are
/// kept as empty matrices so that indexing by `ell` is direct.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "VectorJson", into = "VectorJson")]
pub struct CovariantVector {
    rep_type: RepType,
    parts: Vec<Array2<Complex64>>,
}

impl CovariantVector {
    pub fn zeros(rep_type: &RepType) -> Self {
        let parts = rep_type
            .multiplicities()
            .iter()
            .enumerate()
            .map(|(l, &t)| Array2::zeros((irrep_dim(l), t)))
            .collect();
        Self {
            rep_type: rep_type.clone(),
            parts,
        }
    }

    /// Builds a vector from per-`ell` fragment matrices; the type is read
    /// off the column counts.
    pub fn from_parts(mut parts: Vec<Array2<Complex64>>) -> Result<Self> {
        for (l, p) in parts.iter().enumerate() {
            if p.nrows() != irrep_dim(l) {
                return arg_err(format!(
                    "part {l} has {} rows, expected {}",
                    p.nrows(),
                    irrep_dim(l)
                ));
            }
        }
        while parts.last().is_some_and(|p| p.ncols() == 0) {
            parts.pop();
        }
        let rep_type = RepType::new(parts.iter().map(|p| p.ncols()).collect());
        Ok(Self { rep_type, parts })
    }

    /// A vector of type `(values.len())`.
    pub fn scalars(values: &[Complex64]) -> Self {
        let part = Array2::from_shape_vec((1, values.len()), values.to_vec()).expect("row vector");
        Self::from_parts(vec![part]).expect("valid scalar part")
    }

    /// A single `ell = 1` fragment given in spherical components.
    pub fn spherical_vector(components: [Complex64; 3]) -> Self {
        let part = Array2::from_shape_vec((3, 1), components.to_vec()).expect("column vector");
        Self::from_parts(vec![Array2::zeros((1, 0)), part]).expect("valid vector part")
    }

    /// Entries with real and imaginary parts uniform on `[-1, 1]`.
    pub fn random<R: Rng + ?Sized>(rep_type: &RepType, rng: &mut R) -> Self {
        let mut v = Self::zeros(rep_type);
        for p in &mut v.parts {
            p.mapv_inplace(|_| {
                Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0))
            });
        }
        v
    }

    pub fn rep_type(&self) -> &RepType {
        &self.rep_type
    }

    pub fn max_ell(&self) -> Option<usize> {
        self.rep_type.max_ell()
    }

    pub fn part(&self, ell: usize) -> Option<&Array2<Complex64>> {
        self.parts.get(ell)
    }

    pub fn parts(&self) -> &[Array2<Complex64>] {
        &self.parts
    }

    pub(crate) fn parts_mut(&mut self) -> &mut [Array2<Complex64>] {
        &mut self.parts
    }

    /// The fragment `psi^ell_index`.
    pub fn fragment(&self, ell: usize, index: usize) -> ArrayView1<'_, Complex64> {
        self.parts[ell].column(index)
    }

    /// Flattened Euclidean norm.
    pub fn norm(&self) -> f64 {
        self.parts
            .iter()
            .flat_map(|p| p.iter())
            .map(|z| z.norm_sqr())
            .sum::<f64>()
            .sqrt()
    }

    /// Largest entrywise modulus of the difference; infinite if the types differ.
    pub fn max_abs_diff(&self, other: &CovariantVector) -> f64 {
        if self.rep_type != other.rep_type {
            return f64::INFINITY;
        }
        self.parts
            .iter()
            .zip(&other.parts)
            .flat_map(|(a, b)| a.iter().zip(b.iter()))
            .map(|(x, y)| (x - y).norm())
            .fold(0.0, f64::max)
    }

    pub fn max_abs(&self) -> f64 {
        self.parts
            .iter()
            .flat_map(|p| p.iter())
            .map(|z| z.norm())
            .fold(0.0, f64::max)
    }

    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        for p in &mut out.parts {
            p.mapv_inplace(|z| z * factor);
        }
        out
    }

    /// `self += other`; the types must agree.
    pub fn add_assign(&mut self, other: &CovariantVector) -> Result<()> {
        if self.rep_type != other.rep_type {
            return arg_err(format!(
                "cannot add type {} to {}",
                other.rep_type, self.rep_type
            ));
        }
        for (a, b) in self.parts.iter_mut().zip(&other.parts) {
            *a += b;
        }
        Ok(())
    }

    pub fn sub(&self, other: &CovariantVector) -> Result<Self> {
        let mut out = other.scaled(-1.0);
        out.add_assign(self)?;
        Ok(out)
    }

    /// Drops every part with `ell > max_ell`.
    pub fn truncated(&self, max_ell: usize) -> Self {
        let parts = self.parts.iter().take(max_ell + 1).cloned().collect();
        Self::from_parts(parts).expect("parts already valid")
    }

    /// All entries in canonical order: `ell` ascending, then fragment, then `m`.
    pub fn flatten(&self) -> Vec<Complex64> {
        let mut out = Vec::with_capacity(self.rep_type.dim());
        for p in &self.parts {
            for col in p.columns() {
                out.extend(col.iter().copied());
            }
        }
        out
    }

    /// Inverse of [`flatten`](Self::flatten).
    pub fn from_flat(rep_type: &RepType, data: &[Complex64]) -> Result<Self> {
        if data.len() != rep_type.dim() {
            return arg_err(format!(
                "expected {} entries for type {rep_type}, got {}",
                rep_type.dim(),
                data.len()
            ));
        }
        let mut v = Self::zeros(rep_type);
        let mut it = data.iter();
        for p in &mut v.parts {
            for mut col in p.columns_mut() {
                for z in col.iter_mut() {
                    *z = *it.next().expect("length checked");
                }
            }
        }
        Ok(v)
    }
}

#[derive(Serialize, Deserialize)]
struct VectorJson {
    #[serde(rename = "type")]
    rep_type: Vec<usize>,
    fragments: BTreeMap<String, Vec<Vec<[f64; 2]>>>,
}

impl From<CovariantVector> for VectorJson {
    fn from(v: CovariantVector) -> Self {
        let fragments = v
            .parts
            .iter()
            .enumerate()
            .filter(|(_, p)| p.ncols() > 0)
            .map(|(l, p)| {
                let frags = p
                    .columns()
                    .into_iter()
                    .map(|c| c.iter().map(|z| [z.re, z.im]).collect())
                    .collect();
                (l.to_string(), frags)
            })
            .collect();
        Self {
            rep_type: v.rep_type.multiplicities().to_vec(),
            fragments,
        }
    }
}

impl TryFrom<VectorJson> for CovariantVector {
    type Error = Error;

    fn try_from(j: VectorJson) -> Result<Self> {
        let rep_type = RepType::new(j.rep_type);
        let mut v = CovariantVector::zeros(&rep_type);
        for (key, frags) in j.fragments {
            let l: usize = key
                .parse()
                .map_err(|_| Error::Argument(format!("bad ell key {key:?}")))?;
            if frags.len() != rep_type.multiplicity(l) {
                return arg_err(format!(
                    "ell = {l}: {} fragments but type says {}",
                    frags.len(),
                    rep_type.multiplicity(l)
                ));
            }
            for (i, frag) in frags.iter().enumerate() {
                if frag.len() != irrep_dim(l) {
                    return arg_err(format!("ell = {l} fragment {i} has {} entries", frag.len()));
                }
                for (m, [re, im]) in frag.iter().enumerate() {
                    v.parts[l][[m, i]] = Complex64::new(*re, *im);
                }
            }
        }
        Ok(v)
    }
}
