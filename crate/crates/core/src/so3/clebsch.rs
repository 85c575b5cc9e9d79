use std::sync::{Arc, OnceLock};

use ndarray::Array2;
use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use super::{check_ell, irrep_dim, L_CG};
use crate::error::arg_err;
use crate::{Error, Result};

fn big_factorial(n: i64) -> BigInt {
    (1..=n).fold(BigInt::one(), |acc, k| acc * BigInt::from(k))
}

/// Exact square of the Racah prefactor times the square of the alternating
/// sum; the sign of the coefficient is returned separately.
fn racah_squared(j1: i64, j2: i64, j: i64, m1: i64, m2: i64) -> (BigRational, bool) {
    let m = m1 + m2;
    let f = big_factorial;
    let triangle = BigRational::new(
        BigInt::from(2 * j + 1) * f(j1 + j2 - j) * f(j1 - j2 + j) * f(-j1 + j2 + j),
        f(j1 + j2 + j + 1),
    );
    let magnetic = f(j + m) * f(j - m) * f(j1 - m1) * f(j1 + m1) * f(j2 - m2) * f(j2 + m2);

    let k_min = 0.max(j2 - j - m1).max(j1 - j + m2);
    let k_max = (j1 + j2 - j).min(j1 - m1).min(j2 + m2);
    let mut sum = BigRational::zero();
    for k in k_min..=k_max {
        let denom = f(k)
            * f(j1 + j2 - j - k)
            * f(j1 - m1 - k)
            * f(j2 + m2 - k)
            * f(j - j2 + m1 + k)
            * f(j - j1 - m2 + k);
        let term = BigRational::new(BigInt::one(), denom);
        if k % 2 == 0 {
            sum += term;
        } else {
            sum -= term;
        }
    }
    let negative = sum.is_negative();
    let squared = triangle * BigRational::from_integer(magnetic) * &sum * &sum;
    (squared, negative)
}

/// The Clebsch-Gordan coefficient `<ell1 m1; ell2 m2 | ell m>` (Condon-Shortley).
///
/// Evaluated with Racah's formula in exact rational arithmetic; only the
/// final square root is taken in floating point.
pub fn cg_coefficient(
    ell1: usize,
    ell2: usize,
    ell: usize,
    m1: i64,
    m2: i64,
    m: i64,
) -> Result<f64> {
    for (l, mm) in [(ell1, m1), (ell2, m2), (ell, m)] {
        if mm.unsigned_abs() as usize > l {
            return arg_err(format!("magnetic index {mm} out of range for ell = {l}"));
        }
    }
    if m != m1 + m2 || ell < ell1.abs_diff(ell2) || ell > ell1 + ell2 {
        return Ok(0.0);
    }
    let (sq, negative) = racah_squared(ell1 as i64, ell2 as i64, ell as i64, m1, m2);
    let magnitude = sq.to_f64().expect("finite rational").sqrt();
    Ok(if negative { -magnitude } else { magnitude })
}

/// The block `C_{ell1, ell2, ell}` of the Clebsch-Gordan transform.
///
/// `matrix` is `(2 ell + 1) x (2 ell1 + 1)(2 ell2 + 1)`; column
/// `(m1 + ell1) * (2 ell2 + 1) + (m2 + ell2)` holds the pair `(m1, m2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct CgBlock {
    pub ell1: usize,
    pub ell2: usize,
    pub ell: usize,
    pub matrix: Array2<f64>,
    /// Non-zero entries as `(row, m1 index, m2 index, value)`.
    pub(crate) nonzeros: Vec<(usize, usize, usize, f64)>,
}

impl CgBlock {
    fn compute(ell1: usize, ell2: usize, ell: usize) -> Self {
        let (d1, d2) = (irrep_dim(ell1), irrep_dim(ell2));
        let mut matrix = Array2::zeros((irrep_dim(ell), d1 * d2));
        let mut nonzeros = Vec::new();
        let (l1, l2, l) = (ell1 as i64, ell2 as i64, ell as i64);
        for m1 in -l1..=l1 {
            for m2 in -l2..=l2 {
                let m = m1 + m2;
                if m.abs() > l {
                    continue;
                }
                let v = cg_coefficient(ell1, ell2, ell, m1, m2, m).expect("indices in range");
                if v != 0.0 {
                    let (row, i1, i2) = ((m + l) as usize, (m1 + l1) as usize, (m2 + l2) as usize);
                    matrix[[row, i1 * d2 + i2]] = v;
                    nonzeros.push((row, i1, i2, v));
                }
            }
        }
        Self {
            ell1,
            ell2,
            ell,
            matrix,
            nonzeros,
        }
    }

    /// Builds a block from an explicit matrix (used to inject faults in
    /// self-tests).
    pub fn from_matrix(ell1: usize, ell2: usize, ell: usize, matrix: Array2<f64>) -> Self {
        let d2 = irrep_dim(ell2);
        let nonzeros = matrix
            .indexed_iter()
            .filter(|(_, v)| **v != 0.0)
            .map(|((row, col), v)| (row, col / d2, col % d2, *v))
            .collect();
        Self {
            ell1,
            ell2,
            ell,
            matrix,
            nonzeros,
        }
    }
}

const SIDE: usize = L_CG + 1;

fn table() -> &'static [OnceLock<Arc<CgBlock>>] {
    static TABLE: OnceLock<Vec<OnceLock<Arc<CgBlock>>>> = OnceLock::new();
    TABLE.get_or_init(|| (0..SIDE * SIDE * SIDE).map(|_| OnceLock::new()).collect())
}

/// Returns the cached block, computing it on first use.
pub fn cg_block(ell1: usize, ell2: usize, ell: usize) -> Result<Arc<CgBlock>> {
    check_ell(ell1)?;
    check_ell(ell2)?;
    check_ell(ell)?;
    if ell < ell1.abs_diff(ell2) || ell > ell1 + ell2 {
        return Err(Error::SelectionRule { ell1, ell2, ell });
    }
    let slot = &table()[(ell1 * SIDE + ell2) * SIDE + ell];
    Ok(Arc::clone(slot.get_or_init(|| {
        Arc::new(CgBlock::compute(ell1, ell2, ell))
    })))
}
