use ndarray::Array2;
use num_complex::Complex64;

use super::{check_ell, irrep_dim, EulerAngles};
use crate::Result;

/// The matrix of the irrep `ell` evaluated at a rotation. Rows and columns
/// are indexed by `m + ell`.
#[derive(Clone, Debug, PartialEq)]
pub struct WignerD {
    pub ell: usize,
    pub matrix: Array2<Complex64>,
}

fn factorial(n: i64) -> f64 {
    debug_assert!(n >= 0);
    (1..=n).fold(1.0, |acc, k| acc * k as f64)
}

/// Wigner's small-d matrix element `d^ell_{m, mp}(beta)`.
pub(crate) fn little_d(ell: i64, m: i64, mp: i64, beta: f64) -> f64 {
    let (s_half, c_half) = (beta / 2.0).sin_cos();
    let prefactor =
        (factorial(ell + m) * factorial(ell - m) * factorial(ell + mp) * factorial(ell - mp))
            .sqrt();
    let k_min = 0.max(mp - m);
    let k_max = (ell + mp).min(ell - m);
    let mut sum = 0.0;
    for k in k_min..=k_max {
        let sign = if (m - mp + k) % 2 == 0 { 1.0 } else { -1.0 };
        let denom =
            factorial(ell + mp - k) * factorial(k) * factorial(m - mp + k) * factorial(ell - m - k);
        let cos_pow = (2 * ell + mp - m - 2 * k) as i32;
        let sin_pow = (m - mp + 2 * k) as i32;
        sum += sign * c_half.powi(cos_pow) * s_half.powi(sin_pow) / denom;
    }
    prefactor * sum
}

/// `D^ell_{m,m'}(alpha, beta, gamma) = exp(-i m alpha) d^ell_{m,m'}(beta) exp(-i m' gamma)`.
pub fn wigner_d(ell: usize, rotation: &EulerAngles) -> Result<WignerD> {
    check_ell(ell)?;
    let l = ell as i64;
    let n = irrep_dim(ell);
    let mut matrix = Array2::zeros((n, n));
    for (row, m) in (-l..=l).enumerate() {
        let left = Complex64::from_polar(1.0, -(m as f64) * rotation.alpha);
        for (col, mp) in (-l..=l).enumerate() {
            let right = Complex64::from_polar(1.0, -(mp as f64) * rotation.gamma);
            matrix[[row, col]] = left * little_d(l, m, mp, rotation.beta) * right;
        }
    }
    Ok(WignerD { ell, matrix })
}
