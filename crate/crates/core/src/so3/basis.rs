use std::f64::consts::FRAC_1_SQRT_2;

use ndarray::Array2;
use num_complex::Complex64;

/// Row-major 3x3 real matrix.
pub type Mat3 = [[f64; 3]; 3];

/// The unitary change of basis from Cartesian `(x, y, z)` to spherical
/// components ordered `m = -1, 0, +1`, chosen so that
/// `D^1(R) U = U R_cart` for every rotation.
pub fn cartesian_to_spherical_basis() -> Array2<Complex64> {
    let s = FRAC_1_SQRT_2;
    let c = |re: f64, im: f64| Complex64::new(re, im);
    Array2::from_shape_vec(
        (3, 3),
        vec![
            c(s, 0.0),
            c(0.0, s),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(0.0, 0.0),
            c(1.0, 0.0),
            c(-s, 0.0),
            c(0.0, s),
            c(0.0, 0.0),
        ],
    )
    .expect("3x3 shape")
}

/// Applies [`cartesian_to_spherical_basis`] to a real vector.
pub fn to_spherical(v: [f64; 3]) -> [Complex64; 3] {
    let s = FRAC_1_SQRT_2;
    [
        Complex64::new(s * v[0], s * v[1]),
        Complex64::new(v[2], 0.0),
        Complex64::new(-s * v[0], s * v[1]),
    ]
}
