use std::f64::consts::{PI, TAU};

use serde::{Deserialize, Serialize};

use super::basis::Mat3;

/// Below this value of `sin(beta)` the extraction treats the rotation as a
/// pure z-rotation (gimbal lock).
const GIMBAL_EPS: f64 = 1e-12;

/// A rotation in the ZYZ Euler convention, `R = Rz(alpha) Ry(beta) Rz(gamma)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EulerAngles {
    pub alpha: f64,
    pub beta: f64,
    pub gamma: f64,
}

fn wrap_angle(a: f64) -> f64 {
    let w = a.rem_euclid(TAU);
    if w >= TAU {
        0.0
    } else {
        w
    }
}

fn matmul(a: &Mat3, b: &Mat3) -> Mat3 {
    let mut out = [[0.0; 3]; 3];
    for i in 0..3 {
        for j in 0..3 {
            out[i][j] = (0..3).map(|k| a[i][k] * b[k][j]).sum();
        }
    }
    out
}

impl EulerAngles {
    pub const IDENTITY: EulerAngles = EulerAngles {
        alpha: 0.0,
        beta: 0.0,
        gamma: 0.0,
    };

    pub fn new(alpha: f64, beta: f64, gamma: f64) -> Self {
        Self { alpha, beta, gamma }
    }

    /// Rotation by `angle` about the z axis.
    pub fn about_z(angle: f64) -> Self {
        Self::from_matrix(&rz(angle))
    }

    /// The 3x3 Cartesian rotation matrix.
    pub fn to_matrix(&self) -> Mat3 {
        matmul(&matmul(&rz(self.alpha), &ry(self.beta)), &rz(self.gamma))
    }

    /// Extracts canonical angles (`alpha, gamma` in `[0, 2pi)`, `beta` in
    /// `[0, pi]`). At `beta = 0` or `pi` the whole z-rotation goes into
    /// `alpha` and `gamma` is zero.
    pub fn from_matrix(m: &Mat3) -> Self {
        let sin_beta = m[0][2].hypot(m[1][2]);
        let beta = sin_beta.atan2(m[2][2]);
        if sin_beta > GIMBAL_EPS {
            let alpha = m[1][2].atan2(m[0][2]);
            let gamma = m[2][1].atan2(-m[2][0]);
            Self::new(wrap_angle(alpha), beta, wrap_angle(gamma))
        } else if m[2][2] > 0.0 {
            // Rz(alpha + gamma)
            Self::new(wrap_angle(m[1][0].atan2(m[0][0])), 0.0, 0.0)
        } else {
            // Rz(alpha) diag(-1, 1, -1)
            Self::new(wrap_angle((-m[1][0]).atan2(-m[0][0])), PI, 0.0)
        }
    }

    /// `self ∘ other`: apply `other` first, then `self`.
    pub fn compose(&self, other: &EulerAngles) -> Self {
        Self::from_matrix(&matmul(&self.to_matrix(), &other.to_matrix()))
    }

    pub fn inverse(&self) -> Self {
        let m = self.to_matrix();
        let mut t = [[0.0; 3]; 3];
        for i in 0..3 {
            for j in 0..3 {
                t[i][j] = m[j][i];
            }
        }
        Self::from_matrix(&t)
    }

    /// Rotates a Cartesian vector.
    pub fn apply(&self, v: [f64; 3]) -> [f64; 3] {
        apply_matrix(&self.to_matrix(), v)
    }
}

pub(crate) fn apply_matrix(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [
        m[0][0] * v[0] + m[0][1] * v[1] + m[0][2] * v[2],
        m[1][0] * v[0] + m[1][1] * v[1] + m[1][2] * v[2],
        m[2][0] * v[0] + m[2][1] * v[1] + m[2][2] * v[2],
    ]
}

fn rz(a: f64) -> Mat3 {
    let (s, c) = a.sin_cos();
    [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
}

fn ry(b: f64) -> Mat3 {
    let (s, c) = b.sin_cos();
    [[c, 0.0, s], [0.0, 1.0, 0.0], [-s, 0.0, c]]
}

#[cfg(test)]
mod tests {
    use super::*;

    fn max_diff(a: &Mat3, b: &Mat3) -> f64 {
        let mut worst = 0.0f64;
        for i in 0..3 {
            for j in 0..3 {
                worst = worst.max((a[i][j] - b[i][j]).abs());
            }
        }
        worst
    }

    #[test]
    fn round_trip_generic_angles() {
        let e = EulerAngles::new(0.3, 1.1, 5.9);
        let back = EulerAngles::from_matrix(&e.to_matrix());
        assert!((back.alpha - 0.3).abs() < 1e-12);
        assert!((back.beta - 1.1).abs() < 1e-12);
        assert!((back.gamma - 5.9).abs() < 1e-12);
    }

    #[test]
    fn gimbal_folds_into_alpha() {
        let e = EulerAngles::new(0.4, 0.0, 0.5);
        let back = EulerAngles::from_matrix(&e.to_matrix());
        assert_eq!(back.gamma, 0.0);
        assert!((back.alpha - 0.9).abs() < 1e-12);

        let e = EulerAngles::new(0.4, PI, 0.5);
        let back = EulerAngles::from_matrix(&e.to_matrix());
        assert_eq!(back.gamma, 0.0);
        assert_eq!(back.beta, PI);
        assert!(max_diff(&back.to_matrix(), &e.to_matrix()) < 1e-12);
    }

    #[test]
    fn compose_matches_matrix_product() {
        let a = EulerAngles::new(0.1, 0.7, 2.0);
        let b = EulerAngles::new(4.0, 2.5, 1.0);
        let ab = a.compose(&b);
        let v = [0.3, -1.2, 0.8];
        let lhs = ab.apply(v);
        let rhs = a.apply(b.apply(v));
        for k in 0..3 {
            assert!((lhs[k] - rhs[k]).abs() < 1e-12);
        }
        let id = a.compose(&a.inverse()).to_matrix();
        assert!(max_diff(&id, &EulerAngles::IDENTITY.to_matrix()) < 1e-12);
    }
}
