use std::f64::consts::TAU;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::EulerAngles;

/// Haar-distributed rotation drawn from `rng`: `alpha, gamma` uniform and
/// `cos(beta)` uniform on `[-1, 1]`.
pub fn random_rotation_from<R: Rng + ?Sized>(rng: &mut R) -> EulerAngles {
    let alpha = rng.gen::<f64>() * TAU;
    let cos_beta: f64 = rng.gen_range(-1.0..=1.0);
    let gamma = rng.gen::<f64>() * TAU;
    EulerAngles::new(alpha, cos_beta.acos(), gamma)
}

/// Deterministic Haar rotation for a seed.
pub fn random_rotation(seed: u64) -> EulerAngles {
    random_rotation_from(&mut ChaCha8Rng::seed_from_u64(seed))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn deterministic_and_distinct() {
        assert_eq!(random_rotation(7), random_rotation(7));
        assert_ne!(random_rotation(7), random_rotation(8));
    }

    #[test]
    fn cos_beta_has_zero_mean() {
        let n = 100_000u64;
        let mean = (0..n).map(|s| random_rotation(s).beta.cos()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.01, "mean cos(beta) = {mean}");
    }
}
