use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::covariant::{kappa, MixWeights, RepType};
use crate::error::arg_err;
use crate::so3::L_CG;
use crate::Result;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GateKind {
    /// `sum_i r_i^-s (psi_i ⊗ r_i)`.
    Zeroth,
    /// `sum_{i,j} (r_i r_j)^-s (psi_i ⊗ psi_j ⊗ r_i ⊗ r_j)`.
    FirstPairwise,
    /// `sum_{i != j} r_ij^-s (psi_i ⊗ psi_j ⊗ r_ij)` with `r_ij = r_i - r_j`.
    FirstRelative,
    /// `sum_i r_i^-s (r_i^{⊗k} ⊗ psi_i)`.
    Moment,
}

impl std::str::FromStr for GateKind {
    type Err = crate::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zeroth" => Ok(Self::Zeroth),
            "first_pairwise" => Ok(Self::FirstPairwise),
            "first_relative" => Ok(Self::FirstRelative),
            "moment" => Ok(Self::Moment),
            other => arg_err(format!("unknown gate kind {other:?}")),
        }
    }
}

/// Pointwise nonlinearities; only ever applied to `ell = 0` fragments.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Nonlinearity {
    /// `ln(1 + e^x) - ln 2` on real and imaginary parts separately.
    ShiftedSoftplus,
}

/// Everything about a gate except its learnable weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateSpec {
    pub kind: GateKind,
    /// Exponents `s` of the `1 / r^s` factors, one channel each.
    pub radial_powers: Vec<u32>,
    /// `k` for moment gates; ignored otherwise.
    #[serde(default)]
    pub moment_order: usize,
    pub truncate_ell: usize,
    pub output_type: RepType,
    #[serde(default)]
    pub nonlinearity: Option<Nonlinearity>,
}

impl GateSpec {
    pub fn new(
        kind: GateKind,
        radial_powers: &[u32],
        truncate_ell: usize,
        output_type: RepType,
    ) -> Self {
        let mut powers = radial_powers.to_vec();
        powers.sort_unstable();
        powers.dedup();
        Self {
            kind,
            radial_powers: powers,
            moment_order: if kind == GateKind::Moment { 1 } else { 0 },
            truncate_ell,
            output_type,
            nonlinearity: None,
        }
    }

    pub fn with_moment_order(mut self, k: usize) -> Self {
        self.moment_order = k;
        self
    }

    pub fn with_nonlinearity(mut self, f: Option<Nonlinearity>) -> Self {
        self.nonlinearity = f;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.truncate_ell > L_CG {
            return arg_err(format!(
                "truncate_ell = {} exceeds {L_CG}",
                self.truncate_ell
            ));
        }
        if self.radial_powers.is_empty() {
            return arg_err("a gate needs at least one radial power");
        }
        if self.radial_powers.windows(2).any(|w| w[0] >= w[1]) {
            return arg_err("radial powers must be strictly increasing");
        }
        if self.kind == GateKind::Moment && self.moment_order == 0 {
            return arg_err("moment gates need moment_order >= 1");
        }
        if self
            .output_type
            .max_ell()
            .is_some_and(|l| l > self.truncate_ell)
        {
            return arg_err(format!(
                "output type {} reaches beyond truncate_ell = {}",
                self.output_type, self.truncate_ell
            ));
        }
        Ok(())
    }

    /// Type of one radial channel for children of `child_type`.
    pub fn channel_type(&self, child_type: &RepType) -> RepType {
        let vector = RepType::vector();
        let chain = |factors: &[&RepType]| {
            let (first, rest) = factors.split_first().expect("non-empty chain");
            rest.iter().fold((*first).clone(), |acc, next| {
                kappa(&acc, next).truncate(self.truncate_ell)
            })
        };
        match self.kind {
            GateKind::Zeroth => chain(&[child_type, &vector]),
            GateKind::FirstPairwise => chain(&[child_type, child_type, &vector, &vector]),
            GateKind::FirstRelative => chain(&[child_type, child_type, &vector]),
            GateKind::Moment => {
                let mut factors = vec![&vector; self.moment_order];
                factors.push(child_type);
                chain(&factors)
            }
        }
    }
}

/// Pre-mix type produced by a gate whose children have `child_type`:
/// the direct sum of one channel per radial power.
pub fn gate_output_type(child_type: &RepType, spec: &GateSpec) -> RepType {
    spec.channel_type(child_type)
        .scale(spec.radial_powers.len())
}

/// A gate specification together with its mixing weights.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GateConfig {
    #[serde(flatten)]
    pub spec: GateSpec,
    pub weights: MixWeights,
}

impl GateConfig {
    /// Random fan-in scaled weights sized for children of `child_type`.
    pub fn new<R: Rng + ?Sized>(spec: GateSpec, child_type: &RepType, rng: &mut R) -> Result<Self> {
        spec.validate()?;
        let weights =
            MixWeights::random(&gate_output_type(child_type, &spec), &spec.output_type, rng);
        Ok(Self { spec, weights })
    }

    pub fn with_weights(spec: GateSpec, weights: MixWeights) -> Result<Self> {
        let cfg = Self { spec, weights };
        cfg.spec.validate()?;
        if cfg.weights.output_type() != &cfg.spec.output_type {
            return arg_err(format!(
                "weights produce {}, gate declares {}",
                cfg.weights.output_type(),
                cfg.spec.output_type
            ));
        }
        Ok(cfg)
    }

    pub fn kind(&self) -> GateKind {
        self.spec.kind
    }

    /// Checks that the weights fit children of `child_type`.
    pub fn validate(&self, child_type: &RepType) -> Result<()> {
        self.spec.validate()?;
        let expected = gate_output_type(child_type, &self.spec);
        if self.weights.input_type() != &expected
            || self.weights.output_type() != &self.spec.output_type
        {
            return arg_err(format!(
                "weights map {} -> {}, gate needs {} -> {}",
                self.weights.input_type(),
                self.weights.output_type(),
                expected,
                self.spec.output_type
            ));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(v: &[usize]) -> RepType {
        RepType::new(v.to_vec())
    }

    #[test]
    fn zeroth_gate_shape_arithmetic() {
        let spec = GateSpec::new(GateKind::Zeroth, &[0, 1, 2], 3, t(&[1, 1, 1]));
        assert_eq!(gate_output_type(&t(&[1, 1, 1]), &spec), t(&[3, 9, 6, 3]));
        for c in [1, 2, 4] {
            let spec = GateSpec::new(GateKind::Zeroth, &[0, 1, 2], 3, t(&[c, c, c]));
            assert_eq!(
                gate_output_type(&RepType::uniform(c, 2), &spec),
                t(&[3 * c, 9 * c, 6 * c, 3 * c])
            );
        }
        // Beyond L = 2 every interior ell collects three couplings.
        let spec = GateSpec::new(GateKind::Zeroth, &[0], 4, t(&[1]));
        assert_eq!(
            gate_output_type(&RepType::uniform(1, 3), &spec),
            t(&[1, 3, 3, 2, 1])
        );
    }

    #[test]
    fn moment_of_order_one_on_scalars() {
        let spec = GateSpec::new(GateKind::Moment, &[0], 2, t(&[0, 1]));
        assert_eq!(spec.moment_order, 1);
        assert_eq!(gate_output_type(&t(&[1]), &spec), t(&[0, 1]));
    }

    #[test]
    fn validation() {
        assert!(GateSpec::new(GateKind::Zeroth, &[], 2, t(&[1]))
            .validate()
            .is_err());
        assert!(GateSpec::new(GateKind::Zeroth, &[0], L_CG + 1, t(&[1]))
            .validate()
            .is_err());
        assert!(GateSpec::new(GateKind::Zeroth, &[0], 1, t(&[1, 1, 1]))
            .validate()
            .is_err());
        assert!("nope".parse::<GateKind>().is_err());
        assert_eq!(
            "first_relative".parse::<GateKind>().unwrap(),
            GateKind::FirstRelative
        );
    }
}
