use ndarray::Array2;
use num_complex::Complex64;
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::RepType;
use crate::error::arg_err;
use crate::{Error, Result};

/// Per-`ell` mixing matrices `W^ell` of shape `tau_out[ell] x tau_in[ell]`.
///
/// Parts of the input with `ell` beyond the output type are dropped by
/// [`mix`](super::mix).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "WeightsJson", into = "WeightsJson")]
pub struct MixWeights {
    input: RepType,
    output: RepType,
    blocks: Vec<Array2<Complex64>>,
}

impl MixWeights {
    pub fn zeros(input: &RepType, output: &RepType) -> Self {
        let blocks = (0..output.len())
            .map(|l| Array2::zeros((output.multiplicity(l), input.multiplicity(l))))
            .collect();
        Self {
            input: input.clone(),
            output: output.clone(),
            blocks,
        }
    }

    pub fn identity(rep_type: &RepType) -> Self {
        let blocks = rep_type
            .multiplicities()
            .iter()
            .map(|&t| Array2::eye(t))
            .collect();
        Self {
            input: rep_type.clone(),
            output: rep_type.clone(),
            blocks,
        }
    }

    /// Real and imaginary parts uniform on `[-a, a]` with `a = tau_in[ell]^(-1/2)`.
    pub fn random<R: Rng + ?Sized>(input: &RepType, output: &RepType, rng: &mut R) -> Self {
        let mut w = Self::zeros(input, output);
        for (l, b) in w.blocks.iter_mut().enumerate() {
            let fan_in = input.multiplicity(l);
            if fan_in == 0 {
                continue;
            }
            let a = 1.0 / (fan_in as f64).sqrt();
            b.mapv_inplace(|_| Complex64::new(rng.gen_range(-a..=a), rng.gen_range(-a..=a)));
        }
        w
    }

    /// Builds weights from explicit blocks, checking their shapes.
    pub fn from_blocks(
        input: &RepType,
        output: &RepType,
        blocks: Vec<Array2<Complex64>>,
    ) -> Result<Self> {
        if blocks.len() != output.len() {
            return arg_err(format!(
                "{} weight blocks for output type {output}",
                blocks.len()
            ));
        }
        for (l, b) in blocks.iter().enumerate() {
            let expected = (output.multiplicity(l), input.multiplicity(l));
            if b.dim() != expected {
                return arg_err(format!(
                    "W^{l} has shape {:?}, expected {:?}",
                    b.dim(),
                    expected
                ));
            }
        }
        Ok(Self {
            input: input.clone(),
            output: output.clone(),
            blocks,
        })
    }

    pub fn input_type(&self) -> &RepType {
        &self.input
    }

    pub fn output_type(&self) -> &RepType {
        &self.output
    }

    /// `W^ell`, or `None` when `ell` is beyond the output type.
    pub fn block(&self, ell: usize) -> Option<&Array2<Complex64>> {
        self.blocks.get(ell)
    }

    pub fn blocks(&self) -> &[Array2<Complex64>] {
        &self.blocks
    }

    pub(crate) fn blocks_mut(&mut self) -> &mut [Array2<Complex64>] {
        &mut self.blocks
    }

    /// Shapes `(rows, cols)` of every block.
    pub fn shapes(&self) -> Vec<(usize, usize)> {
        self.blocks.iter().map(|b| b.dim()).collect()
    }

    /// Number of real parameters (two per complex entry).
    pub fn real_len(&self) -> usize {
        2 * self.blocks.iter().map(|b| b.len()).sum::<usize>()
    }
}

#[derive(Serialize, Deserialize)]
struct WeightsJson {
    input: RepType,
    output: RepType,
    blocks: Vec<Vec<Vec<[f64; 2]>>>,
}

impl From<MixWeights> for WeightsJson {
    fn from(w: MixWeights) -> Self {
        let blocks = w
            .blocks
            .iter()
            .map(|b| {
                b.rows()
                    .into_iter()
                    .map(|r| r.iter().map(|z| [z.re, z.im]).collect())
                    .collect()
            })
            .collect();
        Self {
            input: w.input,
            output: w.output,
            blocks,
        }
    }
}

impl TryFrom<WeightsJson> for MixWeights {
    type Error = Error;

    fn try_from(j: WeightsJson) -> Result<Self> {
        let mut blocks = Vec::with_capacity(j.blocks.len());
        for (l, rows) in j.blocks.into_iter().enumerate() {
            let (r, c) = (j.output.multiplicity(l), j.input.multiplicity(l));
            if rows.len() != r || rows.iter().any(|row| row.len() != c) {
                return arg_err(format!("W^{l} does not have shape {r}x{c}"));
            }
            let data = rows
                .into_iter()
                .flatten()
                .map(|[re, im]| Complex64::new(re, im))
                .collect();
            blocks.push(Array2::from_shape_vec((r, c), data).expect("shape checked"));
        }
        Self::from_blocks(&j.input, &j.output, blocks)
    }
}
