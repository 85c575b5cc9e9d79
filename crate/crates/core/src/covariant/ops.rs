use std::sync::Arc;

use ndarray::{concatenate, Array2, Axis};
use num_complex::Complex64;

use super::{CovariantVector, MixWeights, RepType};
use crate::error::arg_err;
use crate::so3::{cg_block, check_ell, irrep_dim, wigner_d, CgBlock, EulerAngles, L_CG};
use crate::{Error, Result};

/// Multiplicities of the Clebsch-Gordan decomposition of `tau1 ⊗ tau2`.
pub fn kappa(tau1: &RepType, tau2: &RepType) -> RepType {
    let (a, b) = (tau1.multiplicities(), tau2.multiplicities());
    if a.is_empty() || b.is_empty() {
        return RepType::default();
    }
    let mut out = vec![0usize; a.len() + b.len() - 1];
    for (l1, &t1) in a.iter().enumerate() {
        for (l2, &t2) in b.iter().enumerate() {
            for slot in &mut out[l1.abs_diff(l2)..=l1 + l2] {
                *slot += t1 * t2;
            }
        }
    }
    RepType::new(out)
}

/// Concatenates fragments `ell` by `ell`, in argument order.
pub fn direct_sum<'a, I>(psis: I) -> CovariantVector
where
    I: IntoIterator<Item = &'a CovariantVector>,
{
    let psis: Vec<&CovariantVector> = psis.into_iter().collect();
    let len = psis.iter().map(|p| p.parts().len()).max().unwrap_or(0);
    let parts = (0..len)
        .map(|l| {
            let views: Vec<_> = psis
                .iter()
                .filter_map(|p| p.part(l))
                .map(|a| a.view())
                .collect();
            if views.is_empty() {
                Array2::zeros((irrep_dim(l), 0))
            } else {
                concatenate(Axis(1), &views).expect("row counts agree per ell")
            }
        })
        .collect();
    CovariantVector::from_parts(parts).expect("parts built per ell")
}

/// Applies `D^ell(R)` to every fragment.
pub fn rotate(psi: &CovariantVector, rotation: &EulerAngles) -> Result<CovariantVector> {
    let parts = psi
        .parts()
        .iter()
        .enumerate()
        .map(|(l, p)| Ok(wigner_d(l, rotation)?.matrix.dot(p)))
        .collect::<Result<Vec<_>>>()?;
    CovariantVector::from_parts(parts)
}

/// Blocks for every `(ell1, ell2, ell)` reachable from the two types, up to
/// `max_ell`, indexed `[ell1][ell2]`.
fn block_table(a: &RepType, b: &RepType, max_ell: usize) -> Result<Vec<Vec<Vec<Arc<CgBlock>>>>> {
    (0..a.len())
        .map(|l1| {
            (0..b.len())
                .map(|l2| {
                    (l1.abs_diff(l2)..=(l1 + l2).min(max_ell))
                        .map(|l| cg_block(l1, l2, l))
                        .collect()
                })
                .collect()
        })
        .collect()
}

fn check_inputs(a: &CovariantVector, b: &CovariantVector, max_ell: usize) -> Result<()> {
    check_ell(max_ell)?;
    for v in [a, b] {
        if let Some(l) = v.max_ell() {
            check_ell(l)?;
        }
    }
    Ok(())
}

/// Visits every output fragment of `a ⊗ b` (truncated at `max_ell`) in
/// canonical order: for each output `ell`, columns are produced in
/// lexicographic order of `(ell1, i, ell2, j)`.
fn for_each_coupling<F>(
    a: &CovariantVector,
    b: &CovariantVector,
    max_ell: usize,
    mut visit: F,
) -> Result<()>
where
    F: FnMut(&CgBlock, usize, usize, usize, usize),
{
    check_inputs(a, b, max_ell)?;
    let blocks = block_table(a.rep_type(), b.rep_type(), max_ell)?;
    let mut next_col = vec![0usize; max_ell + 1];
    for (l1, pa) in a.parts().iter().enumerate() {
        for i in 0..pa.ncols() {
            for (l2, pb) in b.parts().iter().enumerate() {
                for j in 0..pb.ncols() {
                    for block in &blocks[l1][l2] {
                        let col = next_col[block.ell];
                        next_col[block.ell] += 1;
                        visit(block, i, j, col, block.ell);
                    }
                }
            }
        }
    }
    Ok(())
}

/// Clebsch-Gordan reduced tensor product, keeping only `ell <= max_ell`.
pub fn cg_product_truncated(
    a: &CovariantVector,
    b: &CovariantVector,
    max_ell: usize,
) -> Result<CovariantVector> {
    let out_type = kappa(a.rep_type(), b.rep_type()).truncate(max_ell);
    let mut out = CovariantVector::zeros(&out_type);
    let parts = out.parts_mut();
    for_each_coupling(a, b, max_ell, |block, i, j, col, l| {
        let (x, y) = (&a.parts()[block.ell1], &b.parts()[block.ell2]);
        let target = &mut parts[l];
        for &(row, i1, i2, c) in &block.nonzeros {
            target[[row, col]] += x[[i1, i]] * y[[i2, j]] * c;
        }
    })?;
    Ok(out)
}

/// Clebsch-Gordan reduced tensor product `psi1 ⊗ psi2`.
///
/// Fails with a capability error when the product reaches beyond
/// [`L_CG`]; use [`cg_product_truncated`] in that case.
pub fn cg_product(psi1: &CovariantVector, psi2: &CovariantVector) -> Result<CovariantVector> {
    let top = psi1.max_ell().unwrap_or(0) + psi2.max_ell().unwrap_or(0);
    if top > L_CG {
        return Err(Error::Capability {
            ell: top,
            limit: L_CG,
        });
    }
    cg_product_truncated(psi1, psi2, top)
}

/// `((psi1 ⊗ psi2) ⊗ psi3) ⊗ ...` with parts above `truncate_ell` dropped
/// after every step.
pub fn cg_product_chain(psis: &[CovariantVector], truncate_ell: usize) -> Result<CovariantVector> {
    let (first, rest) = psis
        .split_first()
        .ok_or_else(|| Error::Argument("empty product chain".into()))?;
    rest.iter().try_fold(first.clone(), |acc, next| {
        cg_product_truncated(&acc, next, truncate_ell)
    })
}

/// Equivariant mixing: part `ell` becomes `F^ell (W^ell)^T`.
pub fn mix(psi: &CovariantVector, weights: &MixWeights) -> Result<CovariantVector> {
    if psi.rep_type() != weights.input_type() {
        return arg_err(format!(
            "mixing weights expect type {}, got {}",
            weights.input_type(),
            psi.rep_type()
        ));
    }
    let parts = weights
        .blocks()
        .iter()
        .enumerate()
        .map(|(l, w)| match psi.part(l) {
            Some(p) => p.dot(&w.t()),
            None => Array2::zeros((irrep_dim(l), w.nrows())),
        })
        .collect();
    CovariantVector::from_parts(parts)
}

/// The `tau_0` scalar channels.
pub fn invariant_part(psi: &CovariantVector) -> Vec<Complex64> {
    psi.part(0).map(|p| p.row(0).to_vec()).unwrap_or_default()
}

/// Adjoint of [`cg_product_truncated`]: given the gradient of a real loss
/// with respect to the output (as `dL/dRe + i dL/dIm`), returns the
/// gradients with respect to both inputs.
pub(crate) fn cg_product_adjoint(
    a: &CovariantVector,
    b: &CovariantVector,
    max_ell: usize,
    grad_out: &CovariantVector,
) -> Result<(CovariantVector, CovariantVector)> {
    let mut ga = CovariantVector::zeros(a.rep_type());
    let mut gb = CovariantVector::zeros(b.rep_type());
    {
        let (pa, pb) = (ga.parts_mut(), gb.parts_mut());
        for_each_coupling(a, b, max_ell, |block, i, j, col, l| {
            let g = &grad_out.parts()[l];
            let (x, y) = (&a.parts()[block.ell1], &b.parts()[block.ell2]);
            for &(row, i1, i2, c) in &block.nonzeros {
                let gz = g[[row, col]] * c;
                pa[block.ell1][[i1, i]] += gz * y[[i2, j]].conj();
                pb[block.ell2][[i2, j]] += gz * x[[i1, i]].conj();
            }
        })?;
    }
    Ok((ga, gb))
}

/// Adjoint of [`mix`] with respect to the input vector and the weights.
pub(crate) fn mix_adjoint(
    psi: &CovariantVector,
    weights: &MixWeights,
    grad_out: &CovariantVector,
) -> (CovariantVector, MixWeights) {
    let mut g_psi = CovariantVector::zeros(psi.rep_type());
    let mut g_w = MixWeights::zeros(weights.input_type(), weights.output_type());
    for (l, (w, gw)) in weights.blocks().iter().zip(g_w.blocks_mut()).enumerate() {
        let (Some(p), Some(g)) = (psi.part(l), grad_out.part(l)) else {
            continue;
        };
        g_psi.parts_mut()[l] = g.dot(&w.mapv(|z| z.conj()));
        *gw = g.t().dot(&p.mapv(|z| z.conj()));
    }
    (g_psi, g_w)
}
