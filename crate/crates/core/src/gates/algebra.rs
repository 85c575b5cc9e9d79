use std::f64::consts::LN_2;

use num_complex::Complex64;

use super::Nonlinearity;
use crate::covariant::{
    cg_product_truncated, direct_sum, mix, CovariantVector, MixWeights, RepType,
};
use crate::Result;

/// The primitive operations gates are built from.
///
/// `Cov` is a handle to a covariant vector and `Real` to a real scalar. The
/// [`Eager`] implementation computes values directly; the network's
/// gradient tape records each call instead.
pub trait GateAlgebra {
    type Cov: Clone;
    type Real: Clone;

    fn rep_type(&self, v: &Self::Cov) -> RepType;
    fn real_value(&self, r: &Self::Real) -> f64;

    fn zeros(&mut self, rep_type: &RepType) -> Self::Cov;
    fn cg_product(&mut self, a: &Self::Cov, b: &Self::Cov, max_ell: usize) -> Result<Self::Cov>;
    fn sub(&mut self, a: &Self::Cov, b: &Self::Cov) -> Result<Self::Cov>;
    fn norm(&mut self, v: &Self::Cov) -> Self::Real;
    fn powi(&mut self, r: &Self::Real, exponent: i32) -> Self::Real;
    fn mul(&mut self, a: &Self::Real, b: &Self::Real) -> Self::Real;
    fn scale(&mut self, v: &Self::Cov, factor: &Self::Real) -> Self::Cov;
    /// Sum of equally typed terms; `rep_type` is the type of an empty sum.
    fn sum(&mut self, terms: &[Self::Cov], rep_type: &RepType) -> Result<Self::Cov>;
    fn direct_sum(&mut self, parts: &[Self::Cov]) -> Self::Cov;
    /// Mixing with the weights held in parameter slot `slot`.
    fn mix(&mut self, v: &Self::Cov, weights: &MixWeights, slot: usize) -> Result<Self::Cov>;
    fn nonlinearity(&mut self, v: &Self::Cov, f: Nonlinearity) -> Self::Cov;
}

/// One child as seen by a gate.
pub struct GateChild<A: GateAlgebra + ?Sized> {
    pub sph1: A::Cov,
    pub radius: A::Real,
    pub state: A::Cov,
}

impl<A: GateAlgebra + ?Sized> Clone for GateChild<A> {
    fn clone(&self) -> Self {
        Self {
            sph1: self.sph1.clone(),
            radius: self.radius.clone(),
            state: self.state.clone(),
        }
    }
}

/// Direct evaluation on owned values.
#[derive(Clone, Copy, Debug, Default)]
pub struct Eager;

impl GateAlgebra for Eager {
    type Cov = CovariantVector;
    type Real = f64;

    fn rep_type(&self, v: &CovariantVector) -> RepType {
        v.rep_type().clone()
    }

    fn real_value(&self, r: &f64) -> f64 {
        *r
    }

    fn zeros(&mut self, rep_type: &RepType) -> CovariantVector {
        CovariantVector::zeros(rep_type)
    }

    fn cg_product(
        &mut self,
        a: &CovariantVector,
        b: &CovariantVector,
        max_ell: usize,
    ) -> Result<CovariantVector> {
        cg_product_truncated(a, b, max_ell)
    }

    fn sub(&mut self, a: &CovariantVector, b: &CovariantVector) -> Result<CovariantVector> {
        a.sub(b)
    }

    fn norm(&mut self, v: &CovariantVector) -> f64 {
        v.norm()
    }

    fn powi(&mut self, r: &f64, exponent: i32) -> f64 {
        r.powi(exponent)
    }

    fn mul(&mut self, a: &f64, b: &f64) -> f64 {
        a * b
    }

    fn scale(&mut self, v: &CovariantVector, factor: &f64) -> CovariantVector {
        v.scaled(*factor)
    }

    fn sum(&mut self, terms: &[CovariantVector], rep_type: &RepType) -> Result<CovariantVector> {
        let mut acc = CovariantVector::zeros(rep_type);
        for t in terms {
            acc.add_assign(t)?;
        }
        Ok(acc)
    }

    fn direct_sum(&mut self, parts: &[CovariantVector]) -> CovariantVector {
        direct_sum(parts)
    }

    fn mix(
        &mut self,
        v: &CovariantVector,
        weights: &MixWeights,
        _slot: usize,
    ) -> Result<CovariantVector> {
        mix(v, weights)
    }

    fn nonlinearity(&mut self, v: &CovariantVector, f: Nonlinearity) -> CovariantVector {
        apply_nonlinearity(v, f)
    }
}

/// `ln(1 + e^x) - ln 2`, zero at the origin.
pub(crate) fn shifted_softplus(x: f64) -> f64 {
    x.max(0.0) + (-x.abs()).exp().ln_1p() - LN_2
}

fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn apply_nonlinearity(v: &CovariantVector, f: Nonlinearity) -> CovariantVector {
    let mut out = v.clone();
    if let Some(p) = out.parts_mut().first_mut() {
        match f {
            Nonlinearity::ShiftedSoftplus => {
                p.mapv_inplace(|z| Complex64::new(shifted_softplus(z.re), shifted_softplus(z.im)));
            }
        }
    }
    out
}

/// Gradient with respect to the input of [`apply_nonlinearity`].
pub(crate) fn nonlinearity_adjoint(
    input: &CovariantVector,
    grad_out: &CovariantVector,
    f: Nonlinearity,
) -> CovariantVector {
    let mut g = grad_out.clone();
    if let (Some(gp), Some(xp)) = (g.parts_mut().first_mut(), input.part(0)) {
        match f {
            Nonlinearity::ShiftedSoftplus => {
                gp.zip_mut_with(xp, |gz, x| {
                    *gz = Complex64::new(gz.re * sigmoid(x.re), gz.im * sigmoid(x.im));
                });
            }
        }
    }
    g
}
