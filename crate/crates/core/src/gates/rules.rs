use super::algebra::{Eager, GateAlgebra, GateChild};
use super::config::{GateConfig, GateKind};
use super::position::{RelativePosition, R_MIN};
use crate::covariant::CovariantVector;
use crate::error::arg_err;
use crate::{Error, Result};

/// Evaluates a gate of any kind with algebra `alg`.
///
/// `slot` names the parameter set the mixing weights belong to; it only
/// matters to recording algebras.
pub fn evaluate_gate<A: GateAlgebra>(
    alg: &mut A,
    children: &[GateChild<A>],
    cfg: &GateConfig,
    slot: usize,
) -> Result<A::Cov> {
    let spec = &cfg.spec;
    let Some(first) = children.first() else {
        return Ok(alg.zeros(&spec.output_type));
    };
    let child_type = alg.rep_type(&first.state);
    for c in &children[1..] {
        let t = alg.rep_type(&c.state);
        if t != child_type {
            return arg_err(format!(
                "children of one gate must share a type: {child_type} vs {t}"
            ));
        }
    }
    cfg.validate(&child_type)?;
    let channel_type = spec.channel_type(&child_type);
    let trunc = spec.truncate_ell;

    // (product, radius factor base) per summand; the factor is raised to -s
    // for each radial power.
    let mut terms: Vec<(A::Cov, A::Real)> = Vec::new();
    match spec.kind {
        GateKind::Zeroth => {
            for c in children {
                let p = alg.cg_product(&c.state, &c.sph1, trunc)?;
                terms.push((p, c.radius.clone()));
            }
        }
        GateKind::FirstPairwise => {
            for ci in children {
                for cj in children {
                    let p = alg.cg_product(&ci.state, &cj.state, trunc)?;
                    let p = alg.cg_product(&p, &ci.sph1, trunc)?;
                    let p = alg.cg_product(&p, &cj.sph1, trunc)?;
                    let r = alg.mul(&ci.radius, &cj.radius);
                    terms.push((p, r));
                }
            }
        }
        GateKind::FirstRelative => {
            for (i, ci) in children.iter().enumerate() {
                for (j, cj) in children.iter().enumerate() {
                    if i == j {
                        continue;
                    }
                    let rel = alg.sub(&ci.sph1, &cj.sph1)?;
                    let r = alg.norm(&rel);
                    let radius = alg.real_value(&r);
                    if !(radius > R_MIN) {
                        return Err(Error::Degeneracy {
                            radius,
                            r_min: R_MIN,
                        });
                    }
                    let p = alg.cg_product(&ci.state, &cj.state, trunc)?;
                    let p = alg.cg_product(&p, &rel, trunc)?;
                    terms.push((p, r));
                }
            }
        }
        GateKind::Moment => {
            for c in children {
                let mut p = c.sph1.clone();
                for _ in 1..spec.moment_order {
                    p = alg.cg_product(&p, &c.sph1, trunc)?;
                }
                let p = alg.cg_product(&p, &c.state, trunc)?;
                terms.push((p, c.radius.clone()));
            }
        }
    }

    let mut channels = Vec::with_capacity(spec.radial_powers.len());
    for &s in &spec.radial_powers {
        let scaled: Vec<A::Cov> = if s == 0 {
            terms.iter().map(|(p, _)| p.clone()).collect()
        } else {
            terms
                .iter()
                .map(|(p, r)| {
                    let f = alg.powi(r, -(s as i32));
                    alg.scale(p, &f)
                })
                .collect()
        };
        channels.push(alg.sum(&scaled, &channel_type)?);
    }
    let pre = alg.direct_sum(&channels);
    let out = alg.mix(&pre, &cfg.weights, slot)?;
    Ok(match spec.nonlinearity {
        Some(f) => alg.nonlinearity(&out, f),
        None => out,
    })
}

fn eager_children(children: &[(RelativePosition, CovariantVector)]) -> Vec<GateChild<Eager>> {
    children
        .iter()
        .map(|(pos, state)| GateChild {
            sph1: pos.sph1.clone(),
            radius: pos.radius,
            state: state.clone(),
        })
        .collect()
}

/// Evaluates any gate on concrete children.
pub fn apply_gate(
    children: &[(RelativePosition, CovariantVector)],
    cfg: &GateConfig,
) -> Result<CovariantVector> {
    evaluate_gate(&mut Eager, &eager_children(children), cfg, 0)
}

fn require_kind(cfg: &GateConfig, allowed: &[GateKind]) -> Result<()> {
    if allowed.contains(&cfg.kind()) {
        Ok(())
    } else {
        arg_err(format!("gate kind {:?} not accepted here", cfg.kind()))
    }
}

pub fn zeroth_order_gate(
    children: &[(RelativePosition, CovariantVector)],
    cfg: &GateConfig,
) -> Result<CovariantVector> {
    require_kind(cfg, &[GateKind::Zeroth])?;
    apply_gate(children, cfg)
}

pub fn first_order_gate(
    children: &[(RelativePosition, CovariantVector)],
    cfg: &GateConfig,
) -> Result<CovariantVector> {
    require_kind(cfg, &[GateKind::FirstPairwise, GateKind::FirstRelative])?;
    apply_gate(children, cfg)
}

pub fn moment_gate(
    children: &[(RelativePosition, CovariantVector)],
    cfg: &GateConfig,
) -> Result<CovariantVector> {
    require_kind(cfg, &[GateKind::Moment])?;
    apply_gate(children, cfg)
}
