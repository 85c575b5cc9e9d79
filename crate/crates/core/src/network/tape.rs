use num_complex::Complex64;

use super::model::{push_parts, Model};
use super::scheme::{build_scheme, Anchor, CompositionScheme};
use super::system::System;
use crate::covariant::{
    cg_product_adjoint, cg_product_truncated, direct_sum, mix, mix_adjoint, CovariantVector,
    MixWeights, RepType,
};
use crate::gates::{
    apply_nonlinearity, evaluate_gate, nonlinearity_adjoint, GateAlgebra, GateChild, Nonlinearity,
    R_MIN,
};
use crate::so3::to_spherical;
use crate::{Error, Result};

/// Handle to a value recorded on a [`GradientTape`].
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Var(usize);

#[derive(Clone, Debug)]
enum Value {
    Vec3([f64; 3]),
    Real(f64),
    Cov(CovariantVector),
}

impl Value {
    fn vec3(&self) -> [f64; 3] {
        match self {
            Value::Vec3(v) => *v,
            _ => unreachable!("tape value is not a 3-vector"),
        }
    }

    fn real(&self) -> f64 {
        match self {
            Value::Real(r) => *r,
            _ => unreachable!("tape value is not a real"),
        }
    }

    fn cov(&self) -> &CovariantVector {
        match self {
            Value::Cov(c) => c,
            _ => unreachable!("tape value is not a covariant vector"),
        }
    }
}

#[derive(Clone, Debug)]
enum Op {
    Position(usize),
    Centroid(Vec<Var>),
    /// `a - b` on 3-vectors.
    Offset(Var, Var),
    Sph1(Var),
    Norm3(Var),
    Embedding(usize),
    Zeros(RepType),
    CgProduct(Var, Var, usize),
    Sub(Var, Var),
    Norm(Var),
    Powi(Var, i32),
    Mul(Var, Var),
    Scale(Var, Var),
    Sum(Vec<Var>, RepType),
    DirectSum(Vec<Var>),
    Mix(Var, usize),
    Nonlin(Var, Nonlinearity),
    Readout(Var),
}

/// Record of one forward pass.
///
/// Holds a snapshot of the parameters and positions it was evaluated
/// with, so [`replay`](Self::replay) and [`backward`] never consult the
/// live model.
#[derive(Clone, Debug)]
pub struct GradientTape {
    model: Model,
    positions: Vec<[f64; 3]>,
    scheme: CompositionScheme,
    ops: Vec<Op>,
    values: Vec<Value>,
    node_states: Vec<Var>,
    energy: Option<Var>,
}

/// Gradients of a scalar with respect to every parameter class.
///
/// Complex parameters `z` hold `dL/dRe z + i dL/dIm z`.
#[derive(Clone, Debug, PartialEq)]
pub struct Gradients {
    pub weights: Vec<MixWeights>,
    pub embeddings: Vec<CovariantVector>,
    pub readout: Vec<f64>,
    pub positions: Vec<[f64; 3]>,
}

impl Gradients {
    pub fn zeros(model: &Model, n_atoms: usize) -> Self {
        Self {
            weights: model
                .gates
                .iter()
                .map(|g| MixWeights::zeros(g.weights.input_type(), g.weights.output_type()))
                .collect(),
            embeddings: model
                .embeddings
                .iter()
                .map(|e| CovariantVector::zeros(e.rep_type()))
                .collect(),
            readout: vec![0.0; model.readout.len()],
            positions: vec![[0.0; 3]; n_atoms],
        }
    }

    /// Parameter gradients in the order of [`Model::params`].
    pub fn params(&self) -> Vec<f64> {
        let mut out = Vec::new();
        push_parts(
            &mut out,
            &self.weights.iter().collect::<Vec<_>>(),
            &self.embeddings,
        );
        out.extend_from_slice(&self.readout);
        out
    }

    /// Adds `factor * other` to the parameter gradients (positions are
    /// per-system and left alone).
    pub fn accumulate_params(&mut self, other: &Gradients, factor: f64) {
        for (a, b) in self.weights.iter_mut().zip(&other.weights) {
            for (x, y) in a.blocks_mut().iter_mut().zip(b.blocks()) {
                x.scaled_add(Complex64::new(factor, 0.0), y);
            }
        }
        for (a, b) in self.embeddings.iter_mut().zip(&other.embeddings) {
            a.add_assign(&b.scaled(factor))
                .expect("matching embedding types");
        }
        for (a, b) in self.readout.iter_mut().zip(&other.readout) {
            *a += factor * b;
        }
    }
}

impl GradientTape {
    fn new(model: &Model, system: &System, scheme: CompositionScheme) -> Self {
        Self {
            model: model.clone(),
            positions: system.positions.clone(),
            scheme,
            ops: Vec::new(),
            values: Vec::new(),
            node_states: Vec::new(),
            energy: None,
        }
    }

    fn eval(&self, op: &Op, values: &[Value]) -> Result<Value> {
        let cov = |v: &Var| values[v.0].cov();
        let real = |v: &Var| values[v.0].real();
        let vec3 = |v: &Var| values[v.0].vec3();
        Ok(match op {
            Op::Position(i) => Value::Vec3(self.positions[*i]),
            Op::Centroid(ids) => {
                let mut c = [0.0; 3];
                for v in ids {
                    let p = vec3(v);
                    for k in 0..3 {
                        c[k] += p[k];
                    }
                }
                let m = ids.len() as f64;
                Value::Vec3(c.map(|x| x / m))
            }
            Op::Offset(a, b) => {
                let (a, b) = (vec3(a), vec3(b));
                Value::Vec3([a[0] - b[0], a[1] - b[1], a[2] - b[2]])
            }
            Op::Sph1(v) => Value::Cov(CovariantVector::spherical_vector(to_spherical(vec3(v)))),
            Op::Norm3(v) => {
                let v = vec3(v);
                Value::Real((v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt())
            }
            Op::Embedding(s) => Value::Cov(self.model.embeddings[*s].clone()),
            Op::Zeros(t) => Value::Cov(CovariantVector::zeros(t)),
            Op::CgProduct(a, b, l) => Value::Cov(cg_product_truncated(cov(a), cov(b), *l)?),
            Op::Sub(a, b) => Value::Cov(cov(a).sub(cov(b))?),
            Op::Norm(v) => Value::Real(cov(v).norm()),
            Op::Powi(r, p) => Value::Real(real(r).powi(*p)),
            Op::Mul(a, b) => Value::Real(real(a) * real(b)),
            Op::Scale(v, f) => Value::Cov(cov(v).scaled(real(f))),
            Op::Sum(terms, t) => {
                let mut acc = CovariantVector::zeros(t);
                for v in terms {
                    acc.add_assign(cov(v))?;
                }
                Value::Cov(acc)
            }
            Op::DirectSum(parts) => Value::Cov(direct_sum(parts.iter().map(cov))),
            Op::Mix(v, slot) => Value::Cov(mix(cov(v), &self.model.gates[*slot].weights)?),
            Op::Nonlin(v, f) => Value::Cov(apply_nonlinearity(cov(v), *f)),
            Op::Readout(v) => Value::Real(self.model.readout_value(cov(v))),
        })
    }

    fn push(&mut self, op: Op) -> Result<Var> {
        let value = self.eval(&op, &self.values)?;
        self.ops.push(op);
        self.values.push(value);
        Ok(Var(self.values.len() - 1))
    }

    /// For operations that cannot fail on well-typed operands.
    fn push_infallible(&mut self, op: Op) -> Var {
        self.push(op).expect("operation on well-typed tape values")
    }

    pub fn len(&self) -> usize {
        self.ops.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ops.is_empty()
    }

    pub fn scheme(&self) -> &CompositionScheme {
        &self.scheme
    }

    /// The state computed for scheme node `node`.
    pub fn node_state(&self, node: usize) -> &CovariantVector {
        self.values[self.node_states[node].0].cov()
    }

    pub fn energy(&self) -> f64 {
        self.energy.map_or(0.0, |v| self.values[v.0].real())
    }

    /// Re-evaluates every recorded operation from the snapshot and returns
    /// the energy.
    pub fn replay(&self) -> Result<f64> {
        let mut values = Vec::with_capacity(self.ops.len());
        for op in &self.ops {
            let v = self.eval(op, &values)?;
            values.push(v);
        }
        Ok(self.energy.map_or(0.0, |v| values[v.0].real()))
    }
}

impl GateAlgebra for GradientTape {
    type Cov = Var;
    type Real = Var;

    fn rep_type(&self, v: &Var) -> RepType {
        self.values[v.0].cov().rep_type().clone()
    }

    fn real_value(&self, r: &Var) -> f64 {
        self.values[r.0].real()
    }

    fn zeros(&mut self, rep_type: &RepType) -> Var {
        self.push_infallible(Op::Zeros(rep_type.clone()))
    }

    fn cg_product(&mut self, a: &Var, b: &Var, max_ell: usize) -> Result<Var> {
        self.push(Op::CgProduct(*a, *b, max_ell))
    }

    fn sub(&mut self, a: &Var, b: &Var) -> Result<Var> {
        self.push(Op::Sub(*a, *b))
    }

    fn norm(&mut self, v: &Var) -> Var {
        self.push_infallible(Op::Norm(*v))
    }

    fn powi(&mut self, r: &Var, exponent: i32) -> Var {
        self.push_infallible(Op::Powi(*r, exponent))
    }

    fn mul(&mut self, a: &Var, b: &Var) -> Var {
        self.push_infallible(Op::Mul(*a, *b))
    }

    fn scale(&mut self, v: &Var, factor: &Var) -> Var {
        self.push_infallible(Op::Scale(*v, *factor))
    }

    fn sum(&mut self, terms: &[Var], rep_type: &RepType) -> Result<Var> {
        self.push(Op::Sum(terms.to_vec(), rep_type.clone()))
    }

    fn direct_sum(&mut self, parts: &[Var]) -> Var {
        self.push_infallible(Op::DirectSum(parts.to_vec()))
    }

    fn mix(&mut self, v: &Var, _weights: &MixWeights, slot: usize) -> Result<Var> {
        self.push(Op::Mix(*v, slot))
    }

    fn nonlinearity(&mut self, v: &Var, f: Nonlinearity) -> Var {
        self.push_infallible(Op::Nonlin(*v, f))
    }
}

/// Evaluates `model` on `system`, recording every operation.
///
/// Per-atom nodes sit on their own atom, so the child of the same atom
/// one level down would be at zero offset; it is kept in the scheme but
/// not passed to the gate.
pub fn forward(model: &Model, system: &System) -> Result<(f64, GradientTape)> {
    model.check_system(system)?;
    let scheme = build_scheme(system, model.config.cutoff, model.config.depth)?;
    let mut tape = GradientTape::new(model, system, scheme.clone());

    let atoms: Vec<Var> = (0..system.len())
        .map(|i| tape.push_infallible(Op::Position(i)))
        .collect();
    let mut node_pos = Vec::with_capacity(scheme.nodes.len());
    for node in &scheme.nodes {
        node_pos.push(match node.anchor {
            Anchor::Atom(i) => atoms[i],
            Anchor::Centroid => {
                tape.push_infallible(Op::Centroid(node.part.iter().map(|&i| atoms[i]).collect()))
            }
        });
    }

    let children = scheme.children();
    let mut states: Vec<Var> = Vec::with_capacity(scheme.nodes.len());
    for (id, node) in scheme.nodes.iter().enumerate() {
        let state = if node.level == 0 {
            let atom = *node.part.first().expect("leaf holds one atom");
            tape.push_infallible(Op::Embedding(system.species[atom]))
        } else {
            let mut inputs = Vec::with_capacity(children[id].len());
            for &c in &children[id] {
                let child = &scheme.nodes[c];
                if matches!(node.anchor, Anchor::Atom(_)) && child.anchor == node.anchor {
                    continue;
                }
                let offset = tape.push_infallible(Op::Offset(node_pos[c], node_pos[id]));
                let radius = tape.push_infallible(Op::Norm3(offset));
                let r = tape.real_value(&radius);
                if !(r > R_MIN) {
                    return Err(Error::Degeneracy {
                        radius: r,
                        r_min: R_MIN,
                    });
                }
                inputs.push(GateChild {
                    sph1: tape.push_infallible(Op::Sph1(offset)),
                    radius,
                    state: states[c],
                });
            }
            let slot = node.level - 1;
            evaluate_gate(&mut tape, &inputs, &model.gates[slot], slot)?
        };
        states.push(state);
    }
    let energy = tape.push_infallible(Op::Readout(states[scheme.root]));
    tape.node_states = states;
    tape.energy = Some(energy);
    Ok((tape.energy(), tape))
}

fn add_real(adj: &mut [Option<Value>], v: Var, g: f64) {
    match &mut adj[v.0] {
        Some(Value::Real(r)) => *r += g,
        slot => *slot = Some(Value::Real(g)),
    }
}

fn add_vec3(adj: &mut [Option<Value>], v: Var, g: [f64; 3]) {
    match &mut adj[v.0] {
        Some(Value::Vec3(a)) => {
            for k in 0..3 {
                a[k] += g[k];
            }
        }
        slot => *slot = Some(Value::Vec3(g)),
    }
}

fn add_cov(adj: &mut [Option<Value>], v: Var, g: CovariantVector) {
    match &mut adj[v.0] {
        Some(Value::Cov(a)) => a.add_assign(&g).expect("adjoint has the value's type"),
        slot => *slot = Some(Value::Cov(g)),
    }
}

/// Reverse pass: gradients of `loss_adjoint * energy`.
pub fn backward(tape: &GradientTape, loss_adjoint: f64) -> Gradients {
    let mut grads = Gradients::zeros(&tape.model, tape.positions.len());
    let Some(energy) = tape.energy else {
        return grads;
    };
    let vals = &tape.values;
    let mut adj: Vec<Option<Value>> = vec![None; vals.len()];
    adj[energy.0] = Some(Value::Real(loss_adjoint));

    for idx in (0..tape.ops.len()).rev() {
        let Some(g) = adj[idx].take() else { continue };
        match (&tape.ops[idx], g) {
            (Op::Position(i), Value::Vec3(g)) => {
                for k in 0..3 {
                    grads.positions[*i][k] += g[k];
                }
            }
            (Op::Centroid(ids), Value::Vec3(g)) => {
                let m = ids.len() as f64;
                for v in ids {
                    add_vec3(&mut adj, *v, g.map(|x| x / m));
                }
            }
            (Op::Offset(a, b), Value::Vec3(g)) => {
                add_vec3(&mut adj, *a, g);
                add_vec3(&mut adj, *b, g.map(|x| -x));
            }
            (Op::Sph1(v), Value::Cov(g)) => {
                let p = g.part(1).expect("spherical vector has an ell = 1 part");
                let (gm, g0, gp) = (p[[0, 0]], p[[1, 0]], p[[2, 0]]);
                let s = std::f64::consts::FRAC_1_SQRT_2;
                add_vec3(
                    &mut adj,
                    *v,
                    [s * (gm.re - gp.re), s * (gm.im + gp.im), g0.re],
                );
            }
            (Op::Norm3(v), Value::Real(g)) => {
                let x = vals[v.0].vec3();
                let n = vals[idx].real();
                add_vec3(&mut adj, *v, x.map(|c| g * c / n));
            }
            (Op::Embedding(s), Value::Cov(g)) => {
                grads.embeddings[*s].add_assign(&g).expect("embedding type");
            }
            (Op::Zeros(_), _) => {}
            (Op::CgProduct(a, b, l), Value::Cov(g)) => {
                let (ga, gb) = cg_product_adjoint(vals[a.0].cov(), vals[b.0].cov(), *l, &g)
                    .expect("product was evaluated on the same operands");
                add_cov(&mut adj, *a, ga);
                add_cov(&mut adj, *b, gb);
            }
            (Op::Sub(a, b), Value::Cov(g)) => {
                add_cov(&mut adj, *b, g.scaled(-1.0));
                add_cov(&mut adj, *a, g);
            }
            (Op::Norm(v), Value::Real(g)) => {
                let n = vals[idx].real();
                add_cov(&mut adj, *v, vals[v.0].cov().scaled(g / n));
            }
            (Op::Powi(r, p), Value::Real(g)) => {
                let x = vals[r.0].real();
                add_real(&mut adj, *r, g * f64::from(*p) * x.powi(p - 1));
            }
            (Op::Mul(a, b), Value::Real(g)) => {
                let (x, y) = (vals[a.0].real(), vals[b.0].real());
                add_real(&mut adj, *a, g * y);
                add_real(&mut adj, *b, g * x);
            }
            (Op::Scale(v, f), Value::Cov(g)) => {
                let x = vals[v.0].cov();
                let df: f64 = x
                    .flatten()
                    .iter()
                    .zip(g.flatten())
                    .map(|(x, g)| (x.conj() * g).re)
                    .sum();
                add_real(&mut adj, *f, df);
                add_cov(&mut adj, *v, g.scaled(vals[f.0].real()));
            }
            (Op::Sum(terms, _), Value::Cov(g)) => {
                for v in terms {
                    add_cov(&mut adj, *v, g.clone());
                }
            }
            (Op::DirectSum(parts), Value::Cov(g)) => {
                let mut offset = vec![0usize; g.parts().len()];
                for v in parts {
                    let t = vals[v.0].cov().rep_type();
                    let pieces = t
                        .multiplicities()
                        .iter()
                        .enumerate()
                        .map(|(l, &n)| {
                            let cols = g.parts()[l]
                                .slice(ndarray::s![.., offset[l]..offset[l] + n])
                                .to_owned();
                            offset[l] += n;
                            cols
                        })
                        .collect();
                    add_cov(
                        &mut adj,
                        *v,
                        CovariantVector::from_parts(pieces).expect("slices of a valid part"),
                    );
                }
            }
            (Op::Mix(v, slot), Value::Cov(g)) => {
                let (gv, gw) = mix_adjoint(vals[v.0].cov(), &tape.model.gates[*slot].weights, &g);
                for (a, b) in grads.weights[*slot]
                    .blocks_mut()
                    .iter_mut()
                    .zip(gw.blocks())
                {
                    *a += b;
                }
                add_cov(&mut adj, *v, gv);
            }
            (Op::Nonlin(v, f), Value::Cov(g)) => {
                add_cov(&mut adj, *v, nonlinearity_adjoint(vals[v.0].cov(), &g, *f));
            }
            (Op::Readout(v), Value::Real(g)) => {
                let x = vals[v.0].cov();
                let w = &tape.model.readout;
                let tau = w.len() / 2;
                let mut gx = CovariantVector::zeros(x.rep_type());
                if let (Some(p), Some(gp)) = (x.part(0), gx.parts_mut().first_mut()) {
                    for k in 0..tau.min(p.ncols()) {
                        gp[[0, k]] = Complex64::new(g * w[k], g * w[tau + k]);
                        grads.readout[k] += g * p[[0, k]].re;
                        grads.readout[tau + k] += g * p[[0, k]].im;
                    }
                }
                add_cov(&mut adj, *v, gx);
            }
            (op, _) => unreachable!("adjoint kind does not match {op:?}"),
        }
    }
    grads
}

/// `F_i = -dE/dr_i` for every atom.
pub fn forces(model: &Model, system: &System) -> Result<Vec<[f64; 3]>> {
    let (_, tape) = forward(model, system)?;
    Ok(backward(&tape, 1.0)
        .positions
        .iter()
        .map(|g| g.map(|x| -x))
        .collect())
}
