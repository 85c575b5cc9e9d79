//! Helpers shared by the integration tests.
#![allow(dead_code)]

use cgnet::covariant::{mix, rotate, CovariantVector, MixWeights, RepType};
use cgnet::gates::{GateKind, GateSpec, Nonlinearity};
use cgnet::so3::{EulerAngles, Mat3};
use cgnet::{Complex64, Model, ModelConfig, System};
use ndarray::{Array1, Array2};
use rand::Rng;

pub const KINDS: [GateKind; 4] = [
    GateKind::Zeroth,
    GateKind::FirstPairwise,
    GateKind::FirstRelative,
    GateKind::Moment,
];

pub fn max_abs(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// `max |a - b| / max(max |b|, 1)`.
pub fn rel_diff(a: &CovariantVector, b: &CovariantVector) -> f64 {
    a.max_abs_diff(b) / b.max_abs().max(1.0)
}

pub fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

/// Offset with length in `[0.5, 2]`.
pub fn random_offset<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-2.0..2.0));
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (0.5..=2.0).contains(&r) {
            return v;
        }
    }
}

/// `n` atoms in a cube of side 2.5, pairwise at least 0.8 apart.
pub fn random_system<R: Rng>(rng: &mut R, n: usize, n_species: usize) -> System {
    let mut positions: Vec<[f64; 3]> = Vec::new();
    while positions.len() < n {
        let p = [0, 1, 2].map(|_| rng.gen_range(0.0..2.5));
        if positions
            .iter()
            .all(|q| (0..3).map(|k| (p[k] - q[k]).powi(2)).sum::<f64>() >= 0.64)
        {
            positions.push(p);
        }
    }
    let species = (0..n).map(|_| rng.gen_range(0..n_species)).collect();
    System::new(positions, species).unwrap()
}

pub fn gate_spec(kind: GateKind, powers: &[u32], output: RepType) -> GateSpec {
    let spec = GateSpec::new(kind, powers, 2, output);
    if kind == GateKind::Moment {
        spec.with_moment_order(2)
    } else {
        spec
    }
}

/// Two hidden levels (moment, then `kind`) and a `kind` root. Every
/// neighbourhood of a [`random_system`] is complete.
pub fn test_model(kind: GateKind, seed: u64, nonlinear: bool) -> Model {
    let c = 2;
    let f = nonlinear.then_some(Nonlinearity::ShiftedSoftplus);
    let config = ModelConfig {
        channels: c,
        n_species: 2,
        depth: 2,
        cutoff: 5.0,
        hidden: vec![
            gate_spec(GateKind::Moment, &[0, 2], RepType::uniform(c, 2)).with_nonlinearity(f),
            gate_spec(kind, &[0, 1, 2], RepType::uniform(c, 2)).with_nonlinearity(f),
        ],
        root: gate_spec(kind, &[0, 1], RepType::scalars(c)),
    };
    Model::new(config, seed).unwrap()
}

pub fn apply(m: &Mat3, v: [f64; 3]) -> [f64; 3] {
    [0, 1, 2].map(|i| (0..3).map(|j| m[i][j] * v[j]).sum())
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

fn axis_rotation(axis: [f64; 3], angle: f64) -> Mat3 {
    let n = (axis[0] * axis[0] + axis[1] * axis[1] + axis[2] * axis[2]).sqrt();
    let [x, y, z] = axis.map(|a| a / n);
    let (s, c) = angle.sin_cos();
    let t = 1.0 - c;
    [
        [c + x * x * t, x * y * t - z * s, x * z * t + y * s],
        [y * x * t + z * s, c + y * y * t, y * z * t - x * s],
        [z * x * t - y * s, z * y * t + x * s, c + z * z * t],
    ]
}

/// The 60 rotations of the icosahedron, by closure from two generators.
pub fn icosahedral_group() -> Vec<Mat3> {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let gens = [
        axis_rotation([0.0, 1.0, phi], 2.0 * std::f64::consts::PI / 5.0),
        axis_rotation([1.0, 1.0, 1.0], 2.0 * std::f64::consts::PI / 3.0),
    ];
    let same =
        |a: &Mat3, b: &Mat3| (0..9).all(|k| (a[k / 3][k % 3] - b[k / 3][k % 3]).abs() < 1e-9);
    let mut group = vec![[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]];
    let mut frontier = group.clone();
    while let Some(g) = frontier.pop() {
        for h in &gens {
            let p = matmul(h, &g);
            if !group.iter().any(|q| same(q, &p)) {
                group.push(p);
                frontier.push(p);
            }
        }
    }
    group
}

/// The matrix of `rotate(., r)` on flattened vectors of type `ty`.
pub fn rotation_matrix(ty: &RepType, r: &EulerAngles) -> Array2<Complex64> {
    let n = ty.dim();
    let mut out = Array2::zeros((n, n));
    for k in 0..n {
        let mut e = vec![Complex64::new(0.0, 0.0); n];
        e[k] = Complex64::new(1.0, 0.0);
        let col = rotate(&CovariantVector::from_flat(ty, &e).unwrap(), r)
            .unwrap()
            .flatten();
        out.column_mut(k).assign(&Array1::from(col));
    }
    out
}

pub fn random_complex_matrix<R: Rng>(rows: usize, cols: usize, rng: &mut R) -> Array2<Complex64> {
    Array2::from_shape_fn((rows, cols), |_| {
        Complex64::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0))
    })
}

pub fn apply_linear(a: &Array2<Complex64>, ty: &RepType, v: &CovariantVector) -> CovariantVector {
    let out = a.dot(&Array1::from(v.flatten()));
    CovariantVector::from_flat(ty, out.as_slice().unwrap()).unwrap()
}

/// Solves `a x = b` for square complex `a` by Gaussian elimination with
/// partial pivoting.
fn solve(mut a: Array2<Complex64>, mut b: Array2<Complex64>) -> Array2<Complex64> {
    let n = a.nrows();
    for col in 0..n {
        let pivot = (col..n)
            .max_by(|&i, &j| a[[i, col]].norm().total_cmp(&a[[j, col]].norm()))
            .unwrap();
        for k in 0..n {
            a.swap([col, k], [pivot, k]);
        }
        for k in 0..b.ncols() {
            b.swap([col, k], [pivot, k]);
        }
        for row in 0..n {
            if row == col {
                continue;
            }
            let f = a[[row, col]] / a[[col, col]];
            for k in 0..n {
                let t = a[[col, k]];
                a[[row, k]] -= f * t;
            }
            for k in 0..b.ncols() {
                let t = b[[col, k]];
                b[[row, k]] -= f * t;
            }
        }
    }
    for row in 0..n {
        let d = a[[row, row]];
        b.row_mut(row).mapv_inplace(|z| z / d);
    }
    b
}

/// Fits per-`ell` mixing weights to `map` by least squares over random
/// inputs of type `ty`, then returns the worst relative residual of the
/// fitted mix on fresh inputs.
pub fn schur_fit_residual<R: Rng, F>(map: F, ty: &RepType, rng: &mut R) -> f64
where
    F: Fn(&CovariantVector) -> CovariantVector,
{
    let samples: Vec<CovariantVector> = (0..8).map(|_| CovariantVector::random(ty, rng)).collect();
    let images: Vec<CovariantVector> = samples.iter().map(&map).collect();
    let mut blocks = Vec::new();
    for l in 0..ty.len() {
        let t = ty.multiplicity(l);
        // Stack the fragment rows of every sample: X W^T = Y.
        let x = ndarray::concatenate(
            ndarray::Axis(0),
            &samples
                .iter()
                .map(|s| s.part(l).unwrap().view())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let y = ndarray::concatenate(
            ndarray::Axis(0),
            &images
                .iter()
                .map(|s| s.part(l).unwrap().view())
                .collect::<Vec<_>>(),
        )
        .unwrap();
        let xh = x.t().mapv(|z| z.conj());
        let wt = solve(xh.dot(&x), xh.dot(&y));
        assert_eq!(wt.dim(), (t, t));
        blocks.push(wt.t().to_owned());
    }
    let weights = MixWeights::from_blocks(ty, ty, blocks).unwrap();
    (0..8)
        .map(|_| {
            let v = CovariantVector::random(ty, rng);
            let target = map(&v);
            mix(&v, &weights).unwrap().max_abs_diff(&target) / target.max_abs()
        })
        .fold(0.0, f64::max)
}

/// `(1/|G|) sum_g D(g)^-1 a D(g)` over the icosahedral rotations.
pub fn icosahedral_twirl(a: &Array2<Complex64>, ty: &RepType) -> Array2<Complex64> {
    let group = icosahedral_group();
    let mut out = Array2::zeros(a.dim());
    for g in &group {
        let r = EulerAngles::from_matrix(g);
        let d = rotation_matrix(ty, &r);
        let d_inv = d.t().mapv(|z| z.conj());
        out += &d_inv.dot(a).dot(&d);
    }
    out / Complex64::new(group.len() as f64, 0.0)
}
