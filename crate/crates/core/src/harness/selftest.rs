use std::fmt;
use std::time::Instant;

use ndarray::{s, Array2};
use num_complex::Complex64;
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::covariant::{
    cg_product, cg_product_chain, direct_sum, mix, rotate, CovariantVector, MixWeights, RepType,
};
use crate::gates::{
    apply_gate, moment_tensor, GateConfig, GateKind, GateSpec, Nonlinearity, RelativePosition,
};
use crate::network::{
    backward, build_scheme, forces, forward, validate_scheme, Model, ModelConfig, System,
};
use crate::so3::{
    cartesian_to_spherical_basis, cg_block, irrep_dim, random_rotation_from, wigner_d,
};
use crate::Result;

/// Knobs for [`run_selftest`].
#[derive(Clone, Debug, PartialEq)]
pub struct SelfTestOptions {
    /// Multiplies every suite tolerance.
    pub tol_scale: f64,
    /// Fault injection: added to the `m1 = m2 = 0` entry of `C_{1,1,0}` in
    /// the suites that check the Clebsch-Gordan table.
    pub cg_perturbation: Option<f64>,
    /// Base seed for all random draws.
    pub seed: u64,
}

impl Default for SelfTestOptions {
    fn default() -> Self {
        Self {
            tol_scale: 1.0,
            cg_perturbation: None,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct SuiteResult {
    pub name: &'static str,
    pub module: &'static str,
    pub passed: bool,
    pub worst_error: f64,
    pub tolerance: f64,
    pub seconds: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct SelfTestReport {
    pub suites: Vec<SuiteResult>,
}

impl SelfTestReport {
    pub fn passed(&self) -> bool {
        self.suites.iter().all(|s| s.passed)
    }

    pub fn suite(&self, name: &str) -> Option<&SuiteResult> {
        self.suites.iter().find(|s| s.name == name)
    }
}

impl fmt::Display for SuiteResult {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{} {:<10} {:<30} worst {:.3e}  tol {:.1e}  ({:.2}s)",
            if self.passed { "PASS" } else { "FAIL" },
            self.module,
            self.name,
            self.worst_error,
            self.tolerance,
            self.seconds
        )
    }
}

impl fmt::Display for SelfTestReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for s in &self.suites {
            writeln!(f, "{s}")?;
        }
        let failed = self.suites.iter().filter(|s| !s.passed).count();
        write!(f, "{} suites, {} failed", self.suites.len(), failed)
    }
}

type SuiteFn = fn(&SelfTestOptions) -> Result<f64>;

/// Registered suites: name, module, tolerance, body. A body returns the
/// worst error it observed.
pub const SUITES: &[(&str, &str, f64, SuiteFn)] = &[
    ("cg_orthogonality", "so3_core", 1e-12, cg_orthogonality),
    (
        "cg_block_diagonalization",
        "so3_core",
        1e-10,
        cg_block_diagonalization,
    ),
    (
        "wigner_homomorphism",
        "so3_core",
        1e-10,
        wigner_homomorphism,
    ),
    ("wigner_unitarity", "so3_core", 1e-10, wigner_unitarity),
    ("spherical_basis", "so3_core", 1e-12, spherical_basis),
    (
        "covariant_equivariance",
        "covariant",
        1e-10,
        covariant_equivariance,
    ),
    (
        "cg_norm_preservation",
        "covariant",
        1e-12,
        cg_norm_preservation,
    ),
    ("gate_equivariance", "gates", 1e-9, gate_equivariance),
    ("moment_tensor_law", "gates", 1e-12, moment_tensor_law),
    (
        "moment_tensor_symmetry",
        "gates",
        0.0,
        moment_tensor_symmetry,
    ),
    ("scheme_validity", "network", 0.0, scheme_validity),
    ("energy_invariance", "network", 1e-9, energy_invariance),
    ("internal_covariance", "network", 1e-9, internal_covariance),
    ("gradient_check", "network", 1e-5, gradient_check),
    ("force_consistency", "network", 1e-4, force_consistency),
    ("net_force", "network", 1e-9, net_force),
];

pub fn suite_names() -> Vec<&'static str> {
    SUITES.iter().map(|s| s.0).collect()
}

/// Runs every registered suite. Errors raised inside a suite count as a
/// failure with infinite error.
pub fn run_selftest(opts: &SelfTestOptions) -> SelfTestReport {
    let suites = SUITES
        .iter()
        .map(|&(name, module, tol, body)| {
            let start = Instant::now();
            let worst = body(opts).unwrap_or(f64::INFINITY);
            let tolerance = tol * opts.tol_scale;
            SuiteResult {
                name,
                module,
                passed: worst <= tolerance,
                worst_error: worst,
                tolerance,
                seconds: start.elapsed().as_secs_f64(),
            }
        })
        .collect();
    SelfTestReport { suites }
}

const LMAX: usize = 4;

fn rng_for(opts: &SelfTestOptions, salt: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(opts.seed.wrapping_mul(0x9E37_79B9_7F4A_7C15) ^ salt)
}

fn max_abs(a: &Array2<Complex64>) -> f64 {
    a.iter().map(|z| z.norm()).fold(0.0, f64::max)
}

/// The full transform for `l1 ⊗ l2`: blocks `C_{l1,l2,l}` stacked by `l`.
fn stacked_cg(l1: usize, l2: usize, opts: &SelfTestOptions) -> Result<Array2<f64>> {
    let n = irrep_dim(l1) * irrep_dim(l2);
    let mut c = Array2::zeros((n, n));
    let mut row = 0;
    for l in l1.abs_diff(l2)..=l1 + l2 {
        let b = cg_block(l1, l2, l)?;
        c.slice_mut(s![row..row + irrep_dim(l), ..])
            .assign(&b.matrix);
        row += irrep_dim(l);
    }
    if let (Some(eps), 1, 1) = (opts.cg_perturbation, l1, l2) {
        // Row 0 is C_{1,1,0}; column 4 is m1 = m2 = 0.
        c[[0, 4]] += eps;
    }
    Ok(c)
}

fn kron(a: &Array2<Complex64>, b: &Array2<Complex64>) -> Array2<Complex64> {
    let (p, q) = b.dim();
    Array2::from_shape_fn((a.nrows() * p, a.ncols() * q), |(i, j)| {
        a[[i / p, j / q]] * b[[i % p, j % q]]
    })
}

fn cg_orthogonality(opts: &SelfTestOptions) -> Result<f64> {
    let mut worst = 0.0f64;
    for l1 in 0..=LMAX {
        for l2 in 0..=LMAX {
            let c = stacked_cg(l1, l2, opts)?;
            let eye = Array2::<f64>::eye(c.nrows());
            for prod in [c.dot(&c.t()), c.t().dot(&c)] {
                worst = worst.max((&prod - &eye).iter().fold(0.0, |m, x| m.max(x.abs())));
            }
        }
    }
    Ok(worst)
}

fn cg_block_diagonalization(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 1);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let r = random_rotation_from(&mut rng);
        let d: Vec<Array2<Complex64>> = (0..=2 * LMAX)
            .map(|l| wigner_d(l, &r).map(|w| w.matrix))
            .collect::<Result<_>>()?;
        for l1 in 0..=LMAX {
            for l2 in 0..=LMAX {
                let c = stacked_cg(l1, l2, opts)?.mapv(|x| Complex64::new(x, 0.0));
                let got = c.dot(&kron(&d[l1], &d[l2])).dot(&c.t());
                let mut expected = Array2::zeros(got.dim());
                let mut at = 0;
                for l in l1.abs_diff(l2)..=l1 + l2 {
                    let n = irrep_dim(l);
                    expected.slice_mut(s![at..at + n, at..at + n]).assign(&d[l]);
                    at += n;
                }
                worst = worst.max(max_abs(&(&got - &expected)));
            }
        }
    }
    Ok(worst)
}

fn wigner_homomorphism(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 2);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let (a, b) = (
            random_rotation_from(&mut rng),
            random_rotation_from(&mut rng),
        );
        let ab = a.compose(&b);
        for l in 0..=LMAX {
            let lhs = wigner_d(l, &ab)?.matrix;
            let rhs = wigner_d(l, &a)?.matrix.dot(&wigner_d(l, &b)?.matrix);
            worst = worst.max(max_abs(&(&lhs - &rhs)));
        }
    }
    Ok(worst)
}

fn wigner_unitarity(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 3);
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let r = random_rotation_from(&mut rng);
        for l in 0..=LMAX {
            let d = wigner_d(l, &r)?.matrix;
            let dh = d.t().mapv(|z| z.conj());
            let eye = Array2::<Complex64>::eye(irrep_dim(l));
            worst = worst.max(max_abs(&(&d.dot(&dh) - &eye)));
        }
    }
    Ok(worst)
}

fn cart(m: &[[f64; 3]; 3]) -> Array2<Complex64> {
    Array2::from_shape_fn((3, 3), |(i, j)| Complex64::new(m[i][j], 0.0))
}

fn spherical_basis(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 4);
    let u = cartesian_to_spherical_basis();
    let mut worst = 0.0f64;
    for _ in 0..50 {
        let r = random_rotation_from(&mut rng);
        let lhs = wigner_d(1, &r)?.matrix.dot(&u);
        let rhs = u.dot(&cart(&r.to_matrix()));
        worst = worst.max(max_abs(&(&lhs - &rhs)));
    }
    Ok(worst)
}

fn rel_diff(a: &CovariantVector, b: &CovariantVector) -> f64 {
    a.max_abs_diff(b) / a.max_abs().max(b.max_abs()).max(1.0)
}

fn covariant_equivariance(opts: &SelfTestOptions) -> Result<f64> {
    let mut worst = 0.0f64;
    let (ta, tb) = (RepType::new(vec![2, 1, 2]), RepType::new(vec![1, 2, 1]));
    for seed in 0..10 {
        let mut rng = rng_for(opts, 100 + seed);
        let r = random_rotation_from(&mut rng);
        let a = CovariantVector::random(&ta, &mut rng);
        let b = CovariantVector::random(&tb, &mut rng);
        let c = CovariantVector::random(&RepType::vector(), &mut rng);
        let (ra, rb, rc) = (rotate(&a, &r)?, rotate(&b, &r)?, rotate(&c, &r)?);

        let p = cg_product(&a, &b)?;
        worst = worst.max(rel_diff(&rotate(&p, &r)?, &cg_product(&ra, &rb)?));

        let chain = cg_product_chain(&[a.clone(), b.clone(), c.clone()], 3)?;
        let rchain = cg_product_chain(&[ra.clone(), rb.clone(), rc], 3)?;
        worst = worst.max(rel_diff(&rotate(&chain, &r)?, &rchain));

        let w = MixWeights::random(&ta, &RepType::new(vec![3, 1, 2]), &mut rng);
        worst = worst.max(rel_diff(&rotate(&mix(&a, &w)?, &r)?, &mix(&ra, &w)?));

        let sum = direct_sum([&a, &b]);
        worst = worst.max(rel_diff(&rotate(&sum, &r)?, &direct_sum([&ra, &rb])));
    }
    Ok(worst)
}

fn cg_norm_preservation(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 5);
    let mut worst = 0.0f64;
    for _ in 0..20 {
        let ta = RepType::new((0..3).map(|_| rng.gen_range(0..3)).collect());
        let tb = RepType::new((0..3).map(|_| rng.gen_range(0..3)).collect());
        let a = CovariantVector::random(&ta, &mut rng);
        let b = CovariantVector::random(&tb, &mut rng);
        let expected = a.norm() * b.norm();
        let got = cg_product(&a, &b)?.norm();
        worst = worst.max((got - expected).abs() / expected.max(1.0));
    }
    Ok(worst)
}

/// Random offset with radius in `[0.5, 2]`.
fn random_offset<R: Rng>(rng: &mut R) -> [f64; 3] {
    loop {
        let v: [f64; 3] = [0, 1, 2].map(|_| rng.gen_range(-2.0..2.0));
        let r = (v[0] * v[0] + v[1] * v[1] + v[2] * v[2]).sqrt();
        if (0.5..=2.0).contains(&r) {
            return v;
        }
    }
}

const KINDS: [GateKind; 4] = [
    GateKind::Zeroth,
    GateKind::FirstPairwise,
    GateKind::FirstRelative,
    GateKind::Moment,
];

fn gate_spec(kind: GateKind, powers: &[u32], output: RepType) -> GateSpec {
    let spec = GateSpec::new(kind, powers, 2, output);
    if kind == GateKind::Moment {
        spec.with_moment_order(2)
    } else {
        spec
    }
}

fn gate_equivariance(opts: &SelfTestOptions) -> Result<f64> {
    let mut worst = 0.0f64;
    let child_type = RepType::new(vec![2, 1, 1]);
    for trial in 0..20u64 {
        let mut rng = rng_for(opts, 200 + trial);
        let kind = KINDS[trial as usize % 4];
        let spec = gate_spec(kind, &[0, 1, 2], RepType::uniform(2, 2))
            .with_nonlinearity((trial % 2 == 0).then_some(Nonlinearity::ShiftedSoftplus));
        let cfg = GateConfig::new(spec, &child_type, &mut rng)?;
        let r = random_rotation_from(&mut rng);
        let m = r.to_matrix();
        let mut children = Vec::new();
        let mut rotated = Vec::new();
        for _ in 0..3 {
            let off = random_offset(&mut rng);
            let state = CovariantVector::random(&child_type, &mut rng);
            rotated.push((
                RelativePosition::from_offset(crate::so3::euler_apply(&m, off))?,
                rotate(&state, &r)?,
            ));
            children.push((RelativePosition::from_offset(off)?, state));
        }
        let out = apply_gate(&children, &cfg)?;
        let out_r = apply_gate(&rotated, &cfg)?;
        worst = worst.max(rel_diff(&rotate(&out, &r)?, &out_r));
    }
    Ok(worst)
}

fn moment_tensor_law(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 6);
    let mut worst = 0.0f64;
    for _ in 0..10 {
        let r = random_rotation_from(&mut rng).to_matrix();
        let pts: Vec<[f64; 3]> = (0..5).map(|_| random_offset(&mut rng)).collect();
        let rotated: Vec<[f64; 3]> = pts
            .iter()
            .map(|p| crate::so3::euler_apply(&r, *p))
            .collect();
        for k in 1..=3 {
            let t = moment_tensor(k, &pts)?;
            worst = worst.max(t.rotated(&r).max_abs_diff(&moment_tensor(k, &rotated)?));
        }
    }
    Ok(worst)
}

fn moment_tensor_symmetry(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 7);
    let pts: Vec<[f64; 3]> = (0..6).map(|_| random_offset(&mut rng)).collect();
    let mut worst = 0.0f64;
    for k in 1..=4 {
        worst = worst.max(moment_tensor(k, &pts)?.max_asymmetry());
    }
    Ok(worst)
}

/// `n` atoms uniform in a cube of side 2.5 with pair distances >= 0.8.
pub(crate) fn random_system<R: Rng>(rng: &mut R, n: usize, n_species: usize) -> Result<System> {
    let mut positions: Vec<[f64; 3]> = Vec::with_capacity(n);
    while positions.len() < n {
        let p = [0, 1, 2].map(|_| rng.gen_range(0.0..2.5));
        if positions
            .iter()
            .all(|q| (p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2) >= 0.64)
        {
            positions.push(p);
        }
    }
    let species = (0..n).map(|_| rng.gen_range(0..n_species)).collect();
    System::new(positions, species)
}

fn scheme_validity(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 8);
    let mut failures = 0usize;
    for _ in 0..50 {
        let n = rng.gen_range(1..=7);
        let sys = random_system(&mut rng, n, 1)?;
        let cutoff = rng.gen_range(0.5..3.0);
        let depth = rng.gen_range(1..=3);
        let scheme = build_scheme(&sys, cutoff, depth)?;
        if validate_scheme(&scheme).is_err() {
            failures += 1;
        }
        // Each negation must be caught.
        if n >= 2 {
            let mut two_roots = scheme.clone();
            let root = two_roots.root;
            let top_child = two_roots
                .edges
                .iter()
                .position(|&(_, p)| p == root)
                .expect("root has children");
            two_roots.edges.remove(top_child);
            let has = |s: &crate::network::CompositionScheme, name: &str| {
                validate_scheme(s)
                    .err()
                    .is_some_and(|v| v.iter().any(|x| x.name() == name))
            };
            if !has(&two_roots, "unique root") {
                failures += 1;
            }
            let mut subset = scheme.clone();
            let leaf = subset
                .nodes
                .iter()
                .position(|nd| nd.level == 0)
                .expect("leaves exist");
            let other = subset
                .nodes
                .iter()
                .position(|nd| nd.level == 1 && !nd.part.contains(&0));
            if let Some(p) = other {
                subset.edges.push((leaf, p));
                if !has(&subset, "descendant subset") {
                    failures += 1;
                }
            }
            let mut cyclic = scheme.clone();
            cyclic.edges.push((cyclic.root, 0));
            if !has(&cyclic, "acyclic") {
                failures += 1;
            }
        }
    }
    Ok(failures as f64)
}

/// Depth-2 model: a moment gate on the leaves, then two gates of `kind`.
/// (Relative gates vanish identically on scalar children, and a zeroth
/// stack alone only yields parity-odd scalars.) The cutoff exceeds the
/// size of [`random_system`] so that no neighbourhood is too small for a
/// pair sum.
pub(crate) fn test_model(kind: GateKind, seed: u64, nonlinear: bool) -> Result<Model> {
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
    Model::new(config, seed)
}

fn rel(a: f64, b: f64, floor: f64) -> f64 {
    (a - b).abs() / a.abs().max(b.abs()).max(floor)
}

fn energy_invariance(opts: &SelfTestOptions) -> Result<f64> {
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let mut rng = rng_for(opts, 300 + trial);
        let model = test_model(KINDS[trial as usize % 4], trial, trial % 3 == 0)?;
        // Some test models only produce parity-odd scalars, which vanish on
        // coplanar systems, so use at least four atoms.
        let n = rng.gen_range(4..=5);
        let sys = random_system(&mut rng, n, 2)?;
        let r = random_rotation_from(&mut rng);
        let e = forward(&model, &sys)?.0;
        let er = forward(&model, &sys.rotated(&r))?.0;
        let shift = [0, 1, 2].map(|_| rng.gen_range(-3.0..3.0));
        let et = forward(&model, &sys.translated(shift))?.0;
        let mut perm: Vec<usize> = (0..n).collect();
        perm.reverse();
        let mut same_species = sys.clone();
        same_species.species = vec![1; n];
        let es = forward(&model, &same_species)?.0;
        let ep = forward(&model, &same_species.permuted(&perm))?.0;
        worst = worst
            .max(rel(e, er, 1e-12))
            .max(rel(e, et, 1e-12))
            .max(rel(es, ep, 1e-12));
    }
    Ok(worst)
}

fn internal_covariance(opts: &SelfTestOptions) -> Result<f64> {
    let mut worst = 0.0f64;
    for trial in 0..20u64 {
        let mut rng = rng_for(opts, 400 + trial);
        let mut model = test_model(KINDS[trial as usize % 4], trial, false)?;
        // Partial neighbourhoods.
        model.config.cutoff = 2.0;
        let n = rng.gen_range(2..=5);
        let sys = random_system(&mut rng, n, 2)?;
        let r = random_rotation_from(&mut rng);
        let (_, tape) = forward(&model, &sys)?;
        let (_, tape_r) = forward(&model, &sys.rotated(&r))?;
        for id in 0..tape.scheme().nodes.len() {
            worst = worst.max(rel_diff(
                &rotate(tape.node_state(id), &r)?,
                tape_r.node_state(id),
            ));
        }
    }
    Ok(worst)
}

/// Central difference of the energy along a parameter.
fn param_difference(model: &Model, sys: &System, k: usize, h: f64) -> Result<f64> {
    let p = model.params();
    let mut m = model.clone();
    let mut q = p.clone();
    q[k] = p[k] + h;
    m.set_params(&q)?;
    let up = forward(&m, sys)?.0;
    q[k] = p[k] - h;
    m.set_params(&q)?;
    let down = forward(&m, sys)?.0;
    Ok((up - down) / (2.0 * h))
}

fn position_difference(
    model: &Model,
    sys: &System,
    atom: usize,
    axis: usize,
    h: f64,
) -> Result<f64> {
    let mut s = sys.clone();
    s.positions[atom][axis] = sys.positions[atom][axis] + h;
    let up = forward(model, &s)?.0;
    s.positions[atom][axis] = sys.positions[atom][axis] - h;
    let down = forward(model, &s)?.0;
    Ok((up - down) / (2.0 * h))
}

/// Gradients below this magnitude are compared absolutely.
const GRAD_FLOOR: f64 = 1e-4;
const FD_STEP: f64 = 1e-5;

fn gradient_check(opts: &SelfTestOptions) -> Result<f64> {
    let mut worst = 0.0f64;
    for (trial, kind) in KINDS.into_iter().enumerate() {
        let mut rng = rng_for(opts, 500 + trial as u64);
        let model = test_model(kind, trial as u64, trial % 2 == 0)?;
        let sys = random_system(&mut rng, 4, 2)?;
        let (_, tape) = forward(&model, &sys)?;
        let g = backward(&tape, 1.0);
        let gp = g.params();
        for k in sample(&mut rng, gp.len(), 50.min(gp.len())) {
            worst = worst.max(rel(
                gp[k],
                param_difference(&model, &sys, k, FD_STEP)?,
                GRAD_FLOOR,
            ));
        }
        for _ in 0..8 {
            let (atom, axis) = (rng.gen_range(0..sys.len()), rng.gen_range(0..3));
            let fd = position_difference(&model, &sys, atom, axis, FD_STEP)?;
            worst = worst.max(rel(g.positions[atom][axis], fd, GRAD_FLOOR));
        }
    }
    Ok(worst)
}

fn force_consistency(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 9);
    let model = Model::new(ModelConfig::default(), 1)?;
    let mut worst = 0.0f64;
    for _ in 0..3 {
        let n = rng.gen_range(2..=5);
        let sys = random_system(&mut rng, n, 1)?;
        let f = forces(&model, &sys)?;
        for atom in 0..n {
            for axis in 0..3 {
                let fd = -position_difference(&model, &sys, atom, axis, FD_STEP)?;
                worst = worst.max(rel(f[atom][axis], fd, GRAD_FLOOR));
            }
        }
    }
    Ok(worst)
}

fn net_force(opts: &SelfTestOptions) -> Result<f64> {
    let mut rng = rng_for(opts, 10);
    let mut worst = 0.0f64;
    for trial in 0..8u64 {
        let model = if trial % 2 == 0 {
            Model::new(ModelConfig::default(), trial)?
        } else {
            test_model(KINDS[trial as usize / 2], trial, true)?
        };
        let n = rng.gen_range(2..=6);
        let sys = random_system(&mut rng, n, model.config.n_species)?;
        let f = forces(&model, &sys)?;
        let net = (0..3)
            .map(|k| f.iter().map(|v| v[k]).sum::<f64>().powi(2))
            .sum::<f64>()
            .sqrt();
        worst = worst.max(net);
    }
    Ok(worst)
}
