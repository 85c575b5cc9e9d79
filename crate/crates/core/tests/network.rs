#![allow(clippy::needless_range_loop)]

mod common;

use cgnet::covariant::rotate;
use cgnet::network::{
    backward, build_scheme, evaluate, forces, forward, train, validate_scheme, Anchor,
    CompositionScheme, SchemeNode, TrainOptions,
};
use cgnet::so3::random_rotation_from;
use cgnet::{Model, ModelConfig, System};
use common::{apply, random_system, rel, rel_diff, test_model, KINDS};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const STEP: f64 = 1e-5;
/// Gradients smaller than this are compared absolutely.
const FLOOR: f64 = 1e-4;

fn energy(model: &Model, sys: &System) -> f64 {
    forward(model, sys).unwrap().0
}

fn param_fd(model: &Model, sys: &System, k: usize) -> f64 {
    let p = model.params();
    let mut m = model.clone();
    let mut q = p.clone();
    q[k] = p[k] + STEP;
    m.set_params(&q).unwrap();
    let up = energy(&m, sys);
    q[k] = p[k] - STEP;
    m.set_params(&q).unwrap();
    (up - energy(&m, sys)) / (2.0 * STEP)
}

fn position_fd(model: &Model, sys: &System, atom: usize, axis: usize) -> f64 {
    let mut s = sys.clone();
    s.positions[atom][axis] += STEP;
    let up = energy(model, &s);
    s.positions[atom][axis] = sys.positions[atom][axis] - STEP;
    (up - energy(model, &s)) / (2.0 * STEP)
}

#[test]
fn gradients_match_finite_differences_for_each_class() {
    for (trial, kind) in KINDS.into_iter().enumerate() {
        let model = test_model(kind, trial as u64, trial % 2 == 1);
        let mut rng = ChaCha8Rng::seed_from_u64(trial as u64);
        let sys = random_system(&mut rng, 4, 2);
        let g = backward(&forward(&model, &sys).unwrap().1, 1.0);
        let grad = g.params();
        let n_weights: usize = model.gates.iter().map(|g| g.weights.real_len()).sum();
        let n_embed = grad.len() - n_weights - model.readout.len();
        let classes = [
            ("weights", 0, n_weights),
            ("embeddings", n_weights, n_weights + n_embed),
            ("readout", n_weights + n_embed, grad.len()),
        ];
        for (name, lo, hi) in classes {
            for _ in 0..10 {
                let k = rng.gen_range(lo..hi);
                let err = rel(grad[k], param_fd(&model, &sys, k), FLOOR);
                assert!(err < 1e-5, "{kind:?} {name} {k}: {err}");
            }
        }
        for atom in 0..sys.len() {
            for axis in 0..3 {
                let err = rel(
                    g.positions[atom][axis],
                    position_fd(&model, &sys, atom, axis),
                    FLOOR,
                );
                assert!(err < 1e-5, "{kind:?} position {atom}/{axis}: {err}");
            }
        }
    }
}

#[test]
fn zero_adjoint_gives_zero_gradients() {
    let model = test_model(KINDS[0], 1, true);
    let sys = random_system(&mut ChaCha8Rng::seed_from_u64(1), 3, 2);
    let g = backward(&forward(&model, &sys).unwrap().1, 0.0);
    assert!(g.params().iter().all(|&x| x == 0.0));
    assert!(g.positions.iter().flatten().all(|&x| x == 0.0));
}

#[test]
fn forces_are_consistent_and_balanced() {
    let model = Model::new(ModelConfig::default(), 4).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for n in 2..=5 {
        let sys = random_system(&mut rng, n, 1);
        let f = forces(&model, &sys).unwrap();
        for atom in 0..n {
            for axis in 0..3 {
                let err = rel(f[atom][axis], -position_fd(&model, &sys, atom, axis), FLOOR);
                assert!(err < 1e-4, "{atom}/{axis}: {err}");
            }
        }
        for axis in 0..3 {
            let net: f64 = f.iter().map(|v| v[axis]).sum();
            assert!(net.abs() < 1e-9, "net force {net}");
        }
    }
}

#[test]
fn forces_rotate_with_the_system() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for trial in 0..20u64 {
        let model = test_model(KINDS[trial as usize % 4], trial, trial % 2 == 0);
        let sys = {
            let n = rng.gen_range(3..=5);
            random_system(&mut rng, n, 2)
        };
        let r = random_rotation_from(&mut rng);
        let m = r.to_matrix();
        let f = forces(&model, &sys).unwrap();
        let fr = forces(&model, &sys.rotated(&r)).unwrap();
        let scale = f.iter().flatten().fold(1.0f64, |a, x| a.max(x.abs()));
        for (a, b) in f.iter().zip(&fr) {
            let turned = apply(&m, *a);
            for k in 0..3 {
                assert!((turned[k] - b[k]).abs() / scale < 1e-8, "trial {trial}");
            }
        }
    }
}

#[test]
fn energy_is_invariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for trial in 0..20u64 {
        let model = test_model(KINDS[trial as usize % 4], trial, trial % 3 == 0);
        // Parity-odd energies vanish on coplanar systems.
        let n = rng.gen_range(4..=5);
        let sys = random_system(&mut rng, n, 2);
        let e = energy(&model, &sys);
        let r = random_rotation_from(&mut rng);
        assert!(
            rel(energy(&model, &sys.rotated(&r)), e, 1e-12) < 1e-9,
            "rotation, trial {trial}"
        );
        let shift = [0, 1, 2].map(|_| rng.gen_range(-3.0..3.0));
        assert!(
            rel(energy(&model, &sys.translated(shift)), e, 1e-12) < 1e-12,
            "translation, trial {trial}"
        );
        let mut same = sys.clone();
        same.species = vec![1; n];
        let mut perm: Vec<usize> = (0..n).collect();
        perm.rotate_left(1);
        let es = energy(&model, &same);
        assert!(
            rel(energy(&model, &same.permuted(&perm)), es, 1e-12) < 1e-10,
            "permutation, trial {trial}"
        );
    }
}

#[test]
fn internal_states_are_covariant() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for trial in 0..20u64 {
        let mut model = test_model(KINDS[trial as usize % 4], trial, false);
        model.config.cutoff = 2.0;
        let sys = {
            let n = rng.gen_range(2..=5);
            random_system(&mut rng, n, 2)
        };
        let r = random_rotation_from(&mut rng);
        let (_, tape) = forward(&model, &sys).unwrap();
        let (_, turned) = forward(&model, &sys.rotated(&r)).unwrap();
        for id in 0..tape.scheme().nodes.len() {
            let err = rel_diff(
                turned.node_state(id),
                &rotate(tape.node_state(id), &r).unwrap(),
            );
            assert!(err < 1e-9, "trial {trial}, node {id}: {err}");
        }
    }
}

#[test]
fn evaluation_is_deterministic_and_replayable() {
    let model = test_model(KINDS[1], 2, true);
    let sys = random_system(&mut ChaCha8Rng::seed_from_u64(8), 5, 2);
    let (e1, tape) = forward(&model, &sys).unwrap();
    let (e2, _) = forward(&model, &sys).unwrap();
    assert_eq!(e1.to_bits(), e2.to_bits());
    assert_eq!(tape.replay().unwrap().to_bits(), e1.to_bits());
    assert_eq!(tape.energy().to_bits(), e1.to_bits());
}

#[test]
fn training_is_independent_of_thread_count() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let data: Vec<System> = (0..12)
        .map(|_| {
            let s = {
                let n = rng.gen_range(2..=4);
                random_system(&mut rng, n, 1)
            };
            let e = lj(&s);
            s.with_energy(e)
        })
        .collect();
    let model = Model::new(ModelConfig::default(), 0).unwrap();
    let run = |threads| {
        let opts = TrainOptions {
            epochs: 2,
            batch_size: 5,
            threads,
            ..TrainOptions::default()
        };
        train(&model, &data[..9], &data[9..], &opts).unwrap()
    };
    let (a, log_a) = run(1);
    let (b, log_b) = run(4);
    assert_eq!(a.params(), b.params());
    for (x, y) in log_a.iter().zip(&log_b) {
        assert_eq!(
            (x.train_rmse, x.holdout_rmse),
            (y.train_rmse, y.holdout_rmse)
        );
    }
    let ev1 = evaluate(&a, &data, 1).unwrap();
    let ev4 = evaluate(&a, &data, 4).unwrap();
    assert_eq!(ev1, ev4);
}

fn lj(s: &System) -> f64 {
    let mut e = 0.0;
    for i in 0..s.len() {
        for j in i + 1..s.len() {
            let r2: f64 = (0..3)
                .map(|k| (s.positions[i][k] - s.positions[j][k]).powi(2))
                .sum();
            let inv6 = r2.powi(-3);
            e += 4.0 * (inv6 * inv6 - inv6);
        }
    }
    e
}

#[test]
fn full_batch_descent_decreases_loss_with_small_enough_steps() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let data: Vec<System> = (0..10)
        .map(|_| {
            let s = {
                let n = rng.gen_range(2..=4);
                random_system(&mut rng, n, 1)
            };
            let e = lj(&s);
            s.with_energy(e)
        })
        .collect();
    let model = Model::new(ModelConfig::default(), 3).unwrap();
    let mut lr = 1e-2;
    let mut monotone = false;
    for _ in 0..12 {
        let opts = TrainOptions {
            learning_rate: lr,
            momentum: 0.0,
            batch_size: data.len(),
            epochs: 10,
            ..TrainOptions::default()
        };
        // A diverging run counts as a step that is too large.
        let Ok((_, log)) = train(&model, &data, &[], &opts) else {
            lr /= 2.0;
            continue;
        };
        if log.windows(2).all(|w| w[1].train_rmse <= w[0].train_rmse)
            && log[10].train_rmse < log[0].train_rmse
        {
            monotone = true;
            break;
        }
        lr /= 2.0;
    }
    assert!(monotone, "no step size down to {lr} gave a monotone loss");
}

#[test]
fn built_schemes_are_valid() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for _ in 0..50 {
        let sys = {
            let n = rng.gen_range(1..=7);
            random_system(&mut rng, n, 1)
        };
        let scheme = build_scheme(&sys, rng.gen_range(0.5..3.0), rng.gen_range(1..=3)).unwrap();
        assert_eq!(validate_scheme(&scheme), Ok(()));
        let root = &scheme.nodes[scheme.root];
        assert_eq!(root.part.len(), sys.len());
    }
}

#[test]
fn scheme_construction_examples() {
    let dimer = System::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![0, 0]).unwrap();
    let s = build_scheme(&dimer, 2.0, 1).unwrap();
    assert_eq!(s.nodes.len(), 5);
    assert_eq!(s.nodes.iter().filter(|n| n.level == 0).count(), 2);
    assert!(s
        .nodes
        .iter()
        .filter(|n| n.level == 1)
        .all(|n| n.part.len() == 2));
    let apart = build_scheme(&dimer, 0.5, 1).unwrap();
    assert!(apart
        .nodes
        .iter()
        .filter(|n| n.level == 1)
        .all(|n| n.part.len() == 1));
    assert!(build_scheme(&dimer, 0.5, 0).is_err());
    assert!(build_scheme(&dimer, 0.0, 1).is_err());
}

fn node(id: usize, part: &[usize], level: usize) -> SchemeNode {
    SchemeNode {
        id,
        part: part.iter().copied().collect(),
        level,
        anchor: Anchor::Centroid,
        position: [0.0; 3],
    }
}

/// Leaves e1..e4, pairs {e3,e4}, {e1,e4}, {e2,e3}, triples fed by one pair
/// and one leaf each, and the root.
fn four_leaf_scheme() -> CompositionScheme {
    let nodes = vec![
        node(0, &[1], 0),
        node(1, &[2], 0),
        node(2, &[3], 0),
        node(3, &[4], 0),
        node(4, &[3, 4], 1),
        node(5, &[1, 4], 1),
        node(6, &[2, 3], 1),
        node(7, &[2, 3, 4], 2),
        node(8, &[1, 2, 3], 2),
        node(9, &[1, 2, 4], 2),
        node(10, &[1, 2, 3, 4], 3),
    ];
    let edges = vec![
        (2, 4),
        (3, 4),
        (0, 5),
        (3, 5),
        (1, 6),
        (2, 6),
        (1, 7),
        (4, 7),
        (0, 8),
        (6, 8),
        (1, 9),
        (5, 9),
        (7, 10),
        (8, 10),
        (9, 10),
    ];
    CompositionScheme {
        nodes,
        edges,
        root: 10,
    }
}

#[test]
fn four_leaf_scheme_and_its_negations() {
    let s = four_leaf_scheme();
    assert_eq!(validate_scheme(&s), Ok(()));
    let names = |s: &CompositionScheme| -> Vec<&'static str> {
        validate_scheme(s)
            .unwrap_err()
            .iter()
            .map(|v| v.name())
            .collect()
    };
    let mut two_roots = s.clone();
    two_roots.edges.retain(|&e| e != (9, 10));
    assert!(names(&two_roots).contains(&"unique root"));
    let mut not_subset = s.clone();
    not_subset.edges.push((0, 4));
    assert!(names(&not_subset).contains(&"descendant subset"));
    let mut cyclic = s.clone();
    cyclic.edges.push((10, 7));
    assert!(names(&cyclic).contains(&"acyclic"));
}

#[test]
fn checkpoint_file_round_trip() {
    let dir = std::env::temp_dir().join(format!("cgnet-net-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("model.json");
    let model = test_model(KINDS[3], 5, true);
    model.save(&path).unwrap();
    let back = Model::load(&path).unwrap();
    assert_eq!(back, model);
    let sys = random_system(&mut ChaCha8Rng::seed_from_u64(12), 4, 2);
    assert_eq!(
        energy(&back, &sys).to_bits(),
        energy(&model, &sys).to_bits()
    );
    let text = std::fs::read_to_string(&path).unwrap();
    let tampered = text.replacen("\"format_version\": 1", "\"format_version\": 7", 1);
    assert_ne!(tampered, text);
    std::fs::write(&path, tampered).unwrap();
    assert!(Model::load(&path).is_err());
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn bad_systems_are_rejected() {
    assert!(System::new(vec![[0.0; 3], [0.0; 3]], vec![0, 0]).is_err());
    assert!(System::new(vec![[0.0; 3]], vec![0, 1]).is_err());
    assert!(System::new(vec![], vec![]).is_err());
    let model = Model::new(ModelConfig::default(), 0).unwrap();
    let sys = System::new(vec![[0.0; 3], [1.0, 0.0, 0.0]], vec![0, 3]).unwrap();
    assert!(forward(&model, &sys).is_err());
}

#[test]
fn single_atom_energy_is_finite() {
    let model = Model::new(ModelConfig::default(), 0).unwrap();
    let sys = System::new(vec![[0.3, 0.1, -2.0]], vec![0]).unwrap();
    assert!(energy(&model, &sys).is_finite());
    assert_eq!(forces(&model, &sys).unwrap(), vec![[0.0; 3]]);
}
