//! Fixtures for the kernel benchmarks.

use cgnet::harness::{gen_dataset, DatasetSpec};
use cgnet::{CovariantVector, Model, ModelConfig, RepType, System};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Two random vectors with `c` fragments per `ell <= max_ell`.
pub fn vector_pair(c: usize, max_ell: usize, seed: u64) -> (CovariantVector, CovariantVector) {
    let ty = RepType::uniform(c, max_ell);
    let mut rng = rng(seed);
    (
        CovariantVector::random(&ty, &mut rng),
        CovariantVector::random(&ty, &mut rng),
    )
}

/// A labelled system with exactly `n` atoms.
pub fn system(n: usize, seed: u64) -> System {
    let spec = DatasetSpec {
        n: 1,
        min_atoms: n,
        max_atoms: n,
        seed,
        ..DatasetSpec::default()
    };
    gen_dataset(&spec).expect("dataset").remove(0)
}

pub fn default_model(seed: u64) -> Model {
    Model::new(ModelConfig::default(), seed).expect("default model")
}
