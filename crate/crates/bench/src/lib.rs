//! Shared fixtures for the criterion benchmarks.

use ltssl_core::data::{make_task, sample_split, DataSplit, LongTailSpec, SyntheticTask};
use ltssl_core::math::{Activation, ClassifierState};
use ndarray::Array2;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// The forward long-tailed task used throughout the acceptance suite.
pub fn forward_lt_fixture() -> (SyntheticTask, DataSplit) {
    let spec = LongTailSpec {
        classes: 5,
        n1: 60,
        gamma_l: 50.0,
        m1: 600,
        gamma_u: 50.0,
        ood_fraction: 0.0,
    };
    let (pl, q) = spec.priors().expect("valid spec");
    let task = make_task(2, 5, 4.0, 1.0, 7)
        .and_then(|t| t.with_priors(pl, q))
        .expect("task");
    let split = sample_split(&task, &spec, 200, 11).expect("split");
    (task, split)
}

pub fn random_batch(rows: usize, cols: usize, seed: u64) -> Array2<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Array2::from_shape_fn((rows, cols), |_| rng.random_range(-2.0..2.0))
}

pub fn random_state(input: usize, hidden: usize, classes: usize, seed: u64) -> ClassifierState {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    ClassifierState::new(input, hidden, classes, Activation::Tanh, &mut rng)
}
