//! Exact reductions between the adjusted and unadjusted loss terms.

use ltssl_core::flexda::{
    ccr_targets, confidence_mask, consistency_targets, smooth_prior, supervised_targets,
    ClassPrior, MaskedBatchTargets,
};
use ltssl_core::math::{softmax_rows, Activation, LossEval, Params};
use ndarray::{array, Array2};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

fn params() -> Params {
    Params::init(2, 4, 3, &mut ChaCha8Rng::seed_from_u64(5))
}

fn features() -> Array2<f64> {
    array![[0.3, -1.2], [1.5, 0.4], [-0.7, 0.9], [0.0, 2.0]]
}

fn eval(t: &MaskedBatchTargets) -> LossEval {
    t.evaluate(&params(), Activation::Tanh, features().view())
        .unwrap()
}

fn assert_bitwise(a: &LossEval, b: &LossEval) {
    assert_eq!(a.loss.to_bits(), b.loss.to_bits());
    let ga: Vec<u64> = a.grads.iter().map(|(v, _)| v.to_bits()).collect();
    let gb: Vec<u64> = b.grads.iter().map(|(v, _)| v.to_bits()).collect();
    assert_eq!(ga, gb);
}

/// Plain (unadjusted) term: zero offsets, T = 1.
fn plain(targets: Array2<f64>, weights: Vec<f64>) -> MaskedBatchTargets {
    MaskedBatchTargets {
        offsets: Array2::zeros(targets.dim()),
        targets,
        weights,
        temperature: 1.0,
    }
}

#[test]
fn adjusted_supervised_equals_plain_when_priors_match() {
    let labels = [0, 2, 1, 2];
    let pl = ClassPrior::new(vec![0.6, 0.3, 0.1]).unwrap();
    let adjusted = supervised_targets(&labels, &pl, &pl.clone()).unwrap();
    let one_hot = array![
        [1.0, 0.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0]
    ];
    assert_bitwise(&eval(&adjusted), &eval(&plain(one_hot, vec![1.0; 4])));
}

#[test]
fn adjusted_consistency_equals_plain_at_alpha_one() {
    let q = ClassPrior::new(vec![0.7, 0.2, 0.1]).unwrap();
    let q1 = smooth_prior(&q, 1.0).unwrap();
    let weak = array![
        [3.0, 0.0, 0.0],
        [0.1, 0.2, 0.0],
        [0.0, 0.0, 4.0],
        [0.0, 5.0, 1.0]
    ];
    let probs = softmax_rows(weak.view(), 1.0).unwrap();
    let m = confidence_mask(probs.view(), 0.9).unwrap();
    assert_eq!(m.mask, vec![1.0, 0.0, 1.0, 1.0]);
    let adjusted = consistency_targets(&m.pseudo_labels, &m.mask, &q, &q1).unwrap();
    let one_hot = array![
        [1.0, 0.0, 0.0],
        [0.0, 1.0, 0.0],
        [0.0, 0.0, 1.0],
        [0.0, 1.0, 0.0]
    ];
    assert_bitwise(&eval(&adjusted), &eval(&plain(one_hot, m.mask.clone())));
}

#[test]
fn ccr_vanishes_when_everything_is_confident() {
    let q = ClassPrior::new(vec![0.5, 0.3, 0.2]).unwrap();
    let qa = smooth_prior(&q, 0.4).unwrap();
    let weak = array![
        [9.0, 0.0, 0.0],
        [0.0, 8.0, 0.0],
        [0.0, 0.0, 7.0],
        [10.0, 0.0, 1.0]
    ];
    let probs = softmax_rows(weak.view(), 1.0).unwrap();
    let m = confidence_mask(probs.view(), 0.95).unwrap();
    assert_eq!(m.rate(), 1.0);
    let ccr = ccr_targets(weak.view(), &m.complement(), 1.7, &q, &qa).unwrap();
    let e = eval(&ccr);
    assert_eq!(e.loss, 0.0);
    assert!(e.grads.iter().all(|(g, _)| g == 0.0));
}
