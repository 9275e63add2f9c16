//! The three closed-form scorers differ only by a prior reweighting.

use ltssl_core::data::{bayes_posterior, make_task};
use ltssl_core::math::argmax;
use ltssl_core::ClassPrior;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// `p_L(y|x) · Q(y)/P_L(y)`, renormalized.
fn reweighted(post: &[f64], from: &ClassPrior, to: &ClassPrior) -> Vec<f64> {
    let raw: Vec<f64> = post
        .iter()
        .zip(from.probs().iter().zip(to.probs()))
        .map(|(p, (a, b))| p * b / a)
        .collect();
    let s: f64 = raw.iter().sum();
    raw.into_iter().map(|v| v / s).collect()
}

#[test]
fn unlabeled_and_balanced_scorers_are_reweighted_labeled_scorer() {
    let pl = ClassPrior::from_counts(&[60, 23, 9, 3, 1]).unwrap();
    let q = ClassPrior::from_counts(&[12, 31, 82, 220, 600]).unwrap();
    let task = make_task(2, 5, 2.0, 1.0, 3)
        .unwrap()
        .with_priors(pl.clone(), q.clone())
        .unwrap();
    let uniform = ClassPrior::uniform(5);
    let mut rng = ChaCha8Rng::seed_from_u64(99);
    let mut worst: f64 = 0.0;
    for _ in 0..1000 {
        let class = rng.random_range(0..5);
        let x = task.sample_class(class, &mut rng);
        let g_l = bayes_posterior(&task, &x, &pl).unwrap();
        for target in [&q, &uniform] {
            let direct = bayes_posterior(&task, &x, target).unwrap();
            let via = reweighted(&g_l, &pl, target);
            assert_eq!(argmax(&direct), argmax(&via));
            for (a, b) in direct.iter().zip(&via) {
                worst = worst.max((a - b).abs());
            }
        }
    }
    assert!(worst < 1e-10, "max deviation {worst:e}");
}
