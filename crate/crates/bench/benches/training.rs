use criterion::{criterion_group, criterion_main, BatchSize, Criterion};
use ltssl_bench::{forward_lt_fixture, random_batch, random_state};
use ltssl_core::flexda::{ccr_targets, confidence_mask, smooth_prior, ClassPrior};
use ltssl_core::math::{forward, softmax_rows, Activation};
use ltssl_core::trainer::Trainer;
use ltssl_core::{TrainConfig, Variant};
use std::hint::black_box;

fn forward_pass(c: &mut Criterion) {
    let state = random_state(2, 32, 5, 1);
    let x = random_batch(128, 2, 2);
    c.bench_function("forward 128x2 -> 32 -> 5", |b| {
        b.iter(|| {
            forward(
                black_box(&state.params),
                Activation::Tanh,
                black_box(x.view()),
            )
            .unwrap()
        })
    });
}

fn complementary_gradients(c: &mut Criterion) {
    let state = random_state(2, 32, 5, 1);
    let strong = random_batch(128, 2, 3);
    let weak_logits = random_batch(128, 5, 4);
    let probs = softmax_rows(weak_logits.view(), 1.0).unwrap();
    let mask = confidence_mask(probs.view(), 0.95).unwrap();
    let q = ClassPrior::new(vec![0.5, 0.25, 0.13, 0.08, 0.04]).unwrap();
    let qa = smooth_prior(&q, 0.6).unwrap();
    let targets = ccr_targets(weak_logits.view(), &mask.complement(), 1.8, &q, &qa).unwrap();
    c.bench_function("ccr loss + gradients, batch 128", |b| {
        b.iter(|| {
            targets
                .evaluate(
                    black_box(&state.params),
                    Activation::Tanh,
                    black_box(strong.view()),
                )
                .unwrap()
        })
    });
}

fn training_steps(c: &mut Criterion) {
    let (task, split) = forward_lt_fixture();
    let mut group = c.benchmark_group("training step");
    for variant in [Variant::FixMatch, Variant::Adello] {
        let config = TrainConfig {
            variant,
            warmup_steps: 0,
            ..TrainConfig::default()
        };
        group.bench_function(variant.as_str(), |b| {
            b.iter_batched_ref(
                || Trainer::new(config.clone(), &split, &task).unwrap(),
                |trainer| trainer.step().unwrap(),
                BatchSize::SmallInput,
            )
        });
    }
    group.finish();
}

criterion_group!(
    benches,
    forward_pass,
    complementary_gradients,
    training_steps
);
criterion_main!(benches);
