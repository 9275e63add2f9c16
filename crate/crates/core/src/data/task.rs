use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};
use crate::flexda::ClassPrior;

const MAX_PLACEMENT_ATTEMPTS: usize = 10_000;

/// Gaussian-mixture task: `x | y=k ~ N(μ_k, σ²I)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticTask {
    pub means: Vec<Vec<f64>>,
    pub sigma: f64,
    pub labeled_prior: ClassPrior,
    pub unlabeled_prior: ClassPrior,
    /// Mean of an extra cluster with no labeled counterpart (near-OOD).
    pub ood_mean: Option<Vec<f64>>,
    pub seed: u64,
}

impl SyntheticTask {
    pub fn dim(&self) -> usize {
        self.means[0].len()
    }

    pub fn classes(&self) -> usize {
        self.means.len()
    }

    /// Replaces the labeled and unlabeled class marginals.
    pub fn with_priors(mut self, labeled: ClassPrior, unlabeled: ClassPrior) -> Result<Self> {
        labeled.check_classes(self.classes())?;
        unlabeled.check_classes(self.classes())?;
        self.labeled_prior = labeled;
        self.unlabeled_prior = unlabeled;
        Ok(self)
    }

    /// Draws one sample of class `class` (or of the OOD cluster when
    /// `class == K`). Labeled, unlabeled and test splits all go through
    /// here, which is what makes the likelihoods identical across splits.
    pub fn sample_class(&self, class: usize, rng: &mut impl Rng) -> Vec<f64> {
        let mean = if class < self.classes() {
            &self.means[class]
        } else {
            self.ood_mean.as_ref().expect("OOD cluster not configured")
        };
        mean.iter()
            .map(|m| m + self.sigma * rng.sample::<f64, _>(StandardNormal))
            .collect()
    }

    /// Adds an extra cluster, placed with the same separation rule.
    pub fn with_ood_cluster(mut self, separation: f64) -> Result<Self> {
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed ^ 0x00d_c1a55);
        let radius = placement_radius(self.dim(), self.classes() + 1, separation, self.sigma);
        let min_dist = separation * self.sigma;
        for _ in 0..MAX_PLACEMENT_ATTEMPTS {
            let candidate = point_in_ball(self.dim(), radius, &mut rng);
            if self
                .means
                .iter()
                .all(|m| distance(m, &candidate) >= min_dist)
            {
                self.ood_mean = Some(candidate);
                return Ok(self);
            }
        }
        Err(Error::SeparationUnsatisfiable {
            classes: self.classes() + 1,
            separation,
            attempts: MAX_PLACEMENT_ATTEMPTS,
        })
    }
}

fn placement_radius(dim: usize, points: usize, separation: f64, sigma: f64) -> f64 {
    0.8 * separation * sigma * (points as f64).powf(1.0 / dim as f64)
}

fn point_in_ball(dim: usize, radius: f64, rng: &mut impl Rng) -> Vec<f64> {
    loop {
        let p: Vec<f64> = (0..dim)
            .map(|_| rng.random_range(-radius..=radius))
            .collect();
        if p.iter().map(|v| v * v).sum::<f64>() <= radius * radius {
            return p;
        }
    }
}

fn distance(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

/// Places `classes` means uniformly in a ball, rejecting any candidate
/// closer than `separation · sigma` to an already placed mean. Priors start
/// uniform; see [`SyntheticTask::with_priors`].
pub fn make_task(
    dim: usize,
    classes: usize,
    separation: f64,
    sigma: f64,
    seed: u64,
) -> Result<SyntheticTask> {
    if dim < 2 {
        return Err(Error::OutOfRange {
            name: "dim",
            value: dim as f64,
            bounds: "[2, inf)",
        });
    }
    if classes < 2 {
        return Err(Error::OutOfRange {
            name: "classes",
            value: classes as f64,
            bounds: "[2, inf)",
        });
    }
    if !(separation > 0.0 && separation.is_finite()) {
        return Err(Error::OutOfRange {
            name: "separation",
            value: separation,
            bounds: "(0, inf)",
        });
    }
    if !(sigma > 0.0 && sigma.is_finite()) {
        return Err(Error::OutOfRange {
            name: "sigma",
            value: sigma,
            bounds: "(0, inf)",
        });
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let radius = placement_radius(dim, classes, separation, sigma);
    let min_dist = separation * sigma;
    let mut means: Vec<Vec<f64>> = Vec::with_capacity(classes);
    let mut attempts = 0;
    while means.len() < classes {
        attempts += 1;
        if attempts > MAX_PLACEMENT_ATTEMPTS {
            return Err(Error::SeparationUnsatisfiable {
                classes,
                separation,
                attempts: MAX_PLACEMENT_ATTEMPTS,
            });
        }
        let candidate = point_in_ball(dim, radius, &mut rng);
        if means.iter().all(|m| distance(m, &candidate) >= min_dist) {
            means.push(candidate);
        }
    }
    Ok(SyntheticTask {
        means,
        sigma,
        labeled_prior: ClassPrior::uniform(classes),
        unlabeled_prior: ClassPrior::uniform(classes),
        ood_mean: None,
        seed,
    })
}

/// Exact posterior `∝ N(x; μ_k, σ²I) · prior_k`.
///
/// With the labeled prior this is the labeled-data scorer, with the
/// unlabeled prior the unlabeled-data scorer, and with a uniform prior the
/// balanced scorer.
pub fn bayes_posterior(task: &SyntheticTask, x: &[f64], prior: &ClassPrior) -> Result<Vec<f64>> {
    if x.len() != task.dim() {
        return Err(shape_mismatch(format!("{} features", task.dim()), x.len()));
    }
    prior.check_classes(task.classes())?;
    let inv_two_var = 1.0 / (2.0 * task.sigma * task.sigma);
    let log_joint: Vec<f64> = task
        .means
        .iter()
        .zip(prior.probs())
        .map(|(mean, p)| {
            let sq: f64 = mean.iter().zip(x).map(|(m, v)| (v - m).powi(2)).sum();
            -sq * inv_two_var + p.ln()
        })
        .collect();
    let max = log_joint.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut post: Vec<f64> = log_joint.iter().map(|l| (l - max).exp()).collect();
    let sum: f64 = post.iter().sum();
    post.iter_mut().for_each(|p| *p /= sum);
    Ok(post)
}
