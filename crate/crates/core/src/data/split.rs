use ndarray::Array2;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::task::SyntheticTask;
use crate::error::{Error, Result};
use crate::flexda::ClassPrior;

/// Long-tailed subsampling parameters for the labeled and unlabeled splits.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LongTailSpec {
    pub classes: usize,
    /// Head-class labeled count.
    pub n1: usize,
    pub gamma_l: f64,
    /// Head-class unlabeled count.
    pub m1: usize,
    /// Below 1 gives a reversed long tail.
    pub gamma_u: f64,
    /// Fraction (relative to in-distribution unlabeled count) of extra
    /// unlabeled samples drawn from the task's OOD cluster.
    #[serde(default)]
    pub ood_fraction: f64,
}

impl LongTailSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes < 2 {
            return Err(Error::OutOfRange {
                name: "classes",
                value: self.classes as f64,
                bounds: "[2, inf)",
            });
        }
        if self.n1 < 1 {
            return Err(Error::OutOfRange {
                name: "n1",
                value: self.n1 as f64,
                bounds: "[1, inf)",
            });
        }
        if self.m1 < 1 {
            return Err(Error::OutOfRange {
                name: "m1",
                value: self.m1 as f64,
                bounds: "[1, inf)",
            });
        }
        for (name, g) in [("gamma_l", self.gamma_l), ("gamma_u", self.gamma_u)] {
            if !(g > 0.0 && g.is_finite()) {
                return Err(Error::OutOfRange {
                    name,
                    value: g,
                    bounds: "(0, inf)",
                });
            }
        }
        if !(0.0..=1.0).contains(&self.ood_fraction) {
            return Err(Error::OutOfRange {
                name: "ood_fraction",
                value: self.ood_fraction,
                bounds: "[0, 1]",
            });
        }
        Ok(())
    }

    pub fn labeled_counts(&self) -> Vec<usize> {
        lt_class_counts(self.n1, self.gamma_l, self.classes)
    }

    pub fn unlabeled_counts(&self) -> Vec<usize> {
        lt_class_counts(self.m1, self.gamma_u, self.classes)
    }

    /// Class marginals implied by the subsampled counts.
    pub fn priors(&self) -> Result<(ClassPrior, ClassPrior)> {
        Ok((
            ClassPrior::from_counts(&self.labeled_counts())?,
            ClassPrior::from_counts(&self.unlabeled_counts())?,
        ))
    }
}

/// `round(base · gamma^{-(k-1)/(K-1)})` for `k = 1..=K`, never below 1.
/// Halves round up.
pub fn lt_class_counts(base: usize, gamma: f64, classes: usize) -> Vec<usize> {
    let denom = (classes.max(2) - 1) as f64;
    (0..classes)
        .map(|k| {
            let kappa = k as f64 / denom;
            let raw = base as f64 * gamma.powf(-kappa);
            ((raw + 0.5).floor() as usize).max(1)
        })
        .collect()
}

/// Capability token for reading the hidden unlabeled labels. The trainer
/// never constructs one; diagnostics code does so explicitly.
#[derive(Debug, Clone, Copy)]
pub struct Diagnostics(());

impl Diagnostics {
    pub fn enable() -> Self {
        Diagnostics(())
    }
}

/// Labeled, unlabeled and balanced test data for one long-tailed setting.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSplit {
    pub labeled_x: Array2<f64>,
    pub labeled_y: Vec<usize>,
    pub unlabeled_x: Array2<f64>,
    unlabeled_y: Vec<usize>,
    pub test_x: Array2<f64>,
    pub test_y: Vec<usize>,
    pub classes: usize,
}

impl DataSplit {
    pub fn dim(&self) -> usize {
        self.labeled_x.ncols()
    }

    /// Ground truth for the unlabeled split. OOD samples carry label `K`.
    pub fn hidden_labels(&self, _access: Diagnostics) -> &[usize] {
        &self.unlabeled_y
    }

    pub fn labeled_counts(&self) -> Vec<usize> {
        counts(&self.labeled_y, self.classes)
    }

    /// Empirical labeled marginal, which is what a learner would use as `P_L`.
    pub fn labeled_prior(&self) -> Result<ClassPrior> {
        ClassPrior::from_counts(&self.labeled_counts())
    }

    /// Empirical in-distribution unlabeled marginal.
    pub fn unlabeled_prior(&self, access: Diagnostics) -> Result<ClassPrior> {
        ClassPrior::from_counts(&counts(self.hidden_labels(access), self.classes))
    }
}

fn counts(labels: &[usize], classes: usize) -> Vec<usize> {
    let mut c = vec![0; classes];
    for &y in labels {
        if y < classes {
            c[y] += 1;
        }
    }
    c
}

fn draw(
    task: &SyntheticTask,
    per_class: &[usize],
    rng: &mut ChaCha8Rng,
) -> (Array2<f64>, Vec<usize>) {
    let total: usize = per_class.iter().sum();
    let mut x = Array2::zeros((total, task.dim()));
    let mut y = Vec::with_capacity(total);
    let mut row = 0;
    for (class, &n) in per_class.iter().enumerate() {
        for _ in 0..n {
            let sample = task.sample_class(class, rng);
            x.row_mut(row)
                .iter_mut()
                .zip(sample)
                .for_each(|(d, s)| *d = s);
            y.push(class);
            row += 1;
        }
    }
    (x, y)
}

/// Draws labeled/unlabeled splits with long-tailed counts and a balanced
/// test split of `test_per_class` samples per class. Pure in
/// `(task, spec, seed)`.
pub fn sample_split(
    task: &SyntheticTask,
    spec: &LongTailSpec,
    test_per_class: usize,
    seed: u64,
) -> Result<DataSplit> {
    spec.validate()?;
    if spec.classes != task.classes() {
        return Err(crate::error::shape_mismatch(
            format!("{} classes", task.classes()),
            spec.classes,
        ));
    }
    if spec.ood_fraction > 0.0 && task.ood_mean.is_none() {
        return Err(Error::InvalidConfig(
            "ood_fraction > 0 requires a task with an OOD cluster".into(),
        ));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (labeled_x, labeled_y) = draw(task, &spec.labeled_counts(), &mut rng);

    let mut unlabeled_counts = spec.unlabeled_counts();
    let in_dist: usize = unlabeled_counts.iter().sum();
    let ood = (spec.ood_fraction * in_dist as f64).round() as usize;
    if ood > 0 {
        unlabeled_counts.push(ood);
    }
    let (unlabeled_x, unlabeled_y) = draw(task, &unlabeled_counts, &mut rng);

    let (test_x, test_y) = draw(task, &vec![test_per_class; task.classes()], &mut rng);
    Ok(DataSplit {
        labeled_x,
        labeled_y,
        unlabeled_x,
        unlabeled_y,
        test_x,
        test_y,
        classes: task.classes(),
    })
}
