use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};
use crate::math::kl_divergence;

/// Clamp applied to prior entries before taking logs or powers.
pub const PRIOR_EPSILON: f64 = 1e-8;

/// A class marginal: a point on the probability simplex.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ClassPrior(Vec<f64>);

impl ClassPrior {
    /// Validates that `probs` lies on the simplex (sum within 1e-9 of 1).
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::InvalidPrior("no classes".into()));
        }
        if probs.iter().any(|p| !p.is_finite() || *p < 0.0) {
            return Err(Error::InvalidPrior(format!(
                "entries must be finite and >= 0: {probs:?}"
            )));
        }
        let sum: f64 = probs.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidPrior(format!("entries sum to {sum}")));
        }
        Ok(Self(probs))
    }

    /// Normalizes nonnegative weights onto the simplex.
    pub fn from_weights(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidPrior(format!("invalid weights {weights:?}")));
        }
        let sum: f64 = weights.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidPrior("weights sum to zero".into()));
        }
        Self::new(weights.into_iter().map(|w| w / sum).collect())
    }

    pub fn from_counts(counts: &[usize]) -> Result<Self> {
        Self::from_weights(counts.iter().map(|&c| c as f64).collect())
    }

    pub fn uniform(classes: usize) -> Self {
        Self(vec![1.0 / classes as f64; classes])
    }

    pub fn probs(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// `log(max(p_k, ε))` per class.
    pub fn log_clamped(&self, epsilon: f64) -> Vec<f64> {
        self.0.iter().map(|p| p.max(epsilon).ln()).collect()
    }

    /// `KL(self ‖ other)`.
    pub fn kl_to(&self, other: &ClassPrior) -> Result<f64> {
        kl_divergence(&self.0, &other.0, PRIOR_EPSILON)
    }

    pub(crate) fn check_classes(&self, classes: usize) -> Result<()> {
        if self.len() == classes {
            Ok(())
        } else {
            Err(shape_mismatch(
                format!("prior over {classes} classes"),
                self.len(),
            ))
        }
    }
}

impl TryFrom<Vec<f64>> for ClassPrior {
    type Error = Error;

    fn try_from(value: Vec<f64>) -> Result<Self> {
        Self::new(value)
    }
}

impl From<ClassPrior> for Vec<f64> {
    fn from(value: ClassPrior) -> Self {
        value.0
    }
}

/// `log(max(num, ε)) − log(max(den, ε))` per class: the additive logit
/// adjustment that maps a model trained for `den` onto `num`.
pub fn logit_offset(numerator: &ClassPrior, denominator: &ClassPrior) -> Result<Vec<f64>> {
    numerator.check_classes(denominator.len())?;
    Ok(numerator
        .log_clamped(PRIOR_EPSILON)
        .into_iter()
        .zip(denominator.log_clamped(PRIOR_EPSILON))
        .map(|(a, b)| a - b)
        .collect())
}
