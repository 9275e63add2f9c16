use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};
use crate::flexda::ClassPrior;

/// Mean per-class recall over the classes present in `labels`.
pub fn balanced_accuracy(predictions: &[usize], labels: &[usize], classes: usize) -> Result<f64> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("labels"));
    }
    if predictions.len() != labels.len() {
        return Err(shape_mismatch(
            format!("{} predictions", labels.len()),
            predictions.len(),
        ));
    }
    let mut seen = vec![0usize; classes];
    let mut hit = vec![0usize; classes];
    for (&p, &y) in predictions.iter().zip(labels) {
        if y >= classes {
            return Err(shape_mismatch(format!("label < {classes}"), y));
        }
        seen[y] += 1;
        if p == y {
            hit[y] += 1;
        }
    }
    let recalls: Vec<f64> = seen
        .iter()
        .zip(&hit)
        .filter(|(s, _)| **s > 0)
        .map(|(s, h)| *h as f64 / *s as f64)
        .collect();
    Ok(recalls.iter().sum::<f64>() / recalls.len() as f64)
}

/// One point of the prior-tracking trace.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PriorKl {
    pub step: u64,
    /// `KL(Q̂ ‖ Q)`
    pub to_truth: f64,
    /// `KL(Q̂ ‖ P_bal)`
    pub to_uniform: f64,
}

/// KL of each estimate snapshot to the true unlabeled prior and to uniform.
pub fn prior_kl_trace(snapshots: &[(u64, ClassPrior)], truth: &ClassPrior) -> Result<Vec<PriorKl>> {
    let uniform = ClassPrior::uniform(truth.len());
    snapshots
        .iter()
        .map(|(step, q)| {
            Ok(PriorKl {
                step: *step,
                to_truth: q.kl_to(truth)?,
                to_uniform: q.kl_to(&uniform)?,
            })
        })
        .collect()
}
