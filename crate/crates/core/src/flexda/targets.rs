use ndarray::{Array2, ArrayView2};

use super::prior::{logit_offset, ClassPrior};
use crate::error::{shape_mismatch, Error, Result};
use crate::math::{argmax, loss_gradients, softmax_rows, Activation, LossEval, Params};

/// Inputs to one weighted cross-entropy term: per-sample target
/// distribution, logit offset and weight, plus a shared temperature.
#[derive(Debug, Clone, PartialEq)]
pub struct MaskedBatchTargets {
    pub targets: Array2<f64>,
    pub offsets: Array2<f64>,
    pub weights: Vec<f64>,
    pub temperature: f64,
}

impl MaskedBatchTargets {
    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn active(&self) -> usize {
        self.weights.iter().filter(|w| **w != 0.0).count()
    }

    pub fn evaluate(
        &self,
        params: &Params,
        activation: Activation,
        features: ArrayView2<'_, f64>,
    ) -> Result<LossEval> {
        loss_gradients(
            params,
            activation,
            features,
            self.targets.view(),
            self.offsets.view(),
            &self.weights,
            self.temperature,
        )
    }
}

fn one_hot(labels: &[usize], classes: usize) -> Result<Array2<f64>> {
    let mut t = Array2::zeros((labels.len(), classes));
    for (i, &y) in labels.iter().enumerate() {
        if y >= classes {
            return Err(shape_mismatch(format!("label < {classes}"), y));
        }
        t[[i, y]] = 1.0;
    }
    Ok(t)
}

fn broadcast(offset: &[f64], rows: usize) -> Array2<f64> {
    let mut out = Array2::zeros((rows, offset.len()));
    for mut row in out.rows_mut() {
        row.iter_mut().zip(offset).for_each(|(d, o)| *d = *o);
    }
    out
}

/// High-confidence mask and hard pseudo-labels.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfidenceMask {
    /// 1 where `max_k p_k ≥ τ`, else 0.
    pub mask: Vec<f64>,
    pub pseudo_labels: Vec<usize>,
}

impl ConfidenceMask {
    /// `1 − mask`
    pub fn complement(&self) -> Vec<f64> {
        self.mask.iter().map(|m| 1.0 - m).collect()
    }

    pub fn rate(&self) -> f64 {
        if self.mask.is_empty() {
            0.0
        } else {
            self.mask.iter().sum::<f64>() / self.mask.len() as f64
        }
    }
}

pub fn confidence_mask(weak_probs: ArrayView2<'_, f64>, tau: f64) -> Result<ConfidenceMask> {
    if !(tau > 0.0 && tau < 1.0) {
        return Err(Error::OutOfRange {
            name: "tau",
            value: tau,
            bounds: "(0, 1)",
        });
    }
    let mut mask = Vec::with_capacity(weak_probs.nrows());
    let mut pseudo_labels = Vec::with_capacity(weak_probs.nrows());
    for row in weak_probs.rows() {
        let row = row.to_vec();
        let k = argmax(&row);
        mask.push(if row[k] >= tau { 1.0 } else { 0.0 });
        pseudo_labels.push(k);
    }
    Ok(ConfidenceMask {
        mask,
        pseudo_labels,
    })
}

/// Logit-adjusted supervised term: one-hot labels, offset
/// `log P_L − log Q̂_α`, unit weights, `T = 1`.
pub fn supervised_targets(
    labels: &[usize],
    labeled_prior: &ClassPrior,
    target_prior: &ClassPrior,
) -> Result<MaskedBatchTargets> {
    let classes = labeled_prior.len();
    let offset = logit_offset(labeled_prior, target_prior)?;
    Ok(MaskedBatchTargets {
        targets: one_hot(labels, classes)?,
        offsets: broadcast(&offset, labels.len()),
        weights: vec![1.0; labels.len()],
        temperature: 1.0,
    })
}

/// Logit-adjusted consistency term on the strong view: one-hot pseudo-labels
/// weighted by the confidence mask, offset `log Q̂ − log Q̂_α`, `T = 1`.
pub fn consistency_targets(
    pseudo_labels: &[usize],
    mask: &[f64],
    estimate: &ClassPrior,
    target_prior: &ClassPrior,
) -> Result<MaskedBatchTargets> {
    if mask.len() != pseudo_labels.len() {
        return Err(shape_mismatch(
            format!("{} mask entries", pseudo_labels.len()),
            mask.len(),
        ));
    }
    let offset = logit_offset(estimate, target_prior)?;
    Ok(MaskedBatchTargets {
        targets: one_hot(pseudo_labels, estimate.len())?,
        offsets: broadcast(&offset, pseudo_labels.len()),
        weights: mask.to_vec(),
        temperature: 1.0,
    })
}

/// Complementary consistency: soft targets `σ(f(weak)/T)` (unadjusted) for
/// the samples the confidence mask rejected, against the prior-adjusted
/// strong view at temperature `T`.
pub fn ccr_targets(
    weak_logits: ArrayView2<'_, f64>,
    complement_mask: &[f64],
    temperature: f64,
    estimate: &ClassPrior,
    target_prior: &ClassPrior,
) -> Result<MaskedBatchTargets> {
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidTemperature(temperature));
    }
    if complement_mask.len() != weak_logits.nrows() {
        return Err(shape_mismatch(
            format!("{} mask entries", weak_logits.nrows()),
            complement_mask.len(),
        ));
    }
    if weak_logits.ncols() != estimate.len() {
        return Err(shape_mismatch(
            format!("{} classes", estimate.len()),
            weak_logits.ncols(),
        ));
    }
    let offset = logit_offset(estimate, target_prior)?;
    Ok(MaskedBatchTargets {
        targets: softmax_rows(weak_logits, temperature)?,
        offsets: broadcast(&offset, weak_logits.nrows()),
        weights: complement_mask.to_vec(),
        temperature,
    })
}

/// Same as [`ccr_targets`] but distilling every sample regardless of
/// confidence.
pub fn kd_targets(
    weak_logits: ArrayView2<'_, f64>,
    temperature: f64,
    estimate: &ClassPrior,
    target_prior: &ClassPrior,
) -> Result<MaskedBatchTargets> {
    ccr_targets(
        weak_logits,
        &vec![1.0; weak_logits.nrows()],
        temperature,
        estimate,
        target_prior,
    )
}
