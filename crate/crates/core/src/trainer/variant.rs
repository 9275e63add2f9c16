use std::fmt;

use ndarray::ArrayView2;

use super::config::Variant;
use crate::error::Result;
use crate::flexda::{
    ccr_targets, consistency_targets, kd_targets, supervised_targets, ClassPrior, ConfidenceMask,
    MaskedBatchTargets,
};

/// Loss term label.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Term {
    /// Labeled cross-entropy, evaluated on weak labeled views.
    Supervised,
    /// Hard pseudo-label consistency on strong unlabeled views.
    Consistency,
    /// Soft-target distillation on strong unlabeled views.
    Complementary,
}

impl Term {
    pub fn as_str(self) -> &'static str {
        match self {
            Term::Supervised => "supervised",
            Term::Consistency => "consistency",
            Term::Complementary => "complementary",
        }
    }
}

impl fmt::Display for Term {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Everything computed for one step before the loss terms are built.
#[derive(Debug, Clone, Copy)]
pub struct BatchContext<'a> {
    pub labels: &'a [usize],
    pub labeled_prior: &'a ClassPrior,
    /// Current EMA estimate `Q̂`.
    pub estimate: &'a ClassPrior,
    /// Smoothed target `Q̂_α`.
    pub target_prior: &'a ClassPrior,
    /// Live-model logits on the weak unlabeled views (no gradient).
    pub weak_logits: ArrayView2<'a, f64>,
    pub mask: &'a ConfidenceMask,
    pub temperature: f64,
    pub warmup_steps: u64,
}

/// Builds the loss terms a variant uses at step `step`.
///
/// Non-aligning variants pass the same prior as numerator and denominator
/// to the target constructors, which makes every offset exactly zero.
pub fn variant_losses(
    variant: Variant,
    step: u64,
    ctx: &BatchContext<'_>,
) -> Result<Vec<(Term, MaskedBatchTargets)>> {
    let (sup_den, unl_den) = if variant.aligns() {
        (ctx.target_prior, ctx.target_prior)
    } else {
        (ctx.labeled_prior, ctx.estimate)
    };
    let mut terms = vec![(
        Term::Supervised,
        supervised_targets(ctx.labels, ctx.labeled_prior, sup_den)?,
    )];
    if !variant.uses_unlabeled() {
        return Ok(terms);
    }
    terms.push((
        Term::Consistency,
        consistency_targets(
            &ctx.mask.pseudo_labels,
            &ctx.mask.mask,
            ctx.estimate,
            unl_den,
        )?,
    ));
    if variant.distills() && step >= ctx.warmup_steps {
        let distill = match variant {
            Variant::FlexDaKd => {
                kd_targets(ctx.weak_logits, ctx.temperature, ctx.estimate, unl_den)?
            }
            _ => ccr_targets(
                ctx.weak_logits,
                &ctx.mask.complement(),
                ctx.temperature,
                ctx.estimate,
                unl_den,
            )?,
        };
        terms.push((Term::Complementary, distill));
    }
    Ok(terms)
}
