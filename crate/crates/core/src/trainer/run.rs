use ndarray::{Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::config::TrainConfig;
use super::report::{EvalRecord, RunReport, TestPredictions};
use super::variant::{variant_losses, BatchContext, Term};
use crate::data::{
    strong_augment_batch, weak_augment_batch, DataSplit, Diagnostics, SyntheticTask,
};
use crate::error::{shape_mismatch, Error, Result};
use crate::eval::{balanced_accuracy, bin_predictions, ece, mce, ReliabilityBins};
use crate::flexda::{confidence_mask, infer_temperature, smooth_prior, ClassPrior, PriorTracker};
use crate::math::{
    argmax, ema_update, sgd_step, softmax_rows, Activation, ClassifierState, Params,
};

/// Test metrics for one parameter set.
#[derive(Debug, Clone)]
pub struct Evaluation {
    pub balanced_accuracy: f64,
    pub ece: f64,
    pub mce: f64,
    pub bins: ReliabilityBins,
    pub predictions: TestPredictions,
}

/// Predicts with the unadjusted argmax of `params` and scores the result.
pub fn evaluate(
    params: &Params,
    activation: Activation,
    features: ArrayView2<'_, f64>,
    labels: &[usize],
    calibration_bins: usize,
) -> Result<Evaluation> {
    let logits = crate::math::forward(params, activation, features)?;
    let probs = softmax_rows(logits.view(), 1.0)?;
    let mut predictions = Vec::with_capacity(labels.len());
    let mut confidences = Vec::with_capacity(labels.len());
    for row in probs.rows() {
        let row = row.to_vec();
        let k = argmax(&row);
        predictions.push(k);
        confidences.push(row[k]);
    }
    let classes = params.classes();
    let ba = balanced_accuracy(&predictions, labels, classes)?;
    let predictions = TestPredictions {
        labels: labels.to_vec(),
        predictions,
        confidences,
    };
    let bins = bin_predictions(
        &predictions.confidences,
        &predictions.correct(),
        calibration_bins,
    )?;
    Ok(Evaluation {
        balanced_accuracy: ba,
        ece: ece(&bins, labels.len())?,
        mce: mce(&bins)?,
        bins,
        predictions,
    })
}

/// What one optimizer step did.
#[derive(Debug, Clone, PartialEq)]
pub struct StepOutcome {
    pub step: u64,
    /// Weighted sum of the term losses actually optimized.
    pub total: f64,
    /// Unweighted loss per term; absent terms are 0.
    pub supervised: f64,
    pub consistency: f64,
    pub complementary: f64,
    /// Whether the complementary term was part of the objective.
    pub complementary_active: bool,
    pub mask_rate: f64,
    pub alpha: f64,
    pub temperature: f64,
}

impl StepOutcome {
    /// `supervised + λ_u·consistency + λ_uC·complementary`
    pub fn recombined(&self, lambda_u: f64, lambda_uc: f64) -> f64 {
        self.supervised + lambda_u * self.consistency + lambda_uc * self.complementary
    }
}

#[derive(Default)]
struct Accumulator {
    steps: usize,
    total: f64,
    supervised: f64,
    consistency: f64,
    complementary: f64,
    mask_rate: f64,
}

impl Accumulator {
    fn add(&mut self, s: &StepOutcome) {
        self.steps += 1;
        self.total += s.total;
        self.supervised += s.supervised;
        self.consistency += s.consistency;
        self.complementary += s.complementary;
        self.mask_rate += s.mask_rate;
    }

    fn mean(&self, v: f64) -> f64 {
        if self.steps == 0 {
            0.0
        } else {
            v / self.steps as f64
        }
    }
}

/// Stateful training loop; [`train`] drives it to completion.
pub struct Trainer<'a> {
    config: TrainConfig,
    split: &'a DataSplit,
    pub state: ClassifierState,
    pub tracker: PriorTracker,
    labeled_prior: ClassPrior,
    true_unlabeled_prior: Option<ClassPrior>,
    temperature: Option<f64>,
    rng: ChaCha8Rng,
    step: u64,
    acc: Accumulator,
    records: Vec<EvalRecord>,
    last_alpha: f64,
}

impl<'a> Trainer<'a> {
    pub fn new(config: TrainConfig, split: &'a DataSplit, task: &SyntheticTask) -> Result<Self> {
        config.validate()?;
        if split.dim() != task.dim() || split.classes != task.classes() {
            return Err(shape_mismatch(
                format!(
                    "split of dim {} with {} classes",
                    task.dim(),
                    task.classes()
                ),
                format!("dim {} with {} classes", split.dim(), split.classes),
            ));
        }
        if split.labeled_y.is_empty() {
            return Err(Error::EmptyInput("labeled split"));
        }
        if config.variant.uses_unlabeled() && split.unlabeled_x.nrows() == 0 {
            return Err(Error::EmptyInput("unlabeled split"));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
        let state = ClassifierState::new(
            split.dim(),
            config.hidden,
            split.classes,
            config.activation,
            &mut rng,
        );
        let true_unlabeled_prior = if config.diagnostics {
            Some(split.unlabeled_prior(Diagnostics::enable())?)
        } else {
            None
        };
        Ok(Self {
            tracker: PriorTracker::new(split.classes, config.prior_beta)?,
            labeled_prior: split.labeled_prior()?,
            true_unlabeled_prior,
            temperature: None,
            rng,
            step: 0,
            acc: Accumulator::default(),
            records: Vec::new(),
            last_alpha: 1.0,
            state,
            config,
            split,
        })
    }

    pub fn config(&self) -> &TrainConfig {
        &self.config
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    pub fn is_done(&self) -> bool {
        self.step >= self.config.steps()
    }

    /// The frozen distillation temperature, once inferred.
    pub fn temperature(&self) -> Option<f64> {
        self.temperature
    }

    fn sample_rows(&mut self, x: &Array2<f64>, n: usize) -> (Vec<usize>, Array2<f64>) {
        let idx: Vec<usize> = (0..n)
            .map(|_| self.rng.random_range(0..x.nrows()))
            .collect();
        let rows = x.select(Axis(0), &idx);
        (idx, rows)
    }

    /// Runs one optimizer step.
    pub fn step(&mut self) -> Result<StepOutcome> {
        let t = self.step + 1;
        let cfg = self.config.clone();
        let variant = cfg.variant;
        let alpha = cfg.schedule.alpha(t)?;
        let target_prior = smooth_prior(&self.tracker.estimate, alpha)?;
        if variant.distills() && self.temperature.is_none() && t >= cfg.warmup_steps {
            self.temperature = Some(infer_temperature(&self.tracker.estimate));
        }
        let temperature = self.temperature.unwrap_or(1.0);

        let (idx, labeled) = self.sample_rows(&self.split.labeled_x, cfg.batch_size);
        let labels: Vec<usize> = idx.iter().map(|&i| self.split.labeled_y[i]).collect();
        let labeled_weak = weak_augment_batch(labeled.view(), &cfg.augment, &mut self.rng);

        let classes = self.split.classes;
        let (weak_logits, strong, weak_mean) = if variant.uses_unlabeled() {
            let (_, unlabeled) = self.sample_rows(
                &self.split.unlabeled_x,
                cfg.batch_size * cfg.unlabeled_ratio,
            );
            let weak = weak_augment_batch(unlabeled.view(), &cfg.augment, &mut self.rng);
            let strong = strong_augment_batch(unlabeled.view(), &cfg.augment, &mut self.rng);
            let logits = self.state.logits(weak.view())?;
            let probs = softmax_rows(logits.view(), 1.0)?;
            let mean = probs.mean_axis(Axis(0)).expect("non-empty batch").to_vec();
            (logits, strong, Some(mean))
        } else {
            (
                Array2::zeros((0, classes)),
                Array2::zeros((0, self.split.dim())),
                None,
            )
        };
        let weak_probs = softmax_rows(weak_logits.view(), 1.0)?;
        let mask = confidence_mask(weak_probs.view(), cfg.threshold)?;

        let ctx = BatchContext {
            labels: &labels,
            labeled_prior: &self.labeled_prior,
            estimate: &self.tracker.estimate,
            target_prior: &target_prior,
            weak_logits: weak_logits.view(),
            mask: &mask,
            temperature,
            warmup_steps: cfg.warmup_steps,
        };
        let terms = variant_losses(variant, t, &ctx)?;

        let mut grads = self.state.params.zeros_like();
        let mut outcome = StepOutcome {
            step: t,
            total: 0.0,
            supervised: 0.0,
            consistency: 0.0,
            complementary: 0.0,
            complementary_active: false,
            mask_rate: mask.rate(),
            alpha,
            temperature,
        };
        for (term, targets) in &terms {
            let (features, weight) = match term {
                Term::Supervised => (labeled_weak.view(), 1.0),
                Term::Consistency => (strong.view(), cfg.lambda_u),
                Term::Complementary => (strong.view(), cfg.lambda_uc),
            };
            let eval = targets
                .evaluate(&self.state.params, cfg.activation, features)
                .map_err(|e| Error::TrainingAborted {
                    step: t,
                    reason: e.to_string(),
                })?;
            match term {
                Term::Supervised => outcome.supervised = eval.loss,
                Term::Consistency => outcome.consistency = eval.loss,
                Term::Complementary => {
                    outcome.complementary = eval.loss;
                    outcome.complementary_active = true;
                }
            }
            outcome.total += weight * eval.loss;
            grads.add_scaled(&eval.grads, weight);
        }
        if !outcome.total.is_finite() || !grads.is_finite() {
            return Err(Error::TrainingAborted {
                step: t,
                reason: "non-finite loss".into(),
            });
        }

        sgd_step(&mut self.state, &grads, &cfg.optimizer)?;
        ema_update(&mut self.state, cfg.optimizer.ema_decay);
        if let Some(mean) = weak_mean {
            self.tracker.update(&mean)?;
        }
        self.step = t;
        self.last_alpha = alpha;
        self.acc.add(&outcome);
        Ok(outcome)
    }

    /// Scores the EMA network on the test split and closes the current
    /// averaging window.
    pub fn record(&mut self) -> Result<EvalRecord> {
        let cfg = &self.config;
        let eval = evaluate(
            &self.state.shadow,
            cfg.activation,
            self.split.test_x.view(),
            &self.split.test_y,
            cfg.calibration_bins,
        )?;
        let uses_unlabeled = cfg.variant.uses_unlabeled();
        let estimate = &self.tracker.estimate;
        let kl_to_truth = match (&self.true_unlabeled_prior, uses_unlabeled) {
            (Some(q), true) => Some(estimate.kl_to(q)?),
            _ => None,
        };
        let kl_to_uniform = if uses_unlabeled {
            Some(estimate.kl_to(&ClassPrior::uniform(estimate.len()))?)
        } else {
            None
        };
        let a = &self.acc;
        let mask_rate = a.mean(a.mask_rate);
        let record = EvalRecord {
            step: self.step,
            loss_total: a.mean(a.total),
            loss_supervised: a.mean(a.supervised),
            loss_consistency: a.mean(a.consistency),
            loss_complementary: a.mean(a.complementary),
            mask_rate,
            complementary_rate: if uses_unlabeled { 1.0 - mask_rate } else { 0.0 },
            alpha: self.last_alpha,
            temperature: self.temperature.unwrap_or(1.0),
            kl_to_truth,
            kl_to_uniform,
            prior_estimate: estimate.probs().to_vec(),
            balanced_accuracy: eval.balanced_accuracy,
            ece: eval.ece,
            mce: eval.mce,
        };
        self.acc = Accumulator::default();
        self.records.push(record.clone());
        Ok(record)
    }

    /// Builds the report; the final test predictions come from the EMA network.
    pub fn finish(self) -> Result<TrainOutcome> {
        let cfg = &self.config;
        let eval = evaluate(
            &self.state.shadow,
            cfg.activation,
            self.split.test_x.view(),
            &self.split.test_y,
            cfg.calibration_bins,
        )?;
        let w = cfg.final_window;
        let records = self.records;
        let report = RunReport {
            variant: cfg.variant,
            seed: cfg.seed,
            final_balanced_accuracy: RunReport::trailing_mean(&records, w, |r| r.balanced_accuracy),
            final_ece: RunReport::trailing_mean(&records, w, |r| r.ece),
            final_mce: RunReport::trailing_mean(&records, w, |r| r.mce),
            records,
            test: eval.predictions,
        };
        Ok(TrainOutcome {
            state: self.state,
            tracker: self.tracker,
            report,
        })
    }
}

/// Trained model, final prior estimate and the run report.
#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub state: ClassifierState,
    pub tracker: PriorTracker,
    pub report: RunReport,
}

/// Trains to completion, calling `observer` with each evaluation record as
/// soon as it is produced.
pub fn train_with_observer(
    config: TrainConfig,
    split: &DataSplit,
    task: &SyntheticTask,
    observer: &mut dyn FnMut(&EvalRecord) -> Result<()>,
) -> Result<TrainOutcome> {
    let mut trainer = Trainer::new(config, split, task)?;
    let interval = trainer.config().eval_interval;
    while !trainer.is_done() {
        trainer.step()?;
        let t = trainer.step_count();
        if t % interval == 0 || trainer.is_done() {
            let record = trainer.record()?;
            observer(&record)?;
        }
    }
    trainer.finish()
}

pub fn train(config: TrainConfig, split: &DataSplit, task: &SyntheticTask) -> Result<TrainOutcome> {
    train_with_observer(config, split, task, &mut |_| Ok(()))
}

pub fn run_with_observer(
    config: TrainConfig,
    split: &DataSplit,
    task: &SyntheticTask,
    observer: &mut dyn FnMut(&EvalRecord) -> Result<()>,
) -> Result<RunReport> {
    train_with_observer(config, split, task, observer).map(|o| o.report)
}

pub fn run(config: TrainConfig, split: &DataSplit, task: &SyntheticTask) -> Result<RunReport> {
    train(config, split, task).map(|o| o.report)
}
