use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::data::AugmentConfig;
use crate::error::{Error, Result};
use crate::eval::DEFAULT_BINS;
use crate::flexda::DebiasSchedule;
use crate::math::{Activation, OptimizerConfig};

/// Which loss terms make up the objective.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "String", into = "String")]
pub enum Variant {
    /// Labeled cross-entropy only.
    Supervised,
    /// Cross-entropy plus masked hard pseudo-label consistency.
    FixMatch,
    /// Both terms logit-adjusted toward the smoothed estimated prior.
    FlexDa,
    /// FixMatch plus distillation of low-confidence samples, no adjustment.
    Ccr,
    /// FlexDa plus adjusted distillation of low-confidence samples.
    Adello,
    /// FlexDa plus adjusted distillation of every sample.
    FlexDaKd,
}

impl Variant {
    pub const ALL: [Variant; 6] = [
        Variant::Supervised,
        Variant::FixMatch,
        Variant::FlexDa,
        Variant::Ccr,
        Variant::Adello,
        Variant::FlexDaKd,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Supervised => "supervised",
            Variant::FixMatch => "fixmatch",
            Variant::FlexDa => "flexda",
            Variant::Ccr => "ccr",
            Variant::Adello => "adello",
            Variant::FlexDaKd => "flexda_kd",
        }
    }

    pub fn uses_unlabeled(self) -> bool {
        self != Variant::Supervised
    }

    /// Whether the labeled and consistency terms are prior-adjusted.
    pub fn aligns(self) -> bool {
        matches!(self, Variant::FlexDa | Variant::Adello | Variant::FlexDaKd)
    }

    pub fn distills(self) -> bool {
        matches!(self, Variant::Ccr | Variant::Adello | Variant::FlexDaKd)
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Variant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| Error::InvalidConfig(format!("unknown variant `{s}`")))
    }
}

impl TryFrom<String> for Variant {
    type Error = Error;

    fn try_from(value: String) -> Result<Self> {
        value.parse()
    }
}

impl From<Variant> for String {
    fn from(value: Variant) -> Self {
        value.as_str().to_string()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub variant: Variant,
    /// Labeled batch size `B`.
    pub batch_size: usize,
    /// Unlabeled batch is `μ·B`.
    pub unlabeled_ratio: usize,
    /// Confidence threshold `τ`.
    pub threshold: f64,
    /// `t_total` lives here.
    pub schedule: DebiasSchedule,
    pub warmup_steps: u64,
    pub lambda_u: f64,
    pub lambda_uc: f64,
    pub optimizer: OptimizerConfig,
    /// EMA momentum of the prior estimate.
    pub prior_beta: f64,
    pub hidden: usize,
    pub activation: Activation,
    pub augment: AugmentConfig,
    pub eval_interval: u64,
    /// Number of trailing evaluations averaged into the final score.
    pub final_window: usize,
    pub calibration_bins: usize,
    pub seed: u64,
    /// Record KL of the prior estimate to the hidden true unlabeled prior.
    pub diagnostics: bool,
}

impl Default for TrainConfig {
    fn default() -> Self {
        let steps = 20_000;
        Self {
            variant: Variant::Adello,
            batch_size: 64,
            unlabeled_ratio: 2,
            threshold: 0.95,
            schedule: DebiasSchedule {
                d: 2.0,
                alpha_min: 0.1,
                t_total: steps,
            },
            warmup_steps: steps / 10,
            lambda_u: 1.0,
            lambda_uc: 1.0,
            optimizer: OptimizerConfig::default(),
            prior_beta: 0.999,
            hidden: 32,
            activation: Activation::Tanh,
            augment: AugmentConfig::default(),
            eval_interval: 500,
            final_window: 10,
            calibration_bins: DEFAULT_BINS,
            seed: 1,
            diagnostics: false,
        }
    }
}

impl TrainConfig {
    pub fn steps(&self) -> u64 {
        self.schedule.t_total
    }

    pub fn validate(&self) -> Result<()> {
        self.schedule.validate()?;
        self.optimizer.validate()?;
        self.augment.validate()?;
        let positive = [
            ("batch_size", self.batch_size as f64),
            ("unlabeled_ratio", self.unlabeled_ratio as f64),
            ("hidden", self.hidden as f64),
            ("eval_interval", self.eval_interval as f64),
            ("final_window", self.final_window as f64),
            ("calibration_bins", self.calibration_bins as f64),
        ];
        for (name, value) in positive {
            if value < 1.0 {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    bounds: "[1, inf)",
                });
            }
        }
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::OutOfRange {
                name: "threshold",
                value: self.threshold,
                bounds: "(0, 1)",
            });
        }
        if self.warmup_steps > self.steps() {
            return Err(Error::OutOfRange {
                name: "warmup_steps",
                value: self.warmup_steps as f64,
                bounds: "[0, steps]",
            });
        }
        for (name, value) in [("lambda_u", self.lambda_u), ("lambda_uc", self.lambda_uc)] {
            if !(value >= 0.0 && value.is_finite()) {
                return Err(Error::OutOfRange {
                    name,
                    value,
                    bounds: "[0, inf)",
                });
            }
        }
        if !(0.0..1.0).contains(&self.prior_beta) {
            return Err(Error::OutOfRange {
                name: "prior_beta",
                value: self.prior_beta,
                bounds: "[0, 1)",
            });
        }
        Ok(())
    }
}
