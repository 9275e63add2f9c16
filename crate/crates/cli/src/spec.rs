//! Experiment specifications.
//!
//! A spec is a TOML document:
//!
//! ```toml
//! name = "forward-lt"              # experiment id; also the default output dir
//! variants = ["fixmatch", "adello"]
//! seeds = [1, 2, 3]                # optional, defaults to [1, 2, 3]
//! output = "forward-lt"            # optional, relative to the output root
//!
//! [task]                           # every key optional
//! dim = 2
//! classes = 5
//! separation = 4.0                 # minimum mean distance, in units of sigma
//! sigma = 1.0
//! seed = 7
//! test_per_class = 400
//!
//! [[settings]]                     # one table per long-tailed setting
//! name = "forward"
//! gamma_l = 50.0
//! gamma_u = 50.0
//! n1 = 60                          # optional, default 60
//! m1 = 600                         # optional, default 600
//! ood_fraction = 0.0               # optional
//!
//! [train]                          # every key optional
//! steps = 20000
//! threshold = 0.95
//! ```
//!
//! Unknown keys anywhere are rejected. The full list of `[train]` keys is
//! the field list of [`TrainOverrides`].

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use ltssl_core::data::{make_task, AugmentConfig, LongTailSpec, SyntheticTask};
use ltssl_core::math::Activation;
use ltssl_core::{TrainConfig, Variant};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub name: String,
    #[serde(default)]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub task: TaskSpec,
    pub settings: Vec<SettingSpec>,
    pub variants: Vec<Variant>,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default)]
    pub train: TrainOverrides,
}

fn default_seeds() -> Vec<u64> {
    vec![1, 2, 3]
}

/// Gaussian-mixture geometry shared by every setting of an experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct TaskSpec {
    pub dim: usize,
    pub classes: usize,
    pub separation: f64,
    pub sigma: f64,
    pub seed: u64,
    pub test_per_class: usize,
}

impl Default for TaskSpec {
    fn default() -> Self {
        Self {
            dim: 2,
            classes: 5,
            separation: 4.0,
            sigma: 1.0,
            seed: 7,
            test_per_class: 400,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SettingSpec {
    pub name: String,
    pub gamma_l: f64,
    pub gamma_u: f64,
    #[serde(default = "default_n1")]
    pub n1: usize,
    #[serde(default = "default_m1")]
    pub m1: usize,
    #[serde(default)]
    pub ood_fraction: f64,
}

fn default_n1() -> usize {
    60
}

fn default_m1() -> usize {
    600
}

impl SettingSpec {
    pub fn long_tail(&self, classes: usize) -> LongTailSpec {
        LongTailSpec {
            classes,
            n1: self.n1,
            gamma_l: self.gamma_l,
            m1: self.m1,
            gamma_u: self.gamma_u,
            ood_fraction: self.ood_fraction,
        }
    }
}

/// Optional replacements for [`TrainConfig`] defaults.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainOverrides {
    pub steps: Option<u64>,
    pub batch_size: Option<usize>,
    pub unlabeled_ratio: Option<usize>,
    pub threshold: Option<f64>,
    pub d: Option<f64>,
    pub alpha_min: Option<f64>,
    /// Defaults to a tenth of `steps`.
    pub warmup_steps: Option<u64>,
    pub lambda_u: Option<f64>,
    pub lambda_uc: Option<f64>,
    pub prior_beta: Option<f64>,
    pub learning_rate: Option<f64>,
    pub momentum: Option<f64>,
    pub weight_decay: Option<f64>,
    pub ema_decay: Option<f64>,
    pub hidden: Option<usize>,
    pub activation: Option<Activation>,
    pub weak_sigma: Option<f64>,
    pub strong_sigma: Option<f64>,
    pub strong_dropout: Option<f64>,
    pub eval_interval: Option<u64>,
    pub final_window: Option<usize>,
    pub calibration_bins: Option<usize>,
}

impl TrainOverrides {
    pub fn apply(&self, base: TrainConfig) -> TrainConfig {
        let mut c = base;
        if let Some(steps) = self.steps {
            c.schedule.t_total = steps;
        }
        c.warmup_steps = self.warmup_steps.unwrap_or(c.schedule.t_total / 10);
        let d = AugmentConfig::default();
        c.augment = AugmentConfig {
            weak_sigma: self.weak_sigma.unwrap_or(d.weak_sigma),
            strong_sigma: self.strong_sigma.unwrap_or(d.strong_sigma),
            strong_dropout: self.strong_dropout.unwrap_or(d.strong_dropout),
        };
        macro_rules! set {
            ($($field:ident => $($target:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$field { c.$($target).+ = v; })*
            };
        }
        set!(
            batch_size => batch_size,
            unlabeled_ratio => unlabeled_ratio,
            threshold => threshold,
            d => schedule.d,
            alpha_min => schedule.alpha_min,
            lambda_u => lambda_u,
            lambda_uc => lambda_uc,
            prior_beta => prior_beta,
            learning_rate => optimizer.learning_rate,
            momentum => optimizer.momentum,
            weight_decay => optimizer.weight_decay,
            ema_decay => optimizer.ema_decay,
            hidden => hidden,
            activation => activation,
            eval_interval => eval_interval,
            final_window => final_window,
            calibration_bins => calibration_bins,
        );
        c
    }
}

/// One training run of an experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RunPlan {
    pub id: String,
    pub setting: usize,
    pub variant: Variant,
    pub seed: u64,
}

impl ExperimentSpec {
    pub fn from_toml(text: &str) -> Result<Self, String> {
        let spec: ExperimentSpec = toml::from_str(text).map_err(|e| e.message().to_string())?;
        spec.validate()?;
        Ok(spec)
    }

    /// Checks everything that can be checked without training: names,
    /// duplicates, ranges, and that the task geometry is placeable.
    pub fn validate(&self) -> Result<(), String> {
        check_name("name", &self.name)?;
        if self.settings.is_empty() {
            return Err("at least one [[settings]] table is required".into());
        }
        let mut names = HashSet::new();
        for s in &self.settings {
            check_name("settings.name", &s.name)?;
            if !names.insert(s.name.as_str()) {
                return Err(format!("duplicate setting `{}`", s.name));
            }
            s.long_tail(self.task.classes)
                .validate()
                .map_err(|e| format!("setting `{}`: {e}", s.name))?;
        }
        if self.variants.is_empty() {
            return Err("at least one variant is required".into());
        }
        let mut seen = HashSet::new();
        for v in &self.variants {
            if !seen.insert(v) {
                return Err(format!("duplicate variant `{v}`"));
            }
        }
        if self.seeds.is_empty() {
            return Err("at least one seed is required".into());
        }
        check_seeds(&self.seeds)?;
        let t = &self.task;
        if t.dim < 1 {
            return Err("task.dim must be at least 1".into());
        }
        if t.classes < 2 {
            return Err("task.classes must be at least 2".into());
        }
        if !(t.separation > 0.0 && t.separation.is_finite()) {
            return Err(format!(
                "task.separation = {} is out of range (0, inf)",
                t.separation
            ));
        }
        if !(t.sigma > 0.0 && t.sigma.is_finite()) {
            return Err(format!("task.sigma = {} is out of range (0, inf)", t.sigma));
        }
        if t.test_per_class < 1 {
            return Err("task.test_per_class must be at least 1".into());
        }
        for v in &self.variants {
            self.train_config(*v, 0, false)
                .validate()
                .map_err(|e| e.to_string())?;
        }
        Ok(())
    }

    pub fn train_config(&self, variant: Variant, seed: u64, diagnostics: bool) -> TrainConfig {
        let mut c = self.train.apply(TrainConfig::default());
        c.variant = variant;
        c.seed = seed;
        c.diagnostics = diagnostics;
        c
    }

    /// Base task with uniform priors; [`Self::task_for`] specializes it.
    pub fn base_task(&self) -> ltssl_core::Result<SyntheticTask> {
        let t = &self.task;
        let task = make_task(t.dim, t.classes, t.separation, t.sigma, t.seed)?;
        if self.settings.iter().any(|s| s.ood_fraction > 0.0) {
            task.with_ood_cluster(t.separation)
        } else {
            Ok(task)
        }
    }

    /// The task with the labeled and unlabeled marginals of one setting.
    pub fn task_for(
        &self,
        base: &SyntheticTask,
        setting: usize,
    ) -> ltssl_core::Result<SyntheticTask> {
        let (pl, q) = self.settings[setting]
            .long_tail(self.task.classes)
            .priors()?;
        base.clone().with_priors(pl, q)
    }

    /// Settings × variants × seeds, in spec order.
    pub fn runs(&self) -> Vec<RunPlan> {
        let mut out = Vec::new();
        for (i, s) in self.settings.iter().enumerate() {
            for &variant in &self.variants {
                for &seed in &self.seeds {
                    out.push(RunPlan {
                        id: format!("{}-{}-s{}", s.name, variant, seed),
                        setting: i,
                        variant,
                        seed,
                    });
                }
            }
        }
        out
    }

    /// Where this experiment writes, given the output root.
    pub fn output_dir(&self, root: &Path) -> PathBuf {
        match &self.output {
            Some(p) if p.is_absolute() => p.clone(),
            Some(p) => root.join(p),
            None => root.join(&self.name),
        }
    }
}

pub(crate) fn check_seeds(seeds: &[u64]) -> Result<(), String> {
    let mut seen = HashSet::new();
    for s in seeds {
        if !seen.insert(s) {
            return Err(format!("duplicate seed {s}"));
        }
    }
    Ok(())
}

/// Names end up in file names and CSV cells.
fn check_name(what: &str, name: &str) -> Result<(), String> {
    let ok = !name.is_empty()
        && name
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '.'))
        && !name.starts_with('.');
    if ok {
        Ok(())
    } else {
        Err(format!(
            "{what} `{name}` must be non-empty and use only [A-Za-z0-9._-]"
        ))
    }
}

pub fn parse_spec(path: &Path) -> Result<ExperimentSpec> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Spec {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    ExperimentSpec::from_toml(&text).map_err(|message| CliError::Spec {
        path: path.to_path_buf(),
        message,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
name = "t"
variants = ["fixmatch"]

[[settings]]
name = "fwd"
gamma_l = 50.0
gamma_u = 50.0
"#;

    #[test]
    fn empty_overrides_give_defaults() {
        let spec = ExperimentSpec::from_toml(MINIMAL).unwrap();
        assert_eq!(spec.seeds, vec![1, 2, 3]);
        let c = spec.train_config(Variant::FixMatch, 1, false);
        assert_eq!(c.threshold, 0.95);
        assert_eq!(c.prior_beta, 0.999);
        assert_eq!(c.schedule.d, 2.0);
        assert_eq!(c.schedule.alpha_min, 0.1);
        assert_eq!((c.lambda_u, c.lambda_uc), (1.0, 1.0));
        assert_eq!(c.warmup_steps, c.steps() / 10);
        assert_eq!(spec.settings[0].n1, 60);
        assert_eq!(spec.task, TaskSpec::default());
    }

    #[test]
    fn overrides_land_in_the_config() {
        let text = format!("{MINIMAL}\n[train]\nsteps = 300\nd = 3.0\nlearning_rate = 0.1\nactivation = \"softplus\"\n");
        let spec = ExperimentSpec::from_toml(&text).unwrap();
        let c = spec.train_config(Variant::Adello, 4, true);
        assert_eq!(c.steps(), 300);
        assert_eq!(c.warmup_steps, 30);
        assert_eq!(c.schedule.d, 3.0);
        assert_eq!(c.optimizer.learning_rate, 0.1);
        assert_eq!(c.activation, Activation::Softplus);
        assert_eq!(
            (c.variant, c.seed, c.diagnostics),
            (Variant::Adello, 4, true)
        );
    }

    #[test]
    fn unknown_keys_are_named() {
        let err = ExperimentSpec::from_toml(&format!("{MINIMAL}\n[train]\nlearning_rat = 0.1\n"))
            .unwrap_err();
        assert!(err.contains("learning_rat"), "{err}");
        let err = ExperimentSpec::from_toml(&format!("colour = 1\n{MINIMAL}")).unwrap_err();
        assert!(err.contains("colour"), "{err}");
    }

    #[test]
    fn out_of_range_values_report_bounds() {
        let err =
            ExperimentSpec::from_toml(&format!("{MINIMAL}\n[train]\nd = -1.0\n")).unwrap_err();
        assert!(err.contains("d = -1") && err.contains("[0, inf)"), "{err}");
        let err = ExperimentSpec::from_toml(&format!("{MINIMAL}\n[train]\nthreshold = 1.5\n"))
            .unwrap_err();
        assert!(err.contains("threshold"), "{err}");
    }

    #[test]
    fn duplicates_are_rejected() {
        let err = ExperimentSpec::from_toml(&format!("seeds = [1, 2, 1]\n{MINIMAL}")).unwrap_err();
        assert!(err.contains("duplicate seed 1"), "{err}");
        let text = MINIMAL.replace("[\"fixmatch\"]", "[\"adello\", \"adello\"]");
        assert!(ExperimentSpec::from_toml(&text)
            .unwrap_err()
            .contains("duplicate variant"));
        let text =
            format!("{MINIMAL}\n[[settings]]\nname = \"fwd\"\ngamma_l = 1.0\ngamma_u = 1.0\n");
        assert!(ExperimentSpec::from_toml(&text)
            .unwrap_err()
            .contains("duplicate setting"));
    }

    #[test]
    fn unknown_variant_is_rejected() {
        let text = MINIMAL.replace("fixmatch", "mixmatch");
        assert!(ExperimentSpec::from_toml(&text)
            .unwrap_err()
            .contains("mixmatch"));
    }

    #[test]
    fn runs_enumerate_in_spec_order() {
        let text = format!(
            "seeds = [5, 2]\n{}",
            MINIMAL.replace("[\"fixmatch\"]", "[\"adello\", \"fixmatch\"]")
        );
        let spec = ExperimentSpec::from_toml(&text).unwrap();
        let ids: Vec<String> = spec.runs().into_iter().map(|r| r.id).collect();
        assert_eq!(
            ids,
            [
                "fwd-adello-s5",
                "fwd-adello-s2",
                "fwd-fixmatch-s5",
                "fwd-fixmatch-s2"
            ]
        );
    }

    #[test]
    fn output_dir_resolution() {
        let mut spec = ExperimentSpec::from_toml(MINIMAL).unwrap();
        let root = Path::new("/tmp/root");
        assert_eq!(spec.output_dir(root), root.join("t"));
        spec.output = Some("sub/dir".into());
        assert_eq!(spec.output_dir(root), root.join("sub/dir"));
        spec.output = Some("/abs".into());
        assert_eq!(spec.output_dir(root), PathBuf::from("/abs"));
    }
}
