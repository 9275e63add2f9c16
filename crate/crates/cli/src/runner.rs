//! Sweep execution.

use std::path::{Path, PathBuf};

use ltssl_core::data::{sample_split, SyntheticTask};
use ltssl_core::trainer::run_with_observer;
use rayon::prelude::*;

use crate::error::{CliError, Result};
use crate::metrics::{
    metrics_path, predictions_path, write_predictions, MetricsWriter, RunKey, RUNS_DIR,
};
use crate::spec::{check_seeds, ExperimentSpec, RunPlan};
use crate::summary::summarize;

#[derive(Debug, Clone)]
pub struct RunOptions {
    /// Relative spec `output` paths resolve against this.
    pub output_root: PathBuf,
    /// Concurrent runs; 0 lets the thread pool decide.
    pub jobs: usize,
    /// Replaces the spec's seed list.
    pub seed_override: Option<Vec<u64>>,
    /// Records `KL(Q̂ ‖ Q)` against the hidden unlabeled prior.
    pub diagnostics: bool,
}

impl Default for RunOptions {
    fn default() -> Self {
        Self {
            output_root: PathBuf::from("."),
            jobs: 1,
            seed_override: None,
            diagnostics: false,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub dir: PathBuf,
    pub run_files: Vec<PathBuf>,
    pub summary: PathBuf,
}

/// Runs every setting × variant × seed, each writing only its own files,
/// then builds the summary from those files. On failure, files already
/// written stay in place and the first failing run (in spec order) is
/// reported.
pub fn run_experiment(spec: &ExperimentSpec, opts: &RunOptions) -> Result<ExperimentOutcome> {
    let mut spec = spec.clone();
    if let Some(seeds) = &opts.seed_override {
        if seeds.is_empty() {
            return Err(CliError::Config("seed override is empty".into()));
        }
        check_seeds(seeds).map_err(CliError::Config)?;
        spec.seeds = seeds.clone();
    }
    spec.validate().map_err(CliError::Config)?;

    let dir = spec.output_dir(&opts.output_root);
    let runs_dir = dir.join(RUNS_DIR);
    std::fs::create_dir_all(&runs_dir).map_err(CliError::io(&runs_dir))?;
    let base = spec
        .base_task()
        .map_err(|e| CliError::Config(e.to_string()))?;

    let plans = spec.runs();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(opts.jobs)
        .build()
        .map_err(|e| CliError::Config(format!("thread pool: {e}")))?;
    let results: Vec<Result<PathBuf>> = pool.install(|| {
        plans
            .par_iter()
            .map(|plan| execute(&spec, plan, &base, &dir, opts.diagnostics))
            .collect()
    });
    let run_files = results.into_iter().collect::<Result<Vec<_>>>()?;
    let summary = summarize(&dir)?;
    Ok(ExperimentOutcome {
        dir,
        run_files,
        summary,
    })
}

fn execute(
    spec: &ExperimentSpec,
    plan: &RunPlan,
    base: &SyntheticTask,
    dir: &Path,
    diagnostics: bool,
) -> Result<PathBuf> {
    let failed = |source: ltssl_core::Error| CliError::Run {
        run: plan.id.clone(),
        source,
    };
    let setting = &spec.settings[plan.setting];
    let task = spec.task_for(base, plan.setting).map_err(failed)?;
    let split = sample_split(
        &task,
        &setting.long_tail(spec.task.classes),
        spec.task.test_per_class,
        plan.seed,
    )
    .map_err(failed)?;
    let config = spec.train_config(plan.variant, plan.seed, diagnostics);

    let path = metrics_path(dir, &plan.id);
    let mut writer = MetricsWriter::create(
        &path,
        RunKey {
            experiment: spec.name.clone(),
            setting: setting.name.clone(),
            variant: plan.variant.to_string(),
            seed: plan.seed,
        },
    )?;
    let report = run_with_observer(config, &split, &task, &mut |r| Ok(writer.write_eval(r)?))
        .map_err(failed)?;
    writer.write_final(&report)?;
    write_predictions(&predictions_path(dir, &plan.id), &report.test)?;
    Ok(path)
}
