//! Per-run output files.
//!
//! `runs/<id>.csv` holds one row per `(step, metric)` with columns
//! `experiment,setting,variant,seed,step,metric,value`. Evaluation rows are
//! appended and flushed as training progresses; the `final_*` rows come
//! last. `runs/<id>.predictions.csv` holds the final test predictions as
//! `label,prediction,confidence`.

use std::fs::File;
use std::io::BufWriter;
use std::path::{Path, PathBuf};

use ltssl_core::trainer::{EvalRecord, RunReport, TestPredictions};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

pub const RUNS_DIR: &str = "runs";
pub const PREDICTIONS_SUFFIX: &str = ".predictions.csv";

/// Final-score metric names, as written at the end of every run file.
pub const FINAL_BALANCED_ACCURACY: &str = "final_balanced_accuracy";
pub const FINAL_ECE: &str = "final_ece";
pub const FINAL_MCE: &str = "final_mce";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsRecord {
    pub experiment: String,
    pub setting: String,
    pub variant: String,
    pub seed: u64,
    pub step: u64,
    pub metric: String,
    pub value: f64,
}

/// Identifies the run every row of a metrics file belongs to.
#[derive(Debug, Clone, PartialEq)]
pub struct RunKey {
    pub experiment: String,
    pub setting: String,
    pub variant: String,
    pub seed: u64,
}

pub fn metrics_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(RUNS_DIR).join(format!("{run_id}.csv"))
}

pub fn predictions_path(dir: &Path, run_id: &str) -> PathBuf {
    dir.join(RUNS_DIR)
        .join(format!("{run_id}{PREDICTIONS_SUFFIX}"))
}

pub struct MetricsWriter {
    key: RunKey,
    writer: csv::Writer<BufWriter<File>>,
}

impl MetricsWriter {
    pub fn create(path: &Path, key: RunKey) -> Result<Self> {
        let file = File::create(path).map_err(CliError::io(path))?;
        Ok(Self {
            key,
            writer: csv::Writer::from_writer(BufWriter::new(file)),
        })
    }

    fn row(&mut self, step: u64, metric: &str, value: f64) -> csv::Result<()> {
        self.writer.serialize(MetricsRecord {
            experiment: self.key.experiment.clone(),
            setting: self.key.setting.clone(),
            variant: self.key.variant.clone(),
            seed: self.key.seed,
            step,
            metric: metric.to_string(),
            value,
        })
    }

    /// Appends one evaluation point and flushes, so partial runs leave
    /// readable files behind.
    pub fn write_eval(&mut self, r: &EvalRecord) -> csv::Result<()> {
        let s = r.step;
        for (name, value) in [
            ("loss_total", r.loss_total),
            ("loss_supervised", r.loss_supervised),
            ("loss_consistency", r.loss_consistency),
            ("loss_complementary", r.loss_complementary),
            ("mask_rate", r.mask_rate),
            ("complementary_rate", r.complementary_rate),
            ("alpha", r.alpha),
            ("temperature", r.temperature),
        ] {
            self.row(s, name, value)?;
        }
        if let Some(kl) = r.kl_to_truth {
            self.row(s, "kl_to_truth", kl)?;
        }
        if let Some(kl) = r.kl_to_uniform {
            self.row(s, "kl_to_uniform", kl)?;
        }
        for (k, p) in r.prior_estimate.iter().enumerate() {
            self.row(s, &format!("prior_{k}"), *p)?;
        }
        self.row(s, "balanced_accuracy", r.balanced_accuracy)?;
        self.row(s, "ece", r.ece)?;
        self.row(s, "mce", r.mce)?;
        self.writer.flush()?;
        Ok(())
    }

    pub fn write_final(mut self, report: &RunReport) -> csv::Result<()> {
        let step = report.records.last().map_or(0, |r| r.step);
        self.row(
            step,
            FINAL_BALANCED_ACCURACY,
            report.final_balanced_accuracy,
        )?;
        self.row(step, FINAL_ECE, report.final_ece)?;
        self.row(step, FINAL_MCE, report.final_mce)?;
        self.writer.flush()?;
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
struct PredictionRow {
    label: usize,
    prediction: usize,
    confidence: f64,
}

pub fn write_predictions(path: &Path, test: &TestPredictions) -> Result<()> {
    let file = File::create(path).map_err(CliError::io(path))?;
    let mut w = csv::Writer::from_writer(BufWriter::new(file));
    for ((&label, &prediction), &confidence) in test
        .labels
        .iter()
        .zip(&test.predictions)
        .zip(&test.confidences)
    {
        w.serialize(PredictionRow {
            label,
            prediction,
            confidence,
        })?;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<TestPredictions> {
    let mut r = csv::Reader::from_path(path)?;
    let mut out = TestPredictions {
        labels: Vec::new(),
        predictions: Vec::new(),
        confidences: Vec::new(),
    };
    for row in r.deserialize() {
        let row: PredictionRow = row?;
        out.labels.push(row.label);
        out.predictions.push(row.prediction);
        out.confidences.push(row.confidence);
    }
    Ok(out)
}

pub fn read_metrics(path: &Path) -> Result<Vec<MetricsRecord>> {
    let mut r = csv::Reader::from_path(path)?;
    r.deserialize()
        .map(|row| row.map_err(CliError::from))
        .collect()
}

/// Every metrics file under `dir/runs`, sorted by file name.
pub fn run_files(dir: &Path) -> Result<Vec<PathBuf>> {
    let runs = dir.join(RUNS_DIR);
    let entries = std::fs::read_dir(&runs).map_err(CliError::io(&runs))?;
    let mut files = Vec::new();
    for entry in entries {
        let path = entry.map_err(CliError::io(&runs))?.path();
        let name = path
            .file_name()
            .and_then(|n| n.to_str())
            .unwrap_or_default();
        if name.ends_with(".csv") && !name.ends_with(PREDICTIONS_SUFFIX) {
            files.push(path);
        }
    }
    files.sort();
    Ok(files)
}
