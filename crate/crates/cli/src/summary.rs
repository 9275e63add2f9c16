//! Aggregation of run files into `summary.csv`, and Friedman ranking.
//!
//! The summary has one row per `(experiment, setting, variant)` cell with
//! columns
//!
//! ```text
//! experiment,setting,variant,runs,seeds,
//! balanced_accuracy_mean,balanced_accuracy_std,ece_mean,ece_std,mce_mean,mce_std,
//! friedman_mean_rank,final_rank
//! ```
//!
//! Means and sample standard deviations are over seeds; the standard
//! deviation is left empty for single-seed cells. Friedman ranks compare
//! variants by mean balanced accuracy across the settings of one
//! experiment, and are left empty when fewer than two variants ran or some
//! cell is missing. Settings are ordered by name and variants in the
//! canonical order of [`Variant::ALL`], so the summary depends only on the
//! contents of the run files.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use ltssl_core::eval::{friedman_rank, ScoreTable};
use ltssl_core::Variant;
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::metrics::{read_metrics, run_files, FINAL_BALANCED_ACCURACY, FINAL_ECE, FINAL_MCE};

pub const SUMMARY_FILE: &str = "summary.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub experiment: String,
    pub setting: String,
    pub variant: String,
    pub runs: usize,
    /// Seeds joined with `;`.
    pub seeds: String,
    pub balanced_accuracy_mean: f64,
    pub balanced_accuracy_std: Option<f64>,
    pub ece_mean: f64,
    pub ece_std: Option<f64>,
    pub mce_mean: f64,
    pub mce_std: Option<f64>,
    pub friedman_mean_rank: Option<f64>,
    pub final_rank: Option<usize>,
}

/// Friedman result for one variant of one experiment.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankRow {
    pub experiment: String,
    pub variant: String,
    pub friedman_mean_rank: f64,
    pub final_rank: usize,
}

#[derive(Debug, Default)]
struct Finals {
    balanced_accuracy: Option<f64>,
    ece: Option<f64>,
    mce: Option<f64>,
}

/// `(mean, sample std)`; the std needs at least two values.
pub fn mean_std(values: &[f64]) -> (f64, Option<f64>) {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    if values.len() < 2 {
        return (mean, None);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0);
    (mean, Some(var.sqrt()))
}

type CellKey = (String, String, Variant);

/// Rebuilds the summary rows from the run files under `dir`.
pub fn summarize_runs(dir: &Path) -> Result<Vec<SummaryRow>> {
    // (experiment, setting, variant) -> seed -> final metrics
    let mut cells: BTreeMap<CellKey, BTreeMap<u64, Finals>> = BTreeMap::new();
    for path in run_files(dir)? {
        for rec in read_metrics(&path)? {
            let variant: Variant =
                rec.variant
                    .parse()
                    .map_err(|e: ltssl_core::Error| CliError::Malformed {
                        path: path.clone(),
                        message: e.to_string(),
                    })?;
            let finals = cells
                .entry((rec.experiment.clone(), rec.setting.clone(), variant))
                .or_default()
                .entry(rec.seed)
                .or_default();
            match rec.metric.as_str() {
                FINAL_BALANCED_ACCURACY => finals.balanced_accuracy = Some(rec.value),
                FINAL_ECE => finals.ece = Some(rec.value),
                FINAL_MCE => finals.mce = Some(rec.value),
                _ => {}
            }
        }
    }

    let mut rows = Vec::new();
    for ((experiment, setting, variant), seeds) in &cells {
        let mut ba = Vec::new();
        let mut ece = Vec::new();
        let mut mce = Vec::new();
        for (seed, f) in seeds {
            match (f.balanced_accuracy, f.ece, f.mce) {
                (Some(a), Some(e), Some(m)) => {
                    ba.push(a);
                    ece.push(e);
                    mce.push(m);
                }
                _ => {
                    return Err(CliError::Malformed {
                        path: dir.to_path_buf(),
                        message: format!(
                            "run {setting}/{variant}/seed {seed} of `{experiment}` has no final metrics (incomplete run?)"
                        ),
                    })
                }
            }
        }
        let (balanced_accuracy_mean, balanced_accuracy_std) = mean_std(&ba);
        let (ece_mean, ece_std) = mean_std(&ece);
        let (mce_mean, mce_std) = mean_std(&mce);
        rows.push(SummaryRow {
            experiment: experiment.clone(),
            setting: setting.clone(),
            variant: variant.to_string(),
            runs: seeds.len(),
            seeds: seeds
                .keys()
                .map(u64::to_string)
                .collect::<Vec<_>>()
                .join(";"),
            balanced_accuracy_mean,
            balanced_accuracy_std,
            ece_mean,
            ece_std,
            mce_mean,
            mce_std,
            friedman_mean_rank: None,
            final_rank: None,
        });
    }
    for rank in rank_rows(&rows)? {
        for row in rows
            .iter_mut()
            .filter(|r| r.experiment == rank.experiment && r.variant == rank.variant)
        {
            row.friedman_mean_rank = Some(rank.friedman_mean_rank);
            row.final_rank = Some(rank.final_rank);
        }
    }
    // settings by name, then variants in canonical order
    rows.sort_by_cached_key(|r| {
        (
            r.experiment.clone(),
            r.setting.clone(),
            r.variant.parse::<Variant>().ok(),
        )
    });
    Ok(rows)
}

/// Friedman ranks of the variants of each experiment, by mean balanced
/// accuracy (higher is better). Experiments with fewer than two variants
/// or an incomplete setting × variant grid are skipped.
pub fn rank_rows(rows: &[SummaryRow]) -> Result<Vec<RankRow>> {
    let mut by_experiment: BTreeMap<&str, Vec<&SummaryRow>> = BTreeMap::new();
    for r in rows {
        by_experiment.entry(&r.experiment).or_default().push(r);
    }
    let mut out = Vec::new();
    for (experiment, rows) in by_experiment {
        let mut variants: Vec<String> = rows.iter().map(|r| r.variant.clone()).collect();
        variants.sort_by_cached_key(|v| (v.parse::<Variant>().ok(), v.clone()));
        variants.dedup();
        let mut settings: Vec<String> = rows.iter().map(|r| r.setting.clone()).collect();
        settings.sort();
        settings.dedup();
        if variants.len() < 2 {
            continue;
        }
        let mut scores = vec![vec![f64::NAN; settings.len()]; variants.len()];
        for r in &rows {
            let m = variants
                .iter()
                .position(|v| *v == r.variant)
                .expect("collected above");
            let s = settings
                .iter()
                .position(|v| *v == r.setting)
                .expect("collected above");
            scores[m][s] = r.balanced_accuracy_mean;
        }
        if scores.iter().flatten().any(|v| v.is_nan()) {
            continue;
        }
        let table = ScoreTable::new(variants.clone(), settings, scores)?;
        let ranking = friedman_rank(&table, true)?;
        for &m in &ranking.order {
            out.push(RankRow {
                experiment: experiment.to_string(),
                variant: variants[m].clone(),
                friedman_mean_rank: ranking.mean_ranks[m],
                final_rank: ranking.final_rank[m],
            });
        }
    }
    Ok(out)
}

pub fn write_summary(path: &Path, rows: &[SummaryRow]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    for r in rows {
        w.serialize(r)?;
    }
    w.flush().map_err(CliError::io(path))?;
    Ok(())
}

pub fn read_summary(path: &Path) -> Result<Vec<SummaryRow>> {
    let mut r = csv::Reader::from_path(path).map_err(|e| CliError::Malformed {
        path: path.to_path_buf(),
        message: e.to_string(),
    })?;
    r.deserialize()
        .map(|row| {
            row.map_err(|e| CliError::Malformed {
                path: path.to_path_buf(),
                message: e.to_string(),
            })
        })
        .collect()
}

/// Recomputes `dir/summary.csv` from the run files and returns its path.
pub fn summarize(dir: &Path) -> Result<PathBuf> {
    let rows = summarize_runs(dir)?;
    let path = dir.join(SUMMARY_FILE);
    write_summary(&path, &rows)?;
    Ok(path)
}

pub fn write_ranks<W: std::io::Write>(ranks: &[RankRow], writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for r in ranks {
        w.serialize(r)?;
    }
    w.flush().map_err(CliError::io("<output>"))?;
    Ok(())
}
