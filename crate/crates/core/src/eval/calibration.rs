use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};

pub const DEFAULT_BINS: usize = 15;

/// One equal-width confidence bin `(low, high]` (the first is `[0, high]`).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bin {
    pub low: f64,
    pub high: f64,
    pub count: usize,
    /// Mean confidence; 0 when empty.
    pub confidence: f64,
    /// Fraction correct; 0 when empty.
    pub accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityBins {
    pub bins: Vec<Bin>,
}

impl ReliabilityBins {
    pub fn total(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }
}

/// Zero-based bin index for a confidence in `[0, 1]`: `m/M` lands in bin
/// `m` (1-based), i.e. index `m − 1`.
fn bin_index(confidence: f64, bins: usize) -> usize {
    let m = bins as f64;
    let mut idx = ((confidence * m).ceil() as isize - 1).clamp(0, bins as isize - 1) as usize;
    // correct for rounding in confidence * M
    if idx > 0 && confidence <= idx as f64 / m {
        idx -= 1;
    } else if idx + 1 < bins && confidence > (idx + 1) as f64 / m {
        idx += 1;
    }
    idx
}

pub fn bin_predictions(
    confidences: &[f64],
    correct: &[bool],
    bins: usize,
) -> Result<ReliabilityBins> {
    if bins == 0 {
        return Err(Error::OutOfRange {
            name: "bins",
            value: 0.0,
            bounds: "[1, inf)",
        });
    }
    if confidences.len() != correct.len() {
        return Err(shape_mismatch(
            format!("{} flags", confidences.len()),
            correct.len(),
        ));
    }
    let mut counts = vec![0usize; bins];
    let mut conf_sum = vec![0.0; bins];
    let mut hits = vec![0usize; bins];
    for (&c, &ok) in confidences.iter().zip(correct) {
        if !(0.0..=1.0).contains(&c) {
            return Err(Error::OutOfRange {
                name: "confidence",
                value: c,
                bounds: "[0, 1]",
            });
        }
        let i = bin_index(c, bins);
        counts[i] += 1;
        conf_sum[i] += c;
        hits[i] += ok as usize;
    }
    let m = bins as f64;
    Ok(ReliabilityBins {
        bins: (0..bins)
            .map(|i| {
                let n = counts[i];
                Bin {
                    low: i as f64 / m,
                    high: (i + 1) as f64 / m,
                    count: n,
                    confidence: if n > 0 { conf_sum[i] / n as f64 } else { 0.0 },
                    accuracy: if n > 0 {
                        hits[i] as f64 / n as f64
                    } else {
                        0.0
                    },
                }
            })
            .collect(),
    })
}

/// `Σ_m (|B_m| / n) · |acc(B_m) − conf(B_m)|`, accumulated as
/// `Σ_m |hits_m − Σconf_m| / n` so that a single division happens last.
pub fn ece(bins: &ReliabilityBins, n: usize) -> Result<f64> {
    if n == 0 {
        return Err(Error::EmptyInput("calibration bins"));
    }
    if bins.total() != n {
        return Err(shape_mismatch(format!("{n} binned samples"), bins.total()));
    }
    let gap: f64 = bins
        .bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| {
            let c = b.count as f64;
            (c * b.accuracy - c * b.confidence).abs()
        })
        .sum();
    Ok(gap / n as f64)
}

/// `max_m |acc(B_m) − conf(B_m)|` over non-empty bins.
pub fn mce(bins: &ReliabilityBins) -> Result<f64> {
    bins.bins
        .iter()
        .filter(|b| b.count > 0)
        .map(|b| (b.accuracy - b.confidence).abs())
        .reduce(f64::max)
        .ok_or(Error::EmptyInput("calibration bins"))
}

/// CSV with header `bin_low,bin_high,count,conf,acc`.
pub fn write_bins_csv<W: Write>(bins: &ReliabilityBins, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["bin_low", "bin_high", "count", "conf", "acc"])?;
    for b in &bins.bins {
        w.write_record([
            b.low.to_string(),
            b.high.to_string(),
            b.count.to_string(),
            b.confidence.to_string(),
            b.accuracy.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}
