use ndarray::{Array2, ArrayView2};
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Feature-space stand-ins for weak and strong image augmentation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub weak_sigma: f64,
    pub strong_sigma: f64,
    pub strong_dropout: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        Self {
            weak_sigma: 0.1,
            strong_sigma: 0.5,
            strong_dropout: 0.1,
        }
    }
}

impl AugmentConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.weak_sigma >= 0.0 && self.weak_sigma.is_finite()) {
            return Err(Error::OutOfRange {
                name: "weak_sigma",
                value: self.weak_sigma,
                bounds: "[0, inf)",
            });
        }
        if !(self.strong_sigma >= self.weak_sigma && self.strong_sigma.is_finite()) {
            return Err(Error::OutOfRange {
                name: "strong_sigma",
                value: self.strong_sigma,
                bounds: "[weak_sigma, inf)",
            });
        }
        if !(0.0..1.0).contains(&self.strong_dropout) {
            return Err(Error::OutOfRange {
                name: "strong_dropout",
                value: self.strong_dropout,
                bounds: "[0, 1)",
            });
        }
        Ok(())
    }
}

fn noise(rng: &mut impl Rng, sigma: f64) -> f64 {
    if sigma == 0.0 {
        0.0
    } else {
        sigma * rng.sample::<f64, _>(StandardNormal)
    }
}

/// `x + N(0, σ_w²)` per coordinate.
pub fn weak_augment(x: &[f64], cfg: &AugmentConfig, rng: &mut impl Rng) -> Vec<f64> {
    x.iter().map(|v| v + noise(rng, cfg.weak_sigma)).collect()
}

/// `x + N(0, σ_s²)`, then each coordinate zeroed with the dropout probability.
pub fn strong_augment(x: &[f64], cfg: &AugmentConfig, rng: &mut impl Rng) -> Vec<f64> {
    x.iter()
        .map(|v| {
            let noisy = v + noise(rng, cfg.strong_sigma);
            if cfg.strong_dropout > 0.0 && rng.random::<f64>() < cfg.strong_dropout {
                0.0
            } else {
                noisy
            }
        })
        .collect()
}

fn map_rows(x: ArrayView2<'_, f64>, mut f: impl FnMut(&[f64]) -> Vec<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(x.raw_dim());
    for (src, mut dst) in x.rows().into_iter().zip(out.rows_mut()) {
        let row = src.to_vec();
        dst.iter_mut().zip(f(&row)).for_each(|(d, v)| *d = v);
    }
    out
}

pub fn weak_augment_batch(
    x: ArrayView2<'_, f64>,
    cfg: &AugmentConfig,
    rng: &mut impl Rng,
) -> Array2<f64> {
    map_rows(x, |row| weak_augment(row, cfg, rng))
}

pub fn strong_augment_batch(
    x: ArrayView2<'_, f64>,
    cfg: &AugmentConfig,
    rng: &mut impl Rng,
) -> Array2<f64> {
    map_rows(x, |row| strong_augment(row, cfg, rng))
}
