use ndarray::{Array2, ArrayView2, Axis};

use crate::error::{shape_mismatch, Error, Result};

fn check_logits(logits: &[f64]) -> Result<()> {
    if logits.iter().all(|v| v.is_finite()) {
        Ok(())
    } else {
        Err(Error::NonFiniteLogits)
    }
}

fn check_temperature(temperature: f64) -> Result<()> {
    if temperature > 0.0 && temperature.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidTemperature(temperature))
    }
}

/// Log-softmax of `logits / temperature`, max-shifted.
pub fn log_softmax(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    check_logits(logits)?;
    check_temperature(temperature)?;
    if logits.is_empty() {
        return Err(Error::EmptyInput("logits"));
    }
    let scaled: Vec<f64> = logits.iter().map(|z| z / temperature).collect();
    let max = scaled.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let lse = max + scaled.iter().map(|z| (z - max).exp()).sum::<f64>().ln();
    Ok(scaled.into_iter().map(|z| z - lse).collect())
}

/// `σ(logits / temperature)`.
pub fn softmax(logits: &[f64], temperature: f64) -> Result<Vec<f64>> {
    check_logits(logits)?;
    check_temperature(temperature)?;
    if logits.is_empty() {
        return Err(Error::EmptyInput("logits"));
    }
    let max = logits.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut out: Vec<f64> = logits
        .iter()
        .map(|z| ((z - max) / temperature).exp())
        .collect();
    let sum: f64 = out.iter().sum();
    out.iter_mut().for_each(|p| *p /= sum);
    Ok(out)
}

/// Row-wise softmax of a logit matrix.
pub fn softmax_rows(logits: ArrayView2<'_, f64>, temperature: f64) -> Result<Array2<f64>> {
    let mut out = Array2::zeros(logits.raw_dim());
    for (src, mut dst) in logits.axis_iter(Axis(0)).zip(out.axis_iter_mut(Axis(0))) {
        let row = src.to_vec();
        let probs = softmax(&row, temperature)?;
        dst.iter_mut().zip(probs).for_each(|(d, p)| *d = p);
    }
    Ok(out)
}

/// `H(target, σ(logits)) = -Σ target_k log σ(logits)_k`.
pub fn cross_entropy(target: &[f64], logits: &[f64]) -> Result<f64> {
    if target.len() != logits.len() {
        return Err(shape_mismatch(
            format!("{} logits", target.len()),
            logits.len(),
        ));
    }
    let logp = log_softmax(logits, 1.0)?;
    Ok(target
        .iter()
        .zip(&logp)
        .filter(|(t, _)| **t > 0.0)
        .map(|(t, lp)| -t * lp)
        .sum())
}

/// Shannon entropy with `0 log 0 = 0`.
pub fn entropy(p: &[f64]) -> f64 {
    p.iter().filter(|v| **v > 0.0).map(|v| -v * v.ln()).sum()
}

/// `KL(p ‖ q) = Σ p_k log(p_k / max(q_k, ε))`, with `0 log 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64], epsilon: f64) -> Result<f64> {
    if p.len() != q.len() {
        return Err(shape_mismatch(format!("{} entries", p.len()), q.len()));
    }
    Ok(p.iter()
        .zip(q)
        .filter(|(pk, _)| **pk > 0.0)
        .map(|(pk, qk)| pk * (pk / qk.max(epsilon)).ln())
        .sum())
}

/// Index of the largest entry; ties go to the lowest index.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, v) in values.iter().enumerate().skip(1) {
        if *v > values[best] {
            best = i;
        }
    }
    best
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn softmax_examples() {
        let p = softmax(&[0.0, 0.0, 0.0], 1.0).unwrap();
        for v in &p {
            assert!((v - 1.0 / 3.0).abs() < 1e-15);
        }
        let p = softmax(&[2f64.ln(), 0.0], 1.0).unwrap();
        assert!((p[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((p[1] - 1.0 / 3.0).abs() < 1e-12);
        let p = softmax(&[10.0, 0.0], 1e6).unwrap();
        assert!((p[0] - 0.5).abs() < 1e-5 && (p[1] - 0.5).abs() < 1e-5);
    }

    #[test]
    fn softmax_errors() {
        assert!(matches!(
            softmax(&[f64::NAN, 0.0], 1.0),
            Err(Error::NonFiniteLogits)
        ));
        assert!(matches!(
            softmax(&[1.0, 0.0], 0.0),
            Err(Error::InvalidTemperature(_))
        ));
        assert!(matches!(
            softmax(&[1.0, 0.0], -2.0),
            Err(Error::InvalidTemperature(_))
        ));
        assert_eq!(Error::NonFiniteLogits.to_string(), "non-finite logits");
    }

    #[test]
    fn cross_entropy_examples() {
        assert!(cross_entropy(&[1.0, 0.0, 0.0], &[1e9, 0.0, 0.0]).unwrap() < 1e-12);
        let ln2 = 2f64.ln();
        assert!((cross_entropy(&[0.5, 0.5], &[0.0, 0.0]).unwrap() - ln2).abs() < 1e-15);
        assert!((cross_entropy(&[0.0, 1.0], &[0.0, 0.0]).unwrap() - ln2).abs() < 1e-15);
        assert!(cross_entropy(&[1.0], &[0.0, 0.0]).is_err());
    }

    #[test]
    fn kl_examples() {
        let u = [0.25; 4];
        assert_eq!(kl_divergence(&u, &u, 1e-8).unwrap(), 0.0);
        let kl = kl_divergence(&[0.5, 0.5], &[0.8, 0.2], 1e-8).unwrap();
        let hand = 0.5 * (0.5f64 / 0.8).ln() + 0.5 * (0.5f64 / 0.2).ln();
        assert!((kl - hand).abs() < 1e-15);
        assert!((kl - 0.22314).abs() < 1e-5);

        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..100 {
            let k = rng.random_range(2..8);
            let p = random_simplex(&mut rng, k);
            let q = random_simplex(&mut rng, k);
            assert!(kl_divergence(&p, &q, 1e-8).unwrap() >= 0.0);
        }
    }

    fn random_simplex(rng: &mut impl Rng, k: usize) -> Vec<f64> {
        let raw: Vec<f64> = (0..k).map(|_| rng.random::<f64>() + 1e-3).collect();
        let s: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v / s).collect()
    }

    #[test]
    fn argmax_breaks_ties_low() {
        assert_eq!(argmax(&[0.2, 0.4, 0.4]), 1);
        assert_eq!(argmax(&[1.0, 1.0]), 0);
    }

    proptest! {
        #[test]
        fn softmax_is_normalized_and_shift_invariant(
            logits in prop::collection::vec(-50.0f64..50.0, 2..10),
            shift in -100.0f64..100.0,
            t in 0.05f64..20.0,
        ) {
            let p = softmax(&logits, t).unwrap();
            prop_assert!((p.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            prop_assert!(p.iter().all(|v| *v >= 0.0));
            let shifted: Vec<f64> = logits.iter().map(|z| z + shift).collect();
            let q = softmax(&shifted, t).unwrap();
            for (a, b) in p.iter().zip(&q) {
                prop_assert!((a - b).abs() < 1e-9);
            }
        }

        #[test]
        fn cross_entropy_dominates_entropy(
            raw in prop::collection::vec(0.0f64..1.0, 2..8),
            logits_seed in prop::collection::vec(-20.0f64..20.0, 8),
        ) {
            let s: f64 = raw.iter().sum::<f64>() + 1e-12;
            let target: Vec<f64> = raw.iter().map(|v| v / s).collect();
            let logits = &logits_seed[..target.len()];
            let ce = cross_entropy(&target, logits).unwrap();
            prop_assert!(ce >= entropy(&target) - 1e-9);
        }
    }
}
