use serde::{Deserialize, Serialize};

use super::prior::{ClassPrior, PRIOR_EPSILON};
use crate::error::{shape_mismatch, Error, Result};

/// `α_t = 1 − (1 − α_min)·(t / t_total)^d`
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DebiasSchedule {
    pub d: f64,
    pub alpha_min: f64,
    pub t_total: u64,
}

impl Default for DebiasSchedule {
    fn default() -> Self {
        Self {
            d: 2.0,
            alpha_min: 0.1,
            t_total: 20_000,
        }
    }
}

impl DebiasSchedule {
    pub fn validate(&self) -> Result<()> {
        if !(self.d >= 0.0 && self.d.is_finite()) {
            return Err(Error::OutOfRange {
                name: "d",
                value: self.d,
                bounds: "[0, inf)",
            });
        }
        if !(0.0..=1.0).contains(&self.alpha_min) {
            return Err(Error::OutOfRange {
                name: "alpha_min",
                value: self.alpha_min,
                bounds: "[0, 1]",
            });
        }
        if self.t_total == 0 {
            return Err(Error::OutOfRange {
                name: "t_total",
                value: 0.0,
                bounds: "[1, inf)",
            });
        }
        Ok(())
    }

    pub fn alpha(&self, t: u64) -> Result<f64> {
        if t > self.t_total {
            return Err(Error::OutOfRange {
                name: "t",
                value: t as f64,
                bounds: "[0, t_total]",
            });
        }
        if t == self.t_total {
            return Ok(self.alpha_min);
        }
        let progress = t as f64 / self.t_total as f64;
        // 0^0 is taken as 1: with d = 0 the schedule sits at alpha_min throughout.
        Ok(1.0 - (1.0 - self.alpha_min) * progress.powf(self.d))
    }
}

/// `Q̂_α(y) = Q̂(y)^α / Σ_j Q̂(j)^α`, entries clamped at [`PRIOR_EPSILON`].
pub fn smooth_prior(q: &ClassPrior, alpha: f64) -> Result<ClassPrior> {
    if !(0.0..=1.0).contains(&alpha) {
        return Err(Error::OutOfRange {
            name: "alpha",
            value: alpha,
            bounds: "[0, 1]",
        });
    }
    if alpha == 1.0 {
        return Ok(q.clone());
    }
    let logs = q.log_clamped(PRIOR_EPSILON);
    let max = logs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let powered: Vec<f64> = logs.iter().map(|l| (alpha * (l - max)).exp()).collect();
    ClassPrior::from_weights(powered)
}

/// `T = exp(KL(uniform ‖ q))`, with `q` clamped at [`PRIOR_EPSILON`].
pub fn infer_temperature(q: &ClassPrior) -> f64 {
    let uniform = ClassPrior::uniform(q.len());
    uniform.kl_to(q).map(f64::exp).unwrap_or(1.0)
}

/// EMA estimate of the unlabeled class marginal from weak-view predictions.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriorTracker {
    pub estimate: ClassPrior,
    pub beta: f64,
}

impl PriorTracker {
    /// Starts from the uniform prior.
    pub fn new(classes: usize, beta: f64) -> Result<Self> {
        if !(0.0..1.0).contains(&beta) {
            return Err(Error::OutOfRange {
                name: "beta",
                value: beta,
                bounds: "[0, 1)",
            });
        }
        Ok(Self {
            estimate: ClassPrior::uniform(classes),
            beta,
        })
    }

    /// `Q̂ ← β·Q̂ + (1−β)·batch_mean`, renormalized.
    pub fn update(&mut self, batch_mean: &[f64]) -> Result<()> {
        if batch_mean.len() != self.estimate.len() {
            return Err(shape_mismatch(
                format!("{} classes", self.estimate.len()),
                batch_mean.len(),
            ));
        }
        let mixed: Vec<f64> = self
            .estimate
            .probs()
            .iter()
            .zip(batch_mean)
            .map(|(q, m)| self.beta * q + (1.0 - self.beta) * m)
            .collect();
        self.estimate = ClassPrior::from_weights(mixed)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn prior(v: &[f64]) -> ClassPrior {
        ClassPrior::new(v.to_vec()).unwrap()
    }

    #[test]
    fn alpha_examples() {
        let s = DebiasSchedule {
            d: 2.0,
            alpha_min: 0.1,
            t_total: 1000,
        };
        assert_eq!(s.alpha(0).unwrap(), 1.0);
        assert_eq!(s.alpha(1000).unwrap(), 0.1);
        assert!((s.alpha(500).unwrap() - 0.775).abs() < 1e-15);
        assert!(s.alpha(1001).is_err());
    }

    #[test]
    fn alpha_is_nonincreasing() {
        for d in [0.5, 1.0, 2.0, 3.0, 7.5] {
            let s = DebiasSchedule {
                d,
                alpha_min: 0.05,
                t_total: 1000,
            };
            let values: Vec<f64> = (0..=1000).map(|t| s.alpha(t).unwrap()).collect();
            assert!(values.windows(2).all(|w| w[1] <= w[0]));
            assert!(values.iter().all(|a| (0.05..=1.0).contains(a)));
        }
    }

    #[test]
    fn smoothing_examples() {
        let q = prior(&[0.8, 0.2]);
        assert_eq!(smooth_prior(&q, 1.0).unwrap(), q);
        let u = smooth_prior(&q, 0.0).unwrap();
        assert!(u.probs().iter().all(|p| (p - 0.5).abs() < 1e-15));
        let h = smooth_prior(&q, 0.5).unwrap();
        assert!((h.probs()[0] - 2.0 / 3.0).abs() < 1e-12);
        assert!((h.probs()[1] - 1.0 / 3.0).abs() < 1e-12);
    }

    #[test]
    fn temperature_examples() {
        assert!((infer_temperature(&ClassPrior::uniform(7)) - 1.0).abs() < 1e-12);
        assert!((infer_temperature(&prior(&[0.8, 0.2])) - 1.25).abs() < 1e-5);
        let mut v = [0.001 / 9.0; 10];
        v[0] = 0.999;
        let v_sum: f64 = v.iter().sum();
        let skewed = ClassPrior::from_weights(v.iter().map(|x| x / v_sum).collect()).unwrap();
        assert!(infer_temperature(&skewed) > 10.0);
    }

    #[test]
    fn tracker_examples() {
        let mut t = PriorTracker::new(2, 0.0).unwrap();
        t.update(&[0.3, 0.7]).unwrap();
        assert_eq!(t.estimate.probs(), &[0.3, 0.7]);

        let mut t = PriorTracker::new(3, 0.999).unwrap();
        t.update(&[1.0 / 3.0; 3]).unwrap();
        assert!(t
            .estimate
            .probs()
            .iter()
            .all(|p| (p - 1.0 / 3.0).abs() < 1e-15));

        let mut t = PriorTracker::new(2, 0.9).unwrap();
        t.estimate = prior(&[1.0, 0.0]);
        t.update(&[0.0, 1.0]).unwrap();
        assert!((t.estimate.probs()[0] - 0.9).abs() < 1e-15);
        assert!((t.estimate.probs()[1] - 0.1).abs() < 1e-15);

        assert!(PriorTracker::new(2, 1.0).is_err());
    }

    fn simplex(raw: Vec<f64>) -> ClassPrior {
        ClassPrior::from_weights(raw).unwrap()
    }

    proptest! {
        #[test]
        fn smoothing_composes(
            raw in prop::collection::vec(0.01f64..1.0, 2..8),
            a in 0.0f64..=1.0,
            b in 0.0f64..=1.0,
        ) {
            let q = simplex(raw);
            let twice = smooth_prior(&smooth_prior(&q, a).unwrap(), b).unwrap();
            let once = smooth_prior(&q, a * b).unwrap();
            for (x, y) in twice.probs().iter().zip(once.probs()) {
                prop_assert!((x - y).abs() < 1e-9);
            }
        }

        #[test]
        fn smoothing_preserves_ranking(
            raw in prop::collection::vec(0.01f64..1.0, 2..8),
            alpha in 0.0f64..=1.0,
        ) {
            let q = simplex(raw);
            let s = smooth_prior(&q, alpha).unwrap();
            for i in 0..q.len() {
                for j in 0..q.len() {
                    if q.probs()[i] > q.probs()[j] {
                        prop_assert!(s.probs()[i] >= s.probs()[j]);
                    }
                }
            }
        }

        #[test]
        fn temperature_at_least_one(raw in prop::collection::vec(0.001f64..1.0, 2..10)) {
            prop_assert!(infer_temperature(&simplex(raw)) >= 1.0 - 1e-12);
        }

        #[test]
        fn tracker_stays_on_simplex(
            raw in prop::collection::vec(prop::collection::vec(0.0f64..1.0, 4), 1..30),
            beta in 0.0f64..0.9999,
        ) {
            let mut t = PriorTracker::new(4, beta).unwrap();
            for r in raw {
                let s: f64 = r.iter().sum::<f64>() + 1e-12;
                let m: Vec<f64> = r.iter().map(|v| v / s).collect();
                t.update(&m).unwrap();
                prop_assert!((t.estimate.probs().iter().sum::<f64>() - 1.0).abs() < 1e-9);
            }
        }
    }
}
