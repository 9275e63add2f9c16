use serde::{Deserialize, Serialize};

use super::mlp::{ClassifierState, Params};
use crate::error::{shape_mismatch, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OptimizerConfig {
    pub learning_rate: f64,
    pub momentum: f64,
    /// L2 coefficient, applied to weight matrices only (not biases).
    pub weight_decay: f64,
    pub ema_decay: f64,
}

impl Default for OptimizerConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.03,
            momentum: 0.9,
            weight_decay: 5e-4,
            ema_decay: 0.999,
        }
    }
}

impl OptimizerConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::OutOfRange {
                name: "learning_rate",
                value: self.learning_rate,
                bounds: "(0, inf)",
            });
        }
        if !(0.0..1.0).contains(&self.momentum) {
            return Err(Error::OutOfRange {
                name: "momentum",
                value: self.momentum,
                bounds: "[0, 1)",
            });
        }
        if !(self.weight_decay >= 0.0 && self.weight_decay.is_finite()) {
            return Err(Error::OutOfRange {
                name: "weight_decay",
                value: self.weight_decay,
                bounds: "[0, inf)",
            });
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return Err(Error::OutOfRange {
                name: "ema_decay",
                value: self.ema_decay,
                bounds: "[0, 1)",
            });
        }
        Ok(())
    }
}

/// One Nesterov SGD step (PyTorch convention):
///
/// ```text
/// g ← g + λ·w          (weights only)
/// v ← μ·v + g
/// w ← w − lr·(g + μ·v)
/// ```
pub fn sgd_step(
    state: &mut ClassifierState,
    grads: &Params,
    config: &OptimizerConfig,
) -> Result<()> {
    if !state.params.same_shape(grads) {
        return Err(shape_mismatch(
            "gradients shaped like parameters",
            "different shape",
        ));
    }
    let mu = config.momentum;
    let params = state.params.iter_mut();
    let velocity = state.velocity.iter_mut();
    for (((w, is_weight), (v, _)), (g, _)) in params.zip(velocity).zip(grads.iter()) {
        let g = if is_weight {
            g + config.weight_decay * *w
        } else {
            g
        };
        *v = mu * *v + g;
        *w -= config.learning_rate * (g + mu * *v);
    }
    state.step += 1;
    Ok(())
}

/// `shadow ← decay·shadow + (1 − decay)·live`
pub fn ema_update(state: &mut ClassifierState, decay: f64) {
    let live = &state.params;
    for ((s, _), (l, _)) in state.shadow.iter_mut().zip(live.iter()) {
        *s = decay * *s + (1.0 - decay) * l;
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Activation;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn state() -> ClassifierState {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        ClassifierState::new(2, 3, 2, Activation::Tanh, &mut rng)
    }

    fn filled(like: &Params, v: f64) -> Params {
        let mut p = like.zeros_like();
        p.iter_mut().for_each(|(x, _)| *x = v);
        p
    }

    #[test]
    fn zero_gradient_no_decay_is_noop() {
        let mut s = state();
        let before = s.params.clone();
        let cfg = OptimizerConfig {
            weight_decay: 0.0,
            ..Default::default()
        };
        let g = s.params.zeros_like();
        sgd_step(&mut s, &g, &cfg).unwrap();
        assert_eq!(s.params, before);
        assert_eq!(s.step, 1);
    }

    #[test]
    fn vanilla_step_subtracts_gradient() {
        let mut s = state();
        let before = s.params.clone();
        let cfg = OptimizerConfig {
            learning_rate: 1.0,
            momentum: 0.0,
            weight_decay: 0.01,
            ema_decay: 0.0,
        };
        let g = filled(&s.params, 0.5);
        sgd_step(&mut s, &g, &cfg).unwrap();
        for ((after, is_w), (b, _)) in s.params.iter().zip(before.iter()) {
            let decay = if is_w { 0.01 * b } else { 0.0 };
            assert!((after - (b - 0.5 - decay)).abs() < 1e-15);
        }
    }

    #[test]
    fn nesterov_two_steps_match_unrolled_recurrence() {
        let mut s = state();
        let before = s.params.clone();
        let cfg = OptimizerConfig {
            learning_rate: 0.1,
            momentum: 0.9,
            weight_decay: 0.0,
            ema_decay: 0.0,
        };
        let g = filled(&s.params, 1.0);
        sgd_step(&mut s, &g, &cfg).unwrap();
        sgd_step(&mut s, &g, &cfg).unwrap();
        // v1 = g, step1 = g + 0.9 g = 1.9 g; v2 = 1.9 g, step2 = g + 0.9*1.9 g = 2.71 g
        let expected = 0.1 * (1.9 + 2.71);
        for ((a, _), (b, _)) in s.params.iter().zip(before.iter()) {
            assert!((b - a - expected).abs() < 1e-12);
        }
        assert_eq!(s.step, 2);
    }

    #[test]
    fn ema_examples() {
        let mut s = state();
        s.shadow = s.params.zeros_like();
        ema_update(&mut s, 0.0);
        assert_eq!(s.shadow, s.params);

        s.params = filled(&s.params, 1.0);
        s.shadow = s.params.zeros_like();
        ema_update(&mut s, 0.999);
        for (v, _) in s.shadow.iter() {
            assert!((v - 0.001).abs() < 1e-15);
        }
        for _ in 0..20_000 {
            ema_update(&mut s, 0.999);
        }
        assert!(s.shadow.iter().all(|(v, _)| (v - 1.0).abs() < 1e-8));
    }

    #[test]
    fn ema_is_a_contraction() {
        let mut s = state();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        s.shadow = Params::init(2, 3, 2, &mut rng);
        let gap_before: Vec<f64> = s
            .shadow
            .iter()
            .zip(s.params.iter())
            .map(|(a, b)| (a.0 - b.0).abs())
            .collect();
        ema_update(&mut s, 0.7);
        for ((sh, _), ((l, _), g0)) in s.shadow.iter().zip(s.params.iter().zip(gap_before)) {
            assert!((sh - l).abs() <= 0.7 * g0 + 1e-15);
        }
    }

    #[test]
    fn config_validation() {
        assert!(OptimizerConfig::default().validate().is_ok());
        let bad = OptimizerConfig {
            learning_rate: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}
