use ndarray::{Array1, Array2, ArrayView2, Axis, Zip};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{shape_mismatch, Error, Result};

/// Hidden-layer nonlinearity.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Activation {
    #[default]
    Tanh,
    Softplus,
    /// Linear hidden layer; mostly useful for tests.
    Identity,
}

impl Activation {
    fn apply(self, x: f64) -> f64 {
        match self {
            Activation::Tanh => x.tanh(),
            Activation::Softplus => {
                if x > 30.0 {
                    x
                } else {
                    x.exp().ln_1p()
                }
            }
            Activation::Identity => x,
        }
    }

    /// Derivative expressed through the pre-activation.
    fn derivative(self, pre: f64, post: f64) -> f64 {
        match self {
            Activation::Tanh => 1.0 - post * post,
            Activation::Softplus => 1.0 / (1.0 + (-pre).exp()),
            Activation::Identity => 1.0,
        }
    }
}

/// Parameters of a `D -> H -> K` perceptron. Also used for gradients,
/// momentum buffers and the EMA shadow, which all share this shape.
#[derive(Debug, Clone, PartialEq)]
pub struct Params {
    /// `H x D`
    pub w1: Array2<f64>,
    pub b1: Array1<f64>,
    /// `K x H`
    pub w2: Array2<f64>,
    pub b2: Array1<f64>,
}

impl Params {
    pub fn zeros(input: usize, hidden: usize, classes: usize) -> Self {
        Self {
            w1: Array2::zeros((hidden, input)),
            b1: Array1::zeros(hidden),
            w2: Array2::zeros((classes, hidden)),
            b2: Array1::zeros(classes),
        }
    }

    /// Uniform `[-1/sqrt(fan_in), 1/sqrt(fan_in)]` weights, zero biases.
    pub fn init(input: usize, hidden: usize, classes: usize, rng: &mut impl Rng) -> Self {
        let mut p = Self::zeros(input, hidden, classes);
        let s1 = 1.0 / (input as f64).sqrt();
        p.w1.iter_mut()
            .for_each(|w| *w = rng.random_range(-s1..=s1));
        let s2 = 1.0 / (hidden as f64).sqrt();
        p.w2.iter_mut()
            .for_each(|w| *w = rng.random_range(-s2..=s2));
        p
    }

    pub fn zeros_like(&self) -> Self {
        Self::zeros(self.input_dim(), self.hidden_dim(), self.classes())
    }

    pub fn input_dim(&self) -> usize {
        self.w1.ncols()
    }

    pub fn hidden_dim(&self) -> usize {
        self.w1.nrows()
    }

    pub fn classes(&self) -> usize {
        self.w2.nrows()
    }

    pub fn same_shape(&self, other: &Params) -> bool {
        self.w1.dim() == other.w1.dim()
            && self.b1.dim() == other.b1.dim()
            && self.w2.dim() == other.w2.dim()
            && self.b2.dim() == other.b2.dim()
    }

    pub fn len(&self) -> usize {
        self.w1.len() + self.b1.len() + self.w2.len() + self.b2.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat view in `w1, b1, w2, b2` order, tagged with whether each entry is
    /// a weight (as opposed to a bias).
    pub fn iter(&self) -> impl Iterator<Item = (f64, bool)> + '_ {
        self.w1
            .iter()
            .map(|v| (*v, true))
            .chain(self.b1.iter().map(|v| (*v, false)))
            .chain(self.w2.iter().map(|v| (*v, true)))
            .chain(self.b2.iter().map(|v| (*v, false)))
    }

    pub fn iter_mut(&mut self) -> impl Iterator<Item = (&mut f64, bool)> + '_ {
        self.w1
            .iter_mut()
            .map(|v| (v, true))
            .chain(self.b1.iter_mut().map(|v| (v, false)))
            .chain(self.w2.iter_mut().map(|v| (v, true)))
            .chain(self.b2.iter_mut().map(|v| (v, false)))
    }

    /// `self += scale * other`
    pub fn add_scaled(&mut self, other: &Params, scale: f64) {
        self.w1.scaled_add(scale, &other.w1);
        self.b1.scaled_add(scale, &other.b1);
        self.w2.scaled_add(scale, &other.w2);
        self.b2.scaled_add(scale, &other.b2);
    }

    pub fn is_finite(&self) -> bool {
        self.iter().all(|(v, _)| v.is_finite())
    }
}

/// Live parameters plus optimizer and EMA state.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierState {
    pub params: Params,
    pub velocity: Params,
    pub shadow: Params,
    pub step: u64,
    pub activation: Activation,
}

impl ClassifierState {
    pub fn new(
        input: usize,
        hidden: usize,
        classes: usize,
        activation: Activation,
        rng: &mut impl Rng,
    ) -> Self {
        Self::from_params(Params::init(input, hidden, classes, rng), activation)
    }

    /// Wraps existing parameters; the shadow starts equal to them.
    pub fn from_params(params: Params, activation: Activation) -> Self {
        Self {
            velocity: params.zeros_like(),
            shadow: params.clone(),
            params,
            step: 0,
            activation,
        }
    }

    pub fn logits(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        forward(&self.params, self.activation, features)
    }

    pub fn shadow_logits(&self, features: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        forward(&self.shadow, self.activation, features)
    }
}

struct Activations {
    pre: Array2<f64>,
    hidden: Array2<f64>,
    logits: Array2<f64>,
}

fn forward_full(
    params: &Params,
    activation: Activation,
    features: ArrayView2<'_, f64>,
) -> Result<Activations> {
    if features.ncols() != params.input_dim() {
        return Err(shape_mismatch(
            format!("{} feature columns", params.input_dim()),
            features.ncols(),
        ));
    }
    let pre = features.dot(&params.w1.t()) + &params.b1;
    let hidden = pre.mapv(|x| activation.apply(x));
    let logits = hidden.dot(&params.w2.t()) + &params.b2;
    Ok(Activations {
        pre,
        hidden,
        logits,
    })
}

/// Logits for a `B x D` feature batch.
pub fn forward(
    params: &Params,
    activation: Activation,
    features: ArrayView2<'_, f64>,
) -> Result<Array2<f64>> {
    forward_full(params, activation, features).map(|a| a.logits)
}

/// Loss value, parameter gradients, and the gradient with respect to the
/// raw logits `f(x)` (before offset and temperature).
#[derive(Debug, Clone)]
pub struct LossEval {
    pub loss: f64,
    pub grads: Params,
    pub logit_grads: Array2<f64>,
}

/// Weighted, temperature-scaled, logit-offset cross-entropy and its exact
/// gradient:
///
/// ```text
/// L = 1/B Σ_b w_b · H(target_b, σ((f(x_b) + offset_b) / T))
/// ∂L/∂f_b = w_b · (σ((f_b + offset_b)/T) − target_b) / (T·B)
/// ```
///
/// Rows with zero weight are skipped entirely.
pub fn loss_gradients(
    params: &Params,
    activation: Activation,
    features: ArrayView2<'_, f64>,
    targets: ArrayView2<'_, f64>,
    offsets: ArrayView2<'_, f64>,
    weights: &[f64],
    temperature: f64,
) -> Result<LossEval> {
    let batch = features.nrows();
    let classes = params.classes();
    let expected = (batch, classes);
    if targets.dim() != expected {
        return Err(shape_mismatch(
            format!("targets {expected:?}"),
            format!("{:?}", targets.dim()),
        ));
    }
    if offsets.dim() != expected {
        return Err(shape_mismatch(
            format!("offsets {expected:?}"),
            format!("{:?}", offsets.dim()),
        ));
    }
    if weights.len() != batch {
        return Err(shape_mismatch(format!("{batch} weights"), weights.len()));
    }
    if !(temperature > 0.0 && temperature.is_finite()) {
        return Err(Error::InvalidTemperature(temperature));
    }
    if batch == 0 {
        return Ok(LossEval {
            loss: 0.0,
            grads: params.zeros_like(),
            logit_grads: Array2::zeros((0, classes)),
        });
    }

    let acts = forward_full(params, activation, features)?;
    let scale = 1.0 / (temperature * batch as f64);
    let mut logit_grads = Array2::<f64>::zeros((batch, classes));
    let mut total = 0.0;
    let mut z = vec![0.0; classes];

    for (b, &w) in weights.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let logits = acts.logits.row(b);
        let offset = offsets.row(b);
        let target = targets.row(b);
        for k in 0..classes {
            z[k] = (logits[k] + offset[k]) / temperature;
        }
        let max = z.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let sum_exp: f64 = z.iter().map(|v| (v - max).exp()).sum();
        let lse = max + sum_exp.ln();
        let mut row_loss = 0.0;
        let mut grad_row = logit_grads.row_mut(b);
        for k in 0..classes {
            let logp = z[k] - lse;
            if target[k] > 0.0 {
                row_loss -= target[k] * logp;
            }
            grad_row[k] = w * (logp.exp() - target[k]) * scale;
        }
        total += w * row_loss;
    }
    let loss = total / batch as f64;
    if !loss.is_finite() || logit_grads.iter().any(|g| !g.is_finite()) {
        return Err(Error::NumericalOverflow("loss_gradients"));
    }

    let grads = backward(params, activation, features, &acts, &logit_grads);
    Ok(LossEval {
        loss,
        grads,
        logit_grads,
    })
}

fn backward(
    params: &Params,
    activation: Activation,
    features: ArrayView2<'_, f64>,
    acts: &Activations,
    logit_grads: &Array2<f64>,
) -> Params {
    let w2 = logit_grads.t().dot(&acts.hidden);
    let b2 = logit_grads.sum_axis(Axis(0));
    let mut d_pre = logit_grads.dot(&params.w2);
    Zip::from(&mut d_pre)
        .and(&acts.pre)
        .and(&acts.hidden)
        .for_each(|g, &pre, &post| *g *= activation.derivative(pre, post));
    let w1 = d_pre.t().dot(&features);
    let b1 = d_pre.sum_axis(Axis(0));
    Params { w1, b1, w2, b2 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::softmax_rows;
    use ndarray::{array, s};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn zero_params_give_zero_logits() {
        let p = Params::zeros(3, 4, 5);
        let x = array![[1.0, -2.0, 3.0], [0.5, 0.5, 0.5]];
        let out = forward(&p, Activation::Tanh, x.view()).unwrap();
        assert!(out.iter().all(|v| *v == 0.0));
    }

    #[test]
    fn identity_path_forwards_input() {
        let mut p = Params::zeros(1, 1, 1);
        p.w1[[0, 0]] = 1.0;
        p.w2[[0, 0]] = 1.0;
        let x = array![[1.0]];
        let out = forward(&p, Activation::Identity, x.view()).unwrap();
        assert_eq!(out[[0, 0]], 1.0);
    }

    #[test]
    fn batch_matches_single_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let p = Params::init(3, 6, 4, &mut rng);
        let x = array![[0.3, -1.0, 2.0], [1.5, 0.2, -0.7]];
        let both = forward(&p, Activation::Tanh, x.view()).unwrap();
        for r in 0..2 {
            let single = forward(&p, Activation::Tanh, x.slice(s![r..r + 1, ..])).unwrap();
            assert_eq!(single.row(0), both.row(r));
        }
    }

    #[test]
    fn forward_rejects_wrong_dim() {
        let p = Params::zeros(3, 4, 5);
        let x = array![[1.0, 2.0]];
        assert!(matches!(
            forward(&p, Activation::Tanh, x.view()),
            Err(Error::ShapeMismatch { .. })
        ));
    }

    #[test]
    fn shadow_starts_equal_to_live() {
        let mut rng = ChaCha8Rng::seed_from_u64(9);
        let s = ClassifierState::new(2, 8, 3, Activation::Tanh, &mut rng);
        assert_eq!(s.params, s.shadow);
        assert!(s.shadow.same_shape(&s.params));
        assert_eq!(s.step, 0);
    }

    #[test]
    fn zero_weights_zero_everything() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let p = Params::init(2, 3, 3, &mut rng);
        let x = array![[1.0, 2.0], [-1.0, 0.5]];
        let t = array![[1.0, 0.0, 0.0], [0.0, 0.0, 1.0]];
        let off = Array2::zeros((2, 3));
        let ev = loss_gradients(
            &p,
            Activation::Tanh,
            x.view(),
            t.view(),
            off.view(),
            &[0.0, 0.0],
            1.0,
        )
        .unwrap();
        assert_eq!(ev.loss, 0.0);
        assert!(ev.grads.iter().all(|(g, _)| g == 0.0));
    }

    #[test]
    fn own_prediction_is_a_fixed_point() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let p = Params::init(2, 5, 4, &mut rng);
        let x = array![[0.4, -0.3], [1.2, 0.9], [-0.6, 2.0]];
        let logits = forward(&p, Activation::Tanh, x.view()).unwrap();
        let t = softmax_rows(logits.view(), 1.0).unwrap();
        let off = Array2::zeros((3, 4));
        let ev = loss_gradients(
            &p,
            Activation::Tanh,
            x.view(),
            t.view(),
            off.view(),
            &[1.0; 3],
            1.0,
        )
        .unwrap();
        assert!(ev.logit_grads.iter().all(|g| g.abs() < 1e-15));
    }

    #[test]
    fn bad_temperature_is_rejected() {
        let p = Params::zeros(2, 2, 2);
        let x = array![[1.0, 2.0]];
        let t = array![[1.0, 0.0]];
        let off = Array2::zeros((1, 2));
        assert!(matches!(
            loss_gradients(
                &p,
                Activation::Tanh,
                x.view(),
                t.view(),
                off.view(),
                &[1.0],
                0.0
            ),
            Err(Error::InvalidTemperature(_))
        ));
    }

    #[test]
    fn overflow_is_reported() {
        let mut p = Params::zeros(1, 1, 2);
        p.b2[0] = f64::MAX;
        p.b2[1] = -f64::MAX;
        let x = array![[1.0]];
        let t = array![[0.0, 1.0]];
        let off = array![[f64::MAX, 0.0]];
        assert!(loss_gradients(
            &p,
            Activation::Tanh,
            x.view(),
            t.view(),
            off.view(),
            &[1.0],
            1.0
        )
        .is_err());
    }
}
