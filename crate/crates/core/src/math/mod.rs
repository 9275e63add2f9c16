//! Dense numerical primitives and a small differentiable classifier.
//!
//! Everything needed to train without an autodiff framework: stable
//! softmax/log-softmax, cross-entropy and KL, a one-hidden-layer MLP with
//! an analytic backward pass for temperature-scaled, logit-offset
//! cross-entropy, Nesterov SGD and an EMA shadow copy of the weights.

mod mlp;
mod ops;
mod optim;

pub use mlp::{forward, loss_gradients, Activation, ClassifierState, LossEval, Params};
pub use ops::{argmax, cross_entropy, entropy, kl_divergence, log_softmax, softmax, softmax_rows};
pub use optim::{ema_update, sgd_step, OptimizerConfig};
