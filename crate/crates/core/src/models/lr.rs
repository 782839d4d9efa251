use serde::{Deserialize, Serialize};

use super::{check_training_set, Prediction};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct LrConfig {
    pub learning_rate: f64,
    pub epochs: usize,
    /// L2 strength; the bias is not penalized.
    pub lambda: f64,
    /// Stop once an epoch improves the loss by less than this.
    pub tolerance: f64,
}

impl Default for LrConfig {
    fn default() -> Self {
        LrConfig {
            learning_rate: 0.1,
            epochs: 1000,
            lambda: 1e-4,
            tolerance: 1e-7,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrParameters {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub epochs_run: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LrModel {
    pub parameters: LrParameters,
    pub config: LrConfig,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// `ln(1 + e^z)` without overflow.
fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Regularized mean logistic loss and its gradient.
#[derive(Clone, Debug, PartialEq)]
pub struct LogisticObjective {
    pub loss: f64,
    pub grad_weights: Vec<f64>,
    pub grad_bias: f64,
}

pub fn logistic_objective(weights: &[f64], bias: f64, xs: &[FeatureVector], ys: &[Label], lambda: f64) -> LogisticObjective {
    let n = xs.len() as f64;
    let mut loss = 0.0;
    let mut grad_weights = vec![0.0; weights.len()];
    let mut grad_bias = 0.0;
    for (x, y) in xs.iter().zip(ys) {
        let z = x.dot(weights) + bias;
        let target = y.as_u8() as f64;
        loss += softplus(z) - target * z;
        let residual = sigmoid(z) - target;
        grad_bias += residual;
        for &(col, v) in x.entries() {
            grad_weights[col] += residual * v;
        }
    }
    let sq_norm: f64 = weights.iter().map(|w| w * w).sum();
    for (g, w) in grad_weights.iter_mut().zip(weights) {
        *g = *g / n + lambda * w;
    }
    LogisticObjective {
        loss: loss / n + 0.5 * lambda * sq_norm,
        grad_weights,
        grad_bias: grad_bias / n,
    }
}

pub fn train_lr(xs: &[FeatureVector], ys: &[Label], config: &LrConfig) -> Result<LrModel> {
    train_lr_traced(xs, ys, config).map(|(model, _)| model)
}

/// Full-batch gradient descent from zero weights. Also returns the loss
/// before the first step and after every epoch.
pub fn train_lr_traced(xs: &[FeatureVector], ys: &[Label], config: &LrConfig) -> Result<(LrModel, Vec<f64>)> {
    if !(config.learning_rate > 0.0 && config.learning_rate.is_finite()) {
        return Err(Error::Config(format!("learning_rate must be positive, got {}", config.learning_rate)));
    }
    if !(config.lambda >= 0.0) {
        return Err(Error::Config(format!("lambda must be non-negative, got {}", config.lambda)));
    }
    let dim = check_training_set(xs, ys)?;

    let mut weights = vec![0.0; dim];
    let mut bias = 0.0;
    let mut current = logistic_objective(&weights, bias, xs, ys, config.lambda);
    let mut history = vec![current.loss];
    let mut epochs_run = 0;
    for epoch in 1..=config.epochs {
        for (w, g) in weights.iter_mut().zip(&current.grad_weights) {
            *w -= config.learning_rate * g;
        }
        bias -= config.learning_rate * current.grad_bias;
        let next = logistic_objective(&weights, bias, xs, ys, config.lambda);
        if !next.loss.is_finite() || weights.iter().any(|w| !w.is_finite()) {
            return Err(Error::Divergence { epoch });
        }
        epochs_run = epoch;
        let improvement = current.loss - next.loss;
        history.push(next.loss);
        current = next;
        if improvement < config.tolerance {
            break;
        }
    }
    Ok((
        LrModel {
            parameters: LrParameters {
                weights,
                bias,
                epochs_run,
            },
            config: config.clone(),
        },
        history,
    ))
}

impl LrModel {
    pub fn dim(&self) -> usize {
        self.parameters.weights.len()
    }

    /// Score is P(label 1 | x); label 1 iff the score exceeds 0.5.
    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        let score = sigmoid(x.dot(&self.parameters.weights) + self.parameters.bias);
        Prediction {
            label: if score > 0.5 { Label::Target } else { Label::Control },
            score,
        }
    }
}
