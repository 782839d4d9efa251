use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::{check_training_set, Prediction};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;
use crate::rng;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SvmConfig {
    pub lambda: f64,
    pub epochs: usize,
    pub seed: u64,
}

impl Default for SvmConfig {
    fn default() -> Self {
        SvmConfig {
            lambda: 1e-4,
            epochs: 20,
            seed: 0,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmParameters {
    pub weights: Vec<f64>,
    pub bias: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SvmModel {
    pub parameters: SvmParameters,
    pub config: SvmConfig,
}

fn signed(label: Label) -> f64 {
    match label {
        Label::Control => -1.0,
        Label::Target => 1.0,
    }
}

/// `lambda/2 * (|w|^2 + b^2) + mean hinge loss`, labels mapped to -1/+1.
/// The bias is trained as the weight of a constant feature, so it is
/// regularized with the rest. Equals 1 at zero weights.
pub fn svm_objective(weights: &[f64], bias: f64, xs: &[FeatureVector], ys: &[Label], lambda: f64) -> f64 {
    let hinge: f64 = xs
        .iter()
        .zip(ys)
        .map(|(x, y)| (1.0 - signed(*y) * (x.dot(weights) + bias)).max(0.0))
        .sum();
    let sq_norm: f64 = weights.iter().map(|w| w * w).sum::<f64>() + bias * bias;
    0.5 * lambda * sq_norm + hinge / xs.len() as f64
}

/// Weight vector stored as `scale * v` so the per-step shrink is O(1).
struct ScaledWeights {
    v: Vec<f64>,
    scale: f64,
    sq_norm_v: f64,
}

impl ScaledWeights {
    fn new(len: usize) -> Self {
        ScaledWeights { v: vec![0.0; len], scale: 1.0, sq_norm_v: 0.0 }
    }

    fn margin(&self, x: &FeatureVector, bias_col: usize) -> f64 {
        self.scale * (x.dot(&self.v) + self.v[bias_col])
    }

    fn shrink(&mut self, factor: f64) {
        if factor == 0.0 {
            self.v.iter_mut().for_each(|w| *w = 0.0);
            self.scale = 1.0;
            self.sq_norm_v = 0.0;
        } else {
            self.scale *= factor;
        }
    }

    fn add(&mut self, x: &FeatureVector, bias_col: usize, step: f64) {
        let delta = step / self.scale;
        for (col, value) in x.entries().iter().copied().chain([(bias_col, 1.0)]) {
            let old = self.v[col];
            let new = old + delta * value;
            self.sq_norm_v += new * new - old * old;
            self.v[col] = new;
        }
    }

    fn norm(&self) -> f64 {
        self.scale * self.sq_norm_v.max(0.0).sqrt()
    }

    fn renormalize(&mut self) {
        for w in &mut self.v {
            *w *= self.scale;
        }
        self.sq_norm_v = self.v.iter().map(|w| w * w).sum();
        self.scale = 1.0;
    }
}

/// Pegasos: seeded stochastic subgradient descent on the regularized hinge
/// loss with step `1 / (lambda * t)` and projection onto the ball of radius
/// `1 / sqrt(lambda)`.
pub fn train_svm(xs: &[FeatureVector], ys: &[Label], config: &SvmConfig) -> Result<SvmModel> {
    if !(config.lambda > 0.0 && config.lambda.is_finite()) {
        return Err(Error::Config(format!("lambda must be positive, got {}", config.lambda)));
    }
    let dim = check_training_set(xs, ys)?;
    let bias_col = dim;
    let radius = 1.0 / config.lambda.sqrt();
    let mut rng = rng::substream(config.seed, "svm/order");
    let mut order: Vec<usize> = (0..xs.len()).collect();
    let mut w = ScaledWeights::new(dim + 1);

    let mut step = 0usize;
    for _ in 0..config.epochs {
        order.shuffle(&mut rng);
        for &i in &order {
            step += 1;
            let eta = 1.0 / (config.lambda * step as f64);
            let y = signed(ys[i]);
            let margin = y * w.margin(&xs[i], bias_col);
            w.shrink(1.0 - eta * config.lambda);
            if margin < 1.0 {
                w.add(&xs[i], bias_col, eta * y);
            }
            let norm = w.norm();
            if norm > radius {
                w.shrink(radius / norm);
            }
            if w.scale < 1e-100 || w.scale > 1e100 {
                w.renormalize();
            }
            if !w.scale.is_finite() || !w.sq_norm_v.is_finite() {
                return Err(Error::NonFinite { step });
            }
        }
    }

    w.renormalize();
    if w.v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { step });
    }
    let bias = w.v.pop().expect("bias column");
    Ok(SvmModel {
        parameters: SvmParameters { weights: w.v, bias },
        config: config.clone(),
    })
}

impl SvmModel {
    pub fn dim(&self) -> usize {
        self.parameters.weights.len()
    }

    /// Score is the signed margin `w.x + b`.
    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        Prediction::from_margin(x.dot(&self.parameters.weights) + self.parameters.bias)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn separable() -> (Vec<FeatureVector>, Vec<Label>) {
        (
            vec![FeatureVector::dense(&[1.0]), FeatureVector::dense(&[-1.0])],
            vec![Label::Target, Label::Control],
        )
    }

    #[test]
    fn separable_pair() {
        let (xs, ys) = separable();
        let m = train_svm(&xs, &ys, &SvmConfig::default()).unwrap();
        let (p, q) = (m.predict(&xs[0]), m.predict(&xs[1]));
        assert_eq!((p.label, q.label), (Label::Target, Label::Control));
        assert!(p.score > 0.0 && q.score < 0.0);
    }

    #[test]
    fn deterministic_under_seed() {
        let xs: Vec<_> = (0..40)
            .map(|i| FeatureVector::dense(&[(i % 7) as f64 / 7.0, (i % 3) as f64, ((i * 5) % 11) as f64 / 11.0]))
            .collect();
        let ys: Vec<_> = (0..40).map(|i| if i % 7 > 3 { Label::Target } else { Label::Control }).collect();
        let cfg = SvmConfig { seed: 42, ..Default::default() };
        let a = train_svm(&xs, &ys, &cfg).unwrap();
        let b = train_svm(&xs, &ys, &cfg).unwrap();
        let bits = |m: &SvmModel| m.parameters.weights.iter().map(|w| w.to_bits()).collect::<Vec<_>>();
        assert_eq!(bits(&a), bits(&b));
        assert_eq!(a.parameters.bias.to_bits(), b.parameters.bias.to_bits());
    }

    #[test]
    fn objective_improves_on_zero() {
        let (xs, ys) = separable();
        let cfg = SvmConfig::default();
        assert_eq!(svm_objective(&[0.0], 0.0, &xs, &ys, cfg.lambda), 1.0);
        let m = train_svm(&xs, &ys, &cfg).unwrap();
        let trained = svm_objective(&m.parameters.weights, m.parameters.bias, &xs, &ys, cfg.lambda);
        assert!(trained <= 1.0, "{trained}");
    }

    #[test]
    fn zero_model_ties_to_control() {
        let m = SvmModel {
            parameters: SvmParameters { weights: vec![0.0], bias: 0.0 },
            config: SvmConfig::default(),
        };
        let p = m.predict(&FeatureVector::dense(&[3.0]));
        assert_eq!((p.label, p.score), (Label::Control, 0.0));
    }

    #[test]
    fn weights_stay_in_the_projection_ball() {
        let (xs, ys) = separable();
        let cfg = SvmConfig { lambda: 0.5, ..Default::default() };
        let m = train_svm(&xs, &ys, &cfg).unwrap();
        let norm = (m.parameters.weights[0].powi(2) + m.parameters.bias.powi(2)).sqrt();
        assert!(norm <= 1.0 / cfg.lambda.sqrt() + 1e-12);
    }
}
