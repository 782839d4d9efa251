use serde::{Deserialize, Serialize};

use super::{check_training_set, Prediction};
use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::FeatureVector;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct NbConfig {
    pub alpha: f64,
}

impl Default for NbConfig {
    fn default() -> Self {
        NbConfig { alpha: 1.0 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbParameters {
    /// Indexed by label.
    pub log_prior: [f64; 2],
    /// `log_likelihood[label][column]`
    pub log_likelihood: [Vec<f64>; 2],
}

/// Multinomial naive Bayes. Real-valued features (e.g. tf-idf weights) are
/// treated as fractional counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NbModel {
    pub parameters: NbParameters,
    pub config: NbConfig,
}

pub fn train_nb(xs: &[FeatureVector], ys: &[Label], config: &NbConfig) -> Result<NbModel> {
    if !(config.alpha > 0.0 && config.alpha.is_finite()) {
        return Err(Error::Config(format!("alpha must be positive, got {}", config.alpha)));
    }
    let dim = check_training_set(xs, ys)?;
    let alpha = config.alpha;

    let mut term_mass = [vec![0.0; dim], vec![0.0; dim]];
    let mut docs = [0usize; 2];
    for (x, y) in xs.iter().zip(ys) {
        docs[y.index()] += 1;
        for &(col, w) in x.entries() {
            term_mass[y.index()][col] += w;
        }
    }

    let n = xs.len() as f64;
    let log_prior = docs.map(|d| (d as f64 / n).ln());
    let log_likelihood = term_mass.map(|mass| {
        let total: f64 = mass.iter().sum();
        let denom = alpha * dim as f64 + total;
        mass.iter().map(|m| ((alpha + m) / denom).ln()).collect()
    });
    Ok(NbModel {
        parameters: NbParameters {
            log_prior,
            log_likelihood,
        },
        config: config.clone(),
    })
}

impl NbModel {
    pub fn dim(&self) -> usize {
        self.parameters.log_likelihood[0].len()
    }

    pub fn log_joint(&self, x: &FeatureVector, label: Label) -> f64 {
        let c = label.index();
        self.parameters.log_prior[c] + x.dot(&self.parameters.log_likelihood[c])
    }

    /// Score is the log-posterior margin `log P(1|x) - log P(0|x)`.
    pub fn predict(&self, x: &FeatureVector) -> Prediction {
        let score = self.log_joint(x, Label::Target) - self.log_joint(x, Label::Control);
        Prediction::from_margin(score)
    }
}
