//! Shallow classifiers (naive Bayes, logistic regression, linear SVM) and the
//! bridge to external classifiers.

mod external;
mod lr;
mod nb;
mod svm;

use std::path::Path;

use serde::{Deserialize, Serialize};

pub use external::{predict_external, AdapterClient, AdapterInfo, ExternalClassifierHandle, Transport};
pub use lr::{logistic_objective, sigmoid, train_lr, train_lr_traced, LogisticObjective, LrConfig, LrModel, LrParameters};
pub use nb::{train_nb, NbConfig, NbModel, NbParameters};
pub use svm::{svm_objective, train_svm, SvmConfig, SvmModel, SvmParameters};

use crate::corpus::Label;
use crate::error::{Error, Result};
use crate::features::{FeatureSpace, FeatureVector};
use crate::rng::sha256_hex;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Prediction {
    pub label: Label,
    pub score: f64,
}

impl Prediction {
    /// Label 1 iff the margin is strictly positive.
    pub(crate) fn from_margin(score: f64) -> Self {
        Prediction {
            label: if score > 0.0 { Label::Target } else { Label::Control },
            score,
        }
    }
}

/// Checks shared by all trainers; returns the feature dimension.
pub(crate) fn check_training_set(xs: &[FeatureVector], ys: &[Label]) -> Result<usize> {
    if xs.len() != ys.len() {
        return Err(Error::LengthMismatch(format!("{} vectors but {} labels", xs.len(), ys.len())));
    }
    if xs.len() < 2 {
        return Err(Error::Config(format!("need at least 2 training examples, got {}", xs.len())));
    }
    if !(ys.contains(&Label::Control) && ys.contains(&Label::Target)) {
        return Err(Error::SingleClass);
    }
    let dim = xs[0].dim();
    if let Some(x) = xs.iter().find(|x| x.dim() != dim) {
        return Err(Error::DimensionMismatch { expected: dim, found: x.dim() });
    }
    Ok(dim)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum Classifier {
    Nb(NbModel),
    Lr(LrModel),
    Svm(SvmModel),
}

impl Classifier {
    pub fn family(&self) -> &'static str {
        match self {
            Classifier::Nb(_) => "nb",
            Classifier::Lr(_) => "lr",
            Classifier::Svm(_) => "svm",
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Classifier::Nb(m) => m.dim(),
            Classifier::Lr(m) => m.dim(),
            Classifier::Svm(m) => m.dim(),
        }
    }

    pub fn predict(&self, x: &FeatureVector) -> Result<Prediction> {
        if x.dim() != self.dim() || x.entries().last().is_some_and(|&(c, _)| c >= self.dim()) {
            return Err(Error::DimensionMismatch { expected: self.dim(), found: x.dim() });
        }
        Ok(match self {
            Classifier::Nb(m) => m.predict(x),
            Classifier::Lr(m) => m.predict(x),
            Classifier::Svm(m) => m.predict(x),
        })
    }

    pub fn predict_all(&self, xs: &[FeatureVector]) -> Result<Vec<Prediction>> {
        xs.iter().map(|x| self.predict(x)).collect()
    }
}

/// Hyperparameters for one of the shallow families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum TrainerConfig {
    Nb(NbConfig),
    Lr(LrConfig),
    Svm(SvmConfig),
}

impl TrainerConfig {
    pub fn family(&self) -> &'static str {
        match self {
            TrainerConfig::Nb(_) => "nb",
            TrainerConfig::Lr(_) => "lr",
            TrainerConfig::Svm(_) => "svm",
        }
    }

    pub fn train(&self, xs: &[FeatureVector], ys: &[Label]) -> Result<Classifier> {
        Ok(match self {
            TrainerConfig::Nb(c) => Classifier::Nb(train_nb(xs, ys, c)?),
            TrainerConfig::Lr(c) => Classifier::Lr(train_lr(xs, ys, c)?),
            TrainerConfig::Svm(c) => Classifier::Svm(train_svm(xs, ys, c)?),
        })
    }
}

/// A classifier bound to the feature space it was trained on, in the form
/// written to model files.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrainedModel {
    pub feature_space_hash: String,
    pub model: Classifier,
}

impl TrainedModel {
    pub fn new(space: &FeatureSpace, model: Classifier) -> Self {
        TrainedModel {
            feature_space_hash: space.fingerprint(),
            model,
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(json: &str) -> Result<Self> {
        Ok(serde_json::from_str(json)?)
    }

    pub fn fingerprint(&self) -> String {
        sha256_hex(self.to_json().expect("model serializes").as_bytes())
    }

    /// Errors unless `space` is the one this model was trained on.
    pub fn check_space(&self, space: &FeatureSpace) -> Result<()> {
        if space.fingerprint() != self.feature_space_hash {
            return Err(Error::Config("model was trained on a different feature space".into()));
        }
        Ok(())
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()?).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let json = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_json(&json)
    }
}
