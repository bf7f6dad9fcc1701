//! Small from-scratch classifiers and cross-validation utilities: logistic
//! regression, multinomial naive Bayes, a primal linear SVM, and a Gini
//! decision tree. All trainers are deterministic given a fixed seed.

pub mod cv;
pub mod logistic;
pub mod naive_bayes;
pub mod svm;
pub mod tree;

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use cv::{kfold_cross_validate, stratified_folds, CrossValidation};
pub use logistic::{logistic_gradient, logistic_objective, train_logistic, LogisticConfig};
pub use naive_bayes::{nb_posterior, train_naive_bayes, NaiveBayesModel};
pub use svm::{svm_objective, train_linear_svm, train_linear_svm_traced};
pub use tree::{train_decision_tree, DecisionTreeModel, TreeNode};

/// Feature rows plus the shared feature-name table.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FeatureMatrix {
    pub names: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl FeatureMatrix {
    pub fn validate(&self) -> Result<(), MlError> {
        for row in &self.rows {
            if row.len() != self.names.len() {
                return Err(MlError::ShapeMismatch {
                    expected: self.names.len(),
                    got: row.len(),
                });
            }
        }
        Ok(())
    }
}

#[derive(Debug, Error)]
pub enum MlError {
    #[error("training set contains a single class")]
    SingleClassInput,
    #[error("too few samples: need at least {need}, got {got}")]
    TooFewSamples { need: usize, got: usize },
    #[error("count features must be non-negative")]
    NegativeCount,
    #[error("row has {got} features, expected {expected}")]
    ShapeMismatch { expected: usize, got: usize },
    #[error("bad model file: {0}")]
    BadModelFile(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
}

/// Which linear objective a [`LinearModel`] was trained under.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LinearKind {
    Logistic,
    LinearSvm,
}

/// Linear decision function `w . x + b`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LinearModel {
    pub weights: Vec<f64>,
    pub bias: f64,
    pub kind: LinearKind,
}

impl LinearModel {
    pub fn decision(&self, x: &[f64]) -> f64 {
        self.weights.iter().zip(x).map(|(w, v)| w * v).sum::<f64>() + self.bias
    }

    pub fn predict(&self, x: &[f64]) -> bool {
        self.decision(x) > 0.0
    }

    /// P(positive) under the logistic link.
    pub fn probability(&self, x: &[f64]) -> f64 {
        sigmoid(self.decision(x))
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

pub(crate) fn check_two_classes(y: &[bool]) -> Result<(), MlError> {
    if y.len() < 2 {
        return Err(MlError::TooFewSamples { need: 2, got: y.len() });
    }
    let pos = y.iter().filter(|v| **v).count();
    if pos == 0 || pos == y.len() {
        return Err(MlError::SingleClassInput);
    }
    Ok(())
}

/// Versioned JSON wrapper for trained models.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub format_version: u32,
    pub feature_names: Vec<String>,
    pub model: SavedModel,
}

pub const MODEL_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "kind", content = "params", rename_all = "snake_case")]
pub enum SavedModel {
    Logistic(LinearModel),
    LinearSvm(LinearModel),
    NaiveBayes(NaiveBayesModel),
    DecisionTree(DecisionTreeModel),
}

pub fn save_model(file: &ModelFile, path: &Path) -> Result<(), MlError> {
    let mut json = serde_json::to_vec_pretty(file)
        .map_err(|e| MlError::BadModelFile(e.to_string()))?;
    json.push(b'\n');
    std::fs::write(path, json)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<ModelFile, MlError> {
    let bytes = std::fs::read(path)?;
    let file: ModelFile = serde_json::from_slice(&bytes)
        .map_err(|e| MlError::BadModelFile(format!("{}: {e}", path.display())))?;
    if file.format_version != MODEL_FORMAT_VERSION {
        return Err(MlError::BadModelFile(format!(
            "unsupported format_version {}",
            file.format_version
        )));
    }
    Ok(file)
}
