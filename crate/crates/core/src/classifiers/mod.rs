//! Decision trees, linear and RBF SVMs, and the classification experiment
//! pipeline.

pub mod experiment;
pub mod linear_svm;
pub mod rbf_svm;
pub mod tree;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use experiment::{run_classification_experiment, ExperimentConfig, ExperimentError, ExperimentReport, ExperimentRow, RunResult};
pub use linear_svm::{train_linear_svm, LinearModel, LinearSvmParams};
pub use rbf_svm::{train_rbf_svm, KernelModel, RbfParams};
pub use tree::{train_tree, DecisionTree, Split, TreeNode, TreeParams};

use crate::datasets::Label;
use crate::features::SparseVec;

#[derive(Debug, Error, PartialEq)]
pub enum ClassifierError {
    #[error("no training examples")]
    EmptyData,
    #[error("{rows} rows but {labels} labels")]
    LengthMismatch { rows: usize, labels: usize },
    #[error("expected {expected} features, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("malformed model: {0}")]
    Malformed(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ClassifierKind {
    #[serde(alias = "rule")]
    Rules,
    #[serde(alias = "dt")]
    Tree,
    #[serde(alias = "linear", alias = "lsvm")]
    LinearSvm,
    #[serde(alias = "svm", alias = "rbf")]
    RbfSvm,
}

impl ClassifierKind {
    pub fn name(self) -> &'static str {
        match self {
            ClassifierKind::Rules => "rules",
            ClassifierKind::Tree => "tree",
            ClassifierKind::LinearSvm => "linear-svm",
            ClassifierKind::RbfSvm => "rbf-svm",
        }
    }
}

impl std::str::FromStr for ClassifierKind {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s.trim().to_ascii_lowercase().as_str() {
            "rules" | "rule" => Ok(ClassifierKind::Rules),
            "tree" | "dt" => Ok(ClassifierKind::Tree),
            "linear-svm" | "linear" | "lsvm" => Ok(ClassifierKind::LinearSvm),
            "rbf-svm" | "svm" | "rbf" => Ok(ClassifierKind::RbfSvm),
            other => Err(format!("unknown classifier {other:?}")),
        }
    }
}

/// Hyperparameters for every trainable classifier.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelParams {
    pub tree: TreeParams,
    pub linear: LinearSvmParams,
    pub rbf: RbfParams,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TrainedModel {
    Tree(DecisionTree),
    Linear(LinearModel),
    Rbf(KernelModel),
}

impl TrainedModel {
    pub fn predict(&self, x: &SparseVec) -> Result<Label, ClassifierError> {
        match self {
            TrainedModel::Tree(m) => m.predict(x),
            TrainedModel::Linear(m) => m.predict(x),
            TrainedModel::Rbf(m) => m.predict(x),
        }
    }

    pub fn accuracy(&self, xs: &[SparseVec], ys: &[Label]) -> Result<f64, ClassifierError> {
        if xs.is_empty() {
            return Ok(0.0);
        }
        let mut correct = 0;
        for (x, y) in xs.iter().zip(ys) {
            correct += (self.predict(x)? == *y) as usize;
        }
        Ok(correct as f64 / xs.len() as f64)
    }
}

pub fn train_model(
    kind: ClassifierKind,
    xs: &[SparseVec],
    ys: &[Label],
    params: &ModelParams,
) -> Result<TrainedModel, ClassifierError> {
    match kind {
        ClassifierKind::Tree => train_tree(xs, ys, &params.tree).map(TrainedModel::Tree),
        ClassifierKind::LinearSvm => {
            let p = &params.linear;
            train_linear_svm(xs, ys, p.lambda, p.epochs, p.seed).map(TrainedModel::Linear)
        }
        ClassifierKind::RbfSvm => train_rbf_svm(xs, ys, &params.rbf).map(TrainedModel::Rbf),
        ClassifierKind::Rules => Err(ClassifierError::InvalidParameter("rules are not a trainable model".into())),
    }
}
