//! Gradient boosted decision trees with logistic loss over per-token count
//! features.

mod train;
mod tree;

use serde::{Deserialize, Serialize};

use crate::corpus::{CountVector, VocabEntry};
use crate::error::{Error, Result};

pub use train::train_gbt;
pub use tree::{DecisionTree, TreeNode};

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtParams {
    pub rounds: usize,
    pub max_depth: usize,
    pub learning_rate: f64,
    pub l2_leaf_penalty: f64,
    pub min_child_weight: f64,
    /// Rounds between validation / explainability checkpoints.
    pub checkpoint_interval: usize,
}

impl Default for GbtParams {
    fn default() -> Self {
        Self {
            rounds: 200,
            max_depth: 4,
            learning_rate: 0.1,
            l2_leaf_penalty: 1.0,
            min_child_weight: 1.0,
            checkpoint_interval: 10,
        }
    }
}

impl GbtParams {
    pub fn validate(&self) -> Result<()> {
        if self.max_depth == 0 {
            return Err(Error::InvalidConfig("max_depth must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate <= 1.0) {
            return Err(Error::InvalidConfig("learning_rate must be in (0, 1]".into()));
        }
        if self.l2_leaf_penalty < 0.0 || self.min_child_weight < 0.0 {
            return Err(Error::InvalidConfig("penalties must be non-negative".into()));
        }
        if self.checkpoint_interval == 0 {
            return Err(Error::InvalidConfig("checkpoint_interval must be positive".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GbtModel {
    pub version: u32,
    pub base_logit: f64,
    pub learning_rate: f64,
    pub vocabulary: Vec<VocabEntry>,
    pub trees: Vec<DecisionTree>,
}

pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

impl GbtModel {
    pub fn n_features(&self) -> usize {
        self.vocabulary.len()
    }

    fn check_dim(&self, got: usize) -> Result<()> {
        if got != self.n_features() {
            return Err(Error::Dimension { expected: self.n_features(), got });
        }
        Ok(())
    }

    /// Raw additive score; `x` must already have the right length.
    pub(crate) fn logit_unchecked(&self, x: &[f64]) -> f64 {
        self.base_logit + self.learning_rate * self.trees.iter().map(|t| t.predict(x)).sum::<f64>()
    }

    pub fn logit(&self, x: &[f64]) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(self.logit_unchecked(x))
    }

    pub fn predict(&self, x: &CountVector) -> Result<f64> {
        self.check_dim(x.len())?;
        Ok(sigmoid(self.logit_unchecked(&x.to_f64())))
    }

    /// The same ensemble cut after its first `n` trees.
    pub fn truncated(&self, n: usize) -> GbtModel {
        GbtModel { trees: self.trees[..n.min(self.trees.len())].to_vec(), ..self.clone() }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let model: GbtModel = serde_json::from_str(text)?;
        if model.version != MODEL_VERSION {
            return Err(Error::Schema(format!("unsupported gbt model version {}", model.version)));
        }
        Ok(model)
    }
}

pub fn predict_gbt(model: &GbtModel, x: &CountVector) -> Result<f64> {
    model.predict(x)
}

/// Mean split gain per feature over every internal node of the ensemble
/// (zero for unused features).
pub fn information_gain_importance(model: &GbtModel) -> Vec<f64> {
    let n = model.n_features();
    let mut sum = vec![0.0; n];
    let mut count = vec![0usize; n];
    for tree in &model.trees {
        for node in tree.nodes() {
            if let TreeNode::Split { feature, gain, .. } = *node {
                sum[feature] += gain;
                count[feature] += 1;
            }
        }
    }
    sum.iter().zip(&count).map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 }).collect()
}
