//! Per-prediction attributions: KernelSHAP and exact Shapley values over
//! coalition games, layer-wise relevance propagation through the recurrent
//! model, and attention-score extraction.

mod adapters;
mod io;
mod lrp;
mod shapley;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{EventSequence, Vocabulary};
use crate::error::{Error, Result};

pub use adapters::{
    attention_attribution, exact_shap_for_lstm, shap_for_gbt, shap_for_lstm, BackgroundSet, GbtMaskedGame,
    SequenceMaskGame,
};
pub use io::{read_attributions, write_attributions, ATTRIBUTION_COLUMNS};
pub use lrp::{lrp_linear, lrp_lstm, lrp_relevance, DEFAULT_LRP_EPS};
pub use shapley::{exact_shapley, kernel_shap, CoalitionGame, FnGame, ShapConfig, ShapValues, TabularGame};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    KernelShap,
    ExactShapley,
    Lrp,
    DotAttention,
    SelfAttention,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::KernelShap => "kernel-shap",
            Method::ExactShapley => "exact-shapley",
            Method::Lrp => "lrp",
            Method::DotAttention => "dot-attention",
            Method::SelfAttention => "self-attention",
        }
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "kernel-shap" | "shap" => Ok(Method::KernelShap),
            "exact-shapley" => Ok(Method::ExactShapley),
            "lrp" => Ok(Method::Lrp),
            "dot-attention" => Ok(Method::DotAttention),
            "self-attention" => Ok(Method::SelfAttention),
            other => Err(Error::InvalidConfig(format!("unknown attribution method `{other}`"))),
        }
    }
}

/// What a unit index refers to.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum UnitSpace {
    /// Unit `j` is count feature `j` (vocabulary index `j + 1`).
    Count,
    /// Unit `i` is sequence position `i`.
    Sequence,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Attribution {
    pub method: Method,
    pub target: u64,
    pub space: UnitSpace,
    /// One score per unit, indexed by unit.
    pub scores: Vec<f64>,
    /// Expected model output with every unit absent (Shapley methods).
    pub baseline: Option<f64>,
    /// Model output being explained, when the method defines one.
    pub output: Option<f64>,
}

impl Attribution {
    /// Token name of every unit, in unit order.
    pub fn unit_tokens<'a>(&self, record: &'a EventSequence, vocab: &'a Vocabulary) -> Result<Vec<&'a str>> {
        match self.space {
            UnitSpace::Sequence => {
                if self.scores.len() != record.len() {
                    return Err(Error::Dimension { expected: record.len(), got: self.scores.len() });
                }
                Ok(record.tokens().collect())
            }
            UnitSpace::Count => {
                if self.scores.len() != vocab.len() {
                    return Err(Error::Dimension { expected: vocab.len(), got: self.scores.len() });
                }
                Ok(vocab.entries().iter().map(|e| e.name.as_str()).collect())
            }
        }
    }

    /// `Σφ + baseline - output`, for Shapley-type attributions.
    pub fn efficiency_gap(&self) -> Option<f64> {
        let (base, out) = (self.baseline?, self.output?);
        Some(self.scores.iter().sum::<f64>() + base - out)
    }
}
