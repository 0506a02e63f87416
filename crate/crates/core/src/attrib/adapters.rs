
use rand::seq::index;
use serde::{Deserialize, Serialize};

use super::lrp::lrp_lstm;
use super::shapley::{exact_shapley, kernel_shap, CoalitionGame, ShapConfig, ShapValues};
use super::{Attribution, Method, UnitSpace};
use crate::corpus::{encode_counts, encode_indices, Dataset, EventSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::evalx::{TrackMethod, TrackedModel};
use crate::gbt::{GbtModel, TreeNode};
use crate::recurrent::{Attention, RecurrentModel};
use crate::seed::{derive_seed, rng_for};

/// Count-space reference observations standing in for absent features.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BackgroundSet {
    pub ids: Vec<u64>,
    pub rows: Vec<Vec<f64>>,
}

impl BackgroundSet {
    /// Seeded sample of `size` training observations (all of them if fewer).
    pub fn sample(train: &Dataset, size: usize, seed: u64) -> Result<Self> {
        if size == 0 || train.is_empty() {
            return Err(Error::InvalidConfig("background set must be non-empty".into()));
        }
        let mut rng = rng_for(seed, "attrib/background");
        let mut picked = index::sample(&mut rng, train.len(), size.min(train.len())).into_vec();
        picked.sort_unstable();
        let vocab = &train.vocabulary;
        let mut ids = Vec::with_capacity(picked.len());
        let mut rows = Vec::with_capacity(picked.len());
        for i in picked {
            let r = &train.records[i];
            ids.push(r.id);
            rows.push(encode_counts(r, vocab)?.to_f64());
        }
        Ok(Self { ids, rows })
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

/// A leaf of a tree prepared for masked evaluation.
struct MaskedLeaf {
    weight: f64,
    /// (feature, whether the instance satisfies this split condition) for
    /// each split on the root-to-leaf path.
    path: Vec<(usize, bool)>,
    /// For every subset S of path positions (bit k = position k), the
    /// fraction of background rows satisfying all conditions in S.
    background_fraction: Vec<f64>,
}

/// Reaching a leaf needs every present feature's condition to hold for
/// the instance and every absent feature's condition to hold for the
/// background row, so the leaf's mass is a lookup on the absent subset.
struct MaskedTree {
    leaves: Vec<MaskedLeaf>,
}

impl MaskedTree {
    fn new(tree: &crate::gbt::DecisionTree, x: &[f64], background: &[Vec<f64>]) -> Self {
        let mut leaves = Vec::new();
        // (node, conditions so far as (feature, threshold, go_left))
        let mut stack: Vec<(usize, Vec<(usize, f64, bool)>)> = vec![(0, Vec::new())];
        while let Some((node, conds)) = stack.pop() {
            match tree.nodes()[node] {
                TreeNode::Split { feature, threshold, left, right, .. } => {
                    let mut l = conds.clone();
                    l.push((feature, threshold, true));
                    let mut r = conds;
                    r.push((feature, threshold, false));
                    stack.push((right, r));
                    stack.push((left, l));
                }
                TreeNode::Leaf { weight } => {
                    let holds = |row: &[f64], &(f, t, go_left): &(usize, f64, bool)| (row[f] < t) == go_left;
                    let mut fraction = vec![0.0; 1 << conds.len()];
                    let unit = 1.0 / background.len() as f64;
                    for row in background {
                        let sat = conds.iter().enumerate().fold(0usize, |acc, (k, c)| acc | usize::from(holds(row, c)) << k);
                        for (s, f) in fraction.iter_mut().enumerate() {
                            if s & !sat == 0 {
                                *f += unit;
                            }
                        }
                    }
                    let path = conds.iter().map(|c| (c.0, holds(x, c))).collect();
                    leaves.push(MaskedLeaf { weight, path, background_fraction: fraction });
                }
            }
        }
        Self { leaves }
    }

    fn value(&self, present: &[bool]) -> f64 {
        let mut total = 0.0;
        'leaves: for leaf in &self.leaves {
            let mut absent = 0usize;
            for (k, &(feature, instance_ok)) in leaf.path.iter().enumerate() {
                if present[feature] {
                    if !instance_ok {
                        continue 'leaves;
                    }
                } else {
                    absent |= 1 << k;
                }
            }
            total += leaf.weight * leaf.background_fraction[absent];
        }
        total
    }
}

/// Masked game over the V count features of a boosted ensemble, valued on
/// the logit scale: absent features take each background row's count.
pub struct GbtMaskedGame {
    n_features: usize,
    base_logit: f64,
    learning_rate: f64,
    trees: Vec<MaskedTree>,
}

impl GbtMaskedGame {
    pub fn new(model: &GbtModel, x: &[f64], background: &BackgroundSet) -> Result<Self> {
        if x.len() != model.n_features() {
            return Err(Error::Dimension { expected: model.n_features(), got: x.len() });
        }
        if background.is_empty() {
            return Err(Error::InvalidConfig("background set is empty".into()));
        }
        if let Some(row) = background.rows.iter().find(|r| r.len() != x.len()) {
            return Err(Error::Dimension { expected: x.len(), got: row.len() });
        }
        Ok(Self {
            n_features: x.len(),
            base_logit: model.base_logit,
            learning_rate: model.learning_rate,
            trees: model.trees.iter().map(|t| MaskedTree::new(t, x, &background.rows)).collect(),
        })
    }
}

impl CoalitionGame for GbtMaskedGame {
    fn n_units(&self) -> usize {
        self.n_features
    }

    fn value(&self, present: &[bool]) -> Result<f64> {
        Ok(self.base_logit + self.learning_rate * self.trees.iter().map(|t| t.value(present)).sum::<f64>())
    }
}

/// Masked game over sequence positions of the recurrent model: absent
/// positions hold the padding token. Valued on the logit scale.
pub struct SequenceMaskGame<'a> {
    model: &'a RecurrentModel,
    indices: Vec<usize>,
}

impl<'a> SequenceMaskGame<'a> {
    pub fn new(model: &'a RecurrentModel, indices: Vec<usize>) -> Result<Self> {
        model.forward(&indices)?;
        Ok(Self { model, indices })
    }
}

impl CoalitionGame for SequenceMaskGame<'_> {
    fn n_units(&self) -> usize {
        self.indices.len()
    }

    fn value(&self, present: &[bool]) -> Result<f64> {
        Ok(self.model.forward_unchecked(&RecurrentModel::masked(&self.indices, present)).logit)
    }
}

/// Per-observation sampling seed, so results do not depend on the order
/// in which observations are explained.
fn observation_config(cfg: &ShapConfig, id: u64) -> ShapConfig {
    ShapConfig { seed: derive_seed(cfg.seed, &format!("observation/{id}")), ..cfg.clone() }
}

fn to_attribution(method: Method, target: u64, space: UnitSpace, s: ShapValues) -> Attribution {
    Attribution { method, target, space, scores: s.phi, baseline: Some(s.baseline), output: Some(s.output) }
}

pub fn shap_for_gbt(
    model: &GbtModel,
    record: &EventSequence,
    vocab: &Vocabulary,
    background: &BackgroundSet,
    cfg: &ShapConfig,
) -> Result<Attribution> {
    let x = encode_counts(record, vocab)?.to_f64();
    let game = GbtMaskedGame::new(model, &x, background)?;
    let values = kernel_shap(&game, &observation_config(cfg, record.id))?;
    Ok(to_attribution(Method::KernelShap, record.id, UnitSpace::Count, values))
}

pub fn shap_for_lstm(
    model: &RecurrentModel,
    record: &EventSequence,
    vocab: &Vocabulary,
    cfg: &ShapConfig,
) -> Result<Attribution> {
    let game = SequenceMaskGame::new(model, encode_indices(record, vocab)?.indices)?;
    let values = kernel_shap(&game, &observation_config(cfg, record.id))?;
    Ok(to_attribution(Method::KernelShap, record.id, UnitSpace::Sequence, values))
}

pub fn exact_shap_for_lstm(model: &RecurrentModel, record: &EventSequence, vocab: &Vocabulary) -> Result<Attribution> {
    let game = SequenceMaskGame::new(model, encode_indices(record, vocab)?.indices)?;
    Ok(to_attribution(Method::ExactShapley, record.id, UnitSpace::Sequence, exact_shapley(&game)?))
}

pub fn attention_attribution(model: &RecurrentModel, record: &EventSequence, vocab: &Vocabulary) -> Result<Attribution> {
    let method = match model.attention() {
        Attention::DotProduct => Method::DotAttention,
        Attention::SelfAttention => Method::SelfAttention,
        Attention::None => return Err(Error::NoAttention),
    };
    let trace = model.forward_record(record, vocab)?;
    Ok(Attribution {
        method,
        target: record.id,
        space: UnitSpace::Sequence,
        scores: trace.alpha,
        baseline: None,
        output: None,
    })
}

impl TrackedModel for GbtModel {
    fn predict_record(&self, record: &EventSequence, vocab: &Vocabulary) -> Result<f64> {
        self.predict(&encode_counts(record, vocab)?)
    }

    fn explain_record(&self, record: &EventSequence, vocab: &Vocabulary, method: &TrackMethod) -> Result<Attribution> {
        match method {
            TrackMethod::KernelShap { config, background: Some(bg) } => shap_for_gbt(self, record, vocab, bg, config),
            TrackMethod::KernelShap { background: None, .. } => {
                Err(Error::InvalidConfig("tree SHAP tracking needs a background set".into()))
            }
            TrackMethod::Lrp { .. } => {
                Err(Error::IncompatibleMethod { method: Method::Lrp.to_string(), model: "gbt".into() })
            }
            TrackMethod::Attention => {
                Err(Error::IncompatibleMethod { method: "attention".into(), model: "gbt".into() })
            }
        }
    }
}

impl TrackedModel for RecurrentModel {
    fn predict_record(&self, record: &EventSequence, vocab: &Vocabulary) -> Result<f64> {
        RecurrentModel::predict_record(self, record, vocab)
    }

    fn explain_record(&self, record: &EventSequence, vocab: &Vocabulary, method: &TrackMethod) -> Result<Attribution> {
        match method {
            TrackMethod::KernelShap { config, .. } => shap_for_lstm(self, record, vocab, config),
            TrackMethod::Lrp { eps } => lrp_lstm(self, record, vocab, *eps),
            TrackMethod::Attention => attention_attribution(self, record, vocab),
        }
    }
}
