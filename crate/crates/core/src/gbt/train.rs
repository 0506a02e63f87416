use super::tree::{DecisionTree, TreeNode};
use super::{sigmoid, GbtModel, GbtParams, MODEL_VERSION};
use crate::corpus::{Dataset, CountVector};
use crate::error::{Error, Result};
use crate::evalx::{auc, track_epoch, EpochTracker, HistoryRow, TrainingHistory};

/// Splits must improve the regularized objective by more than this.
const MIN_SPLIT_GAIN: f64 = 1e-10;

/// Row-major count matrix stored as bytes (counts never exceed 30).
struct CountMatrix {
    data: Vec<u8>,
    n_features: usize,
    n_bins: usize,
}

impl CountMatrix {
    fn new(rows: &[CountVector], n_features: usize) -> Self {
        let mut data = Vec::with_capacity(rows.len() * n_features);
        let mut max = 0u8;
        for row in rows {
            for &v in row.values() {
                let v = u8::try_from(v).unwrap_or(u8::MAX);
                max = max.max(v);
                data.push(v);
            }
        }
        Self { data, n_features, n_bins: usize::from(max) + 1 }
    }

    fn row(&self, i: usize) -> &[u8] {
        &self.data[i * self.n_features..(i + 1) * self.n_features]
    }
}

struct Grower<'a> {
    x: &'a CountMatrix,
    grad: &'a [f64],
    hess: &'a [f64],
    params: &'a GbtParams,
    // Scratch histograms, [feature][bin].
    g_hist: Vec<f64>,
    h_hist: Vec<f64>,
    n_hist: Vec<u32>,
}

struct BestSplit {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl<'a> Grower<'a> {
    fn new(x: &'a CountMatrix, grad: &'a [f64], hess: &'a [f64], params: &'a GbtParams) -> Self {
        let size = x.n_features * x.n_bins;
        Self { x, grad, hess, params, g_hist: vec![0.0; size], h_hist: vec![0.0; size], n_hist: vec![0; size] }
    }

    fn grow(&mut self, mut rows: Vec<u32>) -> DecisionTree {
        let mut nodes = Vec::new();
        self.build(&mut rows, 0, &mut nodes);
        DecisionTree::from_nodes(nodes)
    }

    fn build(&mut self, rows: &mut [u32], depth: usize, nodes: &mut Vec<TreeNode>) -> usize {
        let g: f64 = rows.iter().map(|&i| self.grad[i as usize]).sum();
        let h: f64 = rows.iter().map(|&i| self.hess[i as usize]).sum();
        let at = nodes.len();
        nodes.push(TreeNode::Leaf { weight: -g / (h + self.params.l2_leaf_penalty) });
        if depth >= self.params.max_depth {
            return at;
        }
        let Some(best) = self.best_split(rows, g, h) else {
            return at;
        };

        // Partition in place: left block first.
        let mut split = 0;
        for k in 0..rows.len() {
            if f64::from(self.x.row(rows[k] as usize)[best.feature]) < best.threshold {
                rows.swap(k, split);
                split += 1;
            }
        }
        let (left_rows, right_rows) = rows.split_at_mut(split);
        let left = self.build(left_rows, depth + 1, nodes);
        let right = self.build(right_rows, depth + 1, nodes);
        nodes[at] = TreeNode::Split { feature: best.feature, threshold: best.threshold, gain: best.gain, left, right };
        at
    }

    fn best_split(&mut self, rows: &[u32], g_total: f64, h_total: f64) -> Option<BestSplit> {
        let (nf, nb) = (self.x.n_features, self.x.n_bins);
        self.g_hist.iter_mut().for_each(|v| *v = 0.0);
        self.h_hist.iter_mut().for_each(|v| *v = 0.0);
        self.n_hist.iter_mut().for_each(|v| *v = 0);
        for &i in rows {
            let i = i as usize;
            let (gi, hi) = (self.grad[i], self.hess[i]);
            for (j, &v) in self.x.row(i).iter().enumerate() {
                let slot = j * nb + usize::from(v);
                self.g_hist[slot] += gi;
                self.h_hist[slot] += hi;
                self.n_hist[slot] += 1;
            }
        }

        let lambda = self.params.l2_leaf_penalty;
        let mcw = self.params.min_child_weight;
        let parent = g_total * g_total / (h_total + lambda);
        let mut best: Option<BestSplit> = None;
        for j in 0..nf {
            let (mut gl, mut hl) = (0.0, 0.0);
            let mut prev: Option<usize> = None;
            for b in 0..nb {
                let slot = j * nb + b;
                if self.n_hist[slot] == 0 {
                    continue;
                }
                if let Some(p) = prev {
                    // Left holds every value <= p, right every value >= b.
                    let (gr, hr) = (g_total - gl, h_total - hl);
                    if hl >= mcw && hr >= mcw {
                        let gain = 0.5 * (gl * gl / (hl + lambda) + gr * gr / (hr + lambda) - parent);
                        if gain > MIN_SPLIT_GAIN && best.as_ref().is_none_or(|s| gain > s.gain) {
                            best = Some(BestSplit { feature: j, threshold: (p + b) as f64 / 2.0, gain });
                        }
                    }
                }
                gl += self.g_hist[slot];
                hl += self.h_hist[slot];
                prev = Some(b);
            }
        }
        best
    }
}

fn log_loss(labels: &[f64], logits: &[f64]) -> f64 {
    let total: f64 = labels
        .iter()
        .zip(logits)
        .map(|(&y, &z)| {
            // log(1 + e^z) - y z, evaluated stably
            let softplus = if z > 0.0 { z + (-z).exp().ln_1p() } else { z.exp().ln_1p() };
            softplus - y * z
        })
        .sum();
    total / labels.len() as f64
}

/// Second-order boosting on logistic loss. Validation AUC (and, with a
/// tracker, set similarity) is recorded every `checkpoint_interval` rounds;
/// the returned model is the checkpoint with the best validation AUC.
pub fn train_gbt(
    train: &Dataset,
    val: &Dataset,
    params: &GbtParams,
    mut tracker: Option<&mut EpochTracker>,
) -> Result<(GbtModel, TrainingHistory)> {
    params.validate()?;
    if train.vocabulary != val.vocabulary {
        return Err(Error::Schema("train and validation vocabularies differ".into()));
    }
    train.require_both_classes()?;
    val.require_both_classes()?;

    let n_features = train.vocabulary.len();
    let x = CountMatrix::new(&train.count_vectors()?, n_features);
    let x_val: Vec<Vec<f64>> = val.count_vectors()?.iter().map(CountVector::to_f64).collect();
    let y: Vec<f64> = train.records.iter().map(|r| f64::from(r.label)).collect();
    let val_labels = val.labels();

    let p0 = train.positive_fraction();
    let base_logit = (p0 / (1.0 - p0)).ln();
    let mut model = GbtModel {
        version: MODEL_VERSION,
        base_logit,
        learning_rate: params.learning_rate,
        vocabulary: train.vocabulary.entries().to_vec(),
        trees: Vec::with_capacity(params.rounds),
    };

    let n = y.len();
    let mut logits = vec![base_logit; n];
    let mut val_logits = vec![base_logit; x_val.len()];
    let mut grad = vec![0.0; n];
    let mut hess = vec![0.0; n];
    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, usize)> = None;

    for round in 1..=params.rounds {
        for i in 0..n {
            let p = sigmoid(logits[i]);
            grad[i] = p - y[i];
            hess[i] = p * (1.0 - p);
        }
        let tree = Grower::new(&x, &grad, &hess, params).grow((0..n as u32).collect());
        for (i, z) in logits.iter_mut().enumerate() {
            let row: Vec<f64> = x.row(i).iter().map(|&v| f64::from(v)).collect();
            *z += params.learning_rate * tree.predict(&row);
        }
        for (xv, z) in x_val.iter().zip(val_logits.iter_mut()) {
            *z += params.learning_rate * tree.predict(xv);
        }
        model.trees.push(tree);

        if round % params.checkpoint_interval == 0 || round == params.rounds {
            let epoch = round.div_ceil(params.checkpoint_interval);
            let (val_auc, val_similarity) = match tracker.as_deref_mut() {
                Some(t) => {
                    let point = track_epoch(t, &model, epoch, val)?;
                    (point.auc, Some(point.similarity))
                }
                None => (auc(&val_labels, &val_logits)?, None),
            };
            let train_loss = log_loss(&y, &logits);
            if !train_loss.is_finite() {
                return Err(Error::Numeric(format!("non-finite training loss at round {round}")));
            }
            history.rows.push(HistoryRow { epoch, train_loss, val_auc, val_similarity });
            if best.is_none_or(|(b, _)| val_auc > b) {
                best = Some((val_auc, round));
            }
        }
    }

    let keep = best.map(|(_, round)| round).unwrap_or(0);
    Ok((model.truncated(keep), history))
}
