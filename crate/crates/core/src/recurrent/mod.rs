//! Embedding + LSTM sequence classifier with attention pooling, trained by
//! hand-written backpropagation through time.

mod backprop;
mod params;
mod train;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{encode_indices, EventSequence, VocabEntry, Vocabulary, PADDING_INDEX};
use crate::error::{Error, Result};
use crate::gbt::sigmoid;
use crate::seed::rng_for;

pub use backprop::gradients;
pub use params::{ParamBlock, Params};
pub use train::{fit, Adam};

pub const MODEL_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Attention {
    DotProduct,
    SelfAttention,
    /// Pool by taking the last hidden state.
    None,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RecurrentConfig {
    pub embedding_dim: usize,
    pub hidden_dim: usize,
    pub attention: Attention,
    pub learning_rate: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    #[serde(default)]
    pub l2_penalty: f64,
}

impl RecurrentConfig {
    /// H = 16, E = 8, lr = 3e-4.
    pub fn right_sized(attention: Attention) -> Self {
        Self {
            embedding_dim: 8,
            hidden_dim: 16,
            attention,
            learning_rate: 3e-4,
            epochs: 30,
            batch_size: 64,
            seed: 0,
            l2_penalty: 0.0,
        }
    }

    /// H = 16, E = 16, lr = 1e-3.
    pub fn too_large(attention: Attention) -> Self {
        Self { embedding_dim: 16, learning_rate: 1e-3, ..Self::right_sized(attention) }
    }

    pub fn validate(&self) -> Result<()> {
        if self.embedding_dim == 0 || self.hidden_dim == 0 {
            return Err(Error::InvalidConfig("embedding and hidden dimensions must be at least 1".into()));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return Err(Error::InvalidConfig("learning rate must be positive".into()));
        }
        if self.batch_size == 0 {
            return Err(Error::InvalidConfig("batch size must be positive".into()));
        }
        if !(self.l2_penalty >= 0.0) {
            return Err(Error::InvalidConfig("l2 penalty must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct RecurrentModel {
    pub config: RecurrentConfig,
    pub vocabulary: Vec<VocabEntry>,
    pub params: Params,
}

/// Everything the forward pass computed, step by step.
#[derive(Clone, Debug, PartialEq)]
pub struct ForwardTrace {
    pub indices: Vec<usize>,
    pub embeddings: Vec<Vec<f64>>,
    pub input_gate: Vec<Vec<f64>>,
    pub forget_gate: Vec<Vec<f64>>,
    pub candidate: Vec<Vec<f64>>,
    pub output_gate: Vec<Vec<f64>>,
    pub cells: Vec<Vec<f64>>,
    pub hidden: Vec<Vec<f64>>,
    /// Row-major T × T self-attention matrix (empty for other modes).
    pub attention_matrix: Vec<f64>,
    pub alpha: Vec<f64>,
    pub context: Vec<f64>,
    pub logit: f64,
    pub probability: f64,
}

impl ForwardTrace {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub(crate) fn softmax_in_place(v: &mut [f64]) {
    let max = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let mut sum = 0.0;
    for x in v.iter_mut() {
        *x = (*x - max).exp();
        sum += *x;
    }
    for x in v.iter_mut() {
        *x /= sum;
    }
}

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// `out = W x` for row-major `W` with `x.len()` columns.
pub(crate) fn matvec(w: &[f64], x: &[f64], out: &mut [f64]) {
    let cols = x.len();
    for (r, o) in out.iter_mut().enumerate() {
        *o = dot(&w[r * cols..(r + 1) * cols], x);
    }
}

pub fn init_model(config: &RecurrentConfig, vocabulary: &Vocabulary) -> Result<RecurrentModel> {
    config.validate()?;
    let (v, e, h) = (vocabulary.len(), config.embedding_dim, config.hidden_dim);
    let mut params = Params::zeros(v, e, h, config.attention);
    let scale = 1.0 / (h as f64).sqrt();
    let mut rng = rng_for(config.seed, "recurrent/init");
    for block in params.blocks_mut() {
        for x in block.values.iter_mut() {
            *x = rng.random_range(-scale..scale);
        }
    }
    params.embedding[..e].iter_mut().for_each(|x| *x = 0.0);
    params.gate_bias.iter_mut().for_each(|x| *x = 0.0);
    // Gate order is input, forget, candidate, output.
    params.gate_bias[h..2 * h].iter_mut().for_each(|x| *x = 1.0);
    params.out_bias[0] = 0.0;
    Ok(RecurrentModel { config: config.clone(), vocabulary: vocabulary.entries().to_vec(), params })
}

impl RecurrentModel {
    pub fn vocab_size(&self) -> usize {
        self.vocabulary.len()
    }

    pub fn embedding_dim(&self) -> usize {
        self.config.embedding_dim
    }

    pub fn hidden_dim(&self) -> usize {
        self.config.hidden_dim
    }

    pub fn attention(&self) -> Attention {
        self.config.attention
    }

    pub fn check_vocabulary(&self, vocab: &Vocabulary) -> Result<()> {
        if self.vocabulary != vocab.entries() {
            return Err(Error::Schema("model vocabulary differs from dataset vocabulary".into()));
        }
        Ok(())
    }

    pub fn forward(&self, indices: &[usize]) -> Result<ForwardTrace> {
        if indices.is_empty() {
            return Err(Error::EmptySequence);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i > self.vocab_size()) {
            return Err(Error::UnknownToken(format!("index {bad}")));
        }
        Ok(self.forward_unchecked(indices))
    }

    pub fn forward_record(&self, record: &EventSequence, vocab: &Vocabulary) -> Result<ForwardTrace> {
        self.forward(&encode_indices(record, vocab)?.indices)
    }

    pub fn predict_record(&self, record: &EventSequence, vocab: &Vocabulary) -> Result<f64> {
        Ok(self.forward_record(record, vocab)?.probability)
    }

    pub(crate) fn forward_unchecked(&self, indices: &[usize]) -> ForwardTrace {
        let p = &self.params;
        let (e, h) = (self.embedding_dim(), self.hidden_dim());
        let t_len = indices.len();
        let mut trace = ForwardTrace {
            indices: indices.to_vec(),
            embeddings: Vec::with_capacity(t_len),
            input_gate: Vec::with_capacity(t_len),
            forget_gate: Vec::with_capacity(t_len),
            candidate: Vec::with_capacity(t_len),
            output_gate: Vec::with_capacity(t_len),
            cells: Vec::with_capacity(t_len),
            hidden: Vec::with_capacity(t_len),
            attention_matrix: Vec::new(),
            alpha: Vec::new(),
            context: Vec::new(),
            logit: 0.0,
            probability: 0.0,
        };

        let mut xh = vec![0.0; e + h];
        let mut z = vec![0.0; 4 * h];
        let mut c_prev = vec![0.0; h];
        for &idx in indices {
            let x = &p.embedding[idx * e..(idx + 1) * e];
            xh[..e].copy_from_slice(x);
            matvec(&p.gates, &xh, &mut z);
            for (zk, bk) in z.iter_mut().zip(&p.gate_bias) {
                *zk += bk;
            }
            let gi: Vec<f64> = z[..h].iter().map(|&v| sigmoid(v)).collect();
            let gf: Vec<f64> = z[h..2 * h].iter().map(|&v| sigmoid(v)).collect();
            let gg: Vec<f64> = z[2 * h..3 * h].iter().map(|&v| v.tanh()).collect();
            let go: Vec<f64> = z[3 * h..].iter().map(|&v| sigmoid(v)).collect();
            let c: Vec<f64> = (0..h).map(|k| gf[k] * c_prev[k] + gi[k] * gg[k]).collect();
            let hid: Vec<f64> = (0..h).map(|k| go[k] * c[k].tanh()).collect();
            xh[e..].copy_from_slice(&hid);
            c_prev.copy_from_slice(&c);
            trace.embeddings.push(x.to_vec());
            trace.input_gate.push(gi);
            trace.forget_gate.push(gf);
            trace.candidate.push(gg);
            trace.output_gate.push(go);
            trace.cells.push(c);
            trace.hidden.push(hid);
        }

        let hs = &trace.hidden;
        let last = &hs[t_len - 1];
        let (alpha, context) = match self.attention() {
            Attention::None => {
                let mut alpha = vec![0.0; t_len];
                alpha[t_len - 1] = 1.0;
                (alpha, last.clone())
            }
            Attention::DotProduct => {
                let mut alpha: Vec<f64> = hs.iter().map(|hi| dot(hi, last)).collect();
                softmax_in_place(&mut alpha);
                let mut ctx = vec![0.0; h];
                for (a, hi) in alpha.iter().zip(hs) {
                    for k in 0..h {
                        ctx[k] += a * hi[k];
                    }
                }
                (alpha, ctx)
            }
            Attention::SelfAttention => {
                let scale = 1.0 / (h as f64).sqrt();
                let project = |w: &[f64]| -> Vec<Vec<f64>> {
                    hs.iter()
                        .map(|hi| {
                            let mut out = vec![0.0; h];
                            matvec(w, hi, &mut out);
                            out
                        })
                        .collect()
                };
                let (q, k) = (project(&p.query), project(&p.key));
                let mut a = vec![0.0; t_len * t_len];
                for i in 0..t_len {
                    let row = &mut a[i * t_len..(i + 1) * t_len];
                    for (j, r) in row.iter_mut().enumerate() {
                        *r = dot(&q[i], &k[j]) * scale;
                    }
                    softmax_in_place(row);
                }
                let alpha: Vec<f64> =
                    (0..t_len).map(|j| (0..t_len).map(|i| a[i * t_len + j]).sum::<f64>() / t_len as f64).collect();
                // Mean of the attended outputs equals W_v applied to Σ α_j h_j.
                let mut pooled = vec![0.0; h];
                for (aj, hj) in alpha.iter().zip(hs) {
                    for k in 0..h {
                        pooled[k] += aj * hj[k];
                    }
                }
                let mut ctx = vec![0.0; h];
                matvec(&p.value, &pooled, &mut ctx);
                trace.attention_matrix = a;
                (alpha, ctx)
            }
        };
        trace.logit = dot(&p.out_weight, &context) + p.out_bias[0];
        trace.probability = sigmoid(trace.logit);
        trace.alpha = alpha;
        trace.context = context;
        trace
    }

    /// Logit for an index sequence; positions may hold the padding index.
    pub fn logit(&self, indices: &[usize]) -> Result<f64> {
        Ok(self.forward(indices)?.logit)
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDoc {
            version: MODEL_VERSION,
            config: self.config.clone(),
            vocabulary: self.vocabulary.clone(),
            blocks: self.params.blocks().into_iter().map(ParamBlock::from).collect(),
        };
        Ok(serde_json::to_string(&doc)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDoc = serde_json::from_str(text)?;
        if doc.version != MODEL_VERSION {
            return Err(Error::Schema(format!("unsupported recurrent model version {}", doc.version)));
        }
        doc.config.validate()?;
        let mut params =
            Params::zeros(doc.vocabulary.len(), doc.config.embedding_dim, doc.config.hidden_dim, doc.config.attention);
        params.load_blocks(&doc.blocks)?;
        if params.embedding[..doc.config.embedding_dim].iter().any(|&x| x != 0.0) {
            return Err(Error::Model("padding embedding must be zero".into()));
        }
        Ok(Self { config: doc.config, vocabulary: doc.vocabulary, params })
    }

    /// Sequence with the given positions replaced by padding.
    pub fn masked(indices: &[usize], present: &[bool]) -> Vec<usize> {
        indices.iter().zip(present).map(|(&i, &keep)| if keep { i } else { PADDING_INDEX }).collect()
    }
}

#[derive(Serialize, Deserialize)]
struct ModelDoc {
    version: u32,
    config: RecurrentConfig,
    vocabulary: Vec<VocabEntry>,
    blocks: Vec<ParamBlock>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenCategory;

    pub(crate) fn toy_vocab() -> Vocabulary {
        Vocabulary::new([
            ("a", TokenCategory::Adverse),
            ("h", TokenCategory::Helper),
            ("u", TokenCategory::Unhelper),
            ("n", TokenCategory::Noise),
        ])
        .unwrap()
    }

    fn small(attention: Attention, seed: u64) -> RecurrentModel {
        let cfg = RecurrentConfig { embedding_dim: 3, hidden_dim: 4, seed, ..RecurrentConfig::right_sized(attention) };
        init_model(&cfg, &toy_vocab()).unwrap()
    }

    #[test]
    fn init_rules() {
        let a = small(Attention::DotProduct, 5);
        assert_eq!(a, small(Attention::DotProduct, 5));
        assert_ne!(a, small(Attention::DotProduct, 6));
        assert!(a.params.embedding[..3].iter().all(|&x| x == 0.0));
        assert!(a.params.gate_bias[4..8].iter().all(|&x| x == 1.0));
        assert!(a.params.query.is_empty());
        assert_eq!(small(Attention::SelfAttention, 5).params.query.len(), 16);
    }

    #[test]
    fn singleton_attention_and_normalization() {
        for mode in [Attention::DotProduct, Attention::SelfAttention, Attention::None] {
            let m = small(mode, 1);
            assert_eq!(m.forward(&[2]).unwrap().alpha, vec![1.0]);
            let t = m.forward(&[1, 4, 0, 3, 3, 2]).unwrap();
            assert_eq!(t.alpha.len(), 6);
            assert!((t.alpha.iter().sum::<f64>() - 1.0).abs() < 1e-9);
            assert!(t.alpha.iter().all(|&a| a >= 0.0));
            assert!(t.probability > 0.0 && t.probability < 1.0);
        }
    }

    #[test]
    fn zero_parameters_give_half() {
        let mut m = small(Attention::SelfAttention, 1);
        for block in m.params.blocks_mut() {
            block.values.iter_mut().for_each(|x| *x = 0.0);
        }
        assert_eq!(m.forward(&[1, 2, 3]).unwrap().probability, 0.5);
    }

    #[test]
    fn input_errors() {
        let m = small(Attention::DotProduct, 1);
        assert!(matches!(m.forward(&[]), Err(Error::EmptySequence)));
        assert!(matches!(m.forward(&[1, 9]), Err(Error::UnknownToken(_))));
    }

    #[test]
    fn json_round_trip() {
        for mode in [Attention::DotProduct, Attention::SelfAttention, Attention::None] {
            let m = small(mode, 2);
            let back = RecurrentModel::from_json(&m.to_json().unwrap()).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn self_attention_context_matches_mean_of_outputs() {
        let m = small(Attention::SelfAttention, 3);
        let t = m.forward(&[1, 2, 3, 4]).unwrap();
        let n = t.len();
        let mut mean = vec![0.0; 4];
        for i in 0..n {
            let mut o = vec![0.0; 4];
            for j in 0..n {
                let mut v = vec![0.0; 4];
                matvec(&m.params.value, &t.hidden[j], &mut v);
                for k in 0..4 {
                    o[k] += t.attention_matrix[i * n + j] * v[k];
                }
            }
            for k in 0..4 {
                mean[k] += o[k] / n as f64;
            }
        }
        for k in 0..4 {
            assert!((mean[k] - t.context[k]).abs() < 1e-12);
        }
    }
}
