use serde::{Deserialize, Serialize};

use super::Attention;
use crate::error::{Error, Result};

/// All trainable weights, row-major. The same layout doubles as a gradient
/// or optimizer-moment buffer.
#[derive(Clone, Debug, PartialEq)]
pub struct Params {
    /// (V + 1) × E; row 0 is the padding token.
    pub embedding: Vec<f64>,
    /// 4H × (E + H), gate rows ordered input, forget, candidate, output.
    pub gates: Vec<f64>,
    pub gate_bias: Vec<f64>,
    /// H × H each; empty unless self-attention.
    pub query: Vec<f64>,
    pub key: Vec<f64>,
    pub value: Vec<f64>,
    pub out_weight: Vec<f64>,
    pub out_bias: Vec<f64>,
    shapes: [Vec<usize>; 8],
}

pub struct BlockRef<'a> {
    pub name: &'static str,
    pub shape: &'a [usize],
    pub values: &'a [f64],
}

pub struct BlockMut<'a> {
    pub name: &'static str,
    pub values: &'a mut Vec<f64>,
}

/// Serialized form: a named, shape-tagged parameter block.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ParamBlock {
    pub name: String,
    pub shape: Vec<usize>,
    pub values: Vec<f64>,
}

impl From<BlockRef<'_>> for ParamBlock {
    fn from(b: BlockRef<'_>) -> Self {
        Self { name: b.name.to_string(), shape: b.shape.to_vec(), values: b.values.to_vec() }
    }
}

const NAMES: [&str; 8] = ["embedding", "gates", "gate_bias", "query", "key", "value", "out_weight", "out_bias"];

impl Params {
    pub fn zeros(vocab: usize, e: usize, h: usize, attention: Attention) -> Self {
        let attn = if attention == Attention::SelfAttention { vec![h, h] } else { vec![0, 0] };
        let shapes = [
            vec![vocab + 1, e],
            vec![4 * h, e + h],
            vec![4 * h],
            attn.clone(),
            attn.clone(),
            attn,
            vec![h],
            vec![1],
        ];
        let z = |k: usize| vec![0.0; shapes[k].iter().product()];
        Self {
            embedding: z(0),
            gates: z(1),
            gate_bias: z(2),
            query: z(3),
            key: z(4),
            value: z(5),
            out_weight: z(6),
            out_bias: z(7),
            shapes,
        }
    }

    pub fn zeros_like(&self) -> Self {
        let mut out = self.clone();
        out.blocks_mut().into_iter().for_each(|b| b.values.iter_mut().for_each(|x| *x = 0.0));
        out
    }

    fn slices(&self) -> [&Vec<f64>; 8] {
        [&self.embedding, &self.gates, &self.gate_bias, &self.query, &self.key, &self.value, &self.out_weight, &self.out_bias]
    }

    pub fn blocks(&self) -> Vec<BlockRef<'_>> {
        self.slices()
            .into_iter()
            .zip(&self.shapes)
            .zip(NAMES)
            .map(|((values, shape), name)| BlockRef { name, shape, values })
            .collect()
    }

    pub fn blocks_mut(&mut self) -> Vec<BlockMut<'_>> {
        let Self { embedding, gates, gate_bias, query, key, value, out_weight, out_bias, .. } = self;
        [embedding, gates, gate_bias, query, key, value, out_weight, out_bias]
            .into_iter()
            .zip(NAMES)
            .map(|(values, name)| BlockMut { name, values })
            .collect()
    }

    pub fn n_params(&self) -> usize {
        self.slices().iter().map(|b| b.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.slices().iter().all(|b| b.iter().all(|x| x.is_finite()))
    }

    pub fn squared_norm(&self) -> f64 {
        self.slices().iter().flat_map(|b| b.iter()).map(|x| x * x).sum()
    }

    pub(crate) fn load_blocks(&mut self, blocks: &[ParamBlock]) -> Result<()> {
        if blocks.len() != NAMES.len() {
            return Err(Error::Schema(format!("expected {} parameter blocks, got {}", NAMES.len(), blocks.len())));
        }
        let shapes = self.shapes.clone();
        for ((dst, shape), src) in self.blocks_mut().into_iter().zip(&shapes).zip(blocks) {
            if src.name != dst.name || &src.shape != shape || src.values.len() != dst.values.len() {
                return Err(Error::Schema(format!(
                    "parameter block `{}` {:?} does not match expected `{}` {:?}",
                    src.name, src.shape, dst.name, shape
                )));
            }
            if src.values.iter().any(|x| !x.is_finite()) {
                return Err(Error::Model(format!("non-finite values in `{}`", src.name)));
            }
            dst.values.copy_from_slice(&src.values);
        }
        Ok(())
    }
}
