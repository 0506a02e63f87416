//! Epsilon-rule relevance propagation. Gate multiplications route all
//! relevance through the signal operand; bias terms take no share, so
//! relevance is conserved up to the epsilon stabilizer.

use super::{Attribution, Method, UnitSpace};
use crate::corpus::{encode_indices, EventSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::recurrent::{Attention, RecurrentModel};

pub const DEFAULT_LRP_EPS: f64 = 1e-3;

fn stabilize(d: f64, eps: f64) -> f64 {
    if d >= 0.0 {
        d + eps
    } else {
        d - eps
    }
}

/// Relevance of each input of `z = Σ_j w_j x_j` when `z` itself is
/// redistributed.
pub fn lrp_linear(weights: &[f64], input: &[f64], eps: f64) -> Result<Vec<f64>> {
    if weights.len() != input.len() {
        return Err(Error::Dimension { expected: weights.len(), got: input.len() });
    }
    let contrib: Vec<f64> = weights.iter().zip(input).map(|(w, x)| w * x).collect();
    let z: f64 = contrib.iter().sum();
    let denom = stabilize(z, eps);
    Ok(contrib.iter().map(|c| c / denom * z).collect())
}

/// Per-position relevance of the logit, plus the logit itself.
pub fn lrp_relevance(model: &RecurrentModel, indices: &[usize], eps: f64) -> Result<(Vec<f64>, f64)> {
    if !(eps > 0.0) {
        return Err(Error::InvalidConfig("LRP eps must be positive".into()));
    }
    if !model.params.is_finite() {
        return Err(Error::Model("model has non-finite parameters".into()));
    }
    let t = model.forward(indices)?;
    let p = &model.params;
    let (e, h) = (model.embedding_dim(), model.hidden_dim());
    let n = t.len();

    let out_contrib: Vec<f64> = p.out_weight.iter().zip(&t.context).map(|(w, c)| w * c).collect();
    let out_denom = stabilize(out_contrib.iter().sum(), eps);
    let r_ctx: Vec<f64> = out_contrib.iter().map(|z| z / out_denom * t.logit).collect();

    let mut r_h = vec![vec![0.0; h]; n];
    match model.attention() {
        Attention::None => r_h[n - 1].copy_from_slice(&r_ctx),
        Attention::DotProduct => {
            for k in 0..h {
                let denom = stabilize(t.context[k], eps);
                for i in 0..n {
                    r_h[i][k] += t.alpha[i] * t.hidden[i][k] / denom * r_ctx[k];
                }
            }
        }
        Attention::SelfAttention => {
            // context = W_v m with m = Σ_j α_j h_j.
            let mut m = vec![0.0; h];
            for (a, hj) in t.alpha.iter().zip(&t.hidden) {
                for l in 0..h {
                    m[l] += a * hj[l];
                }
            }
            let mut r_m = vec![0.0; h];
            for k in 0..h {
                let row = &p.value[k * h..(k + 1) * h];
                let denom = stabilize(row.iter().zip(&m).map(|(w, x)| w * x).sum(), eps);
                for l in 0..h {
                    r_m[l] += row[l] * m[l] / denom * r_ctx[k];
                }
            }
            for l in 0..h {
                let denom = stabilize(m[l], eps);
                for j in 0..n {
                    r_h[j][l] += t.alpha[j] * t.hidden[j][l] / denom * r_m[l];
                }
            }
        }
    }

    let g_rows = &p.gates[2 * h * (e + h)..3 * h * (e + h)];
    let zeros = vec![0.0; h];
    let mut r_c_carry = vec![0.0; h];
    let mut positions = vec![0.0; n];
    let mut xh = vec![0.0; e + h];
    for step in (0..n).rev() {
        let c_prev = if step > 0 { &t.cells[step - 1] } else { &zeros };
        xh[..e].copy_from_slice(&t.embeddings[step]);
        xh[e..].copy_from_slice(if step > 0 { &t.hidden[step - 1] } else { &zeros });
        let mut r_xh = vec![0.0; e + h];
        for k in 0..h {
            let r_c = r_h[step][k] + r_c_carry[k];
            let denom = stabilize(t.cells[step][k], eps);
            r_c_carry[k] = t.forget_gate[step][k] * c_prev[k] / denom * r_c;
            let r_g = t.input_gate[step][k] * t.candidate[step][k] / denom * r_c;

            let row = &g_rows[k * (e + h)..(k + 1) * (e + h)];
            let g_denom = stabilize(row.iter().zip(&xh).map(|(w, x)| w * x).sum(), eps);
            for j in 0..e + h {
                r_xh[j] += row[j] * xh[j] / g_denom * r_g;
            }
        }
        positions[step] = r_xh[..e].iter().sum();
        if step > 0 {
            for k in 0..h {
                r_h[step - 1][k] += r_xh[e + k];
            }
        }
    }
    Ok((positions, t.logit))
}

pub fn lrp_lstm(model: &RecurrentModel, record: &EventSequence, vocab: &Vocabulary, eps: f64) -> Result<Attribution> {
    let seq = encode_indices(record, vocab)?;
    let (scores, logit) = lrp_relevance(model, &seq.indices, eps)?;
    Ok(Attribution {
        method: Method::Lrp,
        target: record.id,
        space: UnitSpace::Sequence,
        scores,
        baseline: None,
        output: Some(logit),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::TokenCategory;
    use crate::recurrent::{init_model, RecurrentConfig};

    fn model(attention: Attention) -> RecurrentModel {
        let vocab = Vocabulary::new([
            ("a", TokenCategory::Adverse),
            ("h", TokenCategory::Helper),
            ("n", TokenCategory::Noise),
        ])
        .unwrap();
        let cfg = RecurrentConfig { embedding_dim: 4, hidden_dim: 5, seed: 9, ..RecurrentConfig::right_sized(attention) };
        let mut m = init_model(&cfg, &vocab).unwrap();
        for b in m.params.blocks_mut() {
            b.values.iter_mut().for_each(|x| *x *= 3.0);
        }
        m.params.embedding[..4].iter_mut().for_each(|x| *x = 0.0);
        m
    }

    #[test]
    fn linear_surrogate_closed_form() {
        let r = lrp_linear(&[2.0, -1.0], &[1.0, 1.0], 1e-12).unwrap();
        assert!((r[0] - 2.0).abs() < 1e-9 && (r[1] + 1.0).abs() < 1e-9);
        let coarse = lrp_linear(&[2.0, -1.0], &[1.0, 1.0], 1e-2).unwrap();
        assert!((coarse[0] - 2.0).abs() > (r[0] - 2.0).abs());
    }

    #[test]
    fn conserves_logit() {
        for mode in [Attention::DotProduct, Attention::SelfAttention, Attention::None] {
            let m = model(mode);
            for seq in [vec![1, 2, 3, 3, 1], vec![3], vec![2, 2, 1, 3, 3, 3, 1]] {
                let (r, logit) = lrp_relevance(&m, &seq, 1e-6).unwrap();
                let total: f64 = r.iter().sum();
                assert!((total - logit).abs() <= 0.05 * logit.abs() + 1e-5, "{mode:?}: {total} vs {logit}");
            }
        }
    }

    #[test]
    fn padding_positions_get_nothing() {
        let m = model(Attention::DotProduct);
        let (r, _) = lrp_relevance(&m, &[0, 1, 0, 2, 0], DEFAULT_LRP_EPS).unwrap();
        assert_eq!([r[0], r[2], r[4]], [0.0; 3]);
        assert!(r[1] != 0.0 && r[3] != 0.0);
    }

    #[test]
    fn zero_embeddings_give_zero_relevance() {
        let mut m = model(Attention::SelfAttention);
        m.params.embedding.iter_mut().for_each(|x| *x = 0.0);
        let (r, _) = lrp_relevance(&m, &[1, 2, 3], DEFAULT_LRP_EPS).unwrap();
        assert!(r.iter().all(|&x| x == 0.0));
    }

    #[test]
    fn rejects_bad_eps() {
        assert!(matches!(lrp_relevance(&model(Attention::None), &[1], 0.0), Err(Error::InvalidConfig(_))));
    }
}
