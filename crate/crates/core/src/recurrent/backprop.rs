use super::{dot, Attention, ForwardTrace, Params, RecurrentModel};
use crate::error::{Error, Result};

fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

/// Mean binary cross-entropy (plus the L2 term) over a batch of
/// `(indices, label)` pairs, and its exact gradient.
pub fn gradients(model: &RecurrentModel, batch: &[(&[usize], u8)]) -> Result<(f64, Params)> {
    if batch.is_empty() {
        return Err(Error::InvalidConfig("gradient batch is empty".into()));
    }
    let scale = 1.0 / batch.len() as f64;
    let mut grad = model.params.zeros_like();
    let mut loss = 0.0;
    for (indices, label) in batch {
        let trace = model.forward(indices)?;
        let y = f64::from(*label);
        loss += scale * (softplus(trace.logit) - y * trace.logit);
        backward(model, &trace, scale * (trace.probability - y), &mut grad);
    }
    let l2 = model.config.l2_penalty;
    if l2 > 0.0 {
        loss += 0.5 * l2 * model.params.squared_norm();
        for (g, p) in grad.blocks_mut().into_iter().zip(model.params.blocks()) {
            for (gv, pv) in g.values.iter_mut().zip(p.values) {
                *gv += l2 * pv;
            }
        }
    }
    let e = model.embedding_dim();
    grad.embedding[..e].iter_mut().for_each(|x| *x = 0.0);
    Ok((loss, grad))
}

/// `g += a bᵀ` for row-major `g` with `b.len()` columns.
fn outer_add(g: &mut [f64], a: &[f64], b: &[f64]) {
    let cols = b.len();
    for (r, &ar) in a.iter().enumerate() {
        if ar == 0.0 {
            continue;
        }
        for (gv, bv) in g[r * cols..(r + 1) * cols].iter_mut().zip(b) {
            *gv += ar * bv;
        }
    }
}

/// `out += Wᵀ a` for row-major `W` with `out.len()` columns.
fn matvec_t_add(w: &[f64], a: &[f64], out: &mut [f64]) {
    let cols = out.len();
    for (r, &ar) in a.iter().enumerate() {
        if ar == 0.0 {
            continue;
        }
        for (o, wv) in out.iter_mut().zip(&w[r * cols..(r + 1) * cols]) {
            *o += ar * wv;
        }
    }
}

fn backward(model: &RecurrentModel, t: &ForwardTrace, dlogit: f64, grad: &mut Params) {
    let p = &model.params;
    let (e, h) = (model.embedding_dim(), model.hidden_dim());
    let n = t.len();

    grad.out_bias[0] += dlogit;
    for k in 0..h {
        grad.out_weight[k] += dlogit * t.context[k];
    }
    let dctx: Vec<f64> = p.out_weight.iter().map(|w| w * dlogit).collect();

    // Gradient reaching each hidden state from the pooling layer.
    let mut dh_pool = vec![vec![0.0; h]; n];
    match model.attention() {
        Attention::None => dh_pool[n - 1].copy_from_slice(&dctx),
        Attention::DotProduct => {
            let last = &t.hidden[n - 1];
            let dalpha: Vec<f64> = t.hidden.iter().map(|hi| dot(&dctx, hi)).collect();
            let mean = dot(&t.alpha, &dalpha);
            for i in 0..n {
                let ds = t.alpha[i] * (dalpha[i] - mean);
                for k in 0..h {
                    dh_pool[i][k] += t.alpha[i] * dctx[k] + ds * last[k];
                    dh_pool[n - 1][k] += ds * t.hidden[i][k];
                }
            }
        }
        Attention::SelfAttention => {
            let inv_sqrt = 1.0 / (h as f64).sqrt();
            let project = |w: &[f64]| -> Vec<Vec<f64>> {
                t.hidden
                    .iter()
                    .map(|hi| {
                        let mut out = vec![0.0; h];
                        super::matvec(w, hi, &mut out);
                        out
                    })
                    .collect()
            };
            let (q, k, v) = (project(&p.query), project(&p.key), project(&p.value));
            let a = &t.attention_matrix;
            // Every per-position output o_i receives dctx / n.
            let d_o: Vec<f64> = dctx.iter().map(|d| d / n as f64).collect();
            let mut dq = vec![vec![0.0; h]; n];
            let mut dk = vec![vec![0.0; h]; n];
            let mut dv = vec![vec![0.0; h]; n];
            for i in 0..n {
                let row = &a[i * n..(i + 1) * n];
                let da: Vec<f64> = v.iter().map(|vj| dot(&d_o, vj)).collect();
                let mean = dot(row, &da);
                for j in 0..n {
                    for c in 0..h {
                        dv[j][c] += row[j] * d_o[c];
                    }
                    let ds = row[j] * (da[j] - mean) * inv_sqrt;
                    for c in 0..h {
                        dq[i][c] += ds * k[j][c];
                        dk[j][c] += ds * q[i][c];
                    }
                }
            }
            for i in 0..n {
                outer_add(&mut grad.query, &dq[i], &t.hidden[i]);
                outer_add(&mut grad.key, &dk[i], &t.hidden[i]);
                outer_add(&mut grad.value, &dv[i], &t.hidden[i]);
                matvec_t_add(&p.query, &dq[i], &mut dh_pool[i]);
                matvec_t_add(&p.key, &dk[i], &mut dh_pool[i]);
                matvec_t_add(&p.value, &dv[i], &mut dh_pool[i]);
            }
        }
    }

    let zeros = vec![0.0; h];
    let mut dh_next = vec![0.0; h];
    let mut dc_next = vec![0.0; h];
    let mut dz = vec![0.0; 4 * h];
    let mut xh = vec![0.0; e + h];
    for step in (0..n).rev() {
        let (gi, gf, gg, go) = (&t.input_gate[step], &t.forget_gate[step], &t.candidate[step], &t.output_gate[step]);
        let c = &t.cells[step];
        let c_prev = if step > 0 { &t.cells[step - 1] } else { &zeros };
        let h_prev = if step > 0 { &t.hidden[step - 1] } else { &zeros };
        for k in 0..h {
            let dh = dh_pool[step][k] + dh_next[k];
            let tc = c[k].tanh();
            let dc = dc_next[k] + dh * go[k] * (1.0 - tc * tc);
            dz[k] = dc * gg[k] * gi[k] * (1.0 - gi[k]);
            dz[h + k] = dc * c_prev[k] * gf[k] * (1.0 - gf[k]);
            dz[2 * h + k] = dc * gi[k] * (1.0 - gg[k] * gg[k]);
            dz[3 * h + k] = dh * tc * go[k] * (1.0 - go[k]);
            dc_next[k] = dc * gf[k];
        }
        xh[..e].copy_from_slice(&t.embeddings[step]);
        xh[e..].copy_from_slice(h_prev);
        outer_add(&mut grad.gates, &dz, &xh);
        for (gb, d) in grad.gate_bias.iter_mut().zip(&dz) {
            *gb += d;
        }
        let mut dxh = vec![0.0; e + h];
        matvec_t_add(&p.gates, &dz, &mut dxh);
        let idx = t.indices[step];
        for (ge, d) in grad.embedding[idx * e..(idx + 1) * e].iter_mut().zip(&dxh[..e]) {
            *ge += d;
        }
        dh_next.copy_from_slice(&dxh[e..]);
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{TokenCategory, Vocabulary};
    use crate::recurrent::{init_model, RecurrentConfig};

    fn model(attention: Attention, l2: f64) -> RecurrentModel {
        let vocab = Vocabulary::new([
            ("a", TokenCategory::Adverse),
            ("h", TokenCategory::Helper),
            ("u", TokenCategory::Unhelper),
            ("n", TokenCategory::Noise),
        ])
        .unwrap();
        let cfg = RecurrentConfig {
            embedding_dim: 3,
            hidden_dim: 4,
            l2_penalty: l2,
            seed: 17,
            ..RecurrentConfig::right_sized(attention)
        };
        let mut m = init_model(&cfg, &vocab).unwrap();
        // Larger weights than the default init exercise the nonlinearities.
        for block in m.params.blocks_mut() {
            block.values.iter_mut().for_each(|x| *x *= 2.5);
        }
        m.params.out_bias[0] = 0.3;
        m
    }

    fn loss(m: &RecurrentModel, batch: &[(&[usize], u8)]) -> f64 {
        gradients(m, batch).unwrap().0
    }

    /// Central finite differences over every parameter of every block.
    fn check(attention: Attention, l2: f64) {
        let m = model(attention, l2);
        let batch: [(&[usize], u8); 2] = [(&[1, 3, 0, 2, 4], 1), (&[4, 2, 2], 0)];
        let (_, analytic) = gradients(&m, &batch).unwrap();
        let step = 1e-5;
        let e = m.embedding_dim();
        for (bi, block) in analytic.blocks().into_iter().enumerate() {
            let mut worst: f64 = 0.0;
            for k in 0..block.values.len() {
                let mut plus = m.clone();
                plus.params.blocks_mut()[bi].values[k] += step;
                let mut minus = m.clone();
                minus.params.blocks_mut()[bi].values[k] -= step;
                let numeric = if block.name == "embedding" && k < e {
                    0.0 // padding row is frozen
                } else {
                    (loss(&plus, &batch) - loss(&minus, &batch)) / (2.0 * step)
                };
                let a = block.values[k];
                let scale = a.abs().max(numeric.abs());
                if scale > 1e-7 {
                    worst = worst.max((a - numeric).abs() / scale);
                }
            }
            assert!(worst < 1e-4, "{attention:?} block {} relative error {worst}", block.name);
        }
    }

    #[test]
    fn gradient_check_dot_product() {
        check(Attention::DotProduct, 0.0);
    }

    #[test]
    fn gradient_check_self_attention() {
        check(Attention::SelfAttention, 0.0);
    }

    #[test]
    fn gradient_check_last_hidden_with_l2() {
        check(Attention::None, 0.01);
    }

    #[test]
    fn duplicated_record_keeps_gradient() {
        let m = model(Attention::DotProduct, 0.0);
        let seq: &[usize] = &[1, 2, 3];
        let (l1, g1) = gradients(&m, &[(seq, 1)]).unwrap();
        let (l2, g2) = gradients(&m, &[(seq, 1), (seq, 1)]).unwrap();
        assert!((l1 - l2).abs() < 1e-12);
        for (a, b) in g1.blocks().iter().zip(g2.blocks()) {
            for (x, y) in a.values.iter().zip(b.values) {
                assert!((x - y).abs() < 1e-12);
            }
        }
        assert!(g1.embedding[..3].iter().all(|&x| x == 0.0));
    }
}
