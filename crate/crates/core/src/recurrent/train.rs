use rand::seq::SliceRandom;
use rayon::prelude::*;

use super::{gradients, Params, RecurrentConfig, RecurrentModel};
use crate::corpus::Dataset;
use crate::error::{Error, Result};
use crate::evalx::{auc, track_epoch, EpochTracker, HistoryRow, TrainingHistory};
use crate::seed::rng_for;

/// Adaptive-moment optimizer state.
#[derive(Clone, Debug)]
pub struct Adam {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: i32,
    m: Params,
    v: Params,
}

impl Adam {
    pub fn new(params: &Params, learning_rate: f64) -> Self {
        Self {
            learning_rate,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: params.zeros_like(),
            v: params.zeros_like(),
        }
    }

    pub fn update(&mut self, params: &mut Params, grad: &Params) {
        self.step += 1;
        let c1 = 1.0 - self.beta1.powi(self.step);
        let c2 = 1.0 - self.beta2.powi(self.step);
        let blocks = params.blocks_mut().into_iter().zip(grad.blocks()).zip(self.m.blocks_mut()).zip(self.v.blocks_mut());
        for (((p, g), m), v) in blocks {
            for k in 0..p.values.len() {
                let gk = g.values[k];
                m.values[k] = self.beta1 * m.values[k] + (1.0 - self.beta1) * gk;
                v.values[k] = self.beta2 * v.values[k] + (1.0 - self.beta2) * gk * gk;
                let m_hat = m.values[k] / c1;
                let v_hat = v.values[k] / c2;
                p.values[k] -= self.learning_rate * m_hat / (v_hat.sqrt() + self.eps);
            }
        }
    }
}

/// Mini-batch training on mean cross-entropy. Each epoch shuffles the
/// records (ordered by id first, so input order does not matter) with a
/// permutation derived from the seed and the epoch number. Returns the
/// epoch snapshot with the best validation AUC and the full history.
pub fn fit(
    model: &RecurrentModel,
    train: &Dataset,
    val: &Dataset,
    config: &RecurrentConfig,
    mut tracker: Option<&mut EpochTracker>,
) -> Result<(RecurrentModel, TrainingHistory)> {
    config.validate()?;
    if config.embedding_dim != model.embedding_dim()
        || config.hidden_dim != model.hidden_dim()
        || config.attention != model.attention()
    {
        return Err(Error::InvalidConfig("training config does not match the model architecture".into()));
    }
    model.check_vocabulary(&train.vocabulary)?;
    model.check_vocabulary(&val.vocabulary)?;
    train.require_both_classes()?;
    val.require_both_classes()?;

    let mut order: Vec<usize> = (0..train.len()).collect();
    order.sort_by_key(|&i| train.records[i].id);
    let sequences = train.index_sequences()?;
    let examples: Vec<(&[usize], u8)> =
        order.iter().map(|&i| (sequences[i].indices.as_slice(), train.records[i].label)).collect();
    let val_sequences = val.index_sequences()?;
    let val_labels = val.labels();

    let mut current = model.clone();
    current.config = config.clone();
    let mut adam = Adam::new(&current.params, config.learning_rate);
    let mut history = TrainingHistory::default();
    let mut best: Option<(f64, RecurrentModel)> = None;

    for epoch in 1..=config.epochs {
        let mut perm: Vec<usize> = (0..examples.len()).collect();
        perm.shuffle(&mut rng_for(config.seed, &format!("recurrent/shuffle/{epoch}")));
        let mut loss_sum = 0.0;
        for chunk in perm.chunks(config.batch_size) {
            let batch: Vec<(&[usize], u8)> = chunk.iter().map(|&i| examples[i]).collect();
            let (loss, grad) = gradients(&current, &batch)?;
            loss_sum += loss * chunk.len() as f64;
            adam.update(&mut current.params, &grad);
        }
        let train_loss = loss_sum / examples.len() as f64;
        if !train_loss.is_finite() || !current.params.is_finite() {
            return Err(Error::Numeric(format!("training diverged at epoch {epoch}")));
        }

        let (val_auc, val_similarity) = match tracker.as_deref_mut() {
            Some(t) => {
                let point = track_epoch(t, &current, epoch, val)?;
                (point.auc, Some(point.similarity))
            }
            None => {
                let scores = val_sequences
                    .par_iter()
                    .map(|s| current.logit(&s.indices))
                    .collect::<Result<Vec<_>>>()?;
                (auc(&val_labels, &scores)?, None)
            }
        };
        history.rows.push(HistoryRow { epoch, train_loss, val_auc, val_similarity });
        if best.as_ref().is_none_or(|(b, _)| val_auc > *b) {
            best = Some((val_auc, current.clone()));
        }
    }

    let out = best.map(|(_, m)| m).unwrap_or_else(|| model.clone());
    Ok((out, history))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::corpus::{Event, EventSequence, Split, TokenCategory, Vocabulary};
    use crate::recurrent::{init_model, Attention};

    fn toy(split: Split, n: u64) -> Dataset {
        let vocab = Vocabulary::new([("a", TokenCategory::Adverse), ("n", TokenCategory::Noise)]).unwrap();
        let records = (0..n)
            .map(|id| {
                let label = (id % 2) as u8;
                let mut events = vec![Event::new("n", 2), Event::new("n", 1)];
                if label == 1 {
                    events.insert((id % 3) as usize, Event::new("a", 0));
                }
                EventSequence { id, label, pathway: None, drivers: BTreeSet::new(), events }
            })
            .collect();
        Dataset::new(vocab, records, split).unwrap()
    }

    fn config(epochs: usize) -> RecurrentConfig {
        RecurrentConfig {
            embedding_dim: 4,
            hidden_dim: 4,
            learning_rate: 0.05,
            epochs,
            batch_size: 8,
            ..RecurrentConfig::right_sized(Attention::DotProduct)
        }
    }

    #[test]
    fn zero_epochs_leave_model_untouched() {
        let ds = toy(Split::Train, 20);
        let m = init_model(&config(0), &ds.vocabulary).unwrap();
        let (out, history) = fit(&m, &ds, &ds, &config(0), None).unwrap();
        assert_eq!(out.params, m.params);
        assert!(history.rows.is_empty());
    }

    #[test]
    fn learns_presence_task() {
        let ds = toy(Split::Train, 60);
        let cfg = config(25);
        let m = init_model(&cfg, &ds.vocabulary).unwrap();
        let (out, history) = fit(&m, &ds, &ds, &cfg, None).unwrap();
        assert_eq!(history.rows.len(), 25);
        assert!(history.rows.iter().map(|r| r.val_auc).fold(0.0, f64::max) > 0.99);
        assert!(out.params.embedding[..4].iter().all(|&x| x == 0.0));
    }

    #[test]
    fn input_order_does_not_matter() {
        let ds = toy(Split::Train, 30);
        let mut reversed = ds.clone();
        reversed.records.reverse();
        let cfg = config(3);
        let m = init_model(&cfg, &ds.vocabulary).unwrap();
        let (a, ha) = fit(&m, &ds, &ds, &cfg, None).unwrap();
        let (b, hb) = fit(&m, &reversed, &ds, &cfg, None).unwrap();
        assert_eq!(a.params, b.params);
        assert_eq!(ha, hb);
    }
}
