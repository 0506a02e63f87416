//! Dual-metric training history: validation AUC next to set similarity on a
//! fixed validation subsample, one entry per epoch (or boosting checkpoint).

use std::collections::HashMap;
use std::io::{Read, Write};

use rand::seq::index;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{auc, similarity_for, SimilarityMode};
use crate::attrib::{Attribution, BackgroundSet, ShapConfig, UnitSpace};
use crate::corpus::{Dataset, EventSequence, Vocabulary};
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Attribution method evaluated at every tracked epoch.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "method")]
pub enum TrackMethod {
    KernelShap {
        config: ShapConfig,
        /// Count-space background; only tree models need it.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        background: Option<BackgroundSet>,
    },
    Lrp {
        eps: f64,
    },
    Attention,
}

/// A model whose predictions and explanations can be audited mid-training.
pub trait TrackedModel: Sync {
    fn predict_record(&self, record: &EventSequence, vocab: &Vocabulary) -> Result<f64>;
    fn explain_record(&self, record: &EventSequence, vocab: &Vocabulary, method: &TrackMethod) -> Result<Attribution>;
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct TrackPoint {
    pub epoch: usize,
    pub auc: f64,
    pub similarity: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochTracker {
    pub subsample: Vec<u64>,
    pub method: TrackMethod,
    pub history: Vec<TrackPoint>,
}

impl EpochTracker {
    /// Draws a seeded subsample of `size` validation ids.
    pub fn new(val: &Dataset, size: usize, method: TrackMethod, seed: u64) -> Result<Self> {
        if size == 0 || size > val.len() {
            return Err(Error::InvalidConfig(format!(
                "tracker subsample of {size} from {} validation records",
                val.len()
            )));
        }
        let mut rng = rng_for(seed, "tracker/subsample");
        let mut picked: Vec<usize> = index::sample(&mut rng, val.len(), size).into_vec();
        picked.sort_unstable();
        let subsample = picked.into_iter().map(|i| val.records[i].id).collect();
        Ok(Self { subsample, method, history: Vec::new() })
    }

    pub fn with_ids(subsample: Vec<u64>, method: TrackMethod) -> Self {
        Self { subsample, method, history: Vec::new() }
    }

    fn argmax(&self, key: impl Fn(&TrackPoint) -> f64) -> Option<usize> {
        let mut best: Option<&TrackPoint> = None;
        for p in &self.history {
            if best.is_none_or(|b| key(p) > key(b)) {
                best = Some(p);
            }
        }
        best.map(|p| p.epoch)
    }

    pub fn best_auc_epoch(&self) -> Option<usize> {
        self.argmax(|p| p.auc)
    }

    pub fn best_similarity_epoch(&self) -> Option<usize> {
        self.argmax(|p| p.similarity)
    }
}

/// Appends (epoch, full-validation AUC, mean subsample similarity).
pub fn track_epoch(
    tracker: &mut EpochTracker,
    model: &dyn TrackedModel,
    epoch: usize,
    val: &Dataset,
) -> Result<TrackPoint> {
    let vocab = &val.vocabulary;
    let scores = val
        .records
        .par_iter()
        .map(|r| model.predict_record(r, vocab))
        .collect::<Result<Vec<_>>>()?;
    let auc = auc(&val.labels(), &scores)?;

    let by_id: HashMap<u64, &EventSequence> = val.records.iter().map(|r| (r.id, r)).collect();
    let records = tracker
        .subsample
        .iter()
        .map(|id| by_id.get(id).copied().ok_or(Error::MissingAttribution(*id)))
        .collect::<Result<Vec<_>>>()?;
    let method = &tracker.method;
    let sims = records
        .par_iter()
        .map(|record| {
            let attr = model.explain_record(record, vocab, method)?;
            let mode = match attr.space {
                UnitSpace::Count => SimilarityMode::CountSpace,
                UnitSpace::Sequence => SimilarityMode::SequenceSpace,
            };
            Ok(similarity_for(&attr, record, vocab, mode)?.map(|(s, _)| s))
        })
        .collect::<Result<Vec<_>>>()?;
    let included: Vec<f64> = sims.into_iter().flatten().collect();
    let similarity = if included.is_empty() { f64::NAN } else { included.iter().sum::<f64>() / included.len() as f64 };

    let point = TrackPoint { epoch, auc, similarity };
    tracker.history.push(point);
    Ok(point)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HistoryRow {
    pub epoch: usize,
    pub train_loss: f64,
    pub val_auc: f64,
    pub val_similarity: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub rows: Vec<HistoryRow>,
}

impl TrainingHistory {
    fn argmax(&self, key: impl Fn(&HistoryRow) -> Option<f64>) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for row in &self.rows {
            if let Some(v) = key(row) {
                if best.is_none_or(|(_, b)| v > b) {
                    best = Some((row.epoch, v));
                }
            }
        }
        best.map(|(e, _)| e)
    }

    /// Earliest epoch with the highest validation AUC.
    pub fn best_auc_epoch(&self) -> Option<usize> {
        self.argmax(|r| Some(r.val_auc))
    }

    /// Earliest epoch with the highest tracked similarity.
    pub fn best_similarity_epoch(&self) -> Option<usize> {
        self.argmax(|r| r.val_similarity.filter(|s| !s.is_nan()))
    }

    pub fn row(&self, epoch: usize) -> Option<&HistoryRow> {
        self.rows.iter().find(|r| r.epoch == epoch)
    }

    /// Columns: epoch, train_loss, val_auc, val_similarity (blank when untracked).
    pub fn write_csv<W: Write>(&self, out: W) -> Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["epoch", "train_loss", "val_auc", "val_similarity"])?;
        for r in &self.rows {
            w.write_record([
                r.epoch.to_string(),
                format!("{:.10}", r.train_loss),
                format!("{:.10}", r.val_auc),
                r.val_similarity.map(|s| format!("{s:.10}")).unwrap_or_default(),
            ])?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_csv<R: Read>(input: R) -> Result<Self> {
        let mut rows = Vec::new();
        for (line, rec) in csv::Reader::from_reader(input).records().enumerate() {
            let rec = rec?;
            let field = |i: usize| rec.get(i).unwrap_or("");
            let parse_err = |what: &str| Error::Parse { line: line + 2, message: format!("bad {what}") };
            rows.push(HistoryRow {
                epoch: field(0).parse().map_err(|_| parse_err("epoch"))?,
                train_loss: field(1).parse().map_err(|_| parse_err("train_loss"))?,
                val_auc: field(2).parse().map_err(|_| parse_err("val_auc"))?,
                val_similarity: match field(3) {
                    "" => None,
                    s => Some(s.parse().map_err(|_| parse_err("val_similarity"))?),
                },
            });
        }
        Ok(Self { rows })
    }
}
