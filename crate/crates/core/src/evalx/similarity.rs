use std::collections::{BTreeSet, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::attrib::Attribution;
use crate::corpus::{Dataset, EventSequence, Vocabulary};
use crate::error::{Error, Result};

/// Fraction of `ground_truth` found among the `n` highest-ranked distinct
/// tokens, ranking units by |score| (ties by unit index). A token occurring
/// at several units is represented by its best-ranked occurrence. Returns
/// `None` when the ground truth is empty.
pub fn set_similarity(scores: &[f64], unit_tokens: &[&str], ground_truth: &BTreeSet<String>, n: usize) -> Option<f64> {
    if ground_truth.is_empty() {
        return None;
    }
    debug_assert_eq!(scores.len(), unit_tokens.len());
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].abs().total_cmp(&scores[a].abs()).then(a.cmp(&b)));

    let mut taken = HashSet::new();
    let mut hits = 0usize;
    for unit in order {
        if taken.len() == n {
            break;
        }
        let token = unit_tokens[unit];
        if taken.insert(token) && ground_truth.contains(token) {
            hits += 1;
        }
    }
    Some(hits as f64 / ground_truth.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SimilarityMode {
    /// Compare against the record's own drivers, `n = |drivers|`.
    SequenceSpace,
    /// Compare against every informative vocabulary token, `n` = their count.
    CountSpace,
}

/// Similarity of one attribution under `mode`; `None` marks an excluded
/// observation (empty ground truth).
pub fn similarity_for(
    attr: &Attribution,
    record: &EventSequence,
    vocab: &Vocabulary,
    mode: SimilarityMode,
) -> Result<Option<(f64, usize)>> {
    let tokens = attr.unit_tokens(record, vocab)?;
    let truth = match mode {
        SimilarityMode::SequenceSpace => record.drivers.clone(),
        SimilarityMode::CountSpace => vocab.informative_tokens(),
    };
    let n = truth.len();
    Ok(set_similarity(&attr.scores, &tokens, &truth, n).map(|s| (s, n)))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimilarityRow {
    pub id: u64,
    pub similarity: f64,
    pub n: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SetSimilarityReport {
    pub rows: Vec<SimilarityRow>,
    pub mean: f64,
    pub min: f64,
    pub max: f64,
    pub excluded: usize,
}

impl SetSimilarityReport {
    pub fn from_rows(rows: Vec<SimilarityRow>, excluded: usize) -> Self {
        let (mean, min, max) = if rows.is_empty() {
            (f64::NAN, f64::NAN, f64::NAN)
        } else {
            let sum: f64 = rows.iter().map(|r| r.similarity).sum();
            let min = rows.iter().map(|r| r.similarity).fold(f64::INFINITY, f64::min);
            let max = rows.iter().map(|r| r.similarity).fold(f64::NEG_INFINITY, f64::max);
            (sum / rows.len() as f64, min, max)
        };
        Self { rows, mean, min, max, excluded }
    }

    pub fn included(&self) -> usize {
        self.rows.len()
    }

    /// Counts per equal-width bin over `[0, 1]`; the last bin is closed.
    pub fn histogram(&self, bins: usize) -> Vec<usize> {
        let mut counts = vec![0usize; bins.max(1)];
        let last = counts.len() - 1;
        for r in &self.rows {
            let b = ((r.similarity * counts.len() as f64).floor() as usize).min(last);
            counts[b] += 1;
        }
        counts
    }
}

/// Scores every record of `ds` with its attribution (matched by id).
pub fn local_similarity_sweep(
    ds: &Dataset,
    attributions: &[Attribution],
    mode: SimilarityMode,
) -> Result<SetSimilarityReport> {
    let by_id: HashMap<u64, &Attribution> = attributions.iter().map(|a| (a.target, a)).collect();
    let mut rows = Vec::with_capacity(ds.len());
    let mut excluded = 0;
    for record in &ds.records {
        let attr = by_id.get(&record.id).ok_or(Error::MissingAttribution(record.id))?;
        match similarity_for(attr, record, &ds.vocabulary, mode)? {
            Some((similarity, n)) => rows.push(SimilarityRow { id: record.id, similarity, n }),
            None => excluded += 1,
        }
    }
    Ok(SetSimilarityReport::from_rows(rows, excluded))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attrib::{Method, UnitSpace};
    use crate::corpus::{Event, Split, TokenCategory};

    fn truth(tokens: &[&str]) -> BTreeSet<String> {
        tokens.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn overlap_fractions() {
        let units = ["a", "b", "c", "x", "y", "z"];
        let g = truth(&["a", "b", "c"]);
        assert_eq!(set_similarity(&[3.0, -2.0, 1.0, 0.1, 0.0, 0.2], &units, &g, 3), Some(1.0));
        assert_eq!(set_similarity(&[0.0, 0.0, 0.0, 5.0, 4.0, 3.0], &units, &g, 3), Some(0.0));
        let two_of_three = set_similarity(&[3.0, 2.0, 0.0, 0.1, 0.0, 2.5], &units, &g, 3).unwrap();
        assert!((two_of_three - 2.0 / 3.0).abs() < 1e-12);
        assert_eq!(set_similarity(&[1.0], &["a"], &BTreeSet::new(), 1), None);
    }

    #[test]
    fn ties_break_by_unit_index() {
        let units = ["x", "a"];
        assert_eq!(set_similarity(&[1.0, 1.0], &units, &truth(&["a"]), 1), Some(0.0));
        assert_eq!(set_similarity(&[1.0, -1.0], &["a", "x"], &truth(&["a"]), 1), Some(1.0));
    }

    #[test]
    fn duplicate_tokens_count_once() {
        // "n" occupies the top two positions but only one of the two slots.
        let units = ["n", "n", "a", "b"];
        let s = set_similarity(&[9.0, 8.0, 2.0, 1.0], &units, &truth(&["a", "b"]), 2).unwrap();
        assert_eq!(s, 0.5);
    }

    #[test]
    fn perfect_attributions_give_unit_mean() {
        let vocab = Vocabulary::new([
            ("a", TokenCategory::Adverse),
            ("u", TokenCategory::Unhelper),
            ("n", TokenCategory::Noise),
        ])
        .unwrap();
        let records = vec![
            EventSequence {
                id: 7,
                label: 1,
                pathway: None,
                drivers: truth(&["a"]),
                events: vec![Event::new("n", 2), Event::new("a", 1), Event::new("n", 0)],
            },
            EventSequence {
                id: 8,
                label: 0,
                pathway: None,
                drivers: truth(&[]),
                events: vec![Event::new("n", 0)],
            },
        ];
        let ds = Dataset::new(vocab, records, Split::Test).unwrap();
        let attrs: Vec<Attribution> = ds
            .records
            .iter()
            .map(|r| Attribution {
                method: Method::Lrp,
                target: r.id,
                space: UnitSpace::Sequence,
                scores: r.events.iter().map(|e| f64::from(u8::from(r.drivers.contains(&e.token)))).collect(),
                baseline: None,
                output: None,
            })
            .collect();
        let report = local_similarity_sweep(&ds, &attrs, SimilarityMode::SequenceSpace).unwrap();
        assert_eq!(report.mean, 1.0);
        assert_eq!(report.excluded, 1);
        assert_eq!(report.histogram(10).iter().sum::<usize>(), report.included());

        let err = local_similarity_sweep(&ds, &attrs[..1], SimilarityMode::SequenceSpace).unwrap_err();
        assert!(matches!(err, Error::MissingAttribution(8)));
    }
}
