use serde::{Deserialize, Serialize};

use crate::attrib::Attribution;
use crate::corpus::{Dataset, TokenCategory, Vocabulary};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ImportanceRow {
    pub token: String,
    pub category: TokenCategory,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

/// Token ranking, highest score first, ties by vocabulary index.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GlobalImportance {
    pub method: String,
    pub rows: Vec<ImportanceRow>,
}

impl GlobalImportance {
    /// Ranks per-token scores given in vocabulary order.
    pub fn from_scores(method: impl Into<String>, vocab: &Vocabulary, scores: &[f64]) -> Self {
        let mut order: Vec<usize> = (0..vocab.len()).collect();
        order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        let rows = order
            .into_iter()
            .enumerate()
            .map(|(rank, k)| ImportanceRow {
                token: vocab.entries()[k].name.clone(),
                category: vocab.entries()[k].category,
                score: scores[k],
                rank: rank + 1,
            })
            .collect();
        Self { method: method.into(), rows }
    }

    pub fn top(&self, n: usize) -> &[ImportanceRow] {
        &self.rows[..n.min(self.rows.len())]
    }

    pub fn mean_score(&self, informative: bool) -> f64 {
        let picked: Vec<f64> = self
            .rows
            .iter()
            .filter(|r| r.category.is_informative() == informative)
            .map(|r| r.score)
            .collect();
        if picked.is_empty() {
            0.0
        } else {
            picked.iter().sum::<f64>() / picked.len() as f64
        }
    }

    /// How many informative tokens occupy the top `n` ranks.
    pub fn informative_in_top(&self, n: usize) -> usize {
        self.top(n).iter().filter(|r| r.category.is_informative()).count()
    }
}

/// Mean |score| per token over every unit that maps to it. Tokens that
/// never appear score zero.
pub fn global_importance(ds: &Dataset, attributions: &[Attribution]) -> Result<GlobalImportance> {
    let first = attributions
        .first()
        .ok_or_else(|| Error::InvalidConfig("global importance needs at least one attribution".into()))?;
    if attributions.iter().any(|a| a.method != first.method) {
        return Err(Error::InvalidConfig("attributions mix several methods".into()));
    }
    let vocab = &ds.vocabulary;
    let mut sum = vec![0.0; vocab.len()];
    let mut count = vec![0usize; vocab.len()];
    for attr in attributions {
        let record = ds.record(attr.target).ok_or(Error::MissingAttribution(attr.target))?;
        for (token, score) in attr.unit_tokens(record, vocab)?.into_iter().zip(&attr.scores) {
            let k = vocab.index_of(token).expect("record tokens are validated") - 1;
            sum[k] += score.abs();
            count[k] += 1;
        }
    }
    let scores: Vec<f64> =
        sum.iter().zip(&count).map(|(&s, &c)| if c == 0 { 0.0 } else { s / c as f64 }).collect();
    Ok(GlobalImportance::from_scores(first.method.as_str(), vocab, &scores))
}

#[cfg(test)]
mod tests {
    use std::collections::BTreeSet;

    use super::*;
    use crate::attrib::{Method, UnitSpace};
    use crate::corpus::{Event, EventSequence, Split};

    fn ds() -> Dataset {
        let vocab = Vocabulary::new([("a", TokenCategory::Adverse), ("b", TokenCategory::Noise)]).unwrap();
        let records = (0..2)
            .map(|id| EventSequence {
                id,
                label: 0,
                pathway: None,
                drivers: BTreeSet::new(),
                events: vec![Event::new("a", 1), Event::new("b", 0)],
            })
            .collect();
        Dataset::new(vocab, records, Split::Validation).unwrap()
    }

    fn attr(id: u64, scores: [f64; 2]) -> Attribution {
        Attribution {
            method: Method::KernelShap,
            target: id,
            space: UnitSpace::Sequence,
            scores: scores.to_vec(),
            baseline: None,
            output: None,
        }
    }

    #[test]
    fn magnitude_decides_rank() {
        let g = global_importance(&ds(), &[attr(0, [2.0, -3.0])]).unwrap();
        assert_eq!(g.rows[0].token, "b");
        assert_eq!(g.rows[1].token, "a");
    }

    #[test]
    fn absolute_value_before_mean() {
        let g = global_importance(&ds(), &[attr(0, [1.0, 0.0]), attr(1, [-1.0, 0.0])]).unwrap();
        assert_eq!(g.rows[0].token, "a");
        assert_eq!(g.rows[0].score, 1.0);
    }

    #[test]
    fn ranking_ignores_positive_rescaling() {
        let a = global_importance(&ds(), &[attr(0, [0.3, -0.2]), attr(1, [0.1, 0.5])]).unwrap();
        let b = global_importance(&ds(), &[attr(0, [3.0, -2.0]), attr(1, [1.0, 5.0])]).unwrap();
        let names = |g: &GlobalImportance| g.rows.iter().map(|r| r.token.clone()).collect::<Vec<_>>();
        assert_eq!(names(&a), names(&b));
    }
}
