use std::cmp::Ordering;

use crate::error::{Error, Result};

fn check(labels: &[u8], scores: &[f64]) -> Result<(u64, u64)> {
    if labels.len() != scores.len() {
        return Err(Error::Dimension { expected: labels.len(), got: scores.len() });
    }
    if let Some(s) = scores.iter().find(|s| s.is_nan()) {
        return Err(Error::Numeric(format!("score {s} is not comparable")));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::UndefinedMetric(format!("AUC needs both classes ({pos} positives, {neg} negatives)")));
    }
    Ok((pos, neg))
}

/// ROC AUC as the Mann-Whitney statistic: the share of (positive, negative)
/// pairs ranked correctly, ties counting one half.
pub fn auc(labels: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = check(labels, scores)?;
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));

    // Twice the win count, so half-credits stay integral.
    let mut doubled_wins: u64 = 0;
    let mut negatives_below: u64 = 0;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        let (mut tied_pos, mut tied_neg) = (0u64, 0u64);
        while j < order.len() && scores[order[j]].total_cmp(&scores[order[i]]) == Ordering::Equal {
            if labels[order[j]] == 1 {
                tied_pos += 1;
            } else {
                tied_neg += 1;
            }
            j += 1;
        }
        doubled_wins += tied_pos * (2 * negatives_below + tied_neg);
        negatives_below += tied_neg;
        i = j;
    }
    Ok(doubled_wins as f64 / (2 * pos * neg) as f64)
}

/// O(P·N) pair enumeration; reference for [`auc`].
pub fn auc_brute_force(labels: &[u8], scores: &[f64]) -> Result<f64> {
    let (pos, neg) = check(labels, scores)?;
    let mut doubled_wins: u64 = 0;
    for (i, &li) in labels.iter().enumerate() {
        if li != 1 {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj == 1 {
                continue;
            }
            doubled_wins += match scores[i].partial_cmp(&scores[j]) {
                Some(Ordering::Greater) => 2,
                Some(Ordering::Equal) => 1,
                _ => 0,
            };
        }
    }
    Ok(doubled_wins as f64 / (2 * pos * neg) as f64)
}
