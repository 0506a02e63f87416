use rand::seq::index;

use super::Dataset;
use crate::error::{Error, Result};
use crate::seed::rng_for;

/// Keeps every positive and a seeded uniform subset of negatives so that the
/// positive fraction reaches at least `target_fraction`. Record order is kept.
pub fn down_sample_negatives(ds: &Dataset, target_fraction: f64, seed: u64) -> Result<Dataset> {
    if !(target_fraction > 0.0 && target_fraction <= 1.0) {
        return Err(Error::InvalidConfig(format!(
            "target positive fraction {target_fraction} outside (0, 1]"
        )));
    }
    ds.require_both_classes()?;

    let negatives: Vec<usize> = (0..ds.len()).filter(|&i| !ds.records[i].is_positive()).collect();
    let n_pos = ds.len() - negatives.len();
    // Largest negative count keeping n_pos / (n_pos + n_neg) >= target.
    let ratio = n_pos as f64 * (1.0 - target_fraction) / target_fraction;
    let keep = ((ratio + 1e-9).floor() as usize).min(negatives.len());

    let mut rng = rng_for(seed, "down_sample_negatives");
    let mut kept = vec![false; ds.len()];
    for i in index::sample(&mut rng, negatives.len(), keep).iter() {
        kept[negatives[i]] = true;
    }
    let records = ds
        .records
        .iter()
        .enumerate()
        .filter(|(i, r)| r.is_positive() || kept[*i])
        .map(|(_, r)| r.clone())
        .collect();
    Ok(Dataset { vocabulary: ds.vocabulary.clone(), records, split: ds.split })
}
