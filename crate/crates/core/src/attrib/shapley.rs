use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};
use rand::seq::index;
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seed::rng_for;

/// A cooperative game over `n_units` players; `value` receives the
/// presence mask of a coalition.
pub trait CoalitionGame: Sync {
    fn n_units(&self) -> usize;
    fn value(&self, present: &[bool]) -> Result<f64>;

    /// Values of many coalitions; games may override this to share work.
    fn values(&self, coalitions: &[Vec<bool>]) -> Result<Vec<f64>> {
        coalitions.iter().map(|c| self.value(c)).collect()
    }
}

/// Game defined by a closure over presence masks.
pub struct FnGame<F> {
    n: usize,
    f: F,
}

impl<F: Fn(&[bool]) -> f64 + Sync> FnGame<F> {
    pub fn new(n: usize, f: F) -> Self {
        Self { n, f }
    }
}

impl<F: Fn(&[bool]) -> f64 + Sync> CoalitionGame for FnGame<F> {
    fn n_units(&self) -> usize {
        self.n
    }

    fn value(&self, present: &[bool]) -> Result<f64> {
        Ok((self.f)(present))
    }
}

/// Black-box model over feature vectors; absent features take each
/// background row's value and the results are averaged.
pub struct TabularGame<'a, F> {
    predict: F,
    instance: &'a [f64],
    background: &'a [Vec<f64>],
}

impl<'a, F: Fn(&[f64]) -> Result<f64> + Sync> TabularGame<'a, F> {
    pub fn new(predict: F, instance: &'a [f64], background: &'a [Vec<f64>]) -> Result<Self> {
        if background.is_empty() {
            return Err(Error::InvalidConfig("background set is empty".into()));
        }
        if let Some(row) = background.iter().find(|b| b.len() != instance.len()) {
            return Err(Error::Dimension { expected: instance.len(), got: row.len() });
        }
        Ok(Self { predict, instance, background })
    }
}

impl<F: Fn(&[f64]) -> Result<f64> + Sync> CoalitionGame for TabularGame<'_, F> {
    fn n_units(&self) -> usize {
        self.instance.len()
    }

    fn value(&self, present: &[bool]) -> Result<f64> {
        let mut x = vec![0.0; self.instance.len()];
        let mut total = 0.0;
        for row in self.background {
            for (j, slot) in x.iter_mut().enumerate() {
                *slot = if present[j] { self.instance[j] } else { row[j] };
            }
            total += (self.predict)(&x)?;
        }
        Ok(total / self.background.len() as f64)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ShapConfig {
    /// Coalitions drawn when sampling (counting both halves of each pair).
    pub coalition_samples: usize,
    /// Ridge penalty on the surrogate coefficients.
    pub l2: f64,
    pub seed: u64,
    /// Enumerate every coalition when the unit count is at most this.
    pub exact_up_to: usize,
}

impl Default for ShapConfig {
    fn default() -> Self {
        Self { coalition_samples: 2048, l2: 0.0, seed: 0, exact_up_to: 13 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ShapValues {
    pub phi: Vec<f64>,
    /// Value of the empty coalition.
    pub baseline: f64,
    /// Value of the full coalition.
    pub output: f64,
}

fn binomial(n: usize, k: usize) -> f64 {
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

fn kernel_weight(m: usize, s: usize) -> f64 {
    (m - 1) as f64 / (binomial(m, s) * s as f64 * (m - s) as f64)
}

fn mask_from_bits(bits: u64, m: usize) -> Vec<bool> {
    (0..m).map(|j| bits >> j & 1 == 1).collect()
}

/// Weighted coalitions, excluding the empty and full ones.
fn enumerate_coalitions(m: usize) -> Vec<(Vec<bool>, f64)> {
    (1..(1u64 << m) - 1)
        .map(|bits| {
            let s = bits.count_ones() as usize;
            (mask_from_bits(bits, m), kernel_weight(m, s))
        })
        .collect()
}

/// Calls `f` with every size-`s` subset of `0..m` as a presence mask.
fn for_each_subset(m: usize, s: usize, mut f: impl FnMut(Vec<bool>)) {
    let mut idx: Vec<usize> = (0..s).collect();
    loop {
        let mut mask = vec![false; m];
        idx.iter().for_each(|&j| mask[j] = true);
        f(mask);
        // Advance to the next combination in lexicographic order.
        let Some(pos) = (0..s).rev().find(|&p| idx[p] < m - s + p) else {
            return;
        };
        idx[pos] += 1;
        for p in pos + 1..s {
            idx[p] = idx[p - 1] + 1;
        }
    }
}

/// Coalition sizes are handled in complementary pairs (s, m − s), smallest
/// first. A pair whose share of the budget covers all of its coalitions is
/// enumerated with exact kernel weights; the remaining pairs are sampled
/// (size by kernel mass, subset uniformly, complement alongside) and share
/// their kernel mass evenly across draws. Repeated draws are merged.
fn sample_coalitions(m: usize, cfg: &ShapConfig) -> Vec<(Vec<bool>, f64)> {
    let pair_mass = |s: usize| {
        let one = 1.0 / (s * (m - s)) as f64;
        if 2 * s == m { one } else { 2.0 * one }
    };
    let pair_count = |s: usize| binomial(m, s) * if 2 * s == m { 1.0 } else { 2.0 };
    let pairs: Vec<usize> = (1..=m / 2).collect();

    let mut rows: Vec<(Vec<bool>, f64)> = Vec::new();
    let mut budget = cfg.coalition_samples as f64;
    let mut first_sampled = 0;
    while first_sampled < pairs.len() {
        let s = pairs[first_sampled];
        let rest: f64 = pairs[first_sampled..].iter().map(|&p| pair_mass(p)).sum();
        if budget * pair_mass(s) / rest < pair_count(s) {
            break;
        }
        for size in if 2 * s == m { vec![s] } else { vec![s, m - s] } {
            let w = kernel_weight(m, size);
            for_each_subset(m, size, |mask| rows.push((mask, w)));
        }
        budget -= pair_count(s);
        first_sampled += 1;
    }
    let sampled = &pairs[first_sampled..];
    if sampled.is_empty() {
        return rows;
    }

    let masses: Vec<f64> = sampled.iter().map(|&s| pair_mass(s)).collect();
    let total: f64 = masses.iter().sum();
    let draws = ((budget / 2.0).ceil() as usize).max(1);
    // Kernel mass of the sampled sizes, in the units of `kernel_weight`.
    let weight = (m - 1) as f64 * total / (2 * draws) as f64;
    let mut rng = rng_for(cfg.seed, "kernel_shap/coalitions");
    let mut slots: HashMap<Vec<bool>, usize> = HashMap::new();
    let mut push = |mask: Vec<bool>| match slots.get(&mask) {
        Some(&k) => rows[k].1 += weight,
        None => {
            slots.insert(mask.clone(), rows.len());
            rows.push((mask, weight));
        }
    };
    for _ in 0..draws {
        let mut u = rng.random::<f64>() * total;
        let mut s = sampled[sampled.len() - 1];
        for (k, mass) in masses.iter().enumerate() {
            if u < *mass {
                s = sampled[k];
                break;
            }
            u -= mass;
        }
        // Either side of the pair is equally likely to be drawn first.
        let size = if rng.random::<bool>() { s } else { m - s };
        let mut mask = vec![false; m];
        for j in index::sample(&mut rng, m, size) {
            mask[j] = true;
        }
        let complement = mask.iter().map(|b| !b).collect();
        push(mask);
        push(complement);
    }
    rows
}

/// KernelSHAP: weighted least-squares fit of an additive surrogate over
/// coalitions, with `Σφ = v(full) − v(empty)` imposed exactly by
/// eliminating the last unit.
pub fn kernel_shap(game: &dyn CoalitionGame, cfg: &ShapConfig) -> Result<ShapValues> {
    let m = game.n_units();
    if m == 0 {
        return Err(Error::DegenerateInstance);
    }
    let output = game.value(&vec![true; m])?;
    let baseline = game.value(&vec![false; m])?;
    let delta = output - baseline;
    if m == 1 {
        return Ok(ShapValues { phi: vec![delta], baseline, output });
    }

    let coalitions = if m <= cfg.exact_up_to {
        if m > 30 {
            return Err(Error::TooManyUnits { max: 30, got: m });
        }
        enumerate_coalitions(m)
    } else {
        if cfg.coalition_samples < 2 * m + 4 {
            return Err(Error::InvalidConfig(format!(
                "{} coalition samples for {m} units; need at least {}",
                cfg.coalition_samples,
                2 * m + 4
            )));
        }
        sample_coalitions(m, cfg)
    };

    // Normal equations over the first m-1 units after substituting
    // φ_last = delta − Σ φ_j.
    let k = m - 1;
    let mut ata = DMatrix::<f64>::zeros(k, k);
    let mut atb = DVector::<f64>::zeros(k);
    let mut row = vec![0.0; k];
    let (masks, weights): (Vec<Vec<bool>>, Vec<f64>) = coalitions.into_iter().unzip();
    let values = game.values(&masks)?;
    for ((mask, w), v) in masks.iter().zip(&weights).zip(values) {
        let last = f64::from(u8::from(mask[k]));
        let y = v - baseline - last * delta;
        for (j, r) in row.iter_mut().enumerate() {
            *r = f64::from(u8::from(mask[j])) - last;
        }
        for a in 0..k {
            if row[a] == 0.0 {
                continue;
            }
            let wa = w * row[a];
            atb[a] += wa * y;
            for b in 0..k {
                ata[(a, b)] += wa * row[b];
            }
        }
    }
    for j in 0..k {
        ata[(j, j)] += cfg.l2;
    }
    let solution = match ata.clone().cholesky() {
        Some(ch) => ch.solve(&atb),
        None => ata
            .svd(true, true)
            .solve(&atb, 1e-12)
            .map_err(|e| Error::Numeric(format!("kernel SHAP solve failed: {e}")))?,
    };
    let mut phi: Vec<f64> = solution.iter().copied().collect();
    let rest: f64 = phi.iter().sum();
    phi.push(delta - rest);
    if phi.iter().any(|v| !v.is_finite()) {
        return Err(Error::Numeric("non-finite Shapley estimate".into()));
    }
    Ok(ShapValues { phi, baseline, output })
}

pub const EXACT_SHAPLEY_MAX_UNITS: usize = 16;

/// Shapley values by enumerating every coalition (the oracle).
pub fn exact_shapley(game: &dyn CoalitionGame) -> Result<ShapValues> {
    let m = game.n_units();
    if m == 0 {
        return Err(Error::DegenerateInstance);
    }
    if m > EXACT_SHAPLEY_MAX_UNITS {
        return Err(Error::TooManyUnits { max: EXACT_SHAPLEY_MAX_UNITS, got: m });
    }
    let n_masks = 1usize << m;
    let values = (0..n_masks).map(|bits| game.value(&mask_from_bits(bits as u64, m))).collect::<Result<Vec<_>>>()?;

    // weight[s] = s! (m − s − 1)! / m!
    let weight: Vec<f64> = (0..m).map(|s| 1.0 / (m as f64 * binomial(m - 1, s))).collect();
    let mut phi = vec![0.0; m];
    for (bits, v) in values.iter().enumerate() {
        let s = bits.count_ones() as usize;
        for (j, p) in phi.iter_mut().enumerate() {
            if bits >> j & 1 == 0 {
                *p += weight[s] * (values[bits | 1 << j] - v);
            }
        }
    }
    Ok(ShapValues { phi, baseline: values[0], output: values[n_masks - 1] })
}
