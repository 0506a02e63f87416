//! Synthetic claims-like datasets with designed ground truth.
//!
//! Every record is built around one *pathway*: a small multiset of adverse
//! (A), helper (H) and unhelper (U) tokens that fixes the probability of a
//! positive label. The remaining positions are filled with noise (N) tokens
//! that carry no signal. In the event-driven mode the label probability is
//! the pathway's base value; in the sequence-driven mode it is recomputed
//! from event recency with exponential decay:
//!
//! ```text
//! p = clamp(Σ_A exp(-a·gap) + Σ_H exp(-h·gap) - Σ_U exp(-u·gap), floor, ceiling)
//! ```
//!
//! The concrete A/H/U tokens drawn for a record are its driver set.

use std::collections::{BTreeMap, BTreeSet, HashSet};

use rand::seq::{index, SliceRandom};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::corpus::{Dataset, Event, EventSequence, Split, TokenCategory, Vocabulary, MAX_EVENTS};
use crate::error::{Error, Result};
use crate::seed::rng_for;

const ADVERSE: [&str; 10] = [
    "myocardial_infarction",
    "ventricular_hypertrophy",
    "pulmonary_hypertension",
    "heart_failure",
    "atrial_fibrillation",
    "cardiac_arrest",
    "aortic_stenosis",
    "cardiomyopathy",
    "unstable_angina",
    "stroke",
];
const HELPER: [&str; 10] = [
    "sleep_apnea",
    "alcoholism",
    "pneumonia",
    "obesity",
    "diabetes",
    "hypertension",
    "smoking",
    "chronic_kidney_disease",
    "copd",
    "hyperlipidemia",
];
const UNHELPER: [&str; 10] = [
    "diuretics",
    "arbs",
    "mras",
    "beta_blockers",
    "ace_inhibitors",
    "statins",
    "anticoagulants",
    "cardiac_rehab",
    "angioplasty",
    "bypass_surgery",
];
const NOISE: [&str; 15] = [
    "foot_pain",
    "eye_exam",
    "flu_shot",
    "dental_visit",
    "headache",
    "back_pain",
    "allergy",
    "rash",
    "common_cold",
    "ankle_sprain",
    "vision_test",
    "hearing_test",
    "ear_infection",
    "insomnia",
    "dermatitis",
];

/// The 45-token cardiovascular-themed vocabulary (10 A, 10 H, 10 U, 15 N).
pub fn synthetic_vocabulary() -> Vocabulary {
    let spec = ADVERSE
        .iter()
        .map(|n| (*n, TokenCategory::Adverse))
        .chain(HELPER.iter().map(|n| (*n, TokenCategory::Helper)))
        .chain(UNHELPER.iter().map(|n| (*n, TokenCategory::Unhelper)))
        .chain(NOISE.iter().map(|n| (*n, TokenCategory::Noise)));
    Vocabulary::new(spec).expect("static vocabulary is valid")
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Composition {
    pub adverse: usize,
    pub helper: usize,
    pub unhelper: usize,
}

impl Composition {
    pub fn size(&self) -> usize {
        self.adverse + self.helper + self.unhelper
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Pathway {
    pub id: String,
    pub composition: Composition,
    pub base_probability: f64,
}

impl Pathway {
    pub fn new(adverse: usize, helper: usize, unhelper: usize, base_probability: f64) -> Self {
        let mut parts = Vec::new();
        for (n, code) in [(adverse, 'A'), (helper, 'H'), (unhelper, 'U')] {
            if n > 0 {
                parts.push(format!("{n}{code}"));
            }
        }
        Self {
            id: parts.join("+"),
            composition: Composition { adverse, helper, unhelper },
            base_probability,
        }
    }
}

/// The seven designed pathways and their positive-label probabilities.
pub fn paper_pathways() -> Vec<Pathway> {
    vec![
        Pathway::new(2, 1, 0, 0.9),
        Pathway::new(1, 2, 0, 0.8),
        Pathway::new(1, 1, 0, 0.7),
        Pathway::new(0, 1, 1, 0.4),
        Pathway::new(1, 0, 2, 0.3),
        Pathway::new(0, 1, 2, 0.2),
        Pathway::new(0, 0, 2, 0.1),
    ]
}

pub fn event_probability(pathways: &[Pathway], id: &str) -> Result<f64> {
    pathways
        .iter()
        .find(|p| p.id == id)
        .map(|p| p.base_probability)
        .ok_or_else(|| Error::UnknownPathway(id.to_string()))
}

/// Decay rates for the recency-weighted label probability.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecayParams {
    pub a: f64,
    pub h: f64,
    pub u: f64,
    #[serde(default = "default_floor")]
    pub floor: f64,
    #[serde(default = "default_ceiling")]
    pub ceiling: f64,
}

fn default_floor() -> f64 {
    0.1
}

fn default_ceiling() -> f64 {
    1.0
}

impl Default for DecayParams {
    fn default() -> Self {
        Self { a: 0.14, h: 0.17, u: 0.75, floor: 0.1, ceiling: 1.0 }
    }
}

impl DecayParams {
    pub fn validate(&self) -> Result<()> {
        if !(0.0 < self.a && self.a < self.h && self.h < self.u && self.u < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "decay rates must satisfy 0 < a < h < u < 1 (got a={}, h={}, u={})",
                self.a, self.h, self.u
            )));
        }
        if !(self.floor < self.ceiling) {
            return Err(Error::InvalidConfig("decay floor must be below ceiling".into()));
        }
        Ok(())
    }

    /// Clamped recency-weighted probability; noise events contribute nothing.
    pub fn probability<I>(&self, events: I) -> f64
    where
        I: IntoIterator<Item = (TokenCategory, u32)>,
    {
        let raw: f64 = events
            .into_iter()
            .map(|(category, gap)| {
                let gap = f64::from(gap);
                match category {
                    TokenCategory::Adverse => (-self.a * gap).exp(),
                    TokenCategory::Helper => (-self.h * gap).exp(),
                    TokenCategory::Unhelper => -(-self.u * gap).exp(),
                    TokenCategory::Noise => 0.0,
                }
            })
            .sum();
        raw.min(self.ceiling).max(self.floor)
    }
}

pub fn sequence_probability(record: &EventSequence, vocab: &Vocabulary, decay: &DecayParams) -> Result<f64> {
    let events = record
        .events
        .iter()
        .map(|e| {
            vocab
                .category_of(&e.token)
                .map(|c| (c, e.gap))
                .ok_or_else(|| Error::UnknownToken(e.token.clone()))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(decay.probability(events))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum GenMode {
    EventDriven,
    SequenceDriven,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitCounts {
    pub train: usize,
    pub validation: usize,
    pub test: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GenConfig {
    pub mode: GenMode,
    #[serde(default = "paper_pathways")]
    pub pathways: Vec<Pathway>,
    #[serde(default)]
    pub decay: DecayParams,
    pub counts: SplitCounts,
    #[serde(default = "default_max_length")]
    pub max_length: usize,
    #[serde(default = "default_true")]
    pub balance_train: bool,
    pub seed: u64,
}

fn default_max_length() -> usize {
    MAX_EVENTS
}

fn default_true() -> bool {
    true
}

impl GenConfig {
    /// 21k / 7k / 7k records over the seven pathways.
    pub fn paper(mode: GenMode, seed: u64) -> Self {
        Self {
            mode,
            pathways: paper_pathways(),
            decay: DecayParams::default(),
            counts: SplitCounts { train: 21_000, validation: 7_000, test: 7_000 },
            max_length: MAX_EVENTS,
            balance_train: true,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.mode == GenMode::SequenceDriven {
            self.decay.validate()?;
        }
        let c = self.counts;
        if c.train == 0 || c.validation == 0 || c.test == 0 {
            return Err(Error::InvalidConfig("split sizes must be positive".into()));
        }
        if self.max_length == 0 || self.max_length > MAX_EVENTS {
            return Err(Error::InvalidConfig(format!("max_length must be in 1..={MAX_EVENTS}")));
        }
        if self.pathways.is_empty() {
            return Err(Error::InvalidConfig("at least one pathway is required".into()));
        }
        let mut ids = HashSet::new();
        for p in &self.pathways {
            if p.composition.size() == 0 {
                return Err(Error::InvalidConfig(format!("pathway `{}` has no tokens", p.id)));
            }
            if p.composition.size() > self.max_length {
                return Err(Error::InvalidConfig(format!("pathway `{}` exceeds max_length", p.id)));
            }
            if !(0.0..=1.0).contains(&p.base_probability) {
                return Err(Error::InvalidConfig(format!("pathway `{}` probability outside [0,1]", p.id)));
            }
            if !ids.insert(p.id.as_str()) {
                return Err(Error::InvalidConfig(format!("duplicate pathway id `{}`", p.id)));
            }
        }
        Ok(())
    }
}

/// Draws one record from `pathway`: distinct driver tokens per category,
/// uniform noise fill up to a uniform length in `[k, max_length]`, uniform
/// integer gaps in `[0, L-1]` sorted oldest first, then a Bernoulli label.
pub fn sample_record<R: Rng + ?Sized>(
    rng: &mut R,
    config: &GenConfig,
    vocab: &Vocabulary,
    pathway: &Pathway,
    id: u64,
) -> Result<EventSequence> {
    let comp = pathway.composition;
    let k = comp.size();
    let length = rng.random_range(k..=config.max_length);

    let mut drivers = BTreeSet::new();
    let mut tokens: Vec<&str> = Vec::with_capacity(length);
    for (category, n) in [
        (TokenCategory::Adverse, comp.adverse),
        (TokenCategory::Helper, comp.helper),
        (TokenCategory::Unhelper, comp.unhelper),
    ] {
        let pool = vocab.tokens_in(category);
        if pool.len() < n {
            return Err(Error::InvalidConfig(format!(
                "pathway `{}` needs {n} {category:?} tokens, vocabulary has {}",
                pathway.id,
                pool.len()
            )));
        }
        for i in index::sample(rng, pool.len(), n).iter() {
            drivers.insert(pool[i].to_string());
            tokens.push(pool[i]);
        }
    }
    let noise = vocab.tokens_in(TokenCategory::Noise);
    if length > k && noise.is_empty() {
        return Err(Error::InvalidConfig("vocabulary has no noise tokens".into()));
    }
    for _ in k..length {
        tokens.push(noise[rng.random_range(0..noise.len())]);
    }
    tokens.shuffle(rng);

    let mut events: Vec<Event> = tokens
        .into_iter()
        .map(|t| Event::new(t, rng.random_range(0..length as u32)))
        .collect();
    // Stable: equal gaps keep their (shuffled) generation order.
    events.sort_by(|x, y| y.gap.cmp(&x.gap));

    let mut record = EventSequence { id, label: 0, pathway: Some(pathway.id.clone()), drivers, events };
    let p = match config.mode {
        GenMode::EventDriven => pathway.base_probability,
        GenMode::SequenceDriven => sequence_probability(&record, vocab, &config.decay)?,
    };
    record.label = bernoulli_label(p, rng.random::<f64>());
    Ok(record)
}

/// Label for a uniform draw `u` in `[0, 1)` against probability `p`.
pub fn bernoulli_label(p: f64, u: f64) -> u8 {
    u8::from(u < p)
}

#[derive(Clone, Debug)]
pub struct GeneratedSplits {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
}

/// Attempts allowed per requested record before giving up.
const RETRY_FACTOR: usize = 200;

pub fn generate_dataset(config: &GenConfig) -> Result<GeneratedSplits> {
    generate_dataset_with(config, synthetic_vocabulary())
}

pub fn generate_dataset_with(config: &GenConfig, vocab: Vocabulary) -> Result<GeneratedSplits> {
    config.validate()?;
    let c = config.counts;

    let train = generate_train(config, &vocab, 0)?;
    let mut seen = HashSet::new();
    let validation = generate_unique(config, &vocab, Split::Validation, c.train as u64, c.validation, &mut seen)?;
    let test = generate_unique(
        config,
        &vocab,
        Split::Test,
        (c.train + c.validation) as u64,
        c.test,
        &mut seen,
    )?;
    Ok(GeneratedSplits {
        train: Dataset::new(vocab.clone(), train, Split::Train)?,
        validation: Dataset::new(vocab.clone(), validation, Split::Validation)?,
        test: Dataset::new(vocab, test, Split::Test)?,
    })
}

/// Round-robin over pathways; when balancing, a record whose label class is
/// already full is rejected and the same pathway is drawn again.
fn generate_train(config: &GenConfig, vocab: &Vocabulary, first_id: u64) -> Result<Vec<EventSequence>> {
    let n = config.counts.train;
    let mut rng = rng_for(config.seed, "synthgen/train");
    let mut quota = [n - n / 2, n / 2]; // [negatives, positives]
    let budget = n * RETRY_FACTOR;
    let mut records = Vec::with_capacity(n);
    let mut attempts = 0;
    while records.len() < n {
        attempts += 1;
        if attempts > budget {
            return Err(Error::GenerationStalled {
                attempts,
                reason: format!("label balance unreachable ({} of {n} records accepted)", records.len()),
            });
        }
        let pathway = &config.pathways[records.len() % config.pathways.len()];
        let record = sample_record(&mut rng, config, vocab, pathway, first_id + records.len() as u64)?;
        if config.balance_train {
            let slot = &mut quota[usize::from(record.label)];
            if *slot == 0 {
                continue;
            }
            *slot -= 1;
        }
        records.push(record);
    }
    Ok(records)
}

fn generate_unique(
    config: &GenConfig,
    vocab: &Vocabulary,
    split: Split,
    first_id: u64,
    n: usize,
    seen: &mut HashSet<Vec<Event>>,
) -> Result<Vec<EventSequence>> {
    let mut rng = rng_for(config.seed, &format!("synthgen/{split}"));
    let budget = n * RETRY_FACTOR;
    let mut records = Vec::with_capacity(n);
    let mut attempts = 0;
    while records.len() < n {
        attempts += 1;
        if attempts > budget {
            return Err(Error::GenerationStalled {
                attempts,
                reason: format!("could not draw {n} unique {split} records"),
            });
        }
        let pathway = &config.pathways[records.len() % config.pathways.len()];
        let record = sample_record(&mut rng, config, vocab, pathway, first_id + records.len() as u64)?;
        if seen.insert(record.events.clone()) {
            records.push(record);
        }
    }
    Ok(records)
}

/// Share of all emitted tokens taken by each token.
pub fn token_frequencies(ds: &Dataset) -> BTreeMap<String, f64> {
    let mut counts: BTreeMap<String, usize> =
        ds.vocabulary.entries().iter().map(|e| (e.name.clone(), 0)).collect();
    let mut total = 0usize;
    for record in &ds.records {
        for token in record.tokens() {
            *counts.entry(token.to_string()).or_default() += 1;
            total += 1;
        }
    }
    counts
        .into_iter()
        .map(|(k, v)| (k, if total == 0 { 0.0 } else { v as f64 / total as f64 }))
        .collect()
}

/// Checks the designed token-frequency profile: every noise token near 6%
/// and every informative token under 1%, both within `tolerance`.
pub fn check_frequency_targets(ds: &Dataset, tolerance: f64) -> Result<()> {
    for (token, share) in token_frequencies(ds) {
        let category = ds.vocabulary.category_of(&token).expect("frequency keys come from the vocabulary");
        let ok = match category {
            TokenCategory::Noise => (share - 0.06).abs() <= tolerance,
            _ => share < 0.01 + tolerance,
        };
        if !ok {
            return Err(Error::CheckFailed(format!(
                "token `{token}` ({category:?}) has frequency {:.4}",
                share
            )));
        }
    }
    Ok(())
}
