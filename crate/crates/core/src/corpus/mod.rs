//! Token vocabulary, patient event records, datasets and the two
//! model-facing encodings (per-token counts for trees, index sequences for
//! recurrent models).

mod io;
mod sampling;

use std::collections::{BTreeSet, HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub use io::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, FORMAT_VERSION};
pub use sampling::down_sample_negatives;

/// Longest event history a record may carry.
pub const MAX_EVENTS: usize = 30;

/// Index reserved for padding / masked positions. Real tokens use `1..=V`.
pub const PADDING_INDEX: usize = 0;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TokenCategory {
    Adverse,
    Helper,
    Unhelper,
    Noise,
}

impl TokenCategory {
    pub const ALL: [TokenCategory; 4] = [
        TokenCategory::Adverse,
        TokenCategory::Helper,
        TokenCategory::Unhelper,
        TokenCategory::Noise,
    ];

    /// Single-letter code (A/H/U/N).
    pub fn code(self) -> char {
        match self {
            TokenCategory::Adverse => 'A',
            TokenCategory::Helper => 'H',
            TokenCategory::Unhelper => 'U',
            TokenCategory::Noise => 'N',
        }
    }

    pub fn is_informative(self) -> bool {
        self != TokenCategory::Noise
    }
}

impl fmt::Display for TokenCategory {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.code())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct VocabEntry {
    pub name: String,
    pub category: TokenCategory,
}

/// Ordered token universe. Entry `k` (0-based) owns index `k + 1`.
#[derive(Clone, Debug)]
pub struct Vocabulary {
    entries: Vec<VocabEntry>,
    index: HashMap<String, usize>,
}

impl PartialEq for Vocabulary {
    fn eq(&self, other: &Self) -> bool {
        self.entries == other.entries
    }
}

impl Eq for Vocabulary {}

impl Vocabulary {
    /// Builds a vocabulary, assigning indices in list order starting at 1.
    pub fn new<I, S>(spec: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, TokenCategory)>,
        S: Into<String>,
    {
        let mut entries = Vec::new();
        let mut index = HashMap::new();
        for (name, category) in spec {
            let name = name.into();
            if name.is_empty() {
                return Err(Error::Schema("token names must be non-empty".into()));
            }
            if index.insert(name.clone(), entries.len() + 1).is_some() {
                return Err(Error::DuplicateToken(name));
            }
            entries.push(VocabEntry { name, category });
        }
        if entries.is_empty() {
            return Err(Error::EmptyVocabulary);
        }
        Ok(Self { entries, index })
    }

    /// Number of real tokens, `V` (the padding slot is not counted).
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[VocabEntry] {
        &self.entries
    }

    /// Index in `1..=V`, or `None` for unknown tokens.
    pub fn index_of(&self, name: &str) -> Option<usize> {
        self.index.get(name).copied()
    }

    pub fn entry(&self, index: usize) -> Option<&VocabEntry> {
        index.checked_sub(1).and_then(|k| self.entries.get(k))
    }

    pub fn category_of(&self, name: &str) -> Option<TokenCategory> {
        self.index_of(name).map(|i| self.entries[i - 1].category)
    }

    pub fn count(&self, category: TokenCategory) -> usize {
        self.entries.iter().filter(|e| e.category == category).count()
    }

    pub fn tokens_in(&self, category: TokenCategory) -> Vec<&str> {
        self.entries
            .iter()
            .filter(|e| e.category == category)
            .map(|e| e.name.as_str())
            .collect()
    }

    /// All non-Noise token names.
    pub fn informative_tokens(&self) -> BTreeSet<String> {
        self.entries
            .iter()
            .filter(|e| e.category.is_informative())
            .map(|e| e.name.clone())
            .collect()
    }

    /// Token name behind count-space feature `j` (feature `j` is index `j + 1`).
    pub fn feature_name(&self, feature: usize) -> Option<&str> {
        self.entries.get(feature).map(|e| e.name.as_str())
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Event {
    #[serde(rename = "t")]
    pub token: String,
    /// Time units between the event and inference time.
    pub gap: u32,
}

impl Event {
    pub fn new(token: impl Into<String>, gap: u32) -> Self {
        Self { token: token.into(), gap }
    }
}

/// One patient history, oldest event first.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EventSequence {
    pub id: u64,
    pub label: u8,
    pub pathway: Option<String>,
    pub drivers: BTreeSet<String>,
    pub events: Vec<Event>,
}

impl EventSequence {
    pub fn len(&self) -> usize {
        self.events.len()
    }

    pub fn is_empty(&self) -> bool {
        self.events.is_empty()
    }

    pub fn is_positive(&self) -> bool {
        self.label == 1
    }

    pub fn tokens(&self) -> impl Iterator<Item = &str> {
        self.events.iter().map(|e| e.token.as_str())
    }

    pub fn validate(&self, vocab: &Vocabulary) -> Result<()> {
        let fail = |reason: String| Error::InvalidRecord { id: self.id, reason };
        if self.events.is_empty() || self.events.len() > MAX_EVENTS {
            return Err(fail(format!(
                "length {} outside 1..={MAX_EVENTS}",
                self.events.len()
            )));
        }
        if self.label > 1 {
            return Err(fail(format!("label {} is not 0 or 1", self.label)));
        }
        for event in &self.events {
            if vocab.index_of(&event.token).is_none() {
                return Err(Error::UnknownToken(event.token.clone()));
            }
        }
        let present: HashSet<&str> = self.tokens().collect();
        for driver in &self.drivers {
            if !present.contains(driver.as_str()) {
                return Err(fail(format!("driver `{driver}` does not occur in the events")));
            }
            if vocab.category_of(driver) == Some(TokenCategory::Noise) {
                return Err(fail(format!("driver `{driver}` is a noise token")));
            }
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    pub const ALL: [Split; 3] = [Split::Train, Split::Validation, Split::Test];

    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "validation",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl std::str::FromStr for Split {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "train" => Ok(Split::Train),
            "validation" | "val" => Ok(Split::Validation),
            "test" => Ok(Split::Test),
            other => Err(Error::InvalidConfig(format!("unknown split `{other}`"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Dataset {
    pub vocabulary: Vocabulary,
    pub records: Vec<EventSequence>,
    pub split: Split,
}

impl Dataset {
    /// Validates every record against the vocabulary and checks id uniqueness.
    pub fn new(vocabulary: Vocabulary, records: Vec<EventSequence>, split: Split) -> Result<Self> {
        let mut ids = HashSet::with_capacity(records.len());
        for record in &records {
            record.validate(&vocabulary)?;
            if !ids.insert(record.id) {
                return Err(Error::Schema(format!("duplicate record id {}", record.id)));
            }
        }
        Ok(Self { vocabulary, records, split })
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn labels(&self) -> Vec<u8> {
        self.records.iter().map(|r| r.label).collect()
    }

    pub fn positives(&self) -> usize {
        self.records.iter().filter(|r| r.is_positive()).count()
    }

    pub fn positive_fraction(&self) -> f64 {
        if self.records.is_empty() {
            0.0
        } else {
            self.positives() as f64 / self.records.len() as f64
        }
    }

    /// Errors unless both labels occur.
    pub fn require_both_classes(&self) -> Result<()> {
        let pos = self.positives();
        if pos == 0 || pos == self.records.len() {
            return Err(Error::DegenerateDataset(format!(
                "{} split has {pos} positives out of {} records",
                self.split,
                self.records.len()
            )));
        }
        Ok(())
    }

    pub fn record(&self, id: u64) -> Option<&EventSequence> {
        self.records.iter().find(|r| r.id == id)
    }

    pub fn count_vectors(&self) -> Result<Vec<CountVector>> {
        self.records.iter().map(|r| encode_counts(r, &self.vocabulary)).collect()
    }

    pub fn index_sequences(&self) -> Result<Vec<IndexSequence>> {
        self.records.iter().map(|r| encode_indices(r, &self.vocabulary)).collect()
    }
}

/// Per-token occurrence counts; position `j` counts vocabulary index `j + 1`.
#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct CountVector(pub Vec<u32>);

impl CountVector {
    pub fn values(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn total(&self) -> u64 {
        self.0.iter().map(|&v| u64::from(v)).sum()
    }

    pub fn to_f64(&self) -> Vec<f64> {
        self.0.iter().map(|&v| f64::from(v)).collect()
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct IndexSequence {
    pub indices: Vec<usize>,
    pub gaps: Vec<u32>,
}

impl IndexSequence {
    pub fn len(&self) -> usize {
        self.indices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.indices.is_empty()
    }
}

pub fn encode_counts(record: &EventSequence, vocab: &Vocabulary) -> Result<CountVector> {
    let mut counts = vec![0u32; vocab.len()];
    for event in &record.events {
        let index = vocab
            .index_of(&event.token)
            .ok_or_else(|| Error::UnknownToken(event.token.clone()))?;
        counts[index - 1] += 1;
    }
    Ok(CountVector(counts))
}

pub fn encode_indices(record: &EventSequence, vocab: &Vocabulary) -> Result<IndexSequence> {
    let indices = record
        .events
        .iter()
        .map(|e| vocab.index_of(&e.token).ok_or_else(|| Error::UnknownToken(e.token.clone())))
        .collect::<Result<Vec<_>>>()?;
    let gaps = record.events.iter().map(|e| e.gap).collect();
    Ok(IndexSequence { indices, gaps })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn abc() -> Vocabulary {
        Vocabulary::new([
            ("a", TokenCategory::Adverse),
            ("b", TokenCategory::Helper),
            ("c", TokenCategory::Noise),
        ])
        .unwrap()
    }

    fn record(tokens: &[(&str, u32)]) -> EventSequence {
        EventSequence {
            id: 1,
            label: 0,
            pathway: None,
            drivers: BTreeSet::new(),
            events: tokens.iter().map(|&(t, g)| Event::new(t, g)).collect(),
        }
    }

    #[test]
    fn single_token_gets_first_real_index() {
        let vocab = Vocabulary::new([("x", TokenCategory::Noise)]).unwrap();
        assert_eq!(vocab.index_of("x"), Some(1));
        assert_eq!(vocab.entry(PADDING_INDEX), None);
    }

    #[test]
    fn duplicate_and_empty_specs_are_rejected() {
        let dup = Vocabulary::new([("a", TokenCategory::Noise), ("a", TokenCategory::Helper)]);
        assert!(matches!(dup, Err(Error::DuplicateToken(name)) if name == "a"));
        let empty = Vocabulary::new(Vec::<(String, TokenCategory)>::new());
        assert!(matches!(empty, Err(Error::EmptyVocabulary)));
    }

    #[test]
    fn counts_and_indices() {
        let vocab = abc();
        let counts = encode_counts(&record(&[("a", 2), ("a", 1), ("b", 0)]), &vocab).unwrap();
        assert_eq!(counts.values(), &[2, 1, 0]);

        let all = encode_counts(&record(&[("a", 0), ("b", 0), ("c", 0)]), &vocab).unwrap();
        assert_eq!(all.values(), &[1, 1, 1]);

        let seq = encode_indices(&record(&[("b", 5), ("a", 0)]), &vocab).unwrap();
        assert_eq!(seq.indices, vec![2, 1]);
        assert_eq!(seq.gaps, vec![5, 0]);
    }

    #[test]
    fn long_record_keeps_length() {
        let vocab = abc();
        let events: Vec<(&str, u32)> = (0..30).map(|i| (["a", "b", "c"][i % 3], 29 - i as u32)).collect();
        let seq = encode_indices(&record(&events), &vocab).unwrap();
        assert_eq!(seq.len(), 30);
    }

    #[test]
    fn unknown_token_is_reported() {
        let err = encode_counts(&record(&[("zzz", 0)]), &abc()).unwrap_err();
        assert!(matches!(err, Error::UnknownToken(t) if t == "zzz"));
    }

    #[test]
    fn record_invariants() {
        let vocab = abc();
        assert!(record(&[]).validate(&vocab).is_err());
        let mut r = record(&[("a", 1), ("c", 0)]);
        r.drivers.insert("a".into());
        assert!(r.validate(&vocab).is_ok());
        r.drivers.insert("c".into());
        assert!(r.validate(&vocab).is_err(), "noise driver must be rejected");
        let mut r = record(&[("a", 1)]);
        r.drivers.insert("b".into());
        assert!(r.validate(&vocab).is_err(), "driver must occur in events");
    }
}
