//! Newline-delimited JSON dataset files: one header line carrying the
//! vocabulary, then one line per record.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Dataset, EventSequence, Split, VocabEntry, Vocabulary};
use crate::error::{Error, Result};

pub const FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
    vocab: Vec<VocabEntry>,
}

pub fn write_dataset_to<W: Write>(ds: &Dataset, mut out: W) -> Result<()> {
    let header = Header {
        version: FORMAT_VERSION,
        split: Some(ds.split),
        vocab: ds.vocabulary.entries().to_vec(),
    };
    serde_json::to_writer(&mut out, &header)?;
    out.write_all(b"\n")?;
    for record in &ds.records {
        serde_json::to_writer(&mut out, record)?;
        out.write_all(b"\n")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_dataset(ds: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    let file = File::create(path.as_ref())?;
    write_dataset_to(ds, BufWriter::new(file))
}

/// Reads a dataset. Files without a `split` header field (external data)
/// are tagged with `default_split`.
pub fn read_dataset_from<R: BufRead>(input: R, default_split: Split) -> Result<Dataset> {
    let mut lines = input.lines().enumerate();
    let header: Header = loop {
        match lines.next() {
            Some((n, line)) => {
                let line = line?;
                if line.trim().is_empty() {
                    continue;
                }
                break serde_json::from_str(&line).map_err(|e| Error::Parse {
                    line: n + 1,
                    message: e.to_string(),
                })?;
            }
            None => return Err(Error::Parse { line: 1, message: "missing header line".into() }),
        }
    };
    if header.version != FORMAT_VERSION {
        return Err(Error::Schema(format!(
            "unsupported dataset version {} (expected {FORMAT_VERSION})",
            header.version
        )));
    }
    let vocabulary = Vocabulary::new(header.vocab.into_iter().map(|e| (e.name, e.category)))?;

    let mut records = Vec::new();
    for (n, line) in lines {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record: EventSequence = serde_json::from_str(&line).map_err(|e| Error::Parse {
            line: n + 1,
            message: e.to_string(),
        })?;
        for event in &record.events {
            if vocabulary.index_of(&event.token).is_none() {
                return Err(Error::Schema(format!(
                    "line {}: token `{}` is not in the header vocabulary",
                    n + 1,
                    event.token
                )));
            }
        }
        records.push(record);
    }
    Dataset::new(vocabulary, records, header.split.unwrap_or(default_split))
}

pub fn read_dataset(path: impl AsRef<Path>) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingArtifact(vec![path.to_path_buf()]),
        _ => Error::Io(e),
    })?;
    read_dataset_from(BufReader::new(file), Split::Train)
}
