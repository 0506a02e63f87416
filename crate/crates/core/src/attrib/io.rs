use std::io::{Read, Write};

use super::{Attribution, Method, UnitSpace};
use crate::corpus::Dataset;
use crate::error::{Error, Result};

pub const ATTRIBUTION_COLUMNS: [&str; 5] = ["id", "method", "unit", "position", "score"];

/// One row per (observation, unit): id, method label, token name, position
/// or feature index, score. Scores use the shortest exact decimal form.
pub fn write_attributions<W: Write>(out: W, label: &str, attrs: &[Attribution], ds: &Dataset) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(ATTRIBUTION_COLUMNS)?;
    for attr in attrs {
        let record = ds.record(attr.target).ok_or(Error::MissingAttribution(attr.target))?;
        let id = attr.target.to_string();
        for (k, (token, score)) in attr.unit_tokens(record, &ds.vocabulary)?.into_iter().zip(&attr.scores).enumerate() {
            w.write_record([id.as_str(), label, token, &k.to_string(), &score.to_string()])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Reads attributions back; rows of one observation must be contiguous
/// with positions 0, 1, 2, ...
pub fn read_attributions<R: Read>(input: R, method: Method, space: UnitSpace) -> Result<Vec<Attribution>> {
    let mut out: Vec<Attribution> = Vec::new();
    for (n, row) in csv::Reader::from_reader(input).records().enumerate() {
        let row = row?;
        let line = n + 2;
        let field = |i: usize| row.get(i).ok_or_else(|| Error::Parse { line, message: "missing column".into() });
        let bad = |what: &str| Error::Parse { line, message: format!("bad {what}") };
        let id: u64 = field(0)?.parse().map_err(|_| bad("id"))?;
        let position: usize = field(3)?.parse().map_err(|_| bad("position"))?;
        let score: f64 = field(4)?.parse().map_err(|_| bad("score"))?;
        match out.last_mut() {
            Some(a) if a.target == id => {
                if position != a.scores.len() {
                    return Err(bad("position order"));
                }
                a.scores.push(score);
            }
            _ => {
                if position != 0 || out.iter().any(|a| a.target == id) {
                    return Err(bad("observation grouping"));
                }
                out.push(Attribution { method, target: id, space, scores: vec![score], baseline: None, output: None });
            }
        }
    }
    Ok(out)
}
