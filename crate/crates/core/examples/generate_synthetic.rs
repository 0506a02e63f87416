//! Generate both synthetic datasets at a small scale and print what came out.
//!
//! cargo run --example generate_synthetic

use xpb::corpus::{write_dataset_to, TokenCategory};
use xpb::synthgen::{generate_dataset, sequence_probability, token_frequencies, GenConfig, GenMode, SplitCounts};

fn main() -> xpb::Result<()> {
    for mode in [GenMode::EventDriven, GenMode::SequenceDriven] {
        let config = GenConfig {
            counts: SplitCounts { train: 2100, validation: 700, test: 700 },
            ..GenConfig::paper(mode, if mode == GenMode::EventDriven { 42 } else { 43 })
        };
        let splits = generate_dataset(&config)?;
        println!("{mode:?}: train {} ({:.3} positive), validation {}, test {}",
            splits.train.len(), splits.train.positive_fraction(), splits.validation.len(), splits.test.len());

        let record = &splits.train.records[0];
        let events: Vec<String> = record.events.iter().map(|e| format!("{}@{}", e.token, e.gap)).collect();
        println!("  record {} label {} pathway {:?} drivers {:?}", record.id, record.label, record.pathway, record.drivers);
        println!("  events (oldest first): {}", events.join(" "));
        if mode == GenMode::SequenceDriven {
            let p = sequence_probability(record, &splits.train.vocabulary, &config.decay)?;
            println!("  recency-weighted probability {p:.3}");
        }

        let freq = token_frequencies(&splits.train);
        let noise: Vec<f64> = freq
            .iter()
            .filter(|(t, _)| splits.train.vocabulary.category_of(t) == Some(TokenCategory::Noise))
            .map(|(_, f)| *f)
            .collect();
        println!("  noise token share {:.3}..{:.3}", noise.iter().cloned().fold(1.0, f64::min), noise.iter().cloned().fold(0.0, f64::max));
    }

    // Datasets serialize as JSON lines with a header.
    let splits = generate_dataset(&GenConfig { counts: SplitCounts { train: 14, validation: 7, test: 7 }, ..GenConfig::paper(GenMode::EventDriven, 1) })?;
    let mut buf = Vec::new();
    write_dataset_to(&splits.test, &mut buf)?;
    let text = String::from_utf8_lossy(&buf);
    println!("\nfirst two lines of a dataset file:");
    for line in text.lines().take(2) {
        let shown: String = line.chars().take(110).collect();
        println!("  {shown}{}", if shown.len() < line.len() { " ..." } else { "" });
    }
    Ok(())
}
