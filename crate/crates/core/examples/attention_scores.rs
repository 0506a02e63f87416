//! Attention weights as explanations, for dot-product and self-attention.
//!
//! cargo run --release --example attention_scores

use xpb::attrib::attention_attribution;
use xpb::recurrent::{fit, init_model, Attention, RecurrentConfig};
use xpb::synthgen::{generate_dataset, GenConfig, GenMode, SplitCounts};

fn main() -> xpb::Result<()> {
    let s = generate_dataset(&GenConfig {
        counts: SplitCounts { train: 2800, validation: 700, test: 700 },
        ..GenConfig::paper(GenMode::EventDriven, 9)
    })?;
    let record = &s.test.records[0];
    println!("record {} drivers {:?}", record.id, record.drivers);
    for attention in [Attention::DotProduct, Attention::SelfAttention] {
        let cfg = RecurrentConfig { epochs: 4, learning_rate: 3e-3, seed: 9, ..RecurrentConfig::right_sized(attention) };
        let (model, _) = fit(&init_model(&cfg, &s.train.vocabulary)?, &s.train, &s.validation, &cfg, None)?;
        let attr = attention_attribution(&model, record, &s.test.vocabulary)?;
        let cells: Vec<String> = record.tokens().zip(&attr.scores).map(|(t, a)| format!("{t}:{a:.2}")).collect();
        println!("{attention:?} (sums to {:.3}): {}", attr.scores.iter().sum::<f64>(), cells.join(" "));
    }
    Ok(())
}
