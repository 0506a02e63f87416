//! Layer-wise relevance for a trained LSTM, with the conservation check.
//!
//! cargo run --release --example lrp_lstm

use xpb::attrib::{lrp_lstm, DEFAULT_LRP_EPS};
use xpb::recurrent::{fit, init_model, Attention, RecurrentConfig};
use xpb::synthgen::{generate_dataset, GenConfig, GenMode, SplitCounts};

fn main() -> xpb::Result<()> {
    let s = generate_dataset(&GenConfig {
        counts: SplitCounts { train: 2800, validation: 700, test: 700 },
        ..GenConfig::paper(GenMode::EventDriven, 8)
    })?;
    let cfg = RecurrentConfig { epochs: 5, learning_rate: 3e-3, seed: 8, ..RecurrentConfig::right_sized(Attention::DotProduct) };
    let (model, _) = fit(&init_model(&cfg, &s.train.vocabulary)?, &s.train, &s.validation, &cfg, None)?;

    for record in s.test.records.iter().filter(|r| r.is_positive()).take(3) {
        let attr = lrp_lstm(&model, record, &s.test.vocabulary, DEFAULT_LRP_EPS)?;
        let logit = attr.output.unwrap_or(f64::NAN);
        println!("record {} drivers {:?}", record.id, record.drivers);
        println!("  logit {logit:.4}, total relevance {:.4}", attr.scores.iter().sum::<f64>());
        let mut ranked: Vec<(f64, &str)> = attr.scores.iter().copied().zip(record.tokens()).collect();
        ranked.sort_by(|a, b| b.0.total_cmp(&a.0));
        for (score, token) in ranked.iter().take(4) {
            println!("  {token:<6} {score:+.4}");
        }
    }
    Ok(())
}
