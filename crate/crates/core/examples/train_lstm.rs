//! Train a dot-attention LSTM on the sequence-driven data and save it.
//!
//! cargo run --release --example train_lstm

use xpb::evalx::auc;
use xpb::recurrent::{fit, init_model, Attention, RecurrentConfig, RecurrentModel};
use xpb::synthgen::{generate_dataset, GenConfig, GenMode, SplitCounts};

fn main() -> xpb::Result<()> {
    let config = GenConfig {
        counts: SplitCounts { train: 4200, validation: 1400, test: 1400 },
        ..GenConfig::paper(GenMode::SequenceDriven, 5)
    };
    let s = generate_dataset(&config)?;
    let cfg = RecurrentConfig { epochs: 6, learning_rate: 3e-3, seed: 5, ..RecurrentConfig::right_sized(Attention::DotProduct) };
    let init = init_model(&cfg, &s.train.vocabulary)?;
    let (model, history) = fit(&init, &s.train, &s.validation, &cfg, None)?;
    for row in &history.rows {
        println!("epoch {:>2}: validation AUC {:.4}", row.epoch, row.val_auc);
    }

    let scores: Vec<f64> =
        s.test.records.iter().map(|r| model.predict_record(r, &s.test.vocabulary)).collect::<xpb::Result<_>>()?;
    println!("test AUC {:.4}", auc(&s.test.labels(), &scores)?);

    let json = model.to_json()?;
    let back = RecurrentModel::from_json(&json)?;
    assert_eq!(back, model);
    println!("model JSON is {} bytes and round-trips exactly", json.len());
    Ok(())
}
