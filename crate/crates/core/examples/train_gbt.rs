//! Fit boosted trees on token counts and inspect the model.
//!
//! cargo run --example train_gbt

use xpb::evalx::{auc, GlobalImportance};
use xpb::gbt::{information_gain_importance, predict_gbt, train_gbt, GbtParams};
use xpb::synthgen::{generate_dataset, GenConfig, GenMode, SplitCounts};

fn main() -> xpb::Result<()> {
    let config = GenConfig {
        counts: SplitCounts { train: 4200, validation: 1400, test: 1400 },
        ..GenConfig::paper(GenMode::EventDriven, 3)
    };
    let s = generate_dataset(&config)?;
    let params = GbtParams { rounds: 60, ..GbtParams::default() };
    let (model, history) = train_gbt(&s.train, &s.validation, &params, None)?;

    for row in &history.rows {
        println!("checkpoint {:>2}: validation AUC {:.4}", row.epoch, row.val_auc);
    }
    println!("kept {} trees", model.trees.len());

    let scores: Vec<f64> = s.test.count_vectors()?.iter().map(|x| predict_gbt(&model, x)).collect::<xpb::Result<_>>()?;
    println!("test AUC {:.4}", auc(&s.test.labels(), &scores)?);

    let ranking = GlobalImportance::from_scores("info-gain", &s.test.vocabulary, &information_gain_importance(&model));
    println!("top tokens by information gain:");
    for row in ranking.top(8) {
        println!("  {:>2}. {:<6} {:?} {:.4}", row.rank, row.token, row.category, row.score);
    }
    Ok(())
}
