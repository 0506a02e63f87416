//! Track validation AUC and explanation quality at every boosting checkpoint.
//!
//! cargo run --release --example dual_metric_tracking

use xpb::attrib::{BackgroundSet, ShapConfig};
use xpb::evalx::{EpochTracker, TrackMethod};
use xpb::gbt::{train_gbt, GbtParams};
use xpb::synthgen::{generate_dataset, GenConfig, GenMode, SplitCounts};

fn main() -> xpb::Result<()> {
    let s = generate_dataset(&GenConfig {
        counts: SplitCounts { train: 4200, validation: 1400, test: 1400 },
        ..GenConfig::paper(GenMode::SequenceDriven, 21)
    })?;
    let method = TrackMethod::KernelShap {
        config: ShapConfig { coalition_samples: 512, ..ShapConfig::default() },
        background: Some(BackgroundSet::sample(&s.train, 100, 21)?),
    };
    let mut tracker = EpochTracker::new(&s.validation, 48, method, 21)?;
    let params = GbtParams { rounds: 100, ..GbtParams::default() };
    let (_, history) = train_gbt(&s.train, &s.validation, &params, Some(&mut tracker))?;

    println!("checkpoint  val AUC  similarity");
    for row in &history.rows {
        println!("{:>10}  {:.4}   {}", row.epoch, row.val_auc, row.val_similarity.map_or("-".into(), |v| format!("{v:.3}")));
    }
    println!("best AUC at {:?}, best similarity at {:?}", history.best_auc_epoch(), history.best_similarity_epoch());
    Ok(())
}
