//! The whole benchmark at a reduced scale: generate, train, explain,
//! evaluate and report into ./out-small (or the directory given).
//!
//! cargo run --release --example full_pipeline [-- OUT_DIR]

use xpb::harness::{ExperimentConfig, Pipeline, RunOptions};

fn main() -> xpb::Result<()> {
    let mut config = ExperimentConfig::small();
    config.output_dir = std::env::args().nth(1).unwrap_or_else(|| "out-small".into()).into();
    let mut pipeline = Pipeline::new(config, RunOptions { svg: true, ..Default::default() })?;
    pipeline.all()?;

    let table = std::fs::read_to_string(pipeline.out_dir().join("report/similarity_matrix.csv"))?;
    println!("{table}");
    println!("{} files listed in the manifest", pipeline.manifest().all_files().len());
    Ok(())
}
