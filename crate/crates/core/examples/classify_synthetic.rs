//! End to end on synthetic data: write a two-class dataset with a manifest,
//! split it 35/15 per class, extract signatures, train and evaluate.
//!
//!     cargo run --release --example classify_synthetic

use flyact::classify::evaluate;
use flyact::config::PipelineConfig;
use flyact::pipeline::{featurize_manifest, test_clips, train_on_table};
use flyact::video::{parse_manifest, split_dataset, synth_dataset, MotionPattern, SyntheticConfig};

fn main() -> flyact::Result<()> {
    let dir = std::env::temp_dir().join("flyact_classify_synthetic");
    let base = SyntheticConfig::new(MotionPattern::OrbitingBlob, 64, 64, 40).noise(0.02);
    synth_dataset(&base, 50, 1000, &dir)?;

    let mut manifest = parse_manifest(dir.join("manifest.csv"))?;
    manifest.resolve_paths(&dir);
    let cfg = PipelineConfig::default();
    let (train, test) = split_dataset(&manifest, &cfg.split)?;
    println!("{} training clips, {} test clips", train.len(), test.len());

    let start = std::time::Instant::now();
    let model = train_on_table(&featurize_manifest(&train, &cfg)?, &cfg)?;
    let eval = evaluate(&model, &test_clips(&featurize_manifest(&test, &cfg)?))?;
    println!("took {:.1?}\n", start.elapsed());

    let report = eval.report(&model.pipeline);
    let summary: Vec<&str> = report.split("\n[config]").next().unwrap_or("").lines().collect();
    println!("{}", summary.join("\n"));
    Ok(())
}
