//! Save a trained model, load it back and confirm predictions are unchanged.
//! Also shows that a damaged file is rejected.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flyact::classify::{predict, train_model};
use flyact::config::PipelineConfig;
use flyact::io::{decode_model, encode_model, load_model, save_model};

fn main() -> flyact::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let labels: Vec<String> = (0..20).map(|i| if i % 2 == 0 { "hold" } else { "tussle" }.to_string()).collect();
    let x = DMatrix::from_fn(20, 8, |i, _| (i % 2) as f64 + rng.random_range(-0.7..0.7));
    let model = train_model(&x, &labels, &PipelineConfig::default())?;

    let path = std::env::temp_dir().join("flyact_example_model.bin");
    save_model(&model, &path)?;
    let loaded = load_model(&path)?;
    let bytes = std::fs::read(&path).expect("model file was just written");
    println!("{} bytes; reload equal: {}", bytes.len(), loaded == model);
    println!("save after load byte-identical: {}", encode_model(&loaded)? == bytes);

    let query: Vec<f64> = (0..8).map(|_| 0.9).collect();
    let a = predict(&model, &query)?;
    let b = predict(&loaded, &query)?;
    println!("prediction {} (margin {:.4}) vs reloaded {} (margin {:.4})", a.label, a.margin(), b.label, b.margin());

    let mut damaged = bytes.clone();
    let mid = damaged.len() / 2;
    damaged[mid] ^= 1;
    println!("flipped bit: {}", decode_model(&damaged).unwrap_err());
    println!("truncated:   {}", decode_model(&bytes[..bytes.len() - 10]).unwrap_err());
    Ok(())
}
