//! Clip signatures from mean-pooled descriptors. Signatures of the same motion
//! pattern should be more similar to each other than to the other pattern.

use flyact::config::PipelineConfig;
use flyact::pipeline::extract_features;
use flyact::video::{generate_synthetic, MotionPattern, SyntheticConfig};

fn main() -> flyact::Result<()> {
    let cfg = PipelineConfig::default();
    let mut sigs = Vec::new();
    for (pattern, tag) in [(MotionPattern::OrbitingBlob, "orbit"), (MotionPattern::OscillatingBlob, "osc")] {
        for seed in 0..3 {
            let clip = generate_synthetic(&SyntheticConfig::new(pattern, 64, 64, 40).noise(0.02).seed(seed + 10))?;
            let id = format!("{tag}{seed}");
            let f = extract_features(&clip.volume, &id, &cfg)?;
            println!("{id}: {} points, {} descriptors", f.points.len(), f.described.len());
            sigs.push((id, f.signature));
        }
    }

    // Signatures are unit vectors, so the dot product is the cosine similarity.
    print!("\n        ");
    for (id, _) in &sigs {
        print!("{id:>8}");
    }
    println!();
    for (a, sa) in &sigs {
        print!("{a:>8}");
        for (_, sb) in &sigs {
            print!("{:8.3}", sa.iter().zip(sb).map(|(x, y)| x * y).sum::<f64>());
        }
        println!();
    }
    Ok(())
}
