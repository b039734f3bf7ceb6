//! 3D-SIFT descriptors around detected points.

use flyact::detect::{detect_sstip, DetectorConfig};
use flyact::sift3d::{describe_keypoints, DescriptorConfig};
use flyact::video::{generate_synthetic, MotionPattern, SyntheticConfig};

fn main() -> flyact::Result<()> {
    let clip = generate_synthetic(&SyntheticConfig::new(MotionPattern::OscillatingBlob, 64, 64, 40).noise(0.02).seed(2))?;
    let points = detect_sstip(&clip.volume, &DetectorConfig::default())?;
    let cfg = DescriptorConfig::default();
    let described = describe_keypoints(&clip.volume, &points, &cfg)?;
    println!(
        "{} of {} points have a full {}^3 support; descriptor length {}",
        described.len(),
        points.len(),
        cfg.support(),
        cfg.dimension()
    );

    for (p, d) in described.iter().take(5) {
        let v = d.values();
        let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        let nonzero = v.iter().filter(|&&x| x > 0.0).count();
        let peak = v.iter().copied().fold(0.0, f64::max);
        println!("({:2},{:2},{:2})  norm {norm:.12}  {nonzero:3} non-zero bins  max {peak:.3}", p.x, p.y, p.t);
    }
    Ok(())
}
