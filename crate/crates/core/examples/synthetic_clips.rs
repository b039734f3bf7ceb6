//! Render the three synthetic motion patterns and write one of them as PGM frames.
//!
//!     cargo run --example synthetic_clips -- /tmp/orbit

use flyact::video::{generate_synthetic, load_frames, write_frames, MotionPattern, SyntheticConfig};

fn main() -> flyact::Result<()> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "synthetic_orbit".into());

    for pattern in [MotionPattern::OrbitingBlob, MotionPattern::OscillatingBlob, MotionPattern::StaticScene] {
        let clip = generate_synthetic(&SyntheticConfig::new(pattern, 64, 64, 40).noise(0.02).seed(1))?;
        let (x0, y0, _) = clip.ground_truth[0];
        let (x1, y1, _) = clip.ground_truth[20];
        println!("{pattern:>16}: blob at ({x0:5.1},{y0:5.1}) in frame 0, ({x1:5.1},{y1:5.1}) in frame 20");
        println!("{:>16}  {:?}", "", clip.trajectory);
    }

    let clip = generate_synthetic(&SyntheticConfig::new(MotionPattern::OrbitingBlob, 64, 64, 40).seed(1))?;
    write_frames(&clip.volume, &out)?;
    let back = load_frames(&out)?;
    println!(
        "wrote {} frames of {}x{} to {out}",
        back.num_frames(),
        back.width(),
        back.height()
    );
    Ok(())
}
