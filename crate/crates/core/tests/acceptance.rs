//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails. Run with `cargo test --test acceptance`.

use std::f64::consts::{FRAC_PI_2, PI};
use std::time::{Duration, Instant};

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use flyact::classify::{evaluate, train_model, TestClip};
use flyact::config::PipelineConfig;
use flyact::detect::{apply_suppression, detect_sstip, ramp, suppressed_responses, DetectorConfig, ResponseMap};
use flyact::sift3d::{
    describe_keypoints, raw_histogram, voxel_polar, DescriptorConfig, Polar, SupportVoxel,
};
use flyact::srkda::{
    build_kernel, direct_kda_oracle, label_affinity, response_vectors, solve_projection, span_correlations,
    KernelConfig,
};
use flyact::video::{generate_synthetic, FrameVolume, MotionPattern, SyntheticConfig};
use flyact::{io, Error};

type Check = Result<String, String>;
type Criterion = (&'static str, &'static str, fn() -> Check);

fn ensure(ok: bool, msg: impl Into<String>) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn map(w: usize, h: usize, f: impl Fn(usize) -> f64) -> ResponseMap {
    ResponseMap {
        width: w,
        height: h,
        values: (0..w * h).map(f).collect(),
    }
}

fn criterion_1() -> Check {
    let start = Instant::now();
    ensure(ramp(2.0) == 2.0 && ramp(-1.0) == 0.0, "ramp")?;
    ensure((voxel_polar(3.0, 4.0, 0.0).magnitude - 5.0).abs() < 1e-12, "gradient magnitude")?;
    let s = map(8, 8, |i| (i as f64).sin().abs());
    let c = apply_suppression(&s, &map(8, 8, |_| 0.0), 1.5).map_err(|e| e.to_string())?;
    ensure(c.values.iter().zip(&s.values).all(|(a, b)| (a - b).abs() < 1e-12), "t = 0 gives C = S")?;
    let v = DMatrix::from_column_slice(3, 1, &[1.0, -2.0, 0.5]);
    let w0 = solve_projection(&DMatrix::zeros(3, 3), &v, 1.0).map_err(|e| e.to_string())?;
    ensure((w0 - &v).amax() < 1e-12, "K = 0 gives omega = responses")?;
    let w1 = solve_projection(&DMatrix::identity(3, 3), &v, 1.0).map_err(|e| e.to_string())?;
    ensure((w1 - &v / 2.0).amax() < 1e-12, "K = I gives omega = responses / 2")?;
    let t = start.elapsed();
    ensure(t < Duration::from_secs(1), format!("took {t:?}"))?;
    Ok(format!("closed-form cases exact to 1e-12 in {t:?}"))
}

fn criterion_2() -> Check {
    let cfg = DescriptorConfig::default();
    let per_band = cfg.solid_angles().map_err(|e| e.to_string())?;
    let total: f64 = per_band.iter().sum::<f64>() * cfg.theta_bins as f64;
    let err = (total - 4.0 * PI).abs();
    ensure(err < 1e-9, format!("sum {total}"))?;
    Ok(format!("sum of {}x{} bin weights = 4pi (err {err:.1e})", cfg.theta_bins, cfg.phi_bins))
}

fn blob(pattern: MotionPattern, seed: u64, frames: usize) -> FrameVolume {
    let mut cfg = SyntheticConfig::new(pattern, 64, 64, frames).seed(seed);
    cfg.background = 0.0;
    generate_synthetic(&cfg).expect("valid synthetic config").volume
}

fn criterion_3() -> Check {
    let start = Instant::now();
    let cfg = DetectorConfig::default();
    let err = |e: Error| e.to_string();

    let still = generate_synthetic(&SyntheticConfig::new(MotionPattern::StaticScene, 64, 64, 60).seed(9))
        .map_err(err)?
        .volume;
    let n_static = detect_sstip(&still, &cfg).map_err(err)?.len();
    ensure(n_static == 0, format!("static scene gave {n_static} points"))?;

    let mut shifted_points = 0;
    for seed in 0..4 {
        let pattern = if seed % 2 == 0 { MotionPattern::OrbitingBlob } else { MotionPattern::OscillatingBlob };
        let base = blob(pattern, seed, 60);
        let moved = FrameVolume::from_fn(64, 64, 60, |x, y, t| {
            if x >= 4 && y >= 4 {
                base.get(x - 4, y - 4, t)
            } else {
                0.0
            }
        })
        .map_err(err)?;
        let inside = |x: usize, y: usize, lo: usize| x >= lo + 12 && y >= lo + 12 && x < lo + 48 && y < lo + 48;
        let a: Vec<_> = detect_sstip(&base, &cfg)
            .map_err(err)?
            .into_iter()
            .filter(|p| inside(p.x, p.y, 0))
            .map(|p| (p.x + 4, p.y + 4, p.t))
            .collect();
        let b: Vec<_> = detect_sstip(&moved, &cfg)
            .map_err(err)?
            .into_iter()
            .filter(|p| inside(p.x, p.y, 4))
            .map(|p| (p.x, p.y, p.t))
            .collect();
        ensure(!a.is_empty() && a == b, format!("shift mismatch for seed {seed}"))?;
        shifted_points += a.len();
    }

    let vol = blob(MotionPattern::OrbitingBlob, 7, 60);
    let mut prev: Option<Vec<ResponseMap>> = None;
    for rho in [0.0, 0.5, 1.0, 1.5, 3.0, 6.0] {
        let maps = suppressed_responses(
            &vol,
            &DetectorConfig {
                suppression_strength: rho,
                ..cfg
            },
        )
        .map_err(err)?;
        if let Some(p) = &prev {
            let ok = p
                .iter()
                .zip(&maps)
                .all(|(a, b)| a.values.iter().zip(&b.values).all(|(x, y)| y <= x));
            ensure(ok, format!("C increased at rho {rho}"))?;
        }
        prev = Some(maps);
    }
    let t = start.elapsed();
    ensure(t < Duration::from_secs(30), format!("took {t:?}"))?;
    Ok(format!(
        "static 0 points; {shifted_points} interior points shift by (+4,+4) exactly; C non-increasing in rho; {t:.1?}"
    ))
}

fn criterion_4() -> Check {
    let err = |e: Error| e.to_string();
    let cfg = DescriptorConfig::default();
    ensure(cfg.dimension() == 640, format!("dimension {}", cfg.dimension()))?;

    let mut sc = SyntheticConfig::new(MotionPattern::OrbitingBlob, 64, 64, 40).seed(5).noise(0.01);
    sc.blob_amplitude = 0.35;
    let vol = generate_synthetic(&sc).map_err(err)?.volume;
    let doubled = FrameVolume::from_fn(64, 64, 40, |x, y, t| 2.0 * vol.get(x, y, t)).map_err(err)?;
    let points = detect_sstip(&vol, &DetectorConfig::default()).map_err(err)?;
    let a = describe_keypoints(&vol, &points, &cfg).map_err(err)?;
    let b = describe_keypoints(&doubled, &points, &cfg).map_err(err)?;
    ensure(!a.is_empty() && a.len() == b.len(), "no descriptors")?;
    let mut worst_norm = 0.0f64;
    let mut worst_gain = 0.0f64;
    for ((_, da), (_, db)) in a.iter().zip(&b) {
        ensure(da.len() == 640, "descriptor length")?;
        let norm = da.values().iter().map(|v| v * v).sum::<f64>().sqrt();
        worst_norm = worst_norm.max((norm - 1.0).abs());
        for (x, y) in da.values().iter().zip(db.values()) {
            worst_gain = worst_gain.max((x - y).abs());
        }
    }
    ensure(worst_norm < 1e-9, format!("norm error {worst_norm}"))?;
    ensure(worst_gain < 1e-9, format!("contrast doubling changed descriptor by {worst_gain}"))?;

    // Injected gradient field: azimuths at bin centres, rotated by one bin.
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    let dtheta = 2.0 * PI / cfg.theta_bins as f64;
    let mut original = Vec::new();
    let mut rotated = Vec::new();
    for dt in -4..4isize {
        for dy in -4..4isize {
            for dx in -4..4isize {
                let k = rng.random_range(0..cfg.theta_bins);
                let polar = Polar {
                    magnitude: rng.random_range(0.1..2.0),
                    theta: -PI + (k as f64 + 0.5) * dtheta,
                    phi: rng.random_range(-FRAC_PI_2..FRAC_PI_2),
                };
                let k2 = (k + 1) % cfg.theta_bins;
                original.push(SupportVoxel { offset: [dx, dy, dt], polar });
                rotated.push(SupportVoxel {
                    offset: [dx, dy, dt],
                    polar: Polar {
                        theta: -PI + (k2 as f64 + 0.5) * dtheta,
                        ..polar
                    },
                });
            }
        }
    }
    let h0 = raw_histogram(&original, &cfg).map_err(err)?;
    let h1 = raw_histogram(&rotated, &cfg).map_err(err)?;
    let tb = cfg.theta_bins;
    let permuted = h0.chunks(tb).zip(h1.chunks(tb)).all(|(a, b)| (0..tb).all(|k| a[k] == b[(k + 1) % tb]));
    let mut s0 = h0.clone();
    let mut s1 = h1.clone();
    s0.sort_by(f64::total_cmp);
    s1.sort_by(f64::total_cmp);
    ensure(permuted && s0 == s1, "azimuth rotation is not a bin permutation")?;
    Ok(format!(
        "length 640; {} descriptors unit norm (err {worst_norm:.1e}); contrast doubling err {worst_gain:.1e}; azimuth shift permutes bins exactly",
        a.len()
    ))
}

fn criterion_5() -> Check {
    let err = |e: Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst_corr = f64::INFINITY;
    let mut worst_resid = 0.0f64;
    let mut instances = 0;
    for trial in 0..120 {
        let classes = 2 + trial % 2;
        let n = rng.random_range(3 * classes..=20);
        let dim = n + 3;
        let mut labels: Vec<usize> = (0..n).map(|i| i % classes).collect();
        for i in (1..n).rev() {
            labels.swap(i, rng.random_range(0..=i));
        }
        let x = DMatrix::from_fn(n, dim, |i, _| labels[i] as f64 * 0.5 + rng.random_range(-1.0..1.0));
        let kernel = if trial % 4 < 2 {
            KernelConfig::linear(0.01)
        } else {
            KernelConfig::rbf(rng.random_range(0.5..3.0), 0.01)
        };
        let k = build_kernel(&x, &kernel).map_err(err)?;
        let y = response_vectors(&labels, classes).map_err(err)?;
        let l = label_affinity(&labels, classes).map_err(err)?;
        worst_resid = worst_resid.max((&l * &y - &y).amax());
        let sr = &k * solve_projection(&k, &y, kernel.regularization).map_err(err)?;
        let direct = &k * direct_kda_oracle(&k, &labels, classes, kernel.regularization).map_err(err)?;
        for r in span_correlations(&sr, &direct).map_err(err)? {
            worst_corr = worst_corr.min(r);
        }
        instances += 1;
    }
    ensure(worst_corr > 0.999, format!("worst correlation {worst_corr}"))?;
    ensure(worst_resid < 1e-12, format!("eigen residual {worst_resid:e}"))?;
    Ok(format!(
        "{instances} instances; worst |correlation| {worst_corr:.9}; eigen-check residual {worst_resid:.1e}"
    ))
}

fn run_cli(args: &[&str]) -> Result<(), String> {
    let mut argv = vec!["flyact"];
    argv.extend_from_slice(args);
    match flyact::cli::run_command(argv) {
        0 => Ok(()),
        code => Err(format!("`{}` exited with {code}", args.join(" "))),
    }
}

fn criterion_6() -> Check {
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let root = dir.path();
    let data = root.join("data");
    let data_s = data.to_str().unwrap();
    let manifest = data.join("manifest.csv");
    let manifest_s = manifest.to_str().unwrap();
    run_cli(&["synth", "--clips-per-class", "50", "--noise", "0.02", "--seed", "1000", "--out", data_s])?;

    let mut outputs = Vec::new();
    let mut first_run = Duration::ZERO;
    for threads in ["1", "8"] {
        let start = Instant::now();
        let model = root.join(format!("model_{threads}.bin"));
        let report = root.join(format!("report_{threads}.txt"));
        let (model_s, report_s) = (model.to_str().unwrap(), report.to_str().unwrap());
        run_cli(&["train", "--threads", threads, "--manifest", manifest_s, "--split", "--model", model_s])?;
        run_cli(&["evaluate", "--threads", threads, "--model", model_s, "--manifest", manifest_s, "--split", "--report", report_s])?;
        if outputs.is_empty() {
            first_run = start.elapsed();
        }
        let m = std::fs::read(&model).map_err(|e| e.to_string())?;
        let r = std::fs::read_to_string(&report).map_err(|e| e.to_string())?;
        outputs.push((m, r));
    }
    ensure(outputs[0] == outputs[1], "threads 1 and 8 disagree")?;
    let report = &outputs[0].1;
    let accuracy: f64 = report
        .lines()
        .find_map(|l| l.strip_prefix("accuracy="))
        .ok_or("report has no accuracy line")?
        .parse()
        .map_err(|_| "unparsable accuracy")?;
    let total = report.lines().find_map(|l| l.strip_prefix("total=")).unwrap_or("?");
    ensure(accuracy >= 0.90, format!("accuracy {accuracy}"))?;
    ensure(first_run < Duration::from_secs(300), format!("took {first_run:?}"))?;
    Ok(format!(
        "accuracy {accuracy:.4} on {total} test clips (35/15 split); {first_run:.1?}; threads 1 and 8 byte-identical"
    ))
}

fn criterion_8() -> Check {
    let err = |e: Error| e.to_string();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let (n, d) = (24, 16);
    let labels: Vec<String> = (0..n).map(|i| ["hold", "tussle", "walk"][i % 3].to_string()).collect();
    let x = DMatrix::from_fn(n, d, |i, _| (i % 3) as f64 + rng.random_range(-0.8..0.8));
    let model = train_model(&x, &labels, &PipelineConfig::default()).map_err(err)?;
    let test: Vec<TestClip> = (0..12)
        .map(|i| TestClip {
            clip_id: format!("q{i}"),
            label: labels[i % 3].clone(),
            signature: (i != 5).then(|| (0..d).map(|_| (i % 3) as f64 + rng.random_range(-1.0..1.0)).collect()),
        })
        .collect();

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let path = dir.path().join("model.bin");
    io::save_model(&model, &path).map_err(err)?;
    let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
    let loaded = io::load_model(&path).map_err(err)?;
    ensure(loaded == model, "loaded model differs")?;
    let before = evaluate(&model, &test).map_err(err)?;
    let after = evaluate(&loaded, &test).map_err(err)?;
    ensure(before == after, "evaluation differs after reload")?;
    ensure(io::encode_model(&loaded).map_err(err)? == bytes, "save after load is not byte-identical")?;

    let mut rejected = 0;
    for _ in 0..20 {
        let cut = rng.random_range(0..bytes.len());
        if matches!(io::decode_model(&bytes[..cut]), Err(Error::CorruptFile(_))) {
            rejected += 1;
        }
    }
    ensure(rejected == 20, format!("{rejected}/20 truncations rejected"))?;
    let mut future = bytes.clone();
    future[8..10].copy_from_slice(&99u16.to_le_bytes());
    ensure(
        matches!(io::decode_model(&future), Err(Error::VersionMismatch { major: 99, .. })),
        "major version 99 accepted",
    )?;
    Ok(format!(
        "reload reproduces evaluation bit-identically; {rejected}/20 truncations rejected; version gate holds"
    ))
}

fn main() {
    let criteria: [Criterion; 7] = [
        ("1", "equation unit cases", criterion_1),
        ("2", "solid-angle partition", criterion_2),
        ("3", "detector properties", criterion_3),
        ("4", "descriptor properties", criterion_4),
        ("5", "SR-KDA oracle equivalence", criterion_5),
        ("6", "end-to-end synthetic classification", criterion_6),
        ("8", "model persistence", criterion_8),
    ];
    let mut failed = 0;
    for (id, name, run) in criteria {
        match run() {
            Ok(detail) => println!("PASS  criterion {id}: {name}: {detail}"),
            Err(detail) => {
                failed += 1;
                println!("FAIL  criterion {id}: {name}: {detail}");
            }
        }
        if id == "6" {
            println!(
                "SKIP  criterion 7: hold-vs-tussle accuracy on real recordings: needs the external fly video dataset; see README for the recipe"
            );
        }
    }
    if failed > 0 {
        println!("{failed} criteria failed");
        std::process::exit(1);
    }
    println!("all runnable criteria passed");
}
