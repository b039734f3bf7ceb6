//! The `flyact` command line: one subcommand per pipeline stage.
//!
//! Exit codes: 0 success, 1 usage or configuration error, 2 data error,
//! 3 numeric failure.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};

use crate::classify::{evaluate, predict};
use crate::config::PipelineConfig;
use crate::io::{self, fmt_f64, SignatureTable};
use crate::pipeline::{self, clip_signature};
use crate::sift3d::{describe_keypoints, Descriptor};
use crate::signature::pool_signature;
use crate::video::{
    generate_synthetic, load_frames, parse_manifest, split_dataset, synth_dataset, write_frames, ClipAnnotation,
    DatasetManifest, FrameVolume, MotionPattern, SyntheticConfig,
};
use crate::{detect, Error, Result};

#[derive(Parser, Debug)]
#[command(name = "flyact", version, about = "Interest-point based action classification for video clips")]
struct Cli {
    /// Configuration file with `section.key = value` lines.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,
    /// Override one configuration key, e.g. `--set detector.rho=1.0`.
    #[arg(long = "set", global = true, value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Worker threads (0 picks the number of CPUs).
    #[arg(long, global = true, env = "FLYACT_THREADS", default_value_t = 0)]
    threads: usize,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct ClipRange {
    /// First frame of the clip (inclusive).
    #[arg(long, requires = "end")]
    start: Option<usize>,
    /// Last frame of the clip (inclusive).
    #[arg(long, requires = "start")]
    end: Option<usize>,
}

#[derive(Args, Debug)]
#[group(required = true, multiple = false)]
struct Dataset {
    /// Dataset manifest CSV; features are extracted on the fly.
    #[arg(long)]
    manifest: Option<PathBuf>,
    /// Signature matrix written by `featurize`.
    #[arg(long)]
    signatures: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Detect interest points in a directory of PGM frames.
    Detect {
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        range: ClipRange,
        #[arg(long)]
        out: PathBuf,
    },
    /// Compute 3D-SIFT descriptors at previously detected points.
    Describe {
        #[arg(long)]
        frames: PathBuf,
        #[command(flatten)]
        range: ClipRange,
        #[arg(long)]
        points: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build clip signatures from a manifest, a frame directory or a descriptor file.
    Featurize {
        #[arg(long, conflicts_with_all = ["frames", "descriptors"])]
        manifest: Option<PathBuf>,
        #[arg(long, conflicts_with = "descriptors")]
        frames: Option<PathBuf>,
        #[arg(long)]
        descriptors: Option<PathBuf>,
        #[command(flatten)]
        range: ClipRange,
        /// Clip id recorded for single-clip input.
        #[arg(long, default_value = "clip")]
        clip_id: String,
        /// Label recorded for single-clip input.
        #[arg(long, default_value = "")]
        label: String,
        #[arg(long)]
        out: PathBuf,
    },
    /// Train a model and write it to a file.
    Train {
        #[command(flatten)]
        data: Dataset,
        /// Use only the training half of the configured split.
        #[arg(long)]
        split: bool,
        #[arg(long)]
        model: PathBuf,
    },
    /// Predict a label for every clip.
    Predict {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Dataset,
        #[arg(long)]
        out: PathBuf,
    },
    /// Evaluate a model on labelled clips and write a report.
    Evaluate {
        #[arg(long)]
        model: PathBuf,
        #[command(flatten)]
        data: Dataset,
        /// Use only the test half of the split stored in the model.
        #[arg(long)]
        split: bool,
        #[arg(long)]
        report: PathBuf,
    },
    /// Render synthetic clips: one clip, or a labelled dataset with a manifest.
    Synth {
        /// orbiting_blob, oscillating_blob or static_scene.
        #[arg(long, default_value = "orbiting_blob", conflicts_with = "clips_per_class")]
        pattern: MotionPattern,
        /// Write a two-class dataset (orbiting and oscillating) with this many clips per class.
        #[arg(long)]
        clips_per_class: Option<usize>,
        #[arg(long, default_value_t = 64)]
        width: usize,
        #[arg(long, default_value_t = 64)]
        height: usize,
        #[arg(long, default_value_t = 40)]
        frames: usize,
        #[arg(long, default_value_t = 0.0)]
        noise: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },
}

/// Parses `argv` (including the program name), runs the command and returns
/// the process exit code.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match execute(cli) {
        Ok(summary) => {
            println!("{summary}");
            0
        }
        Err(e) => {
            eprintln!("error: {e}");
            exit_code(&e)
        }
    }
}

/// Exit code for an error that reached the command line.
pub fn exit_code(e: &Error) -> i32 {
    if e.is_numeric() {
        3
    } else if matches!(e, Error::InvalidConfig(_)) {
        1
    } else {
        2
    }
}

fn execute(cli: Cli) -> Result<String> {
    let mut cfg = match &cli.config {
        Some(path) => PipelineConfig::load(path)?,
        None => PipelineConfig::default(),
    };
    for o in &cli.overrides {
        cfg.apply_override(o)?;
    }
    cfg.validate()?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(cli.threads)
        .build()
        .map_err(|e| Error::InvalidConfig(format!("thread pool: {e}")))?;
    pool.install(|| dispatch(cli.command, &cfg))
}

fn clip_volume(frames: &Path, range: &ClipRange) -> Result<FrameVolume> {
    let vol = load_frames(frames)?;
    match (range.start, range.end) {
        (Some(start_frame), Some(end_frame)) => crate::video::extract_clip(
            &vol,
            &ClipAnnotation {
                clip_id: String::new(),
                label: String::new(),
                start_frame,
                end_frame,
            },
        ),
        _ => Ok(vol),
    }
}

fn load_manifest(path: &Path) -> Result<DatasetManifest> {
    let mut m = parse_manifest(path)?;
    if let Some(dir) = path.parent() {
        m.resolve_paths(dir);
    }
    Ok(m)
}

#[derive(Clone, Copy, PartialEq, Eq)]
enum Portion {
    All,
    Train,
    Test,
}

fn pick(m: &DatasetManifest, portion: Portion, cfg: &PipelineConfig) -> Result<DatasetManifest> {
    let (train, test) = split_dataset(m, &cfg.split)?;
    Ok(match portion {
        Portion::All => m.clone(),
        Portion::Train => train,
        Portion::Test => test,
    })
}

/// Loads signatures for the requested portion of the configured split. A
/// manifest is split before feature extraction; a signature table is split
/// by its clip ids, which selects the same clips.
fn load_dataset(data: &Dataset, portion: Portion, cfg: &PipelineConfig) -> Result<SignatureTable> {
    match (&data.manifest, &data.signatures) {
        (Some(m), _) => {
            let mut m = load_manifest(m)?;
            if portion != Portion::All {
                m = pick(&m, portion, cfg)?;
            }
            pipeline::featurize_manifest(&m, cfg)
        }
        (_, Some(s)) => {
            let table = io::read_signatures(s)?;
            if portion == Portion::All {
                return Ok(table);
            }
            let keep = pick(&pipeline::manifest_of(&table), portion, cfg)?;
            Ok(pipeline::select_entries(&table, &keep))
        }
        _ => unreachable!("clap requires one dataset source"),
    }
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn dispatch(command: Command, cfg: &PipelineConfig) -> Result<String> {
    match command {
        Command::Detect { frames, range, out } => {
            let vol = clip_volume(&frames, &range)?;
            let points = detect::detect_sstip(&vol, &cfg.detector)?;
            io::write_points(&points, &out)?;
            Ok(format!("detect: {} points -> {}", points.len(), out.display()))
        }
        Command::Describe {
            frames,
            range,
            points,
            out,
        } => {
            let vol = clip_volume(&frames, &range)?;
            let points = io::read_points(&points)?;
            let described = describe_keypoints(&vol, &points, &cfg.descriptor)?;
            io::write_descriptors(&described, &out)?;
            Ok(format!(
                "describe: {} of {} points described -> {}",
                described.len(),
                points.len(),
                out.display()
            ))
        }
        Command::Featurize {
            manifest,
            frames,
            descriptors,
            range,
            clip_id,
            label,
            out,
        } => {
            let table = if let Some(m) = manifest {
                pipeline::featurize_manifest(&load_manifest(&m)?, cfg)?
            } else {
                let signature = if let Some(f) = frames {
                    clip_signature(&clip_volume(&f, &range)?, &clip_id, cfg)?
                } else if let Some(d) = descriptors {
                    let ds: Vec<Descriptor> = io::read_descriptors(&d)?.into_iter().map(|r| r.descriptor).collect();
                    match pool_signature(&ds, &clip_id) {
                        Ok(s) => Some(s.values),
                        Err(Error::NoFeatures(_)) => None,
                        Err(e) => return Err(e),
                    }
                } else {
                    return Err(Error::InvalidConfig(
                        "featurize needs --manifest, --frames or --descriptors".into(),
                    ));
                };
                let ann = ClipAnnotation {
                    clip_id,
                    label,
                    start_frame: 0,
                    end_frame: 0,
                };
                pipeline::table_from_signatures(vec![(ann, signature)])?
            };
            io::write_signatures(&table, &out)?;
            Ok(format!(
                "featurize: {} of {} clips -> {}",
                table.matrix.nrows(),
                table.entries.len(),
                out.display()
            ))
        }
        Command::Train { data, split, model } => {
            let portion = if split { Portion::Train } else { Portion::All };
            let table = load_dataset(&data, portion, cfg)?;
            let trained = pipeline::train_on_table(&table, cfg)?;
            io::save_model(&trained, &model)?;
            Ok(format!(
                "train: {} clips, {} classes -> {}",
                trained.projection.train_signatures.nrows(),
                trained.num_classes(),
                model.display()
            ))
        }
        Command::Predict { model, data, out } => {
            let model = io::load_model(&model)?;
            let table = load_dataset(&data, Portion::All, &model.pipeline)?;
            let mut csv = String::from("clip_id,predicted,distance_margin\n");
            let mut classified = 0;
            for clip in pipeline::test_clips(&table) {
                match &clip.signature {
                    Some(s) => {
                        let p = predict(&model, s)?;
                        classified += 1;
                        let _ = writeln!(csv, "{},{},{}", clip.clip_id, p.label, fmt_f64(p.margin()));
                    }
                    None => {
                        let _ = writeln!(csv, "{},,", clip.clip_id);
                    }
                }
            }
            write_text(&out, &csv)?;
            Ok(format!(
                "predict: {classified} of {} clips classified -> {}",
                table.entries.len(),
                out.display()
            ))
        }
        Command::Evaluate {
            model,
            data,
            split,
            report,
        } => {
            let model = io::load_model(&model)?;
            let portion = if split { Portion::Test } else { Portion::All };
            let table = load_dataset(&data, portion, &model.pipeline)?;
            let eval = evaluate(&model, &pipeline::test_clips(&table))?;
            write_text(&report, &eval.report(&model.pipeline))?;
            Ok(format!(
                "evaluate: accuracy={} ({}/{}) -> {}",
                fmt_f64(eval.accuracy()),
                eval.confusion.correct(),
                eval.confusion.total(),
                report.display()
            ))
        }
        Command::Synth {
            pattern,
            clips_per_class,
            width,
            height,
            frames,
            noise,
            seed,
            out,
        } => {
            let base = SyntheticConfig::new(pattern, width, height, frames).noise(noise);
            match clips_per_class {
                None => {
                    let clip = generate_synthetic(&base.seed(seed))?;
                    write_frames(&clip.volume, &out)?;
                    Ok(format!("synth: {pattern} clip of {frames} frames -> {}", out.display()))
                }
                Some(n) => {
                    let manifest = synth_dataset(&base, n, seed, &out)?;
                    Ok(format!(
                        "synth: {} clips -> {}",
                        manifest.len(),
                        out.join("manifest.csv").display()
                    ))
                }
            }
        }
    }
}
