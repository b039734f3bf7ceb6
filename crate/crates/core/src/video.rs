//! Frame volumes, dataset manifests, deterministic splits and synthetic test clips.

use std::collections::{BTreeMap, HashSet};
use std::f64::consts::PI;
use std::fs;
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};

use image::codecs::pnm::{PnmDecoder, PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageDecoder};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Temporal scale assumed by [`generate_synthetic`]'s minimum clip length.
pub const DEFAULT_TEMPORAL_SCALE: usize = 5;

/// A grayscale clip stored densely as `data[(t * height + y) * width + x]`,
/// luminance in `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameVolume {
    width: usize,
    height: usize,
    num_frames: usize,
    data: Vec<f64>,
}

impl FrameVolume {
    pub fn new(width: usize, height: usize, num_frames: usize, data: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || num_frames == 0 {
            return Err(Error::BadDimensions(format!(
                "{width}x{height}x{num_frames} volume"
            )));
        }
        if data.len() != width * height * num_frames {
            return Err(Error::BadDimensions(format!(
                "{} values for a {width}x{height}x{num_frames} volume",
                data.len()
            )));
        }
        if data.iter().any(|v| !v.is_finite() || *v < 0.0 || *v > 1.0) {
            return Err(Error::BadDimensions(
                "luminance values must be finite and in [0, 1]".into(),
            ));
        }
        Ok(FrameVolume {
            width,
            height,
            num_frames,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, num_frames: usize, value: f64) -> Result<Self> {
        Self::new(width, height, num_frames, vec![value; width * height * num_frames])
    }

    /// Builds a volume by evaluating `f(x, y, t)` at every voxel.
    pub fn from_fn(
        width: usize,
        height: usize,
        num_frames: usize,
        mut f: impl FnMut(usize, usize, usize) -> f64,
    ) -> Result<Self> {
        let mut data = Vec::with_capacity(width * height * num_frames);
        for t in 0..num_frames {
            for y in 0..height {
                for x in 0..width {
                    data.push(f(x, y, t));
                }
            }
        }
        Self::new(width, height, num_frames, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn num_frames(&self) -> usize {
        self.num_frames
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize, t: usize) -> f64 {
        self.data[(t * self.height + y) * self.width + x]
    }

    /// One frame as a row-major `width * height` slice.
    pub fn frame(&self, t: usize) -> &[f64] {
        let n = self.width * self.height;
        &self.data[t * n..(t + 1) * n]
    }
}

/// Reads a directory of binary 8-bit PGM frames in lexicographic filename order.
pub fn load_frames(dir: impl AsRef<Path>) -> Result<FrameVolume> {
    let dir = dir.as_ref();
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .is_some_and(|ext| ext.eq_ignore_ascii_case("pgm"))
        })
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(Error::EmptyDirectory(dir.to_path_buf()));
    }

    let mut dims = None;
    let mut data = Vec::new();
    for path in &paths {
        let (w, h, pixels) = read_pgm(path)?;
        match dims {
            None => dims = Some((w, h)),
            Some((dw, dh)) if (dw, dh) != (w, h) => {
                return Err(Error::DimensionMismatch(format!(
                    "frame {} is {w}x{h}, expected {dw}x{dh}",
                    path.display()
                )))
            }
            Some(_) => {}
        }
        data.extend(pixels.iter().map(|&b| f64::from(b) / 255.0));
    }
    let (w, h) = dims.expect("at least one frame");
    FrameVolume::new(w, h, paths.len(), data)
}

fn read_pgm(path: &Path) -> Result<(usize, usize, Vec<u8>)> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let unsupported = |why: &str| Error::UnsupportedFormat(format!("{}: {why}", path.display()));
    let decoder = PnmDecoder::new(BufReader::new(file)).map_err(|e| unsupported(&e.to_string()))?;
    let header = decoder.header();
    if header.subtype() != PnmSubtype::Graymap(SampleEncoding::Binary) {
        return Err(unsupported("only binary grayscale PGM (P5) frames are accepted"));
    }
    if header.maximal_sample() != 255 {
        return Err(unsupported("PGM maxval must be 255"));
    }
    let (w, h) = (header.width() as usize, header.height() as usize);
    let mut buf = vec![0u8; decoder.total_bytes() as usize];
    decoder
        .read_image(&mut buf)
        .map_err(|e| unsupported(&e.to_string()))?;
    Ok((w, h, buf))
}

/// Writes one `frame_NNNNNN.pgm` per frame, quantizing luminance to 8 bits.
pub fn write_frames(vol: &FrameVolume, dir: impl AsRef<Path>) -> Result<()> {
    let dir = dir.as_ref();
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    for t in 0..vol.num_frames() {
        let path = dir.join(format!("frame_{t:06}.pgm"));
        let bytes: Vec<u8> = vol
            .frame(t)
            .iter()
            .map(|v| (v * 255.0).round().clamp(0.0, 255.0) as u8)
            .collect();
        let file = fs::File::create(&path).map_err(|e| Error::io(&path, e))?;
        let mut out = BufWriter::new(file);
        PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .encode(
                bytes.as_slice(),
                vol.width() as u32,
                vol.height() as u32,
                ExtendedColorType::L8,
            )
            .map_err(|e| Error::UnsupportedFormat(e.to_string()))?;
        out.flush().map_err(|e| Error::io(&path, e))?;
    }
    Ok(())
}

/// A labelled temporal range of a longer recording; `end_frame` is inclusive.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipAnnotation {
    pub clip_id: String,
    pub label: String,
    pub start_frame: usize,
    pub end_frame: usize,
}

/// Copies frames `start_frame..=end_frame` into a new volume.
pub fn extract_clip(vol: &FrameVolume, ann: &ClipAnnotation) -> Result<FrameVolume> {
    if ann.start_frame > ann.end_frame || ann.end_frame >= vol.num_frames() {
        return Err(Error::OutOfRange {
            start: ann.start_frame,
            end: ann.end_frame,
            frames: vol.num_frames(),
        });
    }
    let n = vol.width() * vol.height();
    let data = vol.data[ann.start_frame * n..(ann.end_frame + 1) * n].to_vec();
    Ok(FrameVolume {
        width: vol.width,
        height: vol.height,
        num_frames: ann.end_frame - ann.start_frame + 1,
        data,
    })
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ManifestEntry {
    pub frames_path: PathBuf,
    pub annotation: ClipAnnotation,
}

#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct DatasetManifest {
    pub entries: Vec<ManifestEntry>,
}

pub const MANIFEST_HEADER: [&str; 5] = ["clip_id", "frames_path", "label", "start_frame", "end_frame"];

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct labels in lexicographic order.
    pub fn classes(&self) -> Vec<String> {
        let mut names: Vec<String> = self
            .entries
            .iter()
            .map(|e| e.annotation.label.clone())
            .collect();
        names.sort();
        names.dedup();
        names
    }

    /// Resolves relative `frames_path` entries against `base`.
    pub fn resolve_paths(&mut self, base: &Path) {
        for e in &mut self.entries {
            if e.frames_path.is_relative() {
                e.frames_path = base.join(&e.frames_path);
            }
        }
    }
}

/// Parses the manifest CSV. Row numbers in errors count data rows from 1.
pub fn parse_manifest(path: impl AsRef<Path>) -> Result<DatasetManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_manifest_str(&text)
}

pub fn parse_manifest_str(text: &str) -> Result<DatasetManifest> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let header = reader.headers().map_err(|e| Error::Parse {
        row: 0,
        message: e.to_string(),
    })?;
    if !header.is_empty() && header.iter().ne(MANIFEST_HEADER) {
        return Err(Error::Parse {
            row: 0,
            message: format!("expected header {}", MANIFEST_HEADER.join(",")),
        });
    }

    let mut seen = HashSet::new();
    let mut entries = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let row = i + 1;
        let record = record.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if record.len() != MANIFEST_HEADER.len() {
            return Err(Error::Parse {
                row,
                message: format!("expected 5 fields, found {}", record.len()),
            });
        }
        let frame_index = |k: usize| {
            record[k].parse::<usize>().map_err(|_| Error::Parse {
                row,
                message: format!("{} {:?} is not a frame index", MANIFEST_HEADER[k], &record[k]),
            })
        };
        let annotation = ClipAnnotation {
            clip_id: record[0].to_string(),
            label: record[2].to_string(),
            start_frame: frame_index(3)?,
            end_frame: frame_index(4)?,
        };
        if annotation.start_frame > annotation.end_frame {
            return Err(Error::Parse {
                row,
                message: "start_frame exceeds end_frame".into(),
            });
        }
        if !seen.insert(annotation.clip_id.clone()) {
            return Err(Error::DuplicateClipId(annotation.clip_id));
        }
        entries.push(ManifestEntry {
            frames_path: PathBuf::from(&record[1]),
            annotation,
        });
    }
    Ok(DatasetManifest { entries })
}

pub fn write_manifest(manifest: &DatasetManifest, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let mut out = String::from("clip_id,frames_path,label,start_frame,end_frame\n");
    for e in &manifest.entries {
        let a = &e.annotation;
        out.push_str(&format!(
            "{},{},{},{},{}\n",
            a.clip_id,
            e.frames_path.display(),
            a.label,
            a.start_frame,
            a.end_frame
        ));
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_per_class: usize,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train_per_class: 35,
            seed: 0,
        }
    }
}

/// Per class (in lexicographic class order) Fisher-Yates shuffles the entry
/// indices with a ChaCha8 stream keyed by `seed` and sends the first
/// `train_per_class` to train. Both halves keep manifest order.
pub fn split_dataset(m: &DatasetManifest, s: &SplitSpec) -> Result<(DatasetManifest, DatasetManifest)> {
    if s.train_per_class == 0 {
        return Err(Error::InvalidConfig("train_per_class must be at least 1".into()));
    }
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (i, e) in m.entries.iter().enumerate() {
        by_class.entry(e.annotation.label.as_str()).or_default().push(i);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed);
    let mut in_train = vec![false; m.entries.len()];
    for (class, mut idx) in by_class {
        if idx.len() <= s.train_per_class {
            return Err(Error::InsufficientSamples {
                class: class.to_string(),
                have: idx.len(),
                need: s.train_per_class,
            });
        }
        idx.shuffle(&mut rng);
        for &i in &idx[..s.train_per_class] {
            in_train[i] = true;
        }
    }
    let (mut train, mut test) = (DatasetManifest::default(), DatasetManifest::default());
    for (e, is_train) in m.entries.iter().zip(in_train) {
        if is_train {
            train.entries.push(e.clone());
        } else {
            test.entries.push(e.clone());
        }
    }
    Ok((train, test))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MotionPattern {
    OrbitingBlob,
    OscillatingBlob,
    StaticScene,
}

impl std::str::FromStr for MotionPattern {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "orbiting_blob" | "orbiting" => Ok(MotionPattern::OrbitingBlob),
            "oscillating_blob" | "oscillating" => Ok(MotionPattern::OscillatingBlob),
            "static_scene" | "static" => Ok(MotionPattern::StaticScene),
            other => Err(Error::InvalidConfig(format!("unknown motion pattern {other:?}"))),
        }
    }
}

impl std::fmt::Display for MotionPattern {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            MotionPattern::OrbitingBlob => "orbiting_blob",
            MotionPattern::OscillatingBlob => "oscillating_blob",
            MotionPattern::StaticScene => "static_scene",
        })
    }
}

/// Blob path drawn from the generator's seed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Trajectory {
    /// `x = cx + radius cos(phase + direction 2 pi t / period)`, same with `sin` for `y`.
    Orbit {
        cx: f64,
        cy: f64,
        radius: f64,
        period: f64,
        phase: f64,
        direction: f64,
    },
    /// `x = cx + amplitude sin(2 pi t / period + phase)`, `y = cy`.
    Oscillate {
        cx: f64,
        cy: f64,
        amplitude: f64,
        period: f64,
        phase: f64,
    },
    Fixed { x: f64, y: f64 },
}

impl Trajectory {
    pub fn position(&self, t: f64) -> (f64, f64) {
        match *self {
            Trajectory::Orbit {
                cx,
                cy,
                radius,
                period,
                phase,
                direction,
            } => {
                let a = phase + direction * 2.0 * PI * t / period;
                (cx + radius * a.cos(), cy + radius * a.sin())
            }
            Trajectory::Oscillate {
                cx,
                cy,
                amplitude,
                period,
                phase,
            } => (cx + amplitude * (2.0 * PI * t / period + phase).sin(), cy),
            Trajectory::Fixed { x, y } => (x, y),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub pattern: MotionPattern,
    pub width: usize,
    pub height: usize,
    pub num_frames: usize,
    pub noise_sigma: f64,
    pub seed: u64,
    pub blob_sigma: f64,
    pub blob_amplitude: f64,
    pub background: f64,
}

impl SyntheticConfig {
    pub fn new(pattern: MotionPattern, width: usize, height: usize, num_frames: usize) -> Self {
        SyntheticConfig {
            pattern,
            width,
            height,
            num_frames,
            noise_sigma: 0.0,
            seed: 0,
            blob_sigma: 2.5,
            blob_amplitude: 0.8,
            background: 0.1,
        }
    }

    pub fn noise(mut self, sigma: f64) -> Self {
        self.noise_sigma = sigma;
        self
    }

    pub fn seed(mut self, seed: u64) -> Self {
        self.seed = seed;
        self
    }
}

#[derive(Debug, Clone)]
pub struct SyntheticClip {
    pub volume: FrameVolume,
    pub trajectory: Trajectory,
    /// Blob centre `(x, y, t)` for every frame.
    pub ground_truth: Vec<(f64, f64, usize)>,
}

/// Renders a bright Gaussian blob moving over a dark background, then adds
/// clipped i.i.d. Gaussian noise. Motion parameters are drawn from `seed`.
pub fn generate_synthetic(cfg: &SyntheticConfig) -> Result<SyntheticClip> {
    let min_frames = 2 * DEFAULT_TEMPORAL_SCALE + 1;
    if cfg.width < 32 || cfg.height < 32 || cfg.num_frames < min_frames {
        return Err(Error::BadDimensions(format!(
            "synthetic clips need at least 32x32x{min_frames}, got {}x{}x{}",
            cfg.width, cfg.height, cfg.num_frames
        )));
    }
    if !(cfg.noise_sigma >= 0.0 && cfg.noise_sigma.is_finite()) || !(cfg.blob_sigma > 0.0) {
        return Err(Error::BadDimensions("noise and blob sigma must be non-negative".into()));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let side = cfg.width.min(cfg.height) as f64;
    let cx = cfg.width as f64 / 2.0 + rng.random_range(-2.0..2.0);
    let cy = cfg.height as f64 / 2.0 + rng.random_range(-2.0..2.0);
    let extent = side * rng.random_range(0.15..0.25);
    let period = rng.random_range(16.0..32.0);
    let phase = rng.random_range(0.0..2.0 * PI);
    let trajectory = match cfg.pattern {
        MotionPattern::OrbitingBlob => Trajectory::Orbit {
            cx,
            cy,
            radius: extent,
            period,
            phase,
            direction: if rng.random_bool(0.5) { 1.0 } else { -1.0 },
        },
        MotionPattern::OscillatingBlob => Trajectory::Oscillate {
            cx,
            cy,
            amplitude: extent,
            period,
            phase,
        },
        MotionPattern::StaticScene => Trajectory::Fixed { x: cx, y: cy },
    };

    let noise = Normal::new(0.0, cfg.noise_sigma.max(f64::MIN_POSITIVE))
        .expect("finite non-negative sigma");
    let two_s2 = 2.0 * cfg.blob_sigma * cfg.blob_sigma;
    let mut ground_truth = Vec::with_capacity(cfg.num_frames);
    let mut data = Vec::with_capacity(cfg.width * cfg.height * cfg.num_frames);
    for t in 0..cfg.num_frames {
        let (bx, by) = trajectory.position(t as f64);
        ground_truth.push((bx, by, t));
        for y in 0..cfg.height {
            for x in 0..cfg.width {
                let d2 = (x as f64 - bx).powi(2) + (y as f64 - by).powi(2);
                let mut v = cfg.background + cfg.blob_amplitude * (-d2 / two_s2).exp();
                if cfg.noise_sigma > 0.0 {
                    v += noise.sample(&mut rng);
                }
                data.push(v.clamp(0.0, 1.0));
            }
        }
    }
    Ok(SyntheticClip {
        volume: FrameVolume::new(cfg.width, cfg.height, cfg.num_frames, data)?,
        trajectory,
        ground_truth,
    })
}

/// Writes `n` orbiting and `n` oscillating clips below `out`, plus a
/// `manifest.csv` with paths relative to `out`. Clip `i` of a class uses seed
/// `seed + i` (oscillating clips are offset by `n`).
pub fn synth_dataset(base: &SyntheticConfig, n: usize, seed: u64, out: &Path) -> Result<DatasetManifest> {
    let mut manifest = DatasetManifest::default();
    for (c, pattern) in [MotionPattern::OrbitingBlob, MotionPattern::OscillatingBlob]
        .into_iter()
        .enumerate()
    {
        for i in 0..n {
            let cfg = SyntheticConfig {
                pattern,
                ..base.clone()
            }
            .seed(seed + (c * n + i) as u64);
            let clip = generate_synthetic(&cfg)?;
            let name = format!("{pattern}_{i:03}");
            write_frames(&clip.volume, out.join(&name))?;
            manifest.entries.push(ManifestEntry {
                frames_path: PathBuf::from(&name),
                annotation: ClipAnnotation {
                    clip_id: name,
                    label: pattern.to_string(),
                    start_frame: 0,
                    end_frame: cfg.num_frames - 1,
                },
            });
        }
    }
    write_manifest(&manifest, out.join("manifest.csv"))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ann(start: usize, end: usize) -> ClipAnnotation {
        ClipAnnotation {
            clip_id: "c".into(),
            label: "hold".into(),
            start_frame: start,
            end_frame: end,
        }
    }

    fn ramp_volume(frames: usize) -> FrameVolume {
        FrameVolume::from_fn(8, 6, frames, |x, y, t| ((x + y + t) % 10) as f64 / 10.0).unwrap()
    }

    #[test]
    fn extract_counts_frames() {
        let vol = ramp_volume(100);
        let clip = extract_clip(&vol, &ann(10, 19)).unwrap();
        assert_eq!(clip.num_frames(), 10);
        assert_eq!((clip.width(), clip.height()), (8, 6));
        assert_eq!(clip.get(3, 2, 0), vol.get(3, 2, 10));
    }

    #[test]
    fn extract_full_range_is_identity() {
        let vol = ramp_volume(12);
        assert_eq!(extract_clip(&vol, &ann(0, 11)).unwrap(), vol);
    }

    #[test]
    fn extract_out_of_range() {
        let vol = ramp_volume(100);
        assert!(matches!(
            extract_clip(&vol, &ann(50, 200)),
            Err(Error::OutOfRange { .. })
        ));
    }

    #[test]
    fn volume_rejects_out_of_range_values() {
        assert!(FrameVolume::new(2, 2, 1, vec![0.0, 0.5, 1.5, 0.0]).is_err());
        assert!(FrameVolume::new(2, 2, 1, vec![0.0; 3]).is_err());
        assert!(FrameVolume::new(2, 2, 1, vec![0.0, f64::NAN, 0.0, 0.0]).is_err());
    }

    #[test]
    fn manifest_two_rows() {
        let m = parse_manifest_str(
            "clip_id,frames_path,label,start_frame,end_frame\n\
             a,clips/a,hold,0,9\n\
             b,clips/b,tussle,5,20\n",
        )
        .unwrap();
        assert_eq!(m.len(), 2);
        assert_eq!(m.entries[1].annotation.label, "tussle");
        assert_eq!(m.entries[1].annotation.start_frame, 5);
        assert_eq!(m.entries[0].frames_path, PathBuf::from("clips/a"));
    }

    #[test]
    fn manifest_header_only() {
        let m = parse_manifest_str("clip_id,frames_path,label,start_frame,end_frame\n").unwrap();
        assert!(m.is_empty());
    }

    #[test]
    fn manifest_bad_integer_reports_row() {
        let err = parse_manifest_str(
            "clip_id,frames_path,label,start_frame,end_frame\n\
             a,p,hold,0,9\n\
             b,p,hold,x,9\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::Parse { row: 2, .. }), "{err:?}");
    }

    #[test]
    fn manifest_duplicate_id() {
        let err = parse_manifest_str(
            "clip_id,frames_path,label,start_frame,end_frame\na,p,hold,0,9\na,q,hold,0,9\n",
        )
        .unwrap_err();
        assert!(matches!(err, Error::DuplicateClipId(id) if id == "a"));
    }

    fn balanced_manifest(per_class: usize) -> DatasetManifest {
        let mut entries = Vec::new();
        for label in ["hold", "tussle"] {
            for i in 0..per_class {
                entries.push(ManifestEntry {
                    frames_path: PathBuf::from(format!("{label}/{i}")),
                    annotation: ClipAnnotation {
                        clip_id: format!("{label}{i}"),
                        label: label.into(),
                        start_frame: 0,
                        end_frame: 10,
                    },
                });
            }
        }
        DatasetManifest { entries }
    }

    #[test]
    fn split_matches_protocol_counts() {
        let m = balanced_manifest(50);
        let (train, test) = split_dataset(&m, &SplitSpec { train_per_class: 35, seed: 7 }).unwrap();
        assert_eq!(train.len(), 70);
        assert_eq!(test.len(), 30);
        for class in ["hold", "tussle"] {
            let n = train.entries.iter().filter(|e| e.annotation.label == class).count();
            assert_eq!(n, 35);
        }
    }

    #[test]
    fn split_is_deterministic() {
        let m = balanced_manifest(50);
        let spec = SplitSpec { train_per_class: 35, seed: 42 };
        assert_eq!(split_dataset(&m, &spec).unwrap(), split_dataset(&m, &spec).unwrap());
        let other = split_dataset(&m, &SplitSpec { seed: 43, ..spec }).unwrap();
        assert_ne!(split_dataset(&m, &spec).unwrap().0, other.0);
    }

    #[test]
    fn split_insufficient_samples() {
        let m = balanced_manifest(10);
        let err = split_dataset(&m, &SplitSpec { train_per_class: 35, seed: 0 }).unwrap_err();
        assert!(matches!(err, Error::InsufficientSamples { .. }));
    }

    #[test]
    fn static_scene_frames_identical() {
        let clip = generate_synthetic(&SyntheticConfig::new(MotionPattern::StaticScene, 32, 32, 12)).unwrap();
        let first = clip.volume.frame(0).to_vec();
        for t in 1..12 {
            assert_eq!(clip.volume.frame(t), first.as_slice());
        }
    }

    #[test]
    fn synthetic_is_deterministic() {
        let cfg = SyntheticConfig::new(MotionPattern::OrbitingBlob, 48, 40, 20).noise(0.05).seed(9);
        let a = generate_synthetic(&cfg).unwrap();
        let b = generate_synthetic(&cfg).unwrap();
        assert_eq!(a.volume, b.volume);
        assert_eq!(a.ground_truth, b.ground_truth);
    }

    #[test]
    fn oscillation_follows_declared_sinusoid() {
        let clip = generate_synthetic(
            &SyntheticConfig::new(MotionPattern::OscillatingBlob, 64, 64, 40).seed(3),
        )
        .unwrap();
        let Trajectory::Oscillate { cx, cy, amplitude, period, phase } = clip.trajectory else {
            panic!("wrong trajectory kind");
        };
        for &(x, y, t) in &clip.ground_truth {
            let expect = cx + amplitude * (std::f64::consts::TAU * t as f64 / period + phase).sin();
            assert!((x - expect).abs() < 1e-12);
            assert_eq!(y, cy);
        }
    }

    #[test]
    fn synthetic_rejects_small_inputs() {
        let small = SyntheticConfig::new(MotionPattern::OrbitingBlob, 16, 64, 40);
        assert!(matches!(generate_synthetic(&small), Err(Error::BadDimensions(_))));
        let short = SyntheticConfig::new(MotionPattern::OrbitingBlob, 64, 64, 10);
        assert!(matches!(generate_synthetic(&short), Err(Error::BadDimensions(_))));
    }
}
