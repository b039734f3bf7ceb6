//! Per-clip feature extraction (detect, describe, pool) and dataset-level helpers.

use nalgebra::DMatrix;
use rayon::prelude::*;

use crate::classify::{train_model, TestClip, TrainedModel};
use crate::config::PipelineConfig;
use crate::detect::{detect_sstip, InterestPoint};
use crate::io::{SignatureEntry, SignatureTable};
use crate::sift3d::{describe_keypoints, Descriptor};
use crate::signature::pool_signature;
use crate::video::{extract_clip, load_frames, ClipAnnotation, DatasetManifest, FrameVolume, ManifestEntry};
use crate::{Error, Result};

/// Everything computed for one clip.
#[derive(Debug, Clone)]
pub struct ClipFeatures {
    pub points: Vec<InterestPoint>,
    pub described: Vec<(InterestPoint, Descriptor)>,
    pub signature: Vec<f64>,
}

pub fn extract_features(vol: &FrameVolume, clip_id: &str, cfg: &PipelineConfig) -> Result<ClipFeatures> {
    let points = detect_sstip(vol, &cfg.detector)?;
    let described = describe_keypoints(vol, &points, &cfg.descriptor)?;
    let descriptors: Vec<Descriptor> = described.iter().map(|(_, d)| d.clone()).collect();
    let signature = pool_signature(&descriptors, clip_id)?.values;
    Ok(ClipFeatures {
        points,
        described,
        signature,
    })
}

/// Loads the recording behind a manifest entry and cuts out its frame range.
pub fn load_clip(entry: &ManifestEntry) -> Result<FrameVolume> {
    let full = load_frames(&entry.frames_path)?;
    extract_clip(&full, &entry.annotation)
}

/// Errors that mean "this clip yields no signature" rather than "the data is broken".
fn is_clip_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::NoFeatures(_) | Error::TooFewFrames { .. } | Error::FrameTooSmall { .. } | Error::VolumeTooSmall { .. }
    )
}

/// Signature of an in-memory clip, or `None` if it produced no usable features.
pub fn clip_signature(vol: &FrameVolume, clip_id: &str, cfg: &PipelineConfig) -> Result<Option<Vec<f64>>> {
    match extract_features(vol, clip_id, cfg) {
        Ok(f) => Ok(Some(f.signature)),
        Err(e) if is_clip_failure(&e) => {
            log::warn!("clip {clip_id}: {e}");
            Ok(None)
        }
        Err(e) => Err(e),
    }
}

/// Builds a signature table from `(annotation, signature)` pairs in order.
pub fn table_from_signatures(items: Vec<(ClipAnnotation, Option<Vec<f64>>)>) -> Result<SignatureTable> {
    let dim = items.iter().find_map(|(_, s)| s.as_ref().map(Vec::len)).unwrap_or(0);
    let mut data = Vec::new();
    let mut entries = Vec::with_capacity(items.len());
    let mut rows = 0;
    for (ann, sig) in items {
        let row = match sig {
            Some(s) => {
                if s.len() != dim {
                    return Err(Error::DimensionMismatch("signatures differ in length".into()));
                }
                data.extend(s);
                rows += 1;
                Some(rows - 1)
            }
            None => None,
        };
        entries.push(SignatureEntry {
            clip_id: ann.clip_id,
            label: ann.label,
            row,
        });
    }
    Ok(SignatureTable {
        entries,
        matrix: DMatrix::from_row_slice(rows, dim, &data),
    })
}

/// Extracts a signature for every manifest entry, in parallel across clips.
/// Output order follows the manifest.
pub fn featurize_manifest(manifest: &DatasetManifest, cfg: &PipelineConfig) -> Result<SignatureTable> {
    cfg.validate()?;
    let items = manifest
        .entries
        .par_iter()
        .map(|e| {
            let vol = load_clip(e)?;
            Ok((e.annotation.clone(), clip_signature(&vol, &e.annotation.clip_id, cfg)?))
        })
        .collect::<Result<Vec<_>>>()?;
    table_from_signatures(items)
}

/// Keeps the entries whose clip ids appear in `subset`, preserving table order.
pub fn select_entries(table: &SignatureTable, subset: &DatasetManifest) -> SignatureTable {
    let ids: std::collections::HashSet<&str> =
        subset.entries.iter().map(|e| e.annotation.clip_id.as_str()).collect();
    let items = table
        .entries
        .iter()
        .filter(|e| ids.contains(e.clip_id.as_str()))
        .map(|e| {
            let ann = ClipAnnotation {
                clip_id: e.clip_id.clone(),
                label: e.label.clone(),
                start_frame: 0,
                end_frame: 0,
            };
            (ann, table.signature(e))
        })
        .collect();
    table_from_signatures(items).expect("rows of one matrix share a length")
}

/// A manifest with placeholder paths carrying the table's ids and labels, so
/// the dataset split can be applied to precomputed signatures.
pub fn manifest_of(table: &SignatureTable) -> DatasetManifest {
    DatasetManifest {
        entries: table
            .entries
            .iter()
            .map(|e| ManifestEntry {
                frames_path: Default::default(),
                annotation: ClipAnnotation {
                    clip_id: e.clip_id.clone(),
                    label: e.label.clone(),
                    start_frame: 0,
                    end_frame: 0,
                },
            })
            .collect(),
    }
}

/// Trains on every clip of `table` that has a signature.
pub fn train_on_table(table: &SignatureTable, cfg: &PipelineConfig) -> Result<TrainedModel> {
    let mut labels = vec![String::new(); table.matrix.nrows()];
    for e in &table.entries {
        match e.row {
            Some(r) => labels[r] = e.label.clone(),
            None => log::warn!("clip {} has no features and is left out of training", e.clip_id),
        }
    }
    train_model(&table.matrix, &labels, cfg)
}

pub fn test_clips(table: &SignatureTable) -> Vec<TestClip> {
    table
        .entries
        .iter()
        .map(|e| TestClip {
            clip_id: e.clip_id.clone(),
            label: e.label.clone(),
            signature: table.signature(e),
        })
        .collect()
}
