//! On-disk formats: point lists, descriptor files, signature matrices and model files.
//!
//! All binary formats are little-endian. Floats in CSV files are written with
//! 17 significant digits, which round-trips every `f64`.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};

use crate::classify::TrainedModel;
use crate::config::PipelineConfig;
use crate::detect::InterestPoint;
use crate::sift3d::Descriptor;
use crate::srkda::ProjectionModel;
use crate::{Error, Result};

/// Scientific notation with 17 significant digits.
pub fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

fn read(path: &Path) -> Result<Vec<u8>> {
    fs::read(path).map_err(|e| Error::io(path, e))
}

fn write(path: &Path, bytes: &[u8]) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

/// Little-endian cursor over a byte slice.
struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn new(bytes: &'a [u8]) -> Self {
        Reader { bytes, pos: 0 }
    }

    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| Error::CorruptFile("unexpected end of file".into()))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn f64s(&mut self, n: usize) -> Result<Vec<f64>> {
        let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::CorruptFile("size overflow".into()))?)?;
        Ok(raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect())
    }

    fn finished(&self) -> bool {
        self.pos == self.bytes.len()
    }
}

fn put_f64s(out: &mut Vec<u8>, values: impl IntoIterator<Item = f64>) {
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
}

fn row_major(m: &DMatrix<f64>) -> impl Iterator<Item = f64> + '_ {
    (0..m.nrows()).flat_map(move |i| (0..m.ncols()).map(move |j| m[(i, j)]))
}

// ---------------------------------------------------------------- points

pub const POINTS_HEADER: &str = "x,y,t,scale,response";

pub fn points_to_csv(points: &[InterestPoint]) -> String {
    let mut out = format!("{POINTS_HEADER}\n");
    for p in points {
        let _ = writeln!(out, "{},{},{},{},{}", p.x, p.y, p.t, fmt_f64(p.scale), fmt_f64(p.response));
    }
    out
}

pub fn write_points(points: &[InterestPoint], path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), points_to_csv(points).as_bytes())
}

pub fn read_points(path: impl AsRef<Path>) -> Result<Vec<InterestPoint>> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut lines = text.lines();
    if lines.next().map(str::trim) != Some(POINTS_HEADER) {
        return Err(Error::Parse {
            row: 0,
            message: format!("expected header {POINTS_HEADER}"),
        });
    }
    lines
        .filter(|l| !l.trim().is_empty())
        .enumerate()
        .map(|(i, line)| {
            let row = i + 1;
            let bad = |what: &str| Error::Parse {
                row,
                message: format!("bad {what}"),
            };
            let f: Vec<&str> = line.split(',').map(str::trim).collect();
            if f.len() != 5 {
                return Err(bad("field count"));
            }
            Ok(InterestPoint {
                x: f[0].parse().map_err(|_| bad("x"))?,
                y: f[1].parse().map_err(|_| bad("y"))?,
                t: f[2].parse().map_err(|_| bad("t"))?,
                scale: f[3].parse().map_err(|_| bad("scale"))?,
                response: f[4].parse().map_err(|_| bad("response"))?,
            })
        })
        .collect()
}

// ----------------------------------------------------------- descriptors

/// One record of a descriptor file.
#[derive(Debug, Clone, PartialEq)]
pub struct DescriptorRecord {
    pub x: u32,
    pub y: u32,
    pub t: u32,
    pub descriptor: Descriptor,
}

/// `u64 count`, then per record `u32 x, u32 y, u32 t` and the descriptor as `f64`s.
pub fn encode_descriptors(records: &[(InterestPoint, Descriptor)]) -> Result<Vec<u8>> {
    let dim = records.first().map_or(0, |(_, d)| d.len());
    let mut out = Vec::with_capacity(8 + records.len() * (12 + 8 * dim));
    out.extend_from_slice(&(records.len() as u64).to_le_bytes());
    for (p, d) in records {
        if d.len() != dim {
            return Err(Error::DimensionMismatch("descriptors differ in length".into()));
        }
        for c in [p.x, p.y, p.t] {
            let c = u32::try_from(c).map_err(|_| Error::DimensionMismatch("coordinate exceeds u32".into()))?;
            out.extend_from_slice(&c.to_le_bytes());
        }
        put_f64s(&mut out, d.values().iter().copied());
    }
    Ok(out)
}

pub fn decode_descriptors(bytes: &[u8]) -> Result<Vec<DescriptorRecord>> {
    let mut r = Reader::new(bytes);
    let count = r.u64()? as usize;
    if count == 0 {
        return if r.finished() {
            Ok(Vec::new())
        } else {
            Err(Error::CorruptFile("trailing bytes after empty descriptor list".into()))
        };
    }
    let body = bytes.len() - 8;
    if !body.is_multiple_of(count) || (body / count) < 12 || !(body / count - 12).is_multiple_of(8) {
        return Err(Error::CorruptFile("descriptor file size does not match its count".into()));
    }
    let dim = (body / count - 12) / 8;
    (0..count)
        .map(|_| {
            Ok(DescriptorRecord {
                x: r.u32()?,
                y: r.u32()?,
                t: r.u32()?,
                descriptor: Descriptor(r.f64s(dim)?),
            })
        })
        .collect()
}

pub fn write_descriptors(records: &[(InterestPoint, Descriptor)], path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &encode_descriptors(records)?)
}

pub fn read_descriptors(path: impl AsRef<Path>) -> Result<Vec<DescriptorRecord>> {
    decode_descriptors(&read(path.as_ref())?)
}

// ------------------------------------------------------------ signatures

/// One row of the signature sidecar; `row` is `None` for clips without features.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SignatureEntry {
    pub clip_id: String,
    pub label: String,
    pub row: Option<usize>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SignatureTable {
    pub entries: Vec<SignatureEntry>,
    pub matrix: DMatrix<f64>,
}

impl SignatureTable {
    pub fn signature(&self, entry: &SignatureEntry) -> Option<Vec<f64>> {
        entry.row.map(|r| self.matrix.row(r).iter().copied().collect())
    }
}

/// Path of the `clip_id,label,row_index` sidecar: the matrix path with `.csv` appended.
pub fn sidecar_path(matrix: &Path) -> PathBuf {
    let mut s = matrix.as_os_str().to_owned();
    s.push(".csv");
    PathBuf::from(s)
}

pub fn encode_matrix(m: &DMatrix<f64>) -> Vec<u8> {
    let mut out = Vec::with_capacity(16 + 8 * m.len());
    out.extend_from_slice(&(m.nrows() as u64).to_le_bytes());
    out.extend_from_slice(&(m.ncols() as u64).to_le_bytes());
    put_f64s(&mut out, row_major(m));
    out
}

pub fn decode_matrix(bytes: &[u8]) -> Result<DMatrix<f64>> {
    let mut r = Reader::new(bytes);
    let rows = r.u64()? as usize;
    let cols = r.u64()? as usize;
    let n = rows
        .checked_mul(cols)
        .ok_or_else(|| Error::CorruptFile("matrix size overflow".into()))?;
    let data = r.f64s(n)?;
    if !r.finished() {
        return Err(Error::CorruptFile("trailing bytes after matrix".into()));
    }
    Ok(DMatrix::from_row_slice(rows, cols, &data))
}

pub fn write_signatures(table: &SignatureTable, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    write(path, &encode_matrix(&table.matrix))?;
    let mut csv = String::from("clip_id,label,row_index\n");
    for e in &table.entries {
        let row = e.row.map(|r| r.to_string()).unwrap_or_default();
        let _ = writeln!(csv, "{},{},{}", e.clip_id, e.label, row);
    }
    write(&sidecar_path(path), csv.as_bytes())
}

pub fn read_signatures(path: impl AsRef<Path>) -> Result<SignatureTable> {
    let path = path.as_ref();
    let matrix = decode_matrix(&read(path)?)?;
    let side = sidecar_path(path);
    let text = fs::read_to_string(&side).map_err(|e| Error::io(&side, e))?;
    let mut reader = csv::ReaderBuilder::new().from_reader(text.as_bytes());
    let mut entries = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let row = i + 1;
        let rec = rec.map_err(|e| Error::Parse {
            row,
            message: e.to_string(),
        })?;
        if rec.len() != 3 {
            return Err(Error::Parse {
                row,
                message: "expected clip_id,label,row_index".into(),
            });
        }
        let index = match rec[2].trim() {
            "" => None,
            s => {
                let r: usize = s.parse().map_err(|_| Error::Parse {
                    row,
                    message: format!("bad row index {s:?}"),
                })?;
                if r >= matrix.nrows() {
                    return Err(Error::Parse {
                        row,
                        message: format!("row index {r} beyond {} rows", matrix.nrows()),
                    });
                }
                Some(r)
            }
        };
        entries.push(SignatureEntry {
            clip_id: rec[0].to_string(),
            label: rec[1].to_string(),
            row: index,
        });
    }
    Ok(SignatureTable { entries, matrix })
}

// ----------------------------------------------------------------- model

pub const MODEL_MAGIC: &[u8; 8] = b"FLYACTMD";
pub const MODEL_VERSION: (u16, u16) = (1, 0);

#[derive(Serialize, Deserialize)]
struct ModelHeader {
    config: PipelineConfig,
    class_names: Vec<String>,
    train_rows: usize,
    signature_len: usize,
    directions: usize,
}

/// Magic, `u16` major and minor version, `u64` header length, JSON header,
/// the training signatures, expansion coefficients and centroids as row-major
/// `f64` arrays, then a CRC-32 of everything before it.
pub fn encode_model(model: &TrainedModel) -> Result<Vec<u8>> {
    let proj = &model.projection;
    let header = ModelHeader {
        config: model.pipeline.clone(),
        class_names: model.class_names.clone(),
        train_rows: proj.train_signatures.nrows(),
        signature_len: proj.train_signatures.ncols(),
        directions: proj.omega.ncols(),
    };
    let json = serde_json::to_vec(&header).map_err(|e| Error::CorruptFile(e.to_string()))?;
    let mut out = Vec::new();
    out.extend_from_slice(MODEL_MAGIC);
    out.extend_from_slice(&MODEL_VERSION.0.to_le_bytes());
    out.extend_from_slice(&MODEL_VERSION.1.to_le_bytes());
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    put_f64s(&mut out, row_major(&proj.train_signatures));
    put_f64s(&mut out, row_major(&proj.omega));
    put_f64s(&mut out, row_major(&model.centroids));
    let crc = crc32fast::hash(&out);
    out.extend_from_slice(&crc.to_le_bytes());
    Ok(out)
}

pub fn decode_model(bytes: &[u8]) -> Result<TrainedModel> {
    let mut r = Reader::new(bytes);
    if r.take(8)? != MODEL_MAGIC {
        return Err(Error::CorruptFile("not a model file".into()));
    }
    let (major, minor) = (r.u16()?, r.u16()?);
    if major != MODEL_VERSION.0 {
        return Err(Error::VersionMismatch { major, minor });
    }
    if bytes.len() < r.pos + 12 {
        return Err(Error::CorruptFile("truncated model file".into()));
    }
    let (body, tail) = bytes.split_at(bytes.len() - 4);
    if crc32fast::hash(body) != u32::from_le_bytes(tail.try_into().unwrap()) {
        return Err(Error::CorruptFile("checksum mismatch".into()));
    }

    let mut r = Reader::new(body);
    r.take(12)?;
    let header_len = r.u64()? as usize;
    let header: ModelHeader =
        serde_json::from_slice(r.take(header_len)?).map_err(|e| Error::CorruptFile(e.to_string()))?;
    let (n, d, k, c) = (
        header.train_rows,
        header.signature_len,
        header.directions,
        header.class_names.len(),
    );
    let train = DMatrix::from_row_slice(n, d, &r.f64s(n * d)?);
    let omega = DMatrix::from_row_slice(n, k, &r.f64s(n * k)?);
    let centroids = DMatrix::from_row_slice(c, k, &r.f64s(c * k)?);
    if !r.finished() {
        return Err(Error::CorruptFile("trailing bytes in model file".into()));
    }
    Ok(TrainedModel {
        projection: ProjectionModel {
            train_signatures: train,
            omega,
            kernel: header.config.kernel,
            class_names: header.class_names.clone(),
        },
        centroids,
        class_names: header.class_names,
        pipeline: header.config,
    })
}

pub fn save_model(model: &TrainedModel, path: impl AsRef<Path>) -> Result<()> {
    write(path.as_ref(), &encode_model(model)?)
}

pub fn load_model(path: impl AsRef<Path>) -> Result<TrainedModel> {
    decode_model(&read(path.as_ref())?)
}
