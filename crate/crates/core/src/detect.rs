//! Selective spatio-temporal interest points.
//!
//! Each frame gets a Harris corner map `S`. Every corner is then inhibited by the
//! corners in an annulus around it, weighted by how well their gradient
//! orientations agree (`t`), giving `C = max(0, S - rho * t)`. Frames without
//! enough temporal change are masked out, weak responses are dropped and the
//! survivors are thinned by strict 3D non-maxima suppression.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::filter::{self, Axis};
use crate::video::FrameVolume;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectorConfig {
    /// Gaussian derivative scale `c` in pixels; the structure tensor is integrated at `2c`.
    pub spatial_scale: f64,
    /// Harris constant.
    pub kappa: f64,
    /// Suppression strength `rho`.
    pub suppression_strength: f64,
    pub mask_inner_radius: f64,
    pub mask_outer_radius: f64,
    /// Standard deviation, in frames, of the temporal-energy smoothing.
    pub temporal_scale: usize,
    pub temporal_threshold_frac: f64,
    pub nms_block: usize,
    pub response_threshold_frac: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            spatial_scale: 1.5,
            kappa: 0.04,
            suppression_strength: 1.5,
            mask_inner_radius: 1.5,
            mask_outer_radius: 6.0,
            temporal_scale: 5,
            temporal_threshold_frac: 0.1,
            nms_block: 3,
            response_threshold_frac: 0.05,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidConfig(m.to_string()));
        if !(self.spatial_scale > 0.0) {
            return bad("detector.spatial_scale must be positive");
        }
        if !(self.kappa >= 0.0) {
            return bad("detector.kappa must be non-negative");
        }
        if !(self.suppression_strength >= 0.0) {
            return bad("detector.rho must be non-negative");
        }
        if !(self.mask_inner_radius >= 0.0 && self.mask_inner_radius < self.mask_outer_radius) {
            return bad("detector.mask_inner_radius must be below mask_outer_radius");
        }
        if self.temporal_scale == 0 {
            return bad("detector.temporal_scale must be at least 1");
        }
        if self.nms_block < 3 || self.nms_block.is_multiple_of(2) {
            return Err(Error::BadBlockSize(self.nms_block));
        }
        for (name, f) in [
            ("temporal_threshold_frac", self.temporal_threshold_frac),
            ("response_threshold_frac", self.response_threshold_frac),
        ] {
            if !(0.0..=1.0).contains(&f) {
                return Err(Error::InvalidConfig(format!("detector.{name} must be in [0, 1]")));
            }
        }
        Ok(())
    }
}

/// A per-pixel real map over one frame, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ResponseMap {
    pub width: usize,
    pub height: usize,
    pub values: Vec<f64>,
}

impl ResponseMap {
    pub fn zeros(width: usize, height: usize) -> Self {
        ResponseMap {
            width,
            height,
            values: vec![0.0; width * height],
        }
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }
}

/// Gradient directions in `(-pi, pi]`; `NaN` marks pixels with zero gradient.
#[derive(Debug, Clone)]
pub struct OrientationMap {
    pub width: usize,
    pub height: usize,
    angles: Vec<f64>,
}

impl OrientationMap {
    pub fn from_angles(width: usize, height: usize, angles: Vec<f64>) -> Self {
        assert_eq!(angles.len(), width * height);
        OrientationMap { width, height, angles }
    }

    pub fn get(&self, x: usize, y: usize) -> Option<f64> {
        let a = self.angles[y * self.width + x];
        (!a.is_nan()).then_some(a)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct InterestPoint {
    pub x: usize,
    pub y: usize,
    pub t: usize,
    pub scale: f64,
    pub response: f64,
}

struct Gradients2d {
    gx: Vec<f64>,
    gy: Vec<f64>,
}

fn check_frame(frame: &[f64], width: usize, height: usize, c: f64) -> Result<()> {
    if frame.len() != width * height {
        return Err(Error::DimensionMismatch(format!(
            "{} pixels for a {width}x{height} frame",
            frame.len()
        )));
    }
    if !(c > 0.0) || (width.min(height) as f64) < 4.0 * c {
        return Err(Error::FrameTooSmall {
            width,
            height,
            scale: c,
        });
    }
    Ok(())
}

fn gradients(frame: &[f64], width: usize, height: usize, c: f64) -> Gradients2d {
    let smooth = filter::gaussian_kernel(c);
    let deriv = filter::derivative_half_kernel(c);
    let dx = filter::derive_axis(frame, width, height, Axis::X, &deriv);
    let gx = filter::smooth_axis(&dx, width, height, Axis::Y, &smooth);
    let dy = filter::derive_axis(frame, width, height, Axis::Y, &deriv);
    let gy = filter::smooth_axis(&dy, width, height, Axis::X, &smooth);
    Gradients2d { gx, gy }
}

fn harris_from(g: &Gradients2d, width: usize, height: usize, c: f64, kappa: f64) -> ResponseMap {
    let xx: Vec<f64> = g.gx.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = g.gy.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = g.gx.iter().zip(&g.gy).map(|(a, b)| a * b).collect();
    let sxx = filter::gaussian_blur(&xx, width, height, 2.0 * c);
    let syy = filter::gaussian_blur(&yy, width, height, 2.0 * c);
    let sxy = filter::gaussian_blur(&xy, width, height, 2.0 * c);
    let values = (0..width * height)
        .map(|i| {
            let det = sxx[i] * syy[i] - sxy[i] * sxy[i];
            let trace = sxx[i] + syy[i];
            (det - kappa * trace * trace).max(0.0)
        })
        .collect();
    ResponseMap {
        width,
        height,
        values,
    }
}

fn orientation_from(g: &Gradients2d, width: usize, height: usize) -> OrientationMap {
    let angles = g
        .gx
        .iter()
        .zip(&g.gy)
        .map(|(&x, &y)| if x == 0.0 && y == 0.0 { f64::NAN } else { y.atan2(x) })
        .collect();
    OrientationMap::from_angles(width, height, angles)
}

/// Harris corner strength `det(M) - kappa * trace(M)^2`, clamped at zero.
pub fn harris_response(frame: &[f64], width: usize, height: usize, c: f64, kappa: f64) -> Result<ResponseMap> {
    check_frame(frame, width, height, c)?;
    Ok(harris_from(&gradients(frame, width, height, c), width, height, c, kappa))
}

/// `atan2(dI/dy, dI/dx)` of the Gaussian-derivative gradient at scale `c`.
pub fn orientation_map(frame: &[f64], width: usize, height: usize, c: f64) -> Result<OrientationMap> {
    check_frame(frame, width, height, c)?;
    Ok(orientation_from(&gradients(frame, width, height, c), width, height))
}

/// Integer offsets `(dx, dy)` whose length lies in `[inner, outer]`.
pub fn annulus_offsets(inner: f64, outer: f64) -> Vec<(isize, isize)> {
    let r = outer.floor() as isize;
    let mut offsets = Vec::new();
    for dy in -r..=r {
        for dx in -r..=r {
            let d = ((dx * dx + dy * dy) as f64).sqrt();
            if d >= inner && d <= outer {
                offsets.push((dx, dy));
            }
        }
    }
    offsets
}

/// Orientation-weighted sum of the responses in the annulus around each pixel.
///
/// Each neighbour contributes `S(neighbour) * max(0, cos(O(p) - O(neighbour)))`.
/// Neighbours outside the frame and pixels without an orientation contribute nothing.
pub fn suppression_term(s: &ResponseMap, o: &OrientationMap, cfg: &DetectorConfig) -> Result<ResponseMap> {
    if (s.width, s.height) != (o.width, o.height) || s.values.len() != s.width * s.height {
        return Err(Error::DimensionMismatch(format!(
            "response map {}x{} vs orientation map {}x{}",
            s.width, s.height, o.width, o.height
        )));
    }
    let (w, h) = (s.width, s.height);
    let offsets = annulus_offsets(cfg.mask_inner_radius, cfg.mask_outer_radius);
    let unit: Vec<Option<(f64, f64)>> = o
        .angles
        .iter()
        .map(|a| (!a.is_nan()).then(|| (a.cos(), a.sin())))
        .collect();
    let norm = if offsets.is_empty() { 0.0 } else { 1.0 / offsets.len() as f64 };
    let mut out = ResponseMap::zeros(w, h);
    for b in 0..h {
        for a in 0..w {
            let Some((ca, sa)) = unit[b * w + a] else {
                continue;
            };
            let mut acc = 0.0;
            for &(dx, dy) in &offsets {
                let (x, y) = (a as isize - dx, b as isize - dy);
                if x < 0 || y < 0 || x >= w as isize || y >= h as isize {
                    continue;
                }
                let j = y as usize * w + x as usize;
                let sv = s.values[j];
                if sv == 0.0 {
                    continue;
                }
                if let Some((cb, sb)) = unit[j] {
                    let weight = ca * cb + sa * sb;
                    if weight > 0.0 {
                        acc += sv * weight;
                    }
                }
            }
            out.values[b * w + a] = acc * norm;
        }
    }
    Ok(out)
}

/// The ramp `H(x) = max(x, 0)`.
#[inline]
pub fn ramp(x: f64) -> f64 {
    if x >= 0.0 {
        x
    } else {
        0.0
    }
}

/// `C = H(S - rho * t)` pointwise.
pub fn apply_suppression(s: &ResponseMap, t: &ResponseMap, rho: f64) -> Result<ResponseMap> {
    if (s.width, s.height) != (t.width, t.height) || s.values.len() != t.values.len() {
        return Err(Error::DimensionMismatch(format!(
            "response map {}x{} vs suppression term {}x{}",
            s.width, s.height, t.width, t.height
        )));
    }
    if !(rho >= 0.0) {
        return Err(Error::InvalidConfig("suppression strength must be non-negative".into()));
    }
    let values = s
        .values
        .iter()
        .zip(&t.values)
        .map(|(&sv, &tv)| ramp(sv - rho * tv))
        .collect();
    Ok(ResponseMap {
        width: s.width,
        height: s.height,
        values,
    })
}

/// A dense `width x height x frames` scalar field, indexed like [`FrameVolume`].
#[derive(Debug, Clone, PartialEq)]
pub struct ScalarVolume {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub values: Vec<f64>,
}

impl ScalarVolume {
    #[inline]
    pub fn get(&self, x: usize, y: usize, t: usize) -> f64 {
        self.values[(t * self.height + y) * self.width + x]
    }

    pub fn max(&self) -> f64 {
        self.values.iter().copied().fold(0.0, f64::max)
    }

    /// Stacks per-frame maps along time.
    pub fn stack(maps: &[ResponseMap]) -> Result<Self> {
        let first = maps
            .first()
            .ok_or_else(|| Error::DimensionMismatch("no frames to stack".into()))?;
        let (width, height) = (first.width, first.height);
        let mut values = Vec::with_capacity(width * height * maps.len());
        for m in maps {
            if (m.width, m.height) != (width, height) {
                return Err(Error::DimensionMismatch("frames differ in size".into()));
            }
            values.extend_from_slice(&m.values);
        }
        Ok(ScalarVolume {
            width,
            height,
            frames: maps.len(),
            values,
        })
    }
}

/// Squared central temporal difference `((I[t+1] - I[t-1]) / 2)^2`, smoothed along
/// time by a Gaussian of standard deviation `tau`. The first and last frame,
/// where the difference stencil does not fit, are zero.
pub fn temporal_energy(vol: &FrameVolume, tau: usize) -> Result<ScalarVolume> {
    let frames = vol.num_frames();
    let need = 2 * tau + 1;
    if tau == 0 || frames < need || frames < 3 {
        return Err(Error::TooFewFrames {
            frames,
            tau,
            need: need.max(3),
        });
    }
    let (w, h) = (vol.width(), vol.height());
    let n = w * h;
    let inner = frames - 2;
    let mut diff = vec![0.0; inner * n];
    for t in 1..frames - 1 {
        let (next, prev) = (vol.frame(t + 1), vol.frame(t - 1));
        let row = &mut diff[(t - 1) * n..t * n];
        for i in 0..n {
            let d = (next[i] - prev[i]) / 2.0;
            row[i] = d * d;
        }
    }

    let taps = filter::gaussian_kernel(tau as f64);
    let r = (taps.len() / 2) as isize;
    let mut values = vec![0.0; frames * n];
    for k in 0..inner {
        let out = &mut values[(k + 1) * n..(k + 2) * n];
        for (j, wgt) in taps.iter().enumerate() {
            let src = filter::reflect(k as isize + j as isize - r, inner);
            let row = &diff[src * n..(src + 1) * n];
            for i in 0..n {
                out[i] += wgt * row[i];
            }
        }
    }
    Ok(ScalarVolume {
        width: w,
        height: h,
        frames,
        values,
    })
}

/// Keeps voxels strictly greater than every other voxel of the centred
/// `block^3` neighbourhood (clipped at the volume borders) and positive.
/// Results are ordered by `(t, y, x)`.
pub fn non_maxima_suppress(vol: &ScalarVolume, block: usize) -> Result<Vec<(usize, usize, usize, f64)>> {
    if block < 3 || block.is_multiple_of(2) {
        return Err(Error::BadBlockSize(block));
    }
    let r = block / 2;
    let (w, h, f) = (vol.width, vol.height, vol.frames);
    let mut out = Vec::new();
    for t in 0..f {
        for y in 0..h {
            'voxel: for x in 0..w {
                let v = vol.get(x, y, t);
                if !(v > 0.0) {
                    continue;
                }
                for tt in t.saturating_sub(r)..(t + r + 1).min(f) {
                    for yy in y.saturating_sub(r)..(y + r + 1).min(h) {
                        for xx in x.saturating_sub(r)..(x + r + 1).min(w) {
                            if (xx, yy, tt) != (x, y, t) && vol.get(xx, yy, tt) >= v {
                                continue 'voxel;
                            }
                        }
                    }
                }
                out.push((x, y, t, v));
            }
        }
    }
    Ok(out)
}

/// Per-frame suppressed corner maps `C` for a whole volume, before any thresholding.
pub fn suppressed_responses(vol: &FrameVolume, cfg: &DetectorConfig) -> Result<Vec<ResponseMap>> {
    cfg.validate()?;
    let (w, h) = (vol.width(), vol.height());
    check_frame(vol.frame(0), w, h, cfg.spatial_scale)?;
    (0..vol.num_frames())
        .into_par_iter()
        .map(|t| {
            let g = gradients(vol.frame(t), w, h, cfg.spatial_scale);
            let s = harris_from(&g, w, h, cfg.spatial_scale, cfg.kappa);
            let o = orientation_from(&g, w, h);
            let inhibition = suppression_term(&s, &o, cfg)?;
            apply_suppression(&s, &inhibition, cfg.suppression_strength)
        })
        .collect()
}

/// Full sSTIP detection over a clip.
pub fn detect_sstip(vol: &FrameVolume, cfg: &DetectorConfig) -> Result<Vec<InterestPoint>> {
    cfg.validate()?;
    let energy = temporal_energy(vol, cfg.temporal_scale)?;
    let maps = suppressed_responses(vol, cfg)?;
    let mut c = ScalarVolume::stack(&maps)?;

    let energy_floor = cfg.temporal_threshold_frac * energy.max();
    for (cv, &e) in c.values.iter_mut().zip(&energy.values) {
        if !(e > 0.0) || e < energy_floor {
            *cv = 0.0;
        }
    }
    let response_floor = cfg.response_threshold_frac * c.max();
    for cv in c.values.iter_mut() {
        if *cv < response_floor {
            *cv = 0.0;
        }
    }

    Ok(non_maxima_suppress(&c, cfg.nms_block)?
        .into_iter()
        .map(|(x, y, t, response)| InterestPoint {
            x,
            y,
            t,
            scale: cfg.spatial_scale,
            response,
        })
        .collect())
}
