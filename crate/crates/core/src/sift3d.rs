//! 3D-SIFT descriptors.
//!
//! Every voxel of an axis-aligned support cube around the keypoint votes into one
//! `(azimuth, elevation)` bin of the sub-histogram of the subregion that contains
//! it. The vote is the 3D gradient magnitude, weighted by a Gaussian centred on
//! the keypoint and divided by the solid angle of the bin, so bins near the poles
//! are not starved.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detect::InterestPoint;
use crate::video::FrameVolume;
use crate::{Error, Result};

/// Finite-difference gradients of a volume along x, y and t.
#[derive(Debug, Clone, PartialEq)]
pub struct GradientVolume {
    pub width: usize,
    pub height: usize,
    pub frames: usize,
    pub la: Vec<f64>,
    pub lb: Vec<f64>,
    pub lt: Vec<f64>,
}

impl GradientVolume {
    #[inline]
    fn index(&self, x: usize, y: usize, t: usize) -> usize {
        (t * self.height + y) * self.width + x
    }

    #[inline]
    pub fn at(&self, x: usize, y: usize, t: usize) -> [f64; 3] {
        let i = self.index(x, y, t);
        [self.la[i], self.lb[i], self.lt[i]]
    }
}

/// Central differences inside, one-sided differences on the faces.
pub fn gradients_3d(vol: &FrameVolume) -> Result<GradientVolume> {
    let (w, h, f) = (vol.width(), vol.height(), vol.num_frames());
    if w < 3 || h < 3 || f < 3 {
        return Err(Error::VolumeTooSmall {
            width: w,
            height: h,
            frames: f,
        });
    }
    fn diff(get: impl Fn(usize) -> f64, i: usize, n: usize) -> f64 {
        if i == 0 {
            get(1) - get(0)
        } else if i == n - 1 {
            get(n - 1) - get(n - 2)
        } else {
            (get(i + 1) - get(i - 1)) / 2.0
        }
    }
    let len = w * h * f;
    let (mut la, mut lb, mut lt) = (vec![0.0; len], vec![0.0; len], vec![0.0; len]);
    for t in 0..f {
        for y in 0..h {
            for x in 0..w {
                let i = (t * h + y) * w + x;
                la[i] = diff(|k| vol.get(k, y, t), x, w);
                lb[i] = diff(|k| vol.get(x, k, t), y, h);
                lt[i] = diff(|k| vol.get(x, y, k), t, f);
            }
        }
    }
    Ok(GradientVolume {
        width: w,
        height: h,
        frames: f,
        la,
        lb,
        lt,
    })
}

/// Magnitude and spherical angles of one gradient vector.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Polar {
    pub magnitude: f64,
    /// Azimuth in `(-pi, pi]`.
    pub theta: f64,
    /// Elevation out of the image plane, in `[-pi/2, pi/2]`.
    pub phi: f64,
}

pub fn voxel_polar(la: f64, lb: f64, lt: f64) -> Polar {
    let planar = (la * la + lb * lb).sqrt();
    let magnitude = (la * la + lb * lb + lt * lt).sqrt();
    if magnitude == 0.0 {
        return Polar {
            magnitude: 0.0,
            theta: 0.0,
            phi: 0.0,
        };
    }
    let mut theta = lb.atan2(la);
    if theta == -PI {
        theta = PI;
    }
    Polar {
        magnitude,
        theta,
        phi: lt.atan2(planar),
    }
}

/// Solid angle of the bin `[phi_low, phi_low + delta_phi] x delta_theta`, with
/// `phi` measured as elevation.
pub fn solid_angle_weight(phi_low: f64, delta_phi: f64, delta_theta: f64) -> Result<f64> {
    if !(delta_phi > 0.0 && delta_theta > 0.0)
        || phi_low < -FRAC_PI_2 - 1e-12
        || phi_low + delta_phi > FRAC_PI_2 + 1e-12
    {
        return Err(Error::DegenerateBin);
    }
    let w = delta_theta * ((phi_low + delta_phi).sin() - phi_low.sin());
    if w > 0.0 {
        Ok(w)
    } else {
        Err(Error::DegenerateBin)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DescriptorConfig {
    /// Subregions per axis.
    pub subregion_grid: usize,
    /// Voxels per subregion per axis.
    pub subregion_size: usize,
    pub theta_bins: usize,
    pub phi_bins: usize,
    /// Standard deviation of the spatial-temporal vote weighting.
    pub gauss_sigma: f64,
}

impl Default for DescriptorConfig {
    fn default() -> Self {
        DescriptorConfig {
            subregion_grid: 2,
            subregion_size: 4,
            theta_bins: 8,
            phi_bins: 10,
            gauss_sigma: 4.0,
        }
    }
}

impl DescriptorConfig {
    pub fn dimension(&self) -> usize {
        self.subregion_grid.pow(3) * self.theta_bins * self.phi_bins
    }

    /// Support edge length in voxels.
    pub fn support(&self) -> usize {
        self.subregion_grid * self.subregion_size
    }

    pub fn validate(&self) -> Result<()> {
        if self.subregion_grid == 0
            || self.subregion_size == 0
            || self.theta_bins == 0
            || self.phi_bins == 0
            || !(self.gauss_sigma > 0.0)
        {
            return Err(Error::InvalidConfig(
                "descriptor grid, sizes and bin counts must be positive".into(),
            ));
        }
        Ok(())
    }

    fn delta_theta(&self) -> f64 {
        2.0 * PI / self.theta_bins as f64
    }

    fn delta_phi(&self) -> f64 {
        PI / self.phi_bins as f64
    }

    /// Azimuth bin: bin `k` covers `(-pi + k d, -pi + (k + 1) d]`, with `-pi`
    /// itself folded onto `pi`.
    pub fn theta_bin(&self, theta: f64) -> usize {
        let k = ((theta + PI) / self.delta_theta()).ceil() as isize - 1;
        k.rem_euclid(self.theta_bins as isize) as usize
    }

    pub fn phi_bin(&self, phi: f64) -> usize {
        let k = ((phi + FRAC_PI_2) / self.delta_phi()).floor();
        (k.max(0.0) as usize).min(self.phi_bins - 1)
    }

    /// Solid angles of every elevation band's bins.
    pub fn solid_angles(&self) -> Result<Vec<f64>> {
        let dp = self.delta_phi();
        (0..self.phi_bins)
            .map(|k| solid_angle_weight(-FRAC_PI_2 + k as f64 * dp, dp, self.delta_theta()))
            .collect()
    }
}

/// A descriptor vector; unit L2 norm once produced by [`compute_descriptor`].
#[derive(Debug, Clone, PartialEq)]
pub struct Descriptor(pub Vec<f64>);

impl Descriptor {
    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

/// One voxel of the support cube: offsets from the keypoint along x, y, t plus its gradient.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SupportVoxel {
    pub offset: [isize; 3],
    pub polar: Polar,
}

/// Offsets covered by the support, `-support/2 .. support - support/2` per axis.
fn support_range(cfg: &DescriptorConfig) -> std::ops::Range<isize> {
    let s = cfg.support() as isize;
    -(s / 2)..s - s / 2
}

/// Accumulates the raw (unnormalized) histogram from support voxels. The layout is
/// `[z-subregion][y-subregion][x-subregion][phi bin][theta bin]`.
pub fn raw_histogram(voxels: &[SupportVoxel], cfg: &DescriptorConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    let solid = cfg.solid_angles()?;
    let lo = support_range(cfg).start;
    let g = cfg.subregion_grid;
    let cell = cfg.theta_bins * cfg.phi_bins;
    let two_s2 = 2.0 * cfg.gauss_sigma * cfg.gauss_sigma;
    let mut hist = vec![0.0; cfg.dimension()];
    for v in voxels {
        let [dx, dy, dt] = v.offset;
        let sub = |o: isize| -> Option<usize> {
            let k = (o - lo) as usize / cfg.subregion_size;
            (o >= lo && k < g).then_some(k)
        };
        let (Some(sx), Some(sy), Some(st)) = (sub(dx), sub(dy), sub(dt)) else {
            return Err(Error::SupportOutOfBounds);
        };
        if v.polar.magnitude == 0.0 {
            continue;
        }
        let ip = cfg.phi_bin(v.polar.phi);
        let it = cfg.theta_bin(v.polar.theta);
        let dist2 = (dx * dx + dy * dy + dt * dt) as f64;
        let vote = v.polar.magnitude * (-dist2 / two_s2).exp() / solid[ip];
        hist[((st * g + sy) * g + sx) * cell + ip * cfg.theta_bins + it] += vote;
    }
    Ok(hist)
}

fn l2_normalize(v: &mut [f64]) -> f64 {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm > 0.0 {
        v.iter_mut().for_each(|x| *x /= norm);
    }
    norm
}

/// L2-normalizes, clamps entries at 0.2 and renormalizes.
pub fn normalize_histogram(mut hist: Vec<f64>) -> Result<Descriptor> {
    if l2_normalize(&mut hist) < 1e-12 {
        return Err(Error::LowContrast);
    }
    hist.iter_mut().for_each(|x| *x = x.min(0.2));
    l2_normalize(&mut hist);
    Ok(Descriptor(hist))
}

/// Gathers the support voxels of `p`, failing if the cube leaves the volume.
pub fn support_voxels(grads: &GradientVolume, p: &InterestPoint, cfg: &DescriptorConfig) -> Result<Vec<SupportVoxel>> {
    let range = support_range(cfg);
    let fits = |c: usize, n: usize| {
        let c = c as isize;
        c + range.start >= 0 && c + range.end <= n as isize
    };
    if !(fits(p.x, grads.width) && fits(p.y, grads.height) && fits(p.t, grads.frames)) {
        return Err(Error::SupportOutOfBounds);
    }
    let mut voxels = Vec::with_capacity(cfg.support().pow(3));
    for dt in range.clone() {
        for dy in range.clone() {
            for dx in range.clone() {
                let [la, lb, lt] = grads.at(
                    (p.x as isize + dx) as usize,
                    (p.y as isize + dy) as usize,
                    (p.t as isize + dt) as usize,
                );
                voxels.push(SupportVoxel {
                    offset: [dx, dy, dt],
                    polar: voxel_polar(la, lb, lt),
                });
            }
        }
    }
    Ok(voxels)
}

/// Descriptor of one keypoint. `vol` is only used to check the gradients belong to it.
pub fn compute_descriptor(
    vol: &FrameVolume,
    grads: &GradientVolume,
    p: &InterestPoint,
    cfg: &DescriptorConfig,
) -> Result<Descriptor> {
    if (vol.width(), vol.height(), vol.num_frames()) != (grads.width, grads.height, grads.frames) {
        return Err(Error::DimensionMismatch("gradients do not match the volume".into()));
    }
    let voxels = support_voxels(grads, p, cfg)?;
    normalize_histogram(raw_histogram(&voxels, cfg)?)
}

/// Describes every keypoint whose support fits and has contrast; others are
/// dropped. Survivors keep their input order.
pub fn describe_keypoints(
    vol: &FrameVolume,
    points: &[InterestPoint],
    cfg: &DescriptorConfig,
) -> Result<Vec<(InterestPoint, Descriptor)>> {
    cfg.validate()?;
    let grads = gradients_3d(vol)?;
    let described: Vec<Option<(InterestPoint, Descriptor)>> = points
        .par_iter()
        .map(|p| match compute_descriptor(vol, &grads, p, cfg) {
            Ok(d) => Ok(Some((*p, d))),
            Err(Error::SupportOutOfBounds | Error::LowContrast) => Ok(None),
            Err(e) => Err(e),
        })
        .collect::<Result<_>>()?;
    Ok(described.into_iter().flatten().collect())
}
