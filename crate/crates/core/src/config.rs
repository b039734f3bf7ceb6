//! Pipeline configuration and its flat `section.key = value` text form.
//!
//! ```text
//! # comments start with '#'
//! detector.rho = 1.5
//! detector.temporal_scale = 5
//! kernel.kind = rbf
//! kernel.gamma = auto
//! ```

use std::fmt::Write as _;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detect::DetectorConfig;
use crate::sift3d::DescriptorConfig;
use crate::srkda::KernelConfig;
use crate::video::SplitSpec;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Pooling {
    #[default]
    Mean,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub detector: DetectorConfig,
    pub descriptor: DescriptorConfig,
    pub kernel: KernelConfig,
    pub pooling: Pooling,
    pub split: SplitSpec,
}

/// Every accepted key, in the order [`PipelineConfig::to_text`] writes them.
pub const KEYS: &[&str] = &[
    "detector.spatial_scale",
    "detector.kappa",
    "detector.rho",
    "detector.mask_inner_radius",
    "detector.mask_outer_radius",
    "detector.temporal_scale",
    "detector.temporal_threshold_frac",
    "detector.nms_block",
    "detector.response_threshold_frac",
    "descriptor.subregion_grid",
    "descriptor.subregion_size",
    "descriptor.theta_bins",
    "descriptor.phi_bins",
    "descriptor.gauss_sigma",
    "kernel.kind",
    "kernel.gamma",
    "kernel.delta",
    "pooling.method",
    "split.train_per_class",
    "split.seed",
];

fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .parse()
        .map_err(|_| Error::InvalidConfig(format!("{key}: cannot parse {value:?}")))
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        self.detector.validate()?;
        self.descriptor.validate()?;
        self.kernel.validate()?;
        if self.split.train_per_class == 0 {
            return Err(Error::InvalidConfig("split.train_per_class must be at least 1".into()));
        }
        Ok(())
    }

    /// Sets one `section.key` from its text value.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let d = &mut self.detector;
        let s = &mut self.descriptor;
        match key.trim() {
            "detector.spatial_scale" => d.spatial_scale = parse(key, v)?,
            "detector.kappa" => d.kappa = parse(key, v)?,
            "detector.rho" => d.suppression_strength = parse(key, v)?,
            "detector.mask_inner_radius" => d.mask_inner_radius = parse(key, v)?,
            "detector.mask_outer_radius" => d.mask_outer_radius = parse(key, v)?,
            "detector.temporal_scale" => d.temporal_scale = parse(key, v)?,
            "detector.temporal_threshold_frac" => d.temporal_threshold_frac = parse(key, v)?,
            "detector.nms_block" => d.nms_block = parse(key, v)?,
            "detector.response_threshold_frac" => d.response_threshold_frac = parse(key, v)?,
            "descriptor.subregion_grid" => s.subregion_grid = parse(key, v)?,
            "descriptor.subregion_size" => s.subregion_size = parse(key, v)?,
            "descriptor.theta_bins" => s.theta_bins = parse(key, v)?,
            "descriptor.phi_bins" => s.phi_bins = parse(key, v)?,
            "descriptor.gauss_sigma" => s.gauss_sigma = parse(key, v)?,
            "kernel.kind" => self.kernel.kind = v.parse()?,
            "kernel.gamma" => {
                self.kernel.gamma = if v == "auto" { None } else { Some(parse(key, v)?) }
            }
            "kernel.delta" => self.kernel.regularization = parse(key, v)?,
            "pooling.method" => {
                if v != "mean" {
                    return Err(Error::InvalidConfig(format!("pooling.method {v:?} unsupported")));
                }
                self.pooling = Pooling::Mean;
            }
            "split.train_per_class" => self.split.train_per_class = parse(key, v)?,
            "split.seed" => self.split.seed = parse(key, v)?,
            other => return Err(Error::InvalidConfig(format!("unknown key {other:?}"))),
        }
        Ok(())
    }

    /// Applies a `section.key=value` override.
    pub fn apply_override(&mut self, assignment: &str) -> Result<()> {
        let (k, v) = assignment
            .split_once('=')
            .ok_or_else(|| Error::InvalidConfig(format!("expected key=value, got {assignment:?}")))?;
        self.set(k, v)
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut cfg = PipelineConfig::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
                continue;
            }
            cfg.apply_override(line).map_err(|e| Error::Parse {
                row: i + 1,
                message: e.to_string(),
            })?;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Self::from_text(&text)
    }

    pub fn get(&self, key: &str) -> Option<String> {
        let d = &self.detector;
        let s = &self.descriptor;
        Some(match key {
            "detector.spatial_scale" => d.spatial_scale.to_string(),
            "detector.kappa" => d.kappa.to_string(),
            "detector.rho" => d.suppression_strength.to_string(),
            "detector.mask_inner_radius" => d.mask_inner_radius.to_string(),
            "detector.mask_outer_radius" => d.mask_outer_radius.to_string(),
            "detector.temporal_scale" => d.temporal_scale.to_string(),
            "detector.temporal_threshold_frac" => d.temporal_threshold_frac.to_string(),
            "detector.nms_block" => d.nms_block.to_string(),
            "detector.response_threshold_frac" => d.response_threshold_frac.to_string(),
            "descriptor.subregion_grid" => s.subregion_grid.to_string(),
            "descriptor.subregion_size" => s.subregion_size.to_string(),
            "descriptor.theta_bins" => s.theta_bins.to_string(),
            "descriptor.phi_bins" => s.phi_bins.to_string(),
            "descriptor.gauss_sigma" => s.gauss_sigma.to_string(),
            "kernel.kind" => self.kernel.kind.to_string(),
            "kernel.gamma" => self.kernel.gamma.map_or_else(|| "auto".into(), |g| g.to_string()),
            "kernel.delta" => self.kernel.regularization.to_string(),
            "pooling.method" => "mean".into(),
            "split.train_per_class" => self.split.train_per_class.to_string(),
            "split.seed" => self.split.seed.to_string(),
            _ => return None,
        })
    }

    /// Every key with its effective value. Floats use the shortest exact form,
    /// so `from_text(to_text())` reproduces the config.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for key in KEYS {
            let _ = writeln!(out, "{key} = {}", self.get(key).expect("listed key"));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_match_operating_point() {
        let c = PipelineConfig::default();
        assert_eq!(c.detector.suppression_strength, 1.5);
        assert_eq!(c.detector.temporal_scale, 5);
        assert_eq!(c.detector.nms_block, 3);
        assert_eq!(c.descriptor.dimension(), 640);
        assert_eq!(c.split.train_per_class, 35);
        c.validate().unwrap();
    }

    #[test]
    fn text_round_trip() {
        let mut c = PipelineConfig::default();
        c.set("detector.rho", "0.75").unwrap();
        c.set("kernel.gamma", "0.3").unwrap();
        c.set("kernel.kind", "linear").unwrap();
        c.set("split.seed", "18446744073709551615").unwrap();
        let back = PipelineConfig::from_text(&c.to_text()).unwrap();
        assert_eq!(back, c);
    }

    #[test]
    fn comments_and_errors() {
        let c = PipelineConfig::from_text("# hi\n\ndetector.kappa = 0.06\n").unwrap();
        assert_eq!(c.detector.kappa, 0.06);
        assert!(matches!(
            PipelineConfig::from_text("detector.kappa = 0.06\nbogus.key = 1\n"),
            Err(Error::Parse { row: 2, .. })
        ));
        assert!(PipelineConfig::from_text("detector.nms_block = 4\n").is_err());
        let mut c = PipelineConfig::default();
        assert!(c.apply_override("kernel.delta").is_err());
        c.apply_override("kernel.delta=0.5").unwrap();
        assert_eq!(c.kernel.regularization, 0.5);
    }
}
