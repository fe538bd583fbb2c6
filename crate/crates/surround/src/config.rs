//! Run configuration. Each setting resolves as CLI flag, then `--config`
//! file, then `calib.txt`, then the built-in default.

use std::fs;
use std::path::Path;

use serde::Deserialize;
use surround_core::geometry::canonicalize_plane;
use surround_core::velocity::Aggregation;
use surround_core::{DepthScale, EgoRoi, EstimatorConfig, GateThresholds, Pixel, RoadSamplePattern};

use crate::calib::Calibration;
use crate::error::{io_err, Error, Result};

pub const DEFAULT_WIDTH: usize = 1280;
pub const DEFAULT_HEIGHT: usize = 800;

/// One layer of overrides. Every field is optional; the CLI builds one of
/// these too.
#[derive(Debug, Clone, Default, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub fps: Option<f64>,
    pub k: Option<f64>,
    pub theta0: Option<f64>,
    pub theta1: Option<f64>,
    pub theta2: Option<f64>,
    pub ransac_iterations: Option<usize>,
    pub inlier_threshold: Option<f64>,
    pub seed: Option<u64>,
    /// `[x, y, width, height]`
    pub roi: Option<[u32; 4]>,
    pub d0: Option<f64>,
    pub correction: Option<bool>,
    /// Fraction trimmed from each tail; absent or 0 means a plain mean.
    pub trimmed_mean: Option<f64>,
    pub max_hold_frames: Option<u32>,
    pub footprint_dilation: Option<f64>,
    /// Road sample pixels `[u, v]`.
    pub road_points: Option<Vec<[f64; 2]>>,
    /// Initial plane `[a, b, c, d]`.
    pub plane: Option<[f64; 4]>,
}

macro_rules! layer {
    ($hi:expr, $lo:expr; $($f:ident),*) => {
        RunConfig { $($f: $hi.$f.or($lo.$f)),* }
    };
}

impl RunConfig {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|source| Error::Toml { path: path.to_path_buf(), source })
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(path, &fs::read_to_string(path).map_err(io_err(path))?)
    }

    /// `self` wins wherever it has a value.
    pub fn over(self, lower: RunConfig) -> RunConfig {
        layer!(self, lower; width, height, fps, k, theta0, theta1, theta2, ransac_iterations,
            inlier_threshold, seed, roi, d0, correction, trimmed_mean, max_hold_frames,
            footprint_dilation, road_points, plane)
    }

    /// Builds the estimator configuration. `initial_plane` (for example fitted
    /// from known ground vertices) takes precedence over any configured plane.
    pub fn resolve(
        self,
        calib: &Calibration,
        initial_plane: Option<surround_core::GroundPlane>,
    ) -> Result<EstimatorConfig> {
        let width = self.width.or(calib.width).unwrap_or(DEFAULT_WIDTH);
        let height = self.height.or(calib.height).unwrap_or(DEFAULT_HEIGHT);
        let plane = match (initial_plane, self.plane) {
            (Some(p), _) => p,
            (None, Some(p)) => canonicalize_plane(p)?,
            (None, None) => calib
                .plane
                .ok_or_else(|| Error::MissingCalibration("no initial ground plane (`plane=`)".into()))?,
        };
        let mut cfg = EstimatorConfig::new(calib.camera.clone(), width, height, plane);
        if let Some(fps) = self.fps.or(calib.fps) {
            cfg.fps = fps;
        }
        if let Some(k) = self.k.or(calib.k) {
            cfg.depth_scale = DepthScale::new(k)?;
        }
        let g = GateThresholds::default();
        cfg.gate = GateThresholds {
            theta0: self.theta0.unwrap_or(g.theta0),
            theta1: self.theta1.unwrap_or(g.theta1),
            theta2: self.theta2.unwrap_or(g.theta2),
        };
        if let Some(n) = self.ransac_iterations {
            cfg.ransac.iterations = n;
        }
        if let Some(t) = self.inlier_threshold {
            cfg.ransac.inlier_threshold = t;
        }
        if let Some(s) = self.seed {
            cfg.ransac.seed = s;
        }
        if let Some([x, y, w, h]) = self.roi {
            cfg.roi = EgoRoi { x, y, width: w, height: h };
        }
        if let Some(d0) = self.d0 {
            cfg.d0 = d0;
        }
        if let Some(c) = self.correction {
            cfg.correction_enabled = c;
        }
        cfg.aggregation = match self.trimmed_mean {
            None => Aggregation::Mean,
            Some(0.0) => Aggregation::Mean,
            Some(f) if (0.0..0.5).contains(&f) => Aggregation::TrimmedMean(f),
            Some(_) => return Err(Error::Config("trimmed_mean must be in [0, 0.5)".into())),
        };
        cfg.max_hold_frames = self.max_hold_frames;
        if let Some(d) = self.footprint_dilation {
            cfg.footprint_dilation = d;
        }
        if let Some(points) = self.road_points {
            let pixels = points.into_iter().map(|[u, v]| Pixel::new(u, v)).collect();
            cfg.pattern = RoadSamplePattern::new(pixels, width, height)?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}
