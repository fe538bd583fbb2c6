//! Scene description, read from TOML:
//!
//! ```toml
//! frames = 100
//! fps = 30.0
//! width = 1280
//! height = 800
//! k = 0.13
//!
//! [camera]
//! fx = 1000.0
//! fy = 1000.0
//! cx = 640.0
//! cy = 400.0
//! height_m = 1.5        # camera center above the road
//! mount_offset_m = 2.0  # ego rotation center to camera, along the heading
//!
//! [ego]
//! forward_mps = 10.0
//! lateral_mps = 0.0
//! yaw_rate_dps = 0.0
//!
//! [plane]
//! pitch_amp_deg = 1.5
//! pitch_period_frames = 60.0
//! pitch_phase_deg = 0.0
//! pitch_offset_deg = 0.0
//!
//! [[vehicle]]
//! id = 1
//! size = [4.0, 1.8]            # length, width (m)
//! height = 1.5
//! start_pose = [0.0, 15.0, 0.0] # x, z (m), yaw (deg) in the frame-0 ego frame
//! velocity_mps = [0.0, 15.0]   # world x, z
//!
//! [noise]
//! depth = 0.0  # sigma, normalized depth units
//! flow = 0.0   # sigma, px
//! det = 0.0    # sigma, px
//! seed = 0
//! ```
//!
//! Every key has a default; an empty file is a flat, empty, static scene.

use std::fs;
use std::path::Path;

use serde::Deserialize;

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SceneSpec {
    pub frames: u32,
    pub fps: f64,
    pub width: usize,
    pub height: usize,
    pub k: f64,
    pub camera: CameraSpec,
    pub ego: EgoSpec,
    pub plane: PlaneSpec,
    #[serde(rename = "vehicle")]
    pub vehicles: Vec<VehicleSpec>,
    pub noise: NoiseSpec,
}

impl Default for SceneSpec {
    fn default() -> Self {
        Self {
            frames: 10,
            fps: 30.0,
            width: 1280,
            height: 800,
            k: 0.13,
            camera: CameraSpec::default(),
            ego: EgoSpec::default(),
            plane: PlaneSpec::default(),
            vehicles: Vec::new(),
            noise: NoiseSpec::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct CameraSpec {
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub height_m: f64,
    pub mount_offset_m: f64,
}

impl Default for CameraSpec {
    fn default() -> Self {
        Self { fx: 1000.0, fy: 1000.0, cx: 640.0, cy: 400.0, height_m: 1.5, mount_offset_m: 2.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EgoSpec {
    pub forward_mps: f64,
    pub lateral_mps: f64,
    pub yaw_rate_dps: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PlaneSpec {
    pub pitch_amp_deg: f64,
    pub pitch_period_frames: f64,
    pub pitch_phase_deg: f64,
    pub pitch_offset_deg: f64,
}

impl Default for PlaneSpec {
    fn default() -> Self {
        Self { pitch_amp_deg: 0.0, pitch_period_frames: 60.0, pitch_phase_deg: 0.0, pitch_offset_deg: 0.0 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VehicleSpec {
    pub id: u32,
    /// Length, width (m).
    pub size: [f64; 2],
    #[serde(default = "default_vehicle_height")]
    pub height: f64,
    /// `x`, `z` (m) and yaw (deg) at frame 0 in the ego frame of frame 0.
    pub start_pose: [f64; 3],
    /// World `x`, `z` velocity (m/s).
    #[serde(default)]
    pub velocity_mps: [f64; 2],
}

fn default_vehicle_height() -> f64 {
    1.5
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct NoiseSpec {
    /// Normalized depth units.
    pub depth: f64,
    /// Pixels, per flow component.
    pub flow: f64,
    /// Pixels, per detection vertex coordinate.
    pub det: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn is_zero(&self) -> bool {
        self.depth == 0.0 && self.flow == 0.0 && self.det == 0.0
    }
}

fn positive(v: f64, what: &str) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::Config(format!("{what} must be positive")))
    }
}

impl SceneSpec {
    pub fn parse(path: &Path, text: &str) -> Result<Self> {
        let spec: SceneSpec = toml::from_str(text).map_err(|source| Error::Toml { path: path.to_path_buf(), source })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn read(path: &Path) -> Result<Self> {
        Self::parse(path, &fs::read_to_string(path).map_err(io_err(path))?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.frames == 0 {
            return Err(Error::Config("frames must be positive".into()));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::Config("image size must be positive".into()));
        }
        positive(self.fps, "fps")?;
        positive(self.k, "k")?;
        positive(self.camera.height_m, "camera.height_m")?;
        if !(self.camera.mount_offset_m >= 0.0) {
            return Err(Error::Config("camera.mount_offset_m must be non-negative".into()));
        }
        if self.plane.pitch_amp_deg != 0.0 {
            positive(self.plane.pitch_period_frames, "plane.pitch_period_frames")?;
        }
        let finite = [self.ego.forward_mps, self.ego.lateral_mps, self.ego.yaw_rate_dps]
            .iter()
            .chain([self.plane.pitch_amp_deg, self.plane.pitch_phase_deg, self.plane.pitch_offset_deg].iter())
            .all(|v| v.is_finite());
        if !finite {
            return Err(Error::Config("ego and plane parameters must be finite".into()));
        }
        for (i, v) in self.vehicles.iter().enumerate() {
            positive(v.size[0], "vehicle length")?;
            positive(v.size[1], "vehicle width")?;
            positive(v.height, "vehicle height")?;
            if !v.start_pose.iter().chain(v.velocity_mps.iter()).all(|x| x.is_finite()) {
                return Err(Error::Config(format!("vehicle {} has a non-finite pose or velocity", v.id)));
            }
            if self.vehicles[..i].iter().any(|o| o.id == v.id) {
                return Err(Error::Config(format!("duplicate vehicle id {}", v.id)));
            }
        }
        for n in [self.noise.depth, self.noise.flow, self.noise.det] {
            if !(n >= 0.0 && n.is_finite()) {
                return Err(Error::Config("noise sigmas must be non-negative".into()));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parse_and_defaults() {
        let s = SceneSpec::parse(
            Path::new("s.toml"),
            "frames = 5\n[ego]\nforward_mps = 10.0\n[[vehicle]]\nid = 2\nsize = [4.0, 1.8]\nstart_pose = [0.0, 15.0, 0.0]\nvelocity_mps = [0.0, 15.0]\n",
        )
        .unwrap();
        assert_eq!(s.frames, 5);
        assert_eq!(s.ego.forward_mps, 10.0);
        assert_eq!(s.vehicles[0].height, 1.5);
        assert_eq!(s.camera, CameraSpec::default());
        assert_eq!(SceneSpec::parse(Path::new("s.toml"), "").unwrap(), SceneSpec::default());
    }

    #[test]
    fn rejects_invalid() {
        let p = Path::new("s.toml");
        assert!(SceneSpec::parse(p, "fps = 0.0").is_err());
        assert!(SceneSpec::parse(p, "frames = 0").is_err());
        assert!(SceneSpec::parse(p, "typo = 1").is_err());
        assert!(SceneSpec::parse(p, "[[vehicle]]\nid = 1\nsize = [0.0, 1.0]\nstart_pose = [0.0, 9.0, 0.0]\n").is_err());
        let dup = "[[vehicle]]\nid = 1\nsize = [4.0, 1.8]\nstart_pose = [0.0, 9.0, 0.0]\n";
        assert!(SceneSpec::parse(p, &format!("{dup}{dup}")).is_err());
        assert!(SceneSpec::parse(p, "[noise]\nflow = -1.0").is_err());
    }
}
