//! Synthetic scene oracle: exact depth, flow, detections and ground truth
//! for scripted ego motion and cuboid vehicles.

mod scene;
mod spec;

use std::fs;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use surround_core::{DepthRaster, EstimatorConfig, FlowRaster, FrameBundle};

pub use scene::{CameraPose, FrameTruth, Scene, VehiclePose};
pub use spec::{CameraSpec, EgoSpec, NoiseSpec, PlaneSpec, SceneSpec, VehicleSpec};

use crate::calib::{write_calibration, Calibration};
use crate::error::{io_err, Result};
use crate::eval::{EgoTruth, PlaneTruth, VehicleTruth, EGO_TRUTH_FILE, PLANE_TRUTH_FILE, VEHICLES_TRUTH_FILE};
use crate::msr;
use crate::report::write_csv;
use crate::sequence::{frame_file_name, write_detections, CALIB_FILE, DEPTH_DIR, DETECTIONS_FILE, FLOW_DIR, TRUTH_DIR};

#[derive(Debug, Clone, PartialEq)]
pub struct RenderedFrame {
    pub bundle: FrameBundle,
    pub truth: FrameTruth,
}

/// Independent generator per (frame, channel) so frames can be rendered in
/// any order with identical results.
fn stream(seed: u64, frame: u32, channel: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(frame as u64 * 4 + channel);
    rng
}

fn gaussian(sigma: f64) -> Normal<f64> {
    Normal::new(0.0, sigma).expect("sigma validated non-negative")
}

/// Adds Gaussian noise to every valid (positive) depth value, clamping at 0.
pub fn add_depth_noise(depth: &DepthRaster, sigma: f64, seed: u64, frame: u32) -> DepthRaster {
    let (mut rng, n) = (stream(seed, frame, 0), gaussian(sigma));
    let values = depth
        .values()
        .iter()
        .map(|&v| if v > 0.0 { (v as f64 + n.sample(&mut rng)).max(0.0) as f32 } else { v })
        .collect();
    DepthRaster::new(depth.width(), depth.height(), values).expect("non-negative after clamping")
}

/// Adds Gaussian noise to both components of every flow vector.
pub fn add_flow_noise(flow: &FlowRaster, sigma: f64, seed: u64, frame: u32) -> FlowRaster {
    let (mut rng, n) = (stream(seed, frame, 1), gaussian(sigma));
    let data = flow.data().iter().map(|&v| (v as f64 + n.sample(&mut rng)) as f32).collect();
    FlowRaster::new(flow.width(), flow.height(), data).expect("same shape")
}

impl Scene {
    /// Calibration as written to `calib.txt`: the true camera, `k`, image
    /// size, fps and the base road plane.
    pub fn calibration(&self) -> Calibration {
        let s = self.spec();
        Calibration {
            camera: self.camera().clone(),
            plane: Some(self.base_plane()),
            k: Some(s.k),
            width: Some(s.width),
            height: Some(s.height),
            fps: Some(s.fps),
        }
    }

    /// Default estimator configuration matching the scene.
    pub fn estimator_config(&self) -> EstimatorConfig {
        let s = self.spec();
        let mut cfg = EstimatorConfig::new(self.camera().clone(), s.width, s.height, self.base_plane());
        cfg.fps = s.fps;
        cfg.depth_scale = surround_core::DepthScale::new(s.k).expect("validated k");
        cfg.d0 = s.camera.mount_offset_m;
        cfg
    }

    /// Renders frame `t` with the noise of `noise`.
    pub fn render_frame(&self, t: u32, noise: &NoiseSpec) -> RenderedFrame {
        let (mut depth, mut flow) = self.render_depth_and_flow(t);
        if noise.depth > 0.0 {
            depth = add_depth_noise(&depth, noise.depth, noise.seed, t);
        }
        if let (Some(f), true) = (flow.as_mut(), noise.flow > 0.0) {
            *f = add_flow_noise(f, noise.flow, noise.seed, t);
        }
        let detections = if noise.det > 0.0 {
            let (mut rng, n) = (stream(noise.seed, t, 2), gaussian(noise.det));
            self.noisy_detections(t, || n.sample(&mut rng))
        } else {
            self.render_detections(t)
        };
        RenderedFrame { bundle: FrameBundle { frame_id: t, depth, flow, detections }, truth: self.truth(t) }
    }

    /// Lazily rendered frames `0..frames`.
    pub fn render_all<'a>(&'a self, noise: &'a NoiseSpec) -> impl Iterator<Item = RenderedFrame> + 'a {
        (0..self.frames()).map(move |t| self.render_frame(t, noise))
    }
}

const EGO_TRUTH_HEADER: [&str; 3] = ["frame", "ego_vx_kmh", "ego_vz_kmh"];
const VEHICLE_TRUTH_HEADER: [&str; 8] = ["frame", "id", "x", "y", "z", "yaw_deg", "vax_kmh", "vaz_kmh"];
const PLANE_TRUTH_HEADER: [&str; 5] = ["frame", "a", "b", "c", "d"];

/// Writes the scene as a sequence directory readable by
/// [`crate::sequence::load_sequence`], with ground truth under `truth/`.
pub fn emit_sequence(scene: &Scene, noise: &NoiseSpec, out: &Path) -> Result<()> {
    let depth_dir = out.join(DEPTH_DIR);
    let flow_dir = out.join(FLOW_DIR);
    let truth_dir = out.join(TRUTH_DIR);
    for d in [&depth_dir, &flow_dir, &truth_dir] {
        fs::create_dir_all(d).map_err(io_err(d))?;
    }
    write_calibration(&out.join(CALIB_FILE), &scene.calibration())?;

    let mut detections = Vec::new();
    let mut ego: Vec<EgoTruth> = Vec::new();
    let mut vehicles: Vec<VehicleTruth> = Vec::new();
    let mut planes: Vec<PlaneTruth> = Vec::new();
    for frame in scene.render_all(noise) {
        let name = frame_file_name(frame.bundle.frame_id);
        msr::write_depth(&depth_dir.join(&name), &frame.bundle.depth)?;
        if let Some(flow) = &frame.bundle.flow {
            msr::write_flow(&flow_dir.join(&name), flow)?;
        }
        detections.extend(frame.bundle.detections);
        ego.extend(frame.truth.ego);
        vehicles.extend(frame.truth.vehicles);
        planes.push(frame.truth.plane);
    }
    write_detections(&out.join(DETECTIONS_FILE), &detections)?;
    write_csv(&truth_dir.join(EGO_TRUTH_FILE), &EGO_TRUTH_HEADER, &ego)?;
    write_csv(&truth_dir.join(VEHICLES_TRUTH_FILE), &VEHICLE_TRUTH_HEADER, &vehicles)?;
    write_csv(&truth_dir.join(PLANE_TRUTH_FILE), &PLANE_TRUTH_HEADER, &planes)?;
    Ok(())
}
