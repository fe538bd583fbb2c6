//! Frame-sequential state estimation.
//!
//! Each frame runs, in order: road plane correction, box reconstruction on
//! the resulting plane, ego velocity, then surrounding-vehicle velocities.
//! The plane state is the only thing carried from frame to frame.

use alloc::vec::Vec;

use crate::box3d::{lower_half_pixels, reconstruct_box, visible_side_faces, Box3D, BoxDetection};
use crate::geometry::{CameraModel, GroundPlane};
use crate::ground_plane::{
    gate_update, lift_road_points, ransac_plane, sample_road_points, DepthScale, GateThresholds, ImageFootprint,
    PlaneState, RansacParams, RoadSamplePattern,
};
use crate::raster::{DepthRaster, FlowRaster};
use crate::velocity::{ego_ground_velocity, surround_velocity, Aggregation, EgoRoi, EgoVelocity, SurroundVelocity};
use crate::{Error, Result};

/// Default image-space dilation of detection footprints, pixels.
pub const DEFAULT_FOOTPRINT_DILATION: f64 = 5.0;
/// Default distance from the ego rotation center to the camera, meters.
pub const DEFAULT_D0: f64 = 2.0;
pub const DEFAULT_FPS: f64 = 30.0;

#[derive(Debug, Clone, PartialEq)]
pub struct EstimatorConfig {
    pub camera: CameraModel,
    pub image_width: usize,
    pub image_height: usize,
    pub fps: f64,
    pub initial_plane: GroundPlane,
    pub depth_scale: DepthScale,
    pub gate: GateThresholds,
    pub ransac: RansacParams,
    pub pattern: RoadSamplePattern,
    pub footprint_dilation: f64,
    pub roi: EgoRoi,
    pub d0: f64,
    pub correction_enabled: bool,
    pub aggregation: Aggregation,
    /// Revert to the initial plane after this many consecutive holds.
    pub max_hold_frames: Option<u32>,
}

impl EstimatorConfig {
    /// Defaults for everything but the calibration.
    pub fn new(camera: CameraModel, image_width: usize, image_height: usize, initial_plane: GroundPlane) -> Self {
        Self {
            camera,
            image_width,
            image_height,
            fps: DEFAULT_FPS,
            initial_plane,
            depth_scale: DepthScale::default(),
            gate: GateThresholds::default(),
            ransac: RansacParams::default(),
            pattern: RoadSamplePattern::grid(image_width, image_height),
            footprint_dilation: DEFAULT_FOOTPRINT_DILATION,
            roi: EgoRoi::default_for(image_width as u32, image_height as u32),
            d0: DEFAULT_D0,
            correction_enabled: true,
            aggregation: Aggregation::Mean,
            max_hold_frames: None,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.image_width == 0 || self.image_height == 0 {
            return Err(Error::InvalidParameter("image size must be positive"));
        }
        if !(self.fps > 0.0) || !self.fps.is_finite() {
            return Err(Error::InvalidParameter("fps must be positive"));
        }
        if !(self.d0 >= 0.0) {
            return Err(Error::InvalidParameter("d0 must be non-negative"));
        }
        if !(self.footprint_dilation >= 0.0) {
            return Err(Error::InvalidParameter("footprint dilation must be non-negative"));
        }
        self.gate.validate()?;
        self.ransac.validate()?;
        self.roi.validate(self.image_width as u32, self.image_height as u32)?;
        RoadSamplePattern::new(self.pattern.points().to_vec(), self.image_width, self.image_height)?;
        if self.correction_enabled && self.initial_plane.d().abs() < 1e-6 {
            return Err(Error::ZeroInitialOffset);
        }
        Ok(())
    }
}

/// One frame of perception output.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameBundle {
    pub frame_id: u32,
    pub depth: DepthRaster,
    /// Flow to the next frame; absent on the last frame.
    pub flow: Option<FlowRaster>,
    pub detections: Vec<BoxDetection>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum PlaneStatus {
    Accepted,
    /// The candidate failed the gate.
    Held,
    /// No candidate this frame; previous plane held.
    FitFailed(Error),
    /// Held too long; reverted to the initial plane.
    Reinitialized,
    /// Correction disabled; initial plane in use.
    Disabled,
}

#[derive(Debug, Clone, PartialEq)]
pub enum VehicleStatus {
    Ok,
    LowConfidence,
    /// Frame has no flow.
    NoFlow,
    /// Box reconstructed but velocity unavailable.
    NoVelocity(Error),
    /// Box reconstruction failed.
    Failed(Error),
}

#[derive(Debug, Clone, PartialEq)]
pub struct VehicleEstimate {
    pub vehicle_id: u32,
    pub box3d: Option<Box3D>,
    pub velocity: Option<SurroundVelocity>,
    pub status: VehicleStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameReport {
    pub frame_id: u32,
    pub plane: GroundPlane,
    pub plane_updated: bool,
    pub plane_status: PlaneStatus,
    /// `None` when the frame has no flow.
    pub ego: Option<core::result::Result<EgoVelocity, Error>>,
    pub vehicles: Vec<VehicleEstimate>,
}

/// Carries the plane state across a sequence.
#[derive(Debug, Clone)]
pub struct SequenceEstimator {
    config: EstimatorConfig,
    state: PlaneState,
}

impl SequenceEstimator {
    pub fn new(config: EstimatorConfig) -> Result<Self> {
        config.validate()?;
        let state = PlaneState::new(config.initial_plane);
        Ok(Self { config, state })
    }

    pub fn config(&self) -> &EstimatorConfig {
        &self.config
    }

    pub fn plane_state(&self) -> &PlaneState {
        &self.state
    }

    fn candidate_plane(&self, frame: &FrameBundle) -> Result<GroundPlane> {
        let cfg = &self.config;
        let footprints: Vec<ImageFootprint> =
            frame.detections.iter().map(|d| d.image_footprint(cfg.footprint_dilation)).collect();
        let pixels = sample_road_points(&cfg.pattern, &footprints)?;
        let points = lift_road_points(&pixels, &frame.depth, cfg.depth_scale, &cfg.camera)?;
        Ok(ransac_plane(&points, &cfg.ransac)?.plane)
    }

    fn correct_plane(&mut self, frame: &FrameBundle) -> PlaneStatus {
        if !self.config.correction_enabled {
            self.state = PlaneState::new(self.config.initial_plane);
            return PlaneStatus::Disabled;
        }
        let gated = self
            .candidate_plane(frame)
            .and_then(|cand| gate_update(&cand, &self.state, &self.config.gate));
        let status = match gated {
            Ok(next) => {
                let status = if next.updated { PlaneStatus::Accepted } else { PlaneStatus::Held };
                self.state = next;
                status
            }
            Err(e) => {
                self.state = self.state.hold();
                PlaneStatus::FitFailed(e)
            }
        };
        match self.config.max_hold_frames {
            Some(max) if self.state.held_frames > max => {
                self.state = self.state.reinitialize();
                PlaneStatus::Reinitialized
            }
            _ => status,
        }
    }

    fn vehicle(&self, det: &BoxDetection, plane: &GroundPlane, flow: Option<&FlowRaster>, ego: Option<&EgoVelocity>) -> VehicleEstimate {
        let cfg = &self.config;
        let cam = &cfg.camera;
        let b = match reconstruct_box(det, cam, plane) {
            Ok(b) => b,
            Err(e) => {
                return VehicleEstimate { vehicle_id: det.vehicle_id, box3d: None, velocity: None, status: VehicleStatus::Failed(e) }
            }
        };
        let (Some(flow), Some(ego)) = (flow, ego) else {
            let status = if flow.is_none() {
                VehicleStatus::NoFlow
            } else {
                VehicleStatus::NoVelocity(Error::EmptyRoi)
            };
            return VehicleEstimate { vehicle_id: det.vehicle_id, box3d: Some(b), velocity: None, status };
        };
        let velocity = visible_side_faces(&b, cam)
            .and_then(|faces| lower_half_pixels(&b, &faces, cam, cfg.image_width, cfg.image_height))
            .and_then(|pixels| surround_velocity(flow, &b, &pixels, plane, cam, cfg.fps, ego, cfg.d0, cfg.aggregation));
        match velocity {
            Ok(v) => VehicleEstimate {
                vehicle_id: det.vehicle_id,
                box3d: Some(b),
                velocity: Some(v),
                status: if v.low_confidence() || ego.low_confidence() {
                    VehicleStatus::LowConfidence
                } else {
                    VehicleStatus::Ok
                },
            },
            Err(e) => VehicleEstimate { vehicle_id: det.vehicle_id, box3d: Some(b), velocity: None, status: VehicleStatus::NoVelocity(e) },
        }
    }

    /// Processes the next frame. Only malformed bundles are errors; estimation
    /// failures are reported in the returned record.
    pub fn step(&mut self, frame: &FrameBundle) -> Result<FrameReport> {
        let (w, h) = (self.config.image_width, self.config.image_height);
        if frame.depth.width() != w || frame.depth.height() != h {
            return Err(Error::DimensionMismatch);
        }
        if let Some(flow) = &frame.flow {
            if flow.width() != w || flow.height() != h {
                return Err(Error::DimensionMismatch);
            }
        }

        let plane_status = self.correct_plane(frame);
        let plane = self.state.current;
        let cfg = &self.config;
        let ego = frame
            .flow
            .as_ref()
            .map(|flow| ego_ground_velocity(flow, &cfg.roi, &plane, &cfg.camera, cfg.fps, cfg.aggregation));
        let ego_ok = ego.as_ref().and_then(|e| e.as_ref().ok());
        let vehicles = frame
            .detections
            .iter()
            .map(|det| self.vehicle(det, &plane, frame.flow.as_ref(), ego_ok))
            .collect();
        Ok(FrameReport {
            frame_id: frame.frame_id,
            plane,
            plane_updated: self.state.updated,
            plane_status,
            ego,
            vehicles,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::canonicalize_plane;
    use alloc::vec;

    fn config() -> EstimatorConfig {
        let cam = CameraModel::new(1000.0, 1000.0, 640.0, 400.0).unwrap();
        EstimatorConfig::new(cam, 1280, 800, canonicalize_plane([0.0, 1.0, 0.0, -1.5]).unwrap())
    }

    /// Flat-ground depth raster for CAM0 / y = 1.5, sky above the horizon.
    fn flat_depth() -> DepthRaster {
        let mut d = DepthRaster::filled(1280, 800, 0.0);
        for y in 401..800 {
            let z = 1500.0 / (y as f64 - 400.0);
            for x in 0..1280 {
                d.set(x, y, (z / 0.13) as f32);
            }
        }
        d
    }

    #[test]
    fn rejects_wrong_dimensions() {
        let mut est = SequenceEstimator::new(config()).unwrap();
        let frame = FrameBundle { frame_id: 0, depth: DepthRaster::filled(10, 10, 1.0), flow: None, detections: vec![] };
        assert_eq!(est.step(&frame), Err(Error::DimensionMismatch));
    }

    #[test]
    fn flat_frame_accepts_plane() {
        let mut est = SequenceEstimator::new(config()).unwrap();
        let frame = FrameBundle { frame_id: 0, depth: flat_depth(), flow: None, detections: vec![] };
        let r = est.step(&frame).unwrap();
        assert_eq!(r.plane_status, PlaneStatus::Accepted);
        assert!(r.ego.is_none());
        let c = r.plane.coefficients();
        assert!((c[1] - 1.0).abs() < 1e-6 && (c[3] + 1.5).abs() < 1e-6);
    }

    #[test]
    fn sky_only_holds_plane() {
        let mut est = SequenceEstimator::new(config()).unwrap();
        let frame = FrameBundle { frame_id: 0, depth: DepthRaster::filled(1280, 800, 0.0), flow: None, detections: vec![] };
        let r = est.step(&frame).unwrap();
        assert_eq!(r.plane_status, PlaneStatus::FitFailed(Error::InsufficientRoadPoints(0)));
        assert!(!r.plane_updated);
        assert_eq!(r.plane, est.config().initial_plane);
    }

    #[test]
    fn max_hold_reinitializes() {
        let mut cfg = config();
        cfg.max_hold_frames = Some(1);
        let mut est = SequenceEstimator::new(cfg).unwrap();
        let frame = FrameBundle { frame_id: 0, depth: DepthRaster::filled(1280, 800, 0.0), flow: None, detections: vec![] };
        assert!(matches!(est.step(&frame).unwrap().plane_status, PlaneStatus::FitFailed(_)));
        assert_eq!(est.step(&frame).unwrap().plane_status, PlaneStatus::Reinitialized);
        assert_eq!(est.plane_state().held_frames, 0);
    }

    #[test]
    fn disabled_correction_keeps_initial() {
        let mut cfg = config();
        cfg.correction_enabled = false;
        let mut est = SequenceEstimator::new(cfg).unwrap();
        let frame = FrameBundle { frame_id: 0, depth: flat_depth(), flow: Some(FlowRaster::zeros(1280, 800)), detections: vec![] };
        let r = est.step(&frame).unwrap();
        assert_eq!(r.plane_status, PlaneStatus::Disabled);
        assert_eq!(r.plane, est.config().initial_plane);
        let ego = r.ego.unwrap().unwrap();
        assert_eq!(ego.longitudinal(), 0.0);
    }

    #[test]
    fn invalid_config() {
        let mut cfg = config();
        cfg.fps = 0.0;
        assert!(SequenceEstimator::new(cfg).is_err());
        let mut cfg = config();
        cfg.roi = EgoRoi { x: 1200, y: 0, width: 320, height: 30 };
        assert!(SequenceEstimator::new(cfg).is_err());
    }
}
