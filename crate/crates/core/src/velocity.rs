//! Ego and surrounding-vehicle velocity from lifted optical flow.
//!
//! A flow vector is lifted by back-projecting both of its endpoints onto the
//! same plane and differencing. Ground pixels go onto the road plane; vehicle
//! pixels go onto the road-parallel plane through the pixel's anchor on its
//! box face. Displacements are per frame and scaled by the frame rate.
//!
//! Absolute velocities are `relative + ego`, where the ego velocity is the
//! negated ground flow. The lateral ego term is rescaled to the vehicle's
//! range with `(d0 + dS) / (d0 + dG)`.

use alloc::vec::Vec;

use nalgebra::Vector3;

use crate::box3d::{Box3D, FacePixel};
use crate::geometry::{backproject_to_plane, CameraModel, GroundPlane, Pixel, Plane, WorldPoint};
use crate::raster::FlowRaster;
use crate::{Error, Result};

/// Fraction of skipped pixels above which an estimate is low-confidence.
pub const LOW_CONFIDENCE_SKIP_RATIO: f64 = 0.5;

/// Pixel rectangle `[x, x + width) x [y, y + height)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct EgoRoi {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
}

impl EgoRoi {
    pub const DEFAULT_WIDTH: u32 = 320;
    pub const DEFAULT_HEIGHT: u32 = 30;
    /// Gap between the region's bottom edge and the image bottom.
    pub const DEFAULT_BOTTOM_MARGIN: u32 = 20;

    /// 320x30 patch centered horizontally, 20 px above the image bottom.
    pub fn default_for(image_width: u32, image_height: u32) -> Self {
        let width = Self::DEFAULT_WIDTH.min(image_width);
        let height = Self::DEFAULT_HEIGHT.min(image_height);
        let y = image_height.saturating_sub(Self::DEFAULT_BOTTOM_MARGIN + height);
        Self { x: (image_width - width) / 2, y, width, height }
    }

    pub fn validate(&self, image_width: u32, image_height: u32) -> Result<()> {
        let inside = self.width > 0
            && self.height > 0
            && self.x as u64 + self.width as u64 <= image_width as u64
            && self.y as u64 + self.height as u64 <= image_height as u64;
        if inside {
            Ok(())
        } else {
            Err(Error::InvalidParameter("ego region must lie inside the image"))
        }
    }

    pub fn pixels(&self) -> impl Iterator<Item = (u32, u32)> + '_ {
        (self.y..self.y + self.height).flat_map(move |y| (self.x..self.x + self.width).map(move |x| (x, y)))
    }
}

/// How per-pixel contributions are reduced.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Aggregation {
    #[default]
    Mean,
    /// Per-component mean after dropping this fraction from each tail.
    TrimmedMean(f64),
}

impl Aggregation {
    fn reduce(&self, samples: &mut [Vector3<f64>]) -> Vector3<f64> {
        let n = samples.len();
        match *self {
            Aggregation::Mean => samples.iter().fold(Vector3::zeros(), |a, s| a + s) / n as f64,
            Aggregation::TrimmedMean(frac) => {
                let cut = libm::floor(frac.clamp(0.0, 0.49) * n as f64) as usize;
                let mut out = Vector3::zeros();
                let mut column: Vec<f64> = Vec::with_capacity(n);
                for axis in 0..3 {
                    column.clear();
                    column.extend(samples.iter().map(|s| s[axis]));
                    column.sort_by(f64::total_cmp);
                    let kept = &column[cut..n - cut];
                    out[axis] = kept.iter().sum::<f64>() / kept.len() as f64;
                }
                out
            }
        }
    }
}

/// 3D displacement of a flow vector lifted onto `plane`.
pub fn lift_flow(px: &Pixel, flow: (f64, f64), plane: &Plane, cam: &CameraModel) -> Result<Vector3<f64>> {
    if !flow.0.is_finite() || !flow.1.is_finite() {
        return Err(Error::InvalidParameter("non-finite flow"));
    }
    let start = backproject_to_plane(px, cam, plane)?;
    let end = backproject_to_plane(&px.offset(flow.0, flow.1), cam, plane)?;
    Ok(end - start)
}

/// Ground flow velocity over the ego region.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EgoVelocity {
    /// Mean lifted ground flow `(V_Gx, V_Gy, V_Gz)` in m/s.
    pub ground_flow: Vector3<f64>,
    /// Centroid of the region's ground points.
    pub ground_center: WorldPoint,
    pub n_pixels_used: usize,
    pub n_pixels_skipped: usize,
}

impl EgoVelocity {
    /// `-V_Gz`, m/s.
    pub fn longitudinal(&self) -> f64 {
        -self.ground_flow.z
    }

    /// `-V_Gx`, m/s.
    pub fn lateral(&self) -> f64 {
        -self.ground_flow.x
    }

    pub fn low_confidence(&self) -> bool {
        skip_ratio(self.n_pixels_used, self.n_pixels_skipped) > LOW_CONFIDENCE_SKIP_RATIO
    }
}

fn skip_ratio(used: usize, skipped: usize) -> f64 {
    let total = used + skipped;
    if total == 0 {
        1.0
    } else {
        skipped as f64 / total as f64
    }
}

fn check_fps(fps: f64) -> Result<()> {
    if fps > 0.0 && fps.is_finite() {
        Ok(())
    } else {
        Err(Error::InvalidParameter("fps must be positive"))
    }
}

pub fn ego_ground_velocity(
    flow: &FlowRaster,
    roi: &EgoRoi,
    plane: &GroundPlane,
    cam: &CameraModel,
    fps: f64,
    aggregation: Aggregation,
) -> Result<EgoVelocity> {
    check_fps(fps)?;
    roi.validate(flow.width() as u32, flow.height() as u32)?;
    let mut samples = Vec::with_capacity((roi.width * roi.height) as usize);
    let mut center = Vector3::zeros();
    let mut skipped = 0;
    for (x, y) in roi.pixels() {
        let px = Pixel::new(x as f64, y as f64);
        let start = match backproject_to_plane(&px, cam, plane) {
            Ok(p) => p,
            Err(_) => {
                skipped += 1;
                continue;
            }
        };
        match lift_flow(&px, flow.get(x as usize, y as usize), plane, cam) {
            Ok(d) => {
                samples.push(d);
                center += start.coords;
            }
            Err(_) => skipped += 1,
        }
    }
    if samples.is_empty() {
        return Err(Error::EmptyRoi);
    }
    let n = samples.len();
    Ok(EgoVelocity {
        ground_flow: aggregation.reduce(&mut samples) * fps,
        ground_center: WorldPoint::from(center / n as f64),
        n_pixels_used: n,
        n_pixels_skipped: skipped,
    })
}

/// Relative velocity `V_r_S` of a vehicle from its lower-half face pixels,
/// with the used and skipped pixel counts.
pub fn surround_relative_velocity(
    flow: &FlowRaster,
    pixels: &[FacePixel],
    plane: &GroundPlane,
    cam: &CameraModel,
    fps: f64,
    aggregation: Aggregation,
) -> Result<(Vector3<f64>, usize, usize)> {
    check_fps(fps)?;
    if pixels.is_empty() {
        return Err(Error::EmptyRegion);
    }
    let mut samples = Vec::with_capacity(pixels.len());
    let mut skipped = 0;
    for fp in pixels {
        let (x, y) = (fp.x as usize, fp.y as usize);
        if x >= flow.width() || y >= flow.height() {
            skipped += 1;
            continue;
        }
        let px = fp.pixel();
        let lifted = backproject_to_plane(&px, cam, &fp.plane)
            .and_then(|anchor| lift_flow(&px, flow.get(x, y), &plane.through_point(&anchor), cam));
        match lifted {
            Ok(d) => samples.push(d),
            Err(_) => skipped += 1,
        }
    }
    if samples.is_empty() {
        return Err(Error::AllPixelsDegenerate);
    }
    let n = samples.len();
    Ok((aggregation.reduce(&mut samples) * fps, n, skipped))
}

/// `V_a_Sz = V_r_Sz + ego longitudinal`.
pub fn absolute_longitudinal(v_r_sz: f64, ego: &EgoVelocity) -> f64 {
    v_r_sz + ego.longitudinal()
}

/// Horizontal distances used to rescale the lateral ground velocity.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LateralGeometry {
    /// Ego rotation center to camera, meters.
    pub d0: f64,
    /// Camera to the ego region's ground center.
    pub d_g: f64,
    /// Camera to the vehicle's bottom-face center.
    pub d_s: f64,
}

impl LateralGeometry {
    pub fn new(d0: f64, d_g: f64, d_s: f64) -> Result<Self> {
        if !(d0 >= 0.0) || !(d_g > 0.0) || !(d_s > 0.0) {
            return Err(Error::InvalidParameter("lateral geometry distances"));
        }
        Ok(Self { d0, d_g, d_s })
    }

    /// Distances measured in the X-Z plane from `camera`.
    pub fn from_points(d0: f64, camera: &WorldPoint, ground_center: &WorldPoint, vehicle_center: &WorldPoint) -> Result<Self> {
        let horizontal = |p: &WorldPoint| libm::hypot(p.x - camera.x, p.z - camera.z);
        Self::new(d0, horizontal(ground_center), horizontal(vehicle_center))
    }
}

/// `V'_Gx = (d0 + dS) / (d0 + dG) * V_Gx`.
pub fn lateral_ground_at_vehicle(v_gx: f64, geom: &LateralGeometry) -> Result<f64> {
    let denom = geom.d0 + geom.d_g;
    if !(denom > 1e-6) {
        return Err(Error::DegenerateGeometry);
    }
    Ok((geom.d0 + geom.d_s) / denom * v_gx)
}

/// `V_a_Sx = V_r_Sx + ego lateral at the vehicle`, the latter being `-V'_Gx`.
pub fn absolute_lateral(v_r_sx: f64, ego_lateral_at_vehicle: f64) -> f64 {
    v_r_sx + ego_lateral_at_vehicle
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurroundVelocity {
    /// `(V_r_Sx, V_r_Sy, V_r_Sz)`, m/s.
    pub relative: Vector3<f64>,
    pub absolute_lateral: f64,
    pub absolute_longitudinal: f64,
    pub m_pixels_used: usize,
    pub m_pixels_skipped: usize,
}

impl SurroundVelocity {
    pub fn low_confidence(&self) -> bool {
        skip_ratio(self.m_pixels_used, self.m_pixels_skipped) > LOW_CONFIDENCE_SKIP_RATIO
    }
}

/// Relative and absolute velocity of one vehicle.
#[allow(clippy::too_many_arguments)]
pub fn surround_velocity(
    flow: &FlowRaster,
    b: &Box3D,
    pixels: &[FacePixel],
    plane: &GroundPlane,
    cam: &CameraModel,
    fps: f64,
    ego: &EgoVelocity,
    d0: f64,
    aggregation: Aggregation,
) -> Result<SurroundVelocity> {
    let (relative, used, skipped) = surround_relative_velocity(flow, pixels, plane, cam, fps, aggregation)?;
    let geom = LateralGeometry::from_points(d0, &cam.center(), &ego.ground_center, &b.bottom_center())?;
    let v_gx_at_vehicle = lateral_ground_at_vehicle(ego.ground_flow.x, &geom)?;
    Ok(SurroundVelocity {
        relative,
        absolute_lateral: absolute_lateral(relative.x, -v_gx_at_vehicle),
        absolute_longitudinal: absolute_longitudinal(relative.z, ego),
        m_pixels_used: used,
        m_pixels_skipped: skipped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::canonicalize_plane;
    use nalgebra::Point3;

    fn cam0() -> CameraModel {
        CameraModel::new(1000.0, 1000.0, 640.0, 400.0).unwrap()
    }

    fn pi0() -> GroundPlane {
        canonicalize_plane([0.0, 1.0, 0.0, -1.5]).unwrap()
    }

    fn ego(vgx: f64, vgz: f64) -> EgoVelocity {
        EgoVelocity {
            ground_flow: Vector3::new(vgx, 0.0, vgz),
            ground_center: Point3::new(0.0, 1.5, 5.0),
            n_pixels_used: 1,
            n_pixels_skipped: 0,
        }
    }

    #[test]
    fn lift_zero_flow() {
        let d = lift_flow(&Pixel::new(700.0, 550.0), (0.0, 0.0), &pi0(), &cam0()).unwrap();
        assert_eq!(d, Vector3::zeros());
    }

    #[test]
    fn lift_analytic() {
        // (640, 500) -> z = 1500 / 100 = 15; (640, 600) -> z = 1500 / 200 = 7.5
        let d = lift_flow(&Pixel::new(640.0, 500.0), (0.0, 100.0), &pi0(), &cam0()).unwrap();
        assert!((d - Vector3::new(0.0, 0.0, -7.5)).norm() < 1e-12);
    }

    #[test]
    fn lift_across_horizon_fails() {
        let r = lift_flow(&Pixel::new(640.0, 401.0), (0.0, -1.0), &pi0(), &cam0());
        assert_eq!(r, Err(Error::RayParallelToPlane));
        let r = lift_flow(&Pixel::new(640.0, 401.0), (0.0, -5.0), &pi0(), &cam0());
        assert_eq!(r, Err(Error::IntersectionBehindCamera));
    }

    #[test]
    fn default_roi() {
        let roi = EgoRoi::default_for(1280, 800);
        assert_eq!(roi, EgoRoi { x: 480, y: 750, width: 320, height: 30 });
        assert!(roi.validate(1280, 800).is_ok());
        assert!(EgoRoi { x: 1000, ..roi }.validate(1280, 800).is_err());
        assert_eq!(roi.pixels().count(), 9600);
    }

    #[test]
    fn zero_flow_zero_velocity() {
        let flow = FlowRaster::zeros(1280, 800);
        let roi = EgoRoi::default_for(1280, 800);
        let v = ego_ground_velocity(&flow, &roi, &pi0(), &cam0(), 30.0, Aggregation::Mean).unwrap();
        assert_eq!(v.ground_flow, Vector3::zeros());
        assert_eq!(v.longitudinal(), 0.0);
        assert_eq!(v.n_pixels_used, 9600);
        assert!(!v.low_confidence());
    }

    #[test]
    fn empty_roi_when_above_horizon() {
        let flow = FlowRaster::zeros(1280, 800);
        let roi = EgoRoi { x: 0, y: 100, width: 10, height: 10 };
        let r = ego_ground_velocity(&flow, &roi, &pi0(), &cam0(), 30.0, Aggregation::Mean);
        assert_eq!(r, Err(Error::EmptyRoi));
    }

    #[test]
    fn trimmed_mean_drops_tails() {
        let mut s: Vec<Vector3<f64>> = (0..10).map(|i| Vector3::repeat(i as f64)).collect();
        s[9] = Vector3::repeat(1000.0);
        let m = Aggregation::TrimmedMean(0.2).reduce(&mut s);
        // keeps 2..=7
        assert!((m.x - 4.5).abs() < 1e-12);
        let mut s: Vec<Vector3<f64>> = (0..4).map(|i| Vector3::repeat(i as f64)).collect();
        assert!((Aggregation::Mean.reduce(&mut s).z - 1.5).abs() < 1e-12);
    }

    #[test]
    fn surround_empty_region() {
        let flow = FlowRaster::zeros(10, 10);
        let r = surround_relative_velocity(&flow, &[], &pi0(), &cam0(), 30.0, Aggregation::Mean);
        assert_eq!(r, Err(Error::EmptyRegion));
    }

    #[test]
    fn absolute_longitudinal_examples() {
        assert_eq!(absolute_longitudinal(0.0, &ego(0.0, -10.0)), 10.0);
        assert_eq!(absolute_longitudinal(-10.0, &ego(0.0, -10.0)), 0.0);
        assert_eq!(absolute_longitudinal(5.0, &ego(0.0, -10.0)), 15.0);
    }

    #[test]
    fn lateral_scaling_examples() {
        let g = LateralGeometry::new(2.0, 10.0, 22.0).unwrap();
        assert!((lateral_ground_at_vehicle(1.0, &g).unwrap() - 2.0).abs() < 1e-12);
        let g = LateralGeometry::new(2.0, 10.0, 10.0).unwrap();
        assert_eq!(lateral_ground_at_vehicle(1.7, &g).unwrap(), 1.7);
        assert_eq!(lateral_ground_at_vehicle(0.0, &g).unwrap(), 0.0);
        let g = LateralGeometry { d0: 0.0, d_g: 0.0, d_s: 1.0 };
        assert_eq!(lateral_ground_at_vehicle(1.0, &g), Err(Error::DegenerateGeometry));
        assert!(LateralGeometry::new(-1.0, 1.0, 1.0).is_err());
    }

    #[test]
    fn absolute_lateral_examples() {
        assert_eq!(absolute_lateral(0.0, 0.0), 0.0);
        assert_eq!(absolute_lateral(0.5, 1.5), 2.0);
    }
}
