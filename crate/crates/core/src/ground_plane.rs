//! Per-frame road plane correction.
//!
//! Nine fixed image points in the lower part of the frame are filtered
//! against the detections, lifted to 3D through the depth raster, fitted
//! with RANSAC and finally gated against the initial and previous planes.
//! A candidate is accepted only when all three deviations stay below their
//! thresholds; otherwise the previous plane is held.

use alloc::vec::Vec;

use nalgebra::{Matrix3, SymmetricEigen, Vector3};
use rand::seq::index;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::geometry::{canonicalize_plane, CameraModel, GroundPlane, Pixel, Plane, WorldPoint};
use crate::raster::DepthRaster;
use crate::{Error, Result};

const COLLINEAR_EPS: f64 = 1e-9;
const ZERO_OFFSET_EPS: f64 = 1e-6;

/// Meters per normalized depth unit.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DepthScale(f64);

impl DepthScale {
    pub fn new(k: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::InvalidParameter("depth scale must be positive"));
        }
        Ok(Self(k))
    }

    pub fn k(&self) -> f64 {
        self.0
    }
}

impl Default for DepthScale {
    fn default() -> Self {
        Self(0.13)
    }
}

pub fn depth_to_distance(depth_value: f64, scale: DepthScale) -> f64 {
    scale.0 * depth_value
}

/// Fixed image positions sampled for the road surface.
#[derive(Debug, Clone, PartialEq)]
pub struct RoadSamplePattern {
    points: Vec<Pixel>,
}

impl RoadSamplePattern {
    pub const ROWS: [f64; 3] = [0.78, 0.86, 0.94];
    pub const COLS: [f64; 3] = [0.35, 0.50, 0.65];

    pub fn new(points: Vec<Pixel>, width: usize, height: usize) -> Result<Self> {
        if points.len() < 3 {
            return Err(Error::InvalidParameter("road pattern needs at least 3 points"));
        }
        let inside = |p: &Pixel| {
            p.is_finite() && p.u >= 0.0 && p.v >= 0.0 && p.u <= (width - 1) as f64 && p.v <= (height - 1) as f64
        };
        if !points.iter().all(inside) {
            return Err(Error::InvalidParameter("road pattern point outside the image"));
        }
        for (i, p) in points.iter().enumerate() {
            if points[i + 1..].iter().any(|q| q == p) {
                return Err(Error::InvalidParameter("road pattern points must be distinct"));
            }
        }
        Ok(Self { points })
    }

    /// 3x3 grid over the lower center of a `width` x `height` image.
    pub fn grid(width: usize, height: usize) -> Self {
        let mut points = Vec::with_capacity(9);
        for r in Self::ROWS {
            for c in Self::COLS {
                points.push(Pixel::new(c * width as f64, r * height as f64));
            }
        }
        Self { points }
    }

    pub fn points(&self) -> &[Pixel] {
        &self.points
    }
}

/// Axis-aligned image rectangle covered by a detection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ImageFootprint {
    pub u_min: f64,
    pub u_max: f64,
    pub v_min: f64,
    pub v_max: f64,
}

impl ImageFootprint {
    /// Bounding rectangle of `pixels`, grown by `dilation` on every side.
    pub fn bounding(pixels: impl IntoIterator<Item = Pixel>, dilation: f64) -> Option<Self> {
        let mut it = pixels.into_iter().filter(Pixel::is_finite);
        let first = it.next()?;
        let mut fp = Self { u_min: first.u, u_max: first.u, v_min: first.v, v_max: first.v };
        for p in it {
            fp.u_min = fp.u_min.min(p.u);
            fp.u_max = fp.u_max.max(p.u);
            fp.v_min = fp.v_min.min(p.v);
            fp.v_max = fp.v_max.max(p.v);
        }
        fp.u_min -= dilation;
        fp.v_min -= dilation;
        fp.u_max += dilation;
        fp.v_max += dilation;
        Some(fp)
    }

    pub fn contains(&self, p: &Pixel) -> bool {
        p.u >= self.u_min && p.u <= self.u_max && p.v >= self.v_min && p.v <= self.v_max
    }
}

/// Pattern points not covered by any detection footprint.
pub fn sample_road_points(pattern: &RoadSamplePattern, footprints: &[ImageFootprint]) -> Result<Vec<Pixel>> {
    let kept: Vec<Pixel> = pattern
        .points
        .iter()
        .filter(|p| !footprints.iter().any(|f| f.contains(p)))
        .copied()
        .collect();
    if kept.len() < 3 {
        return Err(Error::InsufficientRoadPoints(kept.len()));
    }
    Ok(kept)
}

/// Lifts pixels to 3D using the depth raster as planar depth.
///
/// Samples that are non-finite, non-positive (sky) or outside the raster are
/// dropped.
pub fn lift_road_points(
    pixels: &[Pixel],
    depth: &DepthRaster,
    scale: DepthScale,
    cam: &CameraModel,
) -> Result<Vec<WorldPoint>> {
    let points: Vec<WorldPoint> = pixels
        .iter()
        .filter_map(|px| {
            let raw = depth.sample(px)?;
            if !raw.is_finite() || raw <= 0.0 {
                return None;
            }
            let z = depth_to_distance(raw, scale);
            Some(cam.from_camera(&(cam.camera_ray(px) * z)))
        })
        .collect();
    if points.len() < 3 {
        return Err(Error::InsufficientRoadPoints(points.len()));
    }
    Ok(points)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RansacParams {
    pub iterations: usize,
    /// Point-plane distance in meters.
    pub inlier_threshold: f64,
    pub seed: u64,
}

impl Default for RansacParams {
    fn default() -> Self {
        Self { iterations: 100, inlier_threshold: 0.05, seed: 0 }
    }
}

impl RansacParams {
    pub fn validate(&self) -> Result<()> {
        if self.iterations < 1 {
            return Err(Error::InvalidParameter("ransac iterations must be >= 1"));
        }
        if !(self.inlier_threshold > 0.0) {
            return Err(Error::InvalidParameter("ransac inlier threshold must be positive"));
        }
        Ok(())
    }
}

/// Outcome of [`ransac_plane`].
#[derive(Debug, Clone, PartialEq)]
pub struct RansacFit {
    /// Refit of the consensus set.
    pub plane: GroundPlane,
    /// Indices of the best hypothesis' consensus set.
    pub inliers: Vec<usize>,
    /// Index of the winning hypothesis.
    pub hypothesis: usize,
}

/// Plane through three points, `None` when they are collinear.
pub fn plane_from_triple(p: &WorldPoint, q: &WorldPoint, r: &WorldPoint) -> Option<Plane> {
    let e1 = q - p;
    let e2 = r - p;
    let n = e1.cross(&e2);
    if n.norm() <= COLLINEAR_EPS * e1.norm() * e2.norm() || n.norm() == 0.0 {
        return None;
    }
    Plane::new(n, -n.dot(&p.coords)).ok()
}

/// Inlier indices and sum of squared inlier residuals of `plane`.
pub fn consensus(points: &[WorldPoint], plane: &Plane, threshold: f64) -> (Vec<usize>, f64) {
    let mut idx = Vec::new();
    let mut ssr = 0.0;
    for (i, p) in points.iter().enumerate() {
        let r = plane.signed_distance(p);
        if r.abs() <= threshold {
            idx.push(i);
            ssr += r * r;
        }
    }
    (idx, ssr)
}

fn check_degenerate(points: &[WorldPoint]) -> Result<()> {
    if points.len() < 3 {
        return Err(Error::TooFewPoints);
    }
    let mut best = (0, 0, 0.0);
    for i in 0..points.len() {
        for j in i + 1..points.len() {
            let d = (points[i] - points[j]).norm();
            if d > best.2 {
                best = (i, j, d);
            }
        }
    }
    if best.2 < COLLINEAR_EPS {
        return Err(Error::DegenerateGeometry);
    }
    let (a, b) = (points[best.0], points[best.1]);
    let dir = (b - a) / best.2;
    let off_line = points.iter().any(|p| (p - a).cross(&dir).norm() > COLLINEAR_EPS);
    if off_line {
        Ok(())
    } else {
        Err(Error::DegenerateGeometry)
    }
}

/// Total-least-squares plane: centroid plus the scatter matrix' smallest
/// eigenvector.
pub fn fit_plane_tls(points: &[WorldPoint]) -> Result<GroundPlane> {
    check_degenerate(points)?;
    let n = points.len() as f64;
    let centroid = points.iter().fold(Vector3::zeros(), |acc, p| acc + p.coords) / n;
    let mut scatter = Matrix3::zeros();
    for p in points {
        let d = p.coords - centroid;
        scatter += d * d.transpose();
    }
    let eig = SymmetricEigen::new(scatter);
    let imin = eig.eigenvalues.imin();
    let normal = eig.eigenvectors.column(imin).into_owned();
    canonicalize_plane([normal.x, normal.y, normal.z, -normal.dot(&centroid)])
}

fn triples(n: usize) -> impl Iterator<Item = [usize; 3]> {
    (0..n).flat_map(move |i| (i + 1..n).flat_map(move |j| (j + 1..n).map(move |k| [i, j, k])))
}

fn n_choose_3(n: usize) -> usize {
    if n < 3 {
        0
    } else {
        n * (n - 1) * (n - 2) / 6
    }
}

/// RANSAC with minimal 3-point hypotheses.
///
/// When the number of distinct triples does not exceed `iterations`, every
/// triple is scored once in lexicographic order; otherwise `iterations`
/// triples are drawn from a ChaCha8 stream seeded with `params.seed`.
/// Hypotheses are ranked by inlier count, then by lower inlier residual sum,
/// then by earlier index.
pub fn ransac_plane(points: &[WorldPoint], params: &RansacParams) -> Result<RansacFit> {
    params.validate()?;
    check_degenerate(points)?;
    let n = points.len();

    struct Best {
        inliers: Vec<usize>,
        ssr: f64,
        index: usize,
    }
    let mut best: Option<Best> = None;
    let mut score = |index: usize, tri: [usize; 3]| {
        let Some(h) = plane_from_triple(&points[tri[0]], &points[tri[1]], &points[tri[2]]) else {
            return;
        };
        let (inliers, ssr) = consensus(points, &h, params.inlier_threshold);
        let better = match &best {
            None => true,
            Some(b) => inliers.len() > b.inliers.len() || (inliers.len() == b.inliers.len() && ssr < b.ssr),
        };
        if better {
            best = Some(Best { inliers, ssr, index });
        }
    };

    if n_choose_3(n) <= params.iterations {
        for (index, tri) in triples(n).enumerate() {
            score(index, tri);
        }
    } else {
        let mut rng = ChaCha8Rng::seed_from_u64(params.seed);
        for index in 0..params.iterations {
            let s = index::sample(&mut rng, n, 3);
            score(index, [s.index(0), s.index(1), s.index(2)]);
        }
    }

    let best = best.ok_or(Error::DegenerateGeometry)?;
    let consensus_points: Vec<WorldPoint> = best.inliers.iter().map(|&i| points[i]).collect();
    let plane = fit_plane_tls(&consensus_points)?;
    Ok(RansacFit { plane, inliers: best.inliers, hypothesis: best.index })
}

pub fn fit_plane_ransac(points: &[WorldPoint], params: &RansacParams) -> Result<GroundPlane> {
    ransac_plane(points, params).map(|f| f.plane)
}

/// Fits the initial plane from surveyed ground points, e.g. the bottom
/// corners of ground-truth boxes.
pub fn fit_initial_plane(bottom_vertices: &[WorldPoint], params: &RansacParams) -> Result<GroundPlane> {
    fit_plane_ransac(bottom_vertices, params)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GateThresholds {
    /// Max `|n_t - n_init|`.
    pub theta0: f64,
    /// Max `|n_t - n_prev|`.
    pub theta1: f64,
    /// Max `|d_t - d_init| / |d_init|`.
    pub theta2: f64,
}

impl Default for GateThresholds {
    fn default() -> Self {
        Self { theta0: 0.025, theta1: 0.004, theta2: 0.02 }
    }
}

impl GateThresholds {
    pub fn validate(&self) -> Result<()> {
        if [self.theta0, self.theta1, self.theta2].iter().all(|t| *t > 0.0 && t.is_finite()) {
            Ok(())
        } else {
            Err(Error::InvalidParameter("gate thresholds must be positive"))
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PlaneState {
    pub initial: GroundPlane,
    /// Plane in effect for the previous frame.
    pub previous: GroundPlane,
    /// Plane in effect for this frame.
    pub current: GroundPlane,
    pub updated: bool,
    /// Frames in a row on which the plane was held.
    pub held_frames: u32,
}

impl PlaneState {
    pub fn new(initial: GroundPlane) -> Self {
        Self { initial, previous: initial, current: initial, updated: false, held_frames: 0 }
    }

    /// Keeps the previous plane for this frame.
    pub fn hold(&self) -> Self {
        Self {
            previous: self.current,
            current: self.current,
            updated: false,
            held_frames: self.held_frames + 1,
            ..*self
        }
    }

    /// Reverts to the initial plane.
    pub fn reinitialize(&self) -> Self {
        Self::new(self.initial)
    }
}

/// Deviations `(|n_t - n_init|, |n_t - n_prev|, |d_t - d_init| / |d_init|)`.
pub fn gate_deviations(candidate: &GroundPlane, state: &PlaneState) -> Result<[f64; 3]> {
    let d_init = state.initial.d();
    if d_init.abs() < ZERO_OFFSET_EPS {
        return Err(Error::ZeroInitialOffset);
    }
    let n = candidate.normal().into_inner();
    Ok([
        (n - state.initial.normal().into_inner()).norm(),
        (n - state.current.normal().into_inner()).norm(),
        (candidate.d() - d_init).abs() / d_init.abs(),
    ])
}

/// Accepts `candidate` when all three deviations are below their thresholds,
/// otherwise holds the previous plane.
pub fn gate_update(candidate: &GroundPlane, state: &PlaneState, thresholds: &GateThresholds) -> Result<PlaneState> {
    let [dev_init, dev_prev, dev_d] = gate_deviations(candidate, state)?;
    if dev_init < thresholds.theta0 && dev_prev < thresholds.theta1 && dev_d < thresholds.theta2 {
        Ok(PlaneState {
            initial: state.initial,
            previous: *candidate,
            current: *candidate,
            updated: true,
            held_frames: 0,
        })
    } else {
        Ok(state.hold())
    }
}
