//! 3D box reconstruction from three bottom-vertex pixels and an image height.
//!
//! Vertex convention: `b1 -> b2` runs along the vehicle's right-hand
//! direction and `b2 -> b3` along its heading (front-left, front-right,
//! rear-right as emitted by the detector). Heading is `right x n` for the
//! downward plane normal `n`, so yaw is 0 when the heading is +Z and grows
//! toward +X.

use alloc::vec::Vec;
use core::f64::consts::PI;

use nalgebra::{Unit, Vector3};

use crate::geometry::{backproject_to_plane, in_plane_basis, CameraModel, GroundPlane, Pixel, Plane, WorldPoint};
use crate::ground_plane::ImageFootprint;
use crate::{Error, Result};

const TIE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoxDetection {
    pub frame_id: u32,
    pub vehicle_id: u32,
    pub b1: Pixel,
    pub b2: Pixel,
    pub b3: Pixel,
    /// Image-space height at `b1` in pixels.
    pub h_px: f64,
}

impl BoxDetection {
    pub fn new(frame_id: u32, vehicle_id: u32, b1: Pixel, b2: Pixel, b3: Pixel, h_px: f64) -> Result<Self> {
        if !(h_px > 0.0) || !h_px.is_finite() {
            return Err(Error::InvalidParameter("detection height must be positive"));
        }
        if ![b1, b2, b3].iter().all(Pixel::is_finite) {
            return Err(Error::InvalidParameter("detection vertices must be finite"));
        }
        if b1 == b2 || b2 == b3 || b1 == b3 {
            return Err(Error::InvalidParameter("detection vertices must be distinct"));
        }
        Ok(Self { frame_id, vehicle_id, b1, b2, b3, h_px })
    }

    /// Image rectangle covering the bottom quad (with `b4` completed in the
    /// image) and the same quad lifted by `h_px`.
    pub fn image_footprint(&self, dilation: f64) -> ImageFootprint {
        let b4 = Pixel::new(self.b1.u + self.b3.u - self.b2.u, self.b1.v + self.b3.v - self.b2.v);
        let bottom = [self.b1, self.b2, self.b3, b4];
        let top = bottom.map(|p| p.offset(0.0, -self.h_px));
        ImageFootprint::bounding(bottom.into_iter().chain(top), dilation).expect("finite vertices")
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Box3D {
    /// Bottom corners B1..B4, B4 completing the rectangle.
    pub bottom: [WorldPoint; 4],
    /// `top[i] = bottom[i] - height * n`.
    pub top: [WorldPoint; 4],
    pub height: f64,
    pub centroid: WorldPoint,
    /// Radians in (-pi, pi].
    pub yaw: f64,
    /// Downward unit normal of the plane the box stands on.
    pub normal: Unit<Vector3<f64>>,
}

impl Box3D {
    pub fn bottom_center(&self) -> WorldPoint {
        WorldPoint::from(self.bottom.iter().fold(Vector3::zeros(), |a, p| a + p.coords) / 4.0)
    }

    pub fn vertices(&self) -> impl Iterator<Item = &WorldPoint> {
        self.bottom.iter().chain(self.top.iter())
    }

    /// Unit vector along B1 -> B2.
    pub fn right(&self) -> Vector3<f64> {
        (self.bottom[1] - self.bottom[0]).normalize()
    }

    /// Unit vector along B2 -> B3.
    pub fn along(&self) -> Vector3<f64> {
        (self.bottom[2] - self.bottom[1]).normalize()
    }
}

/// Wraps an angle into `(-pi, pi]`.
pub fn wrap_angle(a: f64) -> f64 {
    let mut a = libm::remainder(a, 2.0 * PI);
    if a <= -PI {
        a += 2.0 * PI;
    }
    a
}

/// Yaw of `heading` measured in the plane with normal `normal`.
pub fn yaw_of(heading: &Vector3<f64>, normal: &Unit<Vector3<f64>>) -> f64 {
    let (lat, fwd) = in_plane_basis(normal);
    wrap_angle(libm::atan2(heading.dot(&lat), heading.dot(&fwd)))
}

/// Solves for the metric height `h` such that `bottom - h * n` projects onto
/// image row `target_v`.
fn height_from_row(bottom: &WorldPoint, normal: &Vector3<f64>, target_v: f64, cam: &CameraModel) -> Result<f64> {
    let p = cam.to_camera(bottom);
    let m = cam.direction_to_camera(normal);
    let q = (target_v - cam.cy()) / cam.fy();
    let denom = m.y - q * m.z;
    if denom.abs() < 1e-12 {
        return Err(Error::DegenerateGeometry);
    }
    let h = (p.y - q * p.z) / denom;
    if !(h > 0.0) || !h.is_finite() {
        return Err(Error::DegenerateGeometry);
    }
    Ok(h)
}

pub fn reconstruct_box(det: &BoxDetection, cam: &CameraModel, plane: &GroundPlane) -> Result<Box3D> {
    let b1 = backproject_to_plane(&det.b1, cam, plane)?;
    let b2 = backproject_to_plane(&det.b2, cam, plane)?;
    let b3 = backproject_to_plane(&det.b3, cam, plane)?;

    let n = *plane.normal();
    let (lat, fwd) = in_plane_basis(&n);
    let to2 = |v: Vector3<f64>| (v.dot(&lat), v.dot(&fwd));
    let a = to2(b1 - b2);
    let c = to2(b3 - b2);
    let la = libm::hypot(a.0, a.1);
    let lc = libm::hypot(c.0, c.1);
    let cross = a.0 * c.1 - a.1 * c.0;
    if la == 0.0 || lc == 0.0 || cross.abs() <= 1e-9 * la * lc {
        return Err(Error::NonConvexFootprint);
    }

    // Rectangle fit keeping B2: e1 maximizes (a.e1)^2 + (c.e2)^2 with
    // e2 = rot90(e1), the principal axis of a a^T + c' c'^T, c' = rot90^T c.
    let cp = (c.1, -c.0);
    let m00 = a.0 * a.0 + cp.0 * cp.0;
    let m11 = a.1 * a.1 + cp.1 * cp.1;
    let m01 = a.0 * a.1 + cp.0 * cp.1;
    let phi = 0.5 * libm::atan2(2.0 * m01, m00 - m11);
    let e1 = (libm::cos(phi), libm::sin(phi));
    let e2 = (-e1.1, e1.0);
    let sa = a.0 * e1.0 + a.1 * e1.1;
    let sc = c.0 * e2.0 + c.1 * e2.1;
    let e1w = lat * e1.0 + fwd * e1.1;
    let e2w = lat * e2.0 + fwd * e2.1;
    let b1 = b2 + e1w * sa;
    let b3 = b2 + e2w * sc;
    let b4 = b1 + (b3 - b2);
    let bottom = [b1, b2, b3, b4];

    let height = height_from_row(&b1, &n, det.b1.v - det.h_px, cam)?;
    let top = bottom.map(|p| p - n.into_inner() * height);
    let centroid = WorldPoint::from(
        bottom.iter().chain(top.iter()).fold(Vector3::zeros(), |acc, p| acc + p.coords) / 8.0,
    );
    let right = (b2 - b1).normalize();
    let heading = right.cross(&n);
    Ok(Box3D { bottom, top, height, centroid, yaw: yaw_of(&heading, &n), normal: n })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum FaceKind {
    /// Edge B1-B2.
    Back,
    /// Edge B4-B1.
    Left,
    /// Edge B3-B4.
    Front,
    /// Edge B2-B3.
    Right,
}

impl FaceKind {
    /// Tie-break priority order.
    pub const ALL: [FaceKind; 4] = [FaceKind::Back, FaceKind::Left, FaceKind::Front, FaceKind::Right];

    fn edge(self) -> (usize, usize) {
        match self {
            FaceKind::Back => (0, 1),
            FaceKind::Right => (1, 2),
            FaceKind::Front => (2, 3),
            FaceKind::Left => (3, 0),
        }
    }
}

/// A vertical box face with its outward-facing plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceQuad {
    pub kind: FaceKind,
    /// `[bottom_i, bottom_j, top_j, top_i]`.
    pub vertices: [WorldPoint; 4],
    pub plane: Plane,
    /// Signed distance of the camera center in front of the face.
    pub visibility: f64,
}

fn face(b: &Box3D, kind: FaceKind, camera: &WorldPoint) -> FaceQuad {
    let (i, j) = kind.edge();
    let vertices = [b.bottom[i], b.bottom[j], b.top[j], b.top[i]];
    let edge = b.bottom[j] - b.bottom[i];
    let mut normal = edge.cross(&b.normal).normalize();
    let mid = WorldPoint::from((b.bottom[i].coords + b.bottom[j].coords) * 0.5);
    if normal.dot(&(b.bottom_center() - mid)) > 0.0 {
        normal = -normal;
    }
    let plane = Plane::through_point(Unit::new_unchecked(normal), &mid);
    FaceQuad { kind, vertices, plane, visibility: plane.signed_distance(camera) }
}

fn footprint_contains(b: &Box3D, p: &WorldPoint) -> bool {
    let c = b.bottom_center();
    let (r, f) = (b.bottom[1] - b.bottom[0], b.bottom[2] - b.bottom[1]);
    let d = p - c;
    let along_r = d.dot(&r.normalize()).abs() <= 0.5 * r.norm();
    let along_f = d.dot(&f.normalize()).abs() <= 0.5 * f.norm();
    along_r && along_f
}

/// The two vertical faces most directly facing the camera.
///
/// Faces are ranked by the camera's signed distance in front of each face
/// plane. Near-ties (1e-9 m) go to the earlier entry of [`FaceKind::ALL`],
/// which lists the left face before the right face.
pub fn visible_side_faces(b: &Box3D, cam: &CameraModel) -> Result<[FaceQuad; 2]> {
    let camera = cam.center();
    let foot = WorldPoint::from(camera.coords - b.normal.into_inner() * b.normal.dot(&(camera - b.bottom[0])));
    if footprint_contains(b, &foot) {
        return Err(Error::CameraInsideFootprint);
    }
    let faces = FaceKind::ALL.map(|k| face(b, k, &camera));
    let pick = |skip: Option<usize>| {
        let mut best: Option<usize> = None;
        for (i, f) in faces.iter().enumerate() {
            if Some(i) == skip {
                continue;
            }
            match best {
                Some(bi) if f.visibility <= faces[bi].visibility + TIE_EPS => {}
                _ => best = Some(i),
            }
        }
        best.expect("four faces")
    };
    let first = pick(None);
    let second = pick(Some(first));
    Ok([faces[first], faces[second]])
}

/// A rasterized pixel of a face's lower half, tagged with that face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FacePixel {
    pub x: u32,
    pub y: u32,
    pub face: FaceKind,
    pub plane: Plane,
}

impl FacePixel {
    pub fn pixel(&self) -> Pixel {
        Pixel::new(self.x as f64, self.y as f64)
    }
}

fn inside_convex(poly: &[Pixel; 4], p: &Pixel) -> bool {
    let mut sign = 0.0;
    for i in 0..4 {
        let a = poly[i];
        let b = poly[(i + 1) % 4];
        let cross = (b.u - a.u) * (p.v - a.v) - (b.v - a.v) * (p.u - a.u);
        if cross != 0.0 {
            if sign == 0.0 {
                sign = cross.signum();
            } else if cross.signum() != sign {
                return false;
            }
        }
    }
    true
}

fn polygon_area(poly: &[Pixel; 4]) -> f64 {
    let mut s = 0.0;
    for i in 0..4 {
        let (a, b) = (poly[i], poly[(i + 1) % 4]);
        s += a.u * b.v - b.u * a.v;
    }
    0.5 * s.abs()
}

/// Lower-half quad of a face: bottom edge up to half the box height.
pub fn lower_half_quad(b: &Box3D, f: &FaceQuad) -> [WorldPoint; 4] {
    let up = b.normal.into_inner() * (0.5 * b.height);
    [f.vertices[0], f.vertices[1], f.vertices[1] - up, f.vertices[0] - up]
}

/// Integer pixels whose centers fall inside the projected lower halves of
/// `faces`. Faces the camera sees edge-on or from behind contribute nothing;
/// a pixel on both faces is assigned to the first.
pub fn lower_half_pixels(
    b: &Box3D,
    faces: &[FaceQuad; 2],
    cam: &CameraModel,
    width: usize,
    height: usize,
) -> Result<Vec<FacePixel>> {
    let mut quads = [[Pixel::new(0.0, 0.0); 4]; 2];
    for (q, f) in quads.iter_mut().zip(faces) {
        let world = lower_half_quad(b, f);
        for (dst, p) in q.iter_mut().zip(world.iter()) {
            *dst = cam.project(p)?;
        }
    }
    let mut out = Vec::new();
    if width == 0 || height == 0 {
        return Err(Error::EmptyRegion);
    }
    for (fi, (quad, f)) in quads.iter().zip(faces).enumerate() {
        if f.visibility <= 0.0 || polygon_area(quad) < 1e-9 {
            continue;
        }
        let u_lo = quad.iter().map(|p| p.u).fold(f64::INFINITY, f64::min);
        let u_hi = quad.iter().map(|p| p.u).fold(f64::NEG_INFINITY, f64::max);
        let v_lo = quad.iter().map(|p| p.v).fold(f64::INFINITY, f64::min);
        let v_hi = quad.iter().map(|p| p.v).fold(f64::NEG_INFINITY, f64::max);
        let x0 = libm::ceil(u_lo).max(0.0);
        let x1 = libm::floor(u_hi).min((width - 1) as f64);
        let y0 = libm::ceil(v_lo).max(0.0);
        let y1 = libm::floor(v_hi).min((height - 1) as f64);
        if x0 > x1 || y0 > y1 {
            continue;
        }
        for y in y0 as u32..=y1 as u32 {
            for x in x0 as u32..=x1 as u32 {
                let p = Pixel::new(x as f64, y as f64);
                if !inside_convex(quad, &p) {
                    continue;
                }
                if fi == 1 && faces[0].visibility > 0.0 && inside_convex(&quads[0], &p) {
                    continue;
                }
                out.push(FacePixel { x, y, face: f.kind, plane: f.plane });
            }
        }
    }
    if out.is_empty() {
        return Err(Error::EmptyRegion);
    }
    Ok(out)
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

    /// Forward-projects an oracle box standing on y = 1.5 with yaw `yaw`.
    fn render(center_x: f64, center_z: f64, length: f64, width: f64, height: f64, yaw: f64) -> (BoxDetection, [WorldPoint; 4]) {
        let cam = cam0();
        let f = Vector3::new(yaw.sin(), 0.0, yaw.cos());
        let r = Vector3::new(yaw.cos(), 0.0, -yaw.sin());
        let c = Vector3::new(center_x, 1.5, center_z);
        let b1 = Point3::from(c - f * (length / 2.0) - r * (width / 2.0));
        let b2 = Point3::from(c - f * (length / 2.0) + r * (width / 2.0));
        let b3 = Point3::from(c + f * (length / 2.0) + r * (width / 2.0));
        let b4 = Point3::from(c + f * (length / 2.0) - r * (width / 2.0));
        let t1 = b1 - Vector3::new(0.0, height, 0.0);
        let p1 = cam.project(&b1).unwrap();
        let h_px = p1.v - cam.project(&t1).unwrap().v;
        let det = BoxDetection::new(0, 1, p1, cam.project(&b2).unwrap(), cam.project(&b3).unwrap(), h_px).unwrap();
        (det, [b1, b2, b3, b4])
    }

    #[test]
    fn reconstruct_axis_aligned() {
        let (det, truth) = render(0.0, 12.0, 4.0, 2.0, 1.5, 0.0);
        assert!((truth[0] - Point3::new(-1.0, 1.5, 10.0)).norm() < 1e-12);
        let b = reconstruct_box(&det, &cam0(), &pi0()).unwrap();
        for (got, want) in b.bottom.iter().zip(truth.iter()) {
            assert!((got - want).norm() < 1e-6, "{got} vs {want}");
        }
        assert!((b.height - 1.5).abs() < 1e-6);
        for t in &b.top {
            assert!(t.y.abs() < 1e-6);
        }
        assert!(b.yaw.abs() < 1e-9);
        assert!((b.centroid - Point3::new(0.0, 0.75, 12.0)).norm() < 1e-6);
    }

    #[test]
    fn reconstruct_rotated() {
        let (det, _) = render(0.0, 12.0, 4.0, 2.0, 1.5, PI / 2.0);
        let b = reconstruct_box(&det, &cam0(), &pi0()).unwrap();
        assert!((b.yaw - PI / 2.0).abs() < 1e-9);
    }

    #[test]
    fn box_invariants_hold() {
        let (det, _) = render(2.0, 18.0, 4.5, 1.8, 1.6, 0.3);
        let plane = pi0();
        let b = reconstruct_box(&det, &cam0(), &plane).unwrap();
        for p in &b.bottom {
            assert!(plane.signed_distance(p).abs() < 1e-6);
        }
        for i in 0..4 {
            let e1 = b.bottom[(i + 1) % 4] - b.bottom[i];
            let e0 = b.bottom[(i + 3) % 4] - b.bottom[i];
            let cos = e1.dot(&e0) / (e1.norm() * e0.norm());
            assert!(cos.abs() < 1e-6);
            assert!((b.top[i] - (b.bottom[i] - b.normal.into_inner() * b.height)).norm() < 1e-9);
        }
    }

    #[test]
    fn noisy_vertices_still_rectangular() {
        let (mut det, _) = render(-1.0, 15.0, 4.0, 1.8, 1.5, 0.2);
        det.b1 = det.b1.offset(0.7, -0.4);
        det.b3 = det.b3.offset(-0.9, 0.6);
        let b = reconstruct_box(&det, &cam0(), &pi0()).unwrap();
        let e1 = b.bottom[0] - b.bottom[1];
        let e2 = b.bottom[2] - b.bottom[1];
        let angle = (e1.dot(&e2) / (e1.norm() * e2.norm())).acos();
        assert!((angle - PI / 2.0).abs() < 1e-6);
        assert!((b.yaw - 0.2).abs() < 0.1);
    }

    #[test]
    fn collinear_is_rejected() {
        let det = BoxDetection::new(0, 1, Pixel::new(600.0, 500.0), Pixel::new(640.0, 500.0), Pixel::new(700.0, 500.0), 40.0).unwrap();
        assert_eq!(reconstruct_box(&det, &cam0(), &pi0()), Err(Error::NonConvexFootprint));
    }

    #[test]
    fn above_horizon_propagates() {
        let det = BoxDetection::new(0, 1, Pixel::new(600.0, 300.0), Pixel::new(640.0, 310.0), Pixel::new(700.0, 320.0), 40.0).unwrap();
        assert_eq!(reconstruct_box(&det, &cam0(), &pi0()), Err(Error::IntersectionBehindCamera));
    }

    #[test]
    fn invalid_detection() {
        let p = Pixel::new(1.0, 1.0);
        assert!(BoxDetection::new(0, 1, p, p.offset(1.0, 0.0), p.offset(2.0, 1.0), 0.0).is_err());
        assert!(BoxDetection::new(0, 1, p, p, p.offset(2.0, 1.0), 5.0).is_err());
    }

    #[test]
    fn higher_pitch_pushes_box_farther() {
        let (det, _) = render(0.0, 15.0, 4.0, 1.8, 1.5, 0.0);
        let mut last = 0.0;
        for deg in [-1.0f64, -0.5, 0.0, 0.5, 1.0] {
            let p = deg.to_radians();
            let plane = canonicalize_plane([0.0, p.cos(), -p.sin(), -1.5]).unwrap();
            let z = reconstruct_box(&det, &cam0(), &plane).unwrap().centroid.z;
            assert!(z > last);
            last = z;
        }
    }

    #[test]
    fn visible_faces_dead_ahead() {
        let (det, _) = render(0.0, 12.0, 4.0, 2.0, 1.5, 0.0);
        let b = reconstruct_box(&det, &cam0(), &pi0()).unwrap();
        let faces = visible_side_faces(&b, &cam0()).unwrap();
        assert_eq!(faces[0].kind, FaceKind::Back);
        assert_eq!(faces[1].kind, FaceKind::Left);
    }

    #[test]
    fn visible_faces_offset() {
        let (det, _) = render(5.0, 12.0, 4.0, 2.0, 1.5, 0.0);
        let b = reconstruct_box(&det, &cam0(), &pi0()).unwrap();
        let kinds = visible_side_faces(&b, &cam0()).unwrap().map(|f| f.kind);
        assert_eq!(kinds, [FaceKind::Back, FaceKind::Left]);
        let (det, _) = render(-5.0, 12.0, 4.0, 2.0, 1.5, 0.0);
        let b = reconstruct_box(&det, &cam0(), &pi0()).unwrap();
        let kinds = visible_side_faces(&b, &cam0()).unwrap().map(|f| f.kind);
        assert_eq!(kinds, [FaceKind::Back, FaceKind::Right]);
    }

    #[test]
    fn face_planes_pass_through_vertices() {
        let (det, _) = render(3.0, 14.0, 4.0, 2.0, 1.5, 0.4);
        let b = reconstruct_box(&det, &cam0(), &pi0()).unwrap();
        for f in visible_side_faces(&b, &cam0()).unwrap() {
            for v in &f.vertices {
                assert!(f.plane.signed_distance(v).abs() < 1e-9);
            }
            assert!(f.visibility > 0.0);
        }
    }

    #[test]
    fn camera_inside_footprint() {
        let b1 = Point3::new(-1.0, 1.5, -2.0);
        let n = *pi0().normal();
        let bottom = [b1, Point3::new(1.0, 1.5, -2.0), Point3::new(1.0, 1.5, 2.0), Point3::new(-1.0, 1.5, 2.0)];
        let top = bottom.map(|p| p - n.into_inner() * 1.5);
        let b = Box3D { bottom, top, height: 1.5, centroid: Point3::new(0.0, 0.75, 0.0), yaw: 0.0, normal: n };
        assert_eq!(visible_side_faces(&b, &cam0()), Err(Error::CameraInsideFootprint));
    }

    #[test]
    fn lower_half_membership() {
        let cam = cam0();
        let (det, _) = render(0.0, 12.0, 4.0, 2.0, 1.5, 0.0);
        let b = reconstruct_box(&det, &cam, &pi0()).unwrap();
        let faces = visible_side_faces(&b, &cam).unwrap();
        let px = lower_half_pixels(&b, &faces, &cam, 1280, 800).unwrap();
        assert!(!px.is_empty());
        for fp in &px {
            let p = backproject_to_plane(&fp.pixel(), &cam, &fp.plane).unwrap();
            assert!(fp.plane.signed_distance(&p).abs() < 1e-6);
            // inside the lower half: between the ground and half height
            let h = pi0().signed_distance(&p);
            assert!((-0.75 - 1e-6..=1e-6).contains(&h), "{h}");
        }
        // rear face at z = 10 spans u in [540, 740] and v in [475, 550]
        assert!(px.iter().all(|p| p.face == FaceKind::Back));
        assert_eq!(px.len(), 201 * 76);
    }

    #[test]
    fn lower_half_off_image() {
        let cam = cam0();
        let (det, _) = render(0.0, 12.0, 4.0, 2.0, 1.5, 0.0);
        let b = reconstruct_box(&det, &cam, &pi0()).unwrap();
        let faces = visible_side_faces(&b, &cam).unwrap();
        // a tiny image that the box does not reach
        assert_eq!(lower_half_pixels(&b, &faces, &cam, 100, 100), Err(Error::EmptyRegion));
    }

    #[test]
    fn lower_half_behind_camera() {
        let cam = cam0();
        let n = *pi0().normal();
        let bottom = [
            Point3::new(-1.0, 1.5, -10.0),
            Point3::new(1.0, 1.5, -10.0),
            Point3::new(1.0, 1.5, -14.0),
            Point3::new(-1.0, 1.5, -14.0),
        ];
        let top = bottom.map(|p| p - n.into_inner() * 1.5);
        let b = Box3D { bottom, top, height: 1.5, centroid: Point3::new(0.0, 0.75, -12.0), yaw: PI, normal: n };
        let faces = visible_side_faces(&b, &cam).unwrap();
        assert_eq!(lower_half_pixels(&b, &faces, &cam, 1280, 800), Err(Error::PointBehindCamera));
    }

    #[test]
    fn footprint_covers_box_image() {
        let (det, _) = render(0.0, 12.0, 4.0, 2.0, 1.5, 0.0);
        let fp = det.image_footprint(5.0);
        assert!(fp.contains(&Pixel::new(640.0, 500.0)));
        assert!(fp.v_max >= det.b1.v + 5.0);
        assert!(fp.v_min <= det.b1.v - det.h_px - 5.0);
    }
}
