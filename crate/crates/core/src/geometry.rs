//! Pinhole camera, planes, projection and ray-plane back-projection.
//!
//! A [`CameraModel`] maps reference-frame points to pixels with
//! `p_cam = R * p + t` followed by the intrinsic matrix. With the default
//! identity extrinsics the reference frame is the camera frame.

use core::ops::Deref;

use nalgebra::{Matrix3, Point3, Unit, Vector3};

use crate::{Error, Result};

/// Reference-frame point in meters.
pub type WorldPoint = Point3<f64>;

/// Minimum camera-frame depth for a point to be projectable.
pub const MIN_DEPTH: f64 = 1e-6;
/// Rays whose direction has `|n . dir|` below this are parallel to a plane.
pub const PARALLEL_EPS: f64 = 1e-9;

const ROTATION_TOL: f64 = 1e-9;
const HORIZONTAL_NORMAL_EPS: f64 = 1e-6;

/// Image coordinate in pixels. Integer values are pixel centers.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    pub u: f64,
    pub v: f64,
}

impl Pixel {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn offset(&self, du: f64, dv: f64) -> Self {
        Self::new(self.u + du, self.v + dv)
    }

    pub fn distance(&self, other: &Pixel) -> f64 {
        libm::hypot(self.u - other.u, self.v - other.v)
    }
}

/// Pinhole intrinsics plus rigid extrinsics. No lens distortion.
#[derive(Debug, Clone, PartialEq)]
pub struct CameraModel {
    fx: f64,
    fy: f64,
    cx: f64,
    cy: f64,
    rotation: Matrix3<f64>,
    translation: Vector3<f64>,
}

impl CameraModel {
    /// Camera with identity extrinsics.
    pub fn new(fx: f64, fy: f64, cx: f64, cy: f64) -> Result<Self> {
        if !(fx > 0.0 && fy > 0.0) || !fx.is_finite() || !fy.is_finite() {
            return Err(Error::InvalidCamera("focal lengths must be positive"));
        }
        if !cx.is_finite() || !cy.is_finite() {
            return Err(Error::InvalidCamera("principal point must be finite"));
        }
        Ok(Self {
            fx,
            fy,
            cx,
            cy,
            rotation: Matrix3::identity(),
            translation: Vector3::zeros(),
        })
    }

    pub fn with_extrinsics(mut self, rotation: Matrix3<f64>, translation: Vector3<f64>) -> Result<Self> {
        let err = (rotation.transpose() * rotation - Matrix3::identity()).amax();
        if !(err <= ROTATION_TOL) {
            return Err(Error::InvalidCamera("rotation is not orthonormal"));
        }
        if rotation.determinant() < 0.0 {
            return Err(Error::InvalidCamera("rotation is a reflection"));
        }
        if !translation.iter().all(|t| t.is_finite()) {
            return Err(Error::InvalidCamera("translation must be finite"));
        }
        self.rotation = rotation;
        self.translation = translation;
        Ok(self)
    }

    pub fn fx(&self) -> f64 {
        self.fx
    }
    pub fn fy(&self) -> f64 {
        self.fy
    }
    pub fn cx(&self) -> f64 {
        self.cx
    }
    pub fn cy(&self) -> f64 {
        self.cy
    }
    pub fn rotation(&self) -> &Matrix3<f64> {
        &self.rotation
    }
    pub fn translation(&self) -> &Vector3<f64> {
        &self.translation
    }

    /// Reference-frame point into the camera frame.
    pub fn to_camera(&self, p: &WorldPoint) -> Vector3<f64> {
        self.rotation * p.coords + self.translation
    }

    /// Camera-frame vector back into the reference frame.
    pub fn from_camera(&self, p: &Vector3<f64>) -> WorldPoint {
        Point3::from(self.rotation.transpose() * (p - self.translation))
    }

    /// Optical center in the reference frame.
    pub fn center(&self) -> WorldPoint {
        Point3::from(-(self.rotation.transpose() * self.translation))
    }

    /// Camera-frame ray direction through `px`, with unit z component.
    pub fn camera_ray(&self, px: &Pixel) -> Vector3<f64> {
        Vector3::new((px.u - self.cx) / self.fx, (px.v - self.cy) / self.fy, 1.0)
    }

    /// Unit viewing direction of `px` in the reference frame.
    pub fn ray_direction(&self, px: &Pixel) -> Unit<Vector3<f64>> {
        Unit::new_normalize(self.rotation.transpose() * self.camera_ray(px))
    }

    /// Reference-frame direction into the camera frame.
    pub fn direction_to_camera(&self, dir: &Vector3<f64>) -> Vector3<f64> {
        self.rotation * dir
    }

    pub fn project(&self, p: &WorldPoint) -> Result<Pixel> {
        let pc = self.to_camera(p);
        self.project_camera(&pc)
    }

    /// Projects a camera-frame point.
    pub fn project_camera(&self, pc: &Vector3<f64>) -> Result<Pixel> {
        if !(pc.z > MIN_DEPTH) {
            return Err(Error::PointBehindCamera);
        }
        Ok(Pixel::new(
            self.fx * pc.x / pc.z + self.cx,
            self.fy * pc.y / pc.z + self.cy,
        ))
    }
}

/// Maps a reference-frame point to a pixel.
pub fn project(point: &WorldPoint, cam: &CameraModel) -> Result<Pixel> {
    cam.project(point)
}

/// Plane `n . x + d = 0` with unit normal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Plane {
    normal: Unit<Vector3<f64>>,
    d: f64,
}

impl Plane {
    pub fn new(normal: Vector3<f64>, d: f64) -> Result<Self> {
        let norm = normal.norm();
        if !(norm > 0.0) || !norm.is_finite() || !d.is_finite() {
            return Err(Error::ZeroNormal);
        }
        Ok(Self {
            normal: Unit::new_unchecked(normal / norm),
            d: d / norm,
        })
    }

    /// Plane with the given unit normal passing through `point`.
    pub fn through_point(normal: Unit<Vector3<f64>>, point: &WorldPoint) -> Self {
        Self {
            normal,
            d: -normal.dot(&point.coords),
        }
    }

    pub fn normal(&self) -> &Unit<Vector3<f64>> {
        &self.normal
    }

    pub fn d(&self) -> f64 {
        self.d
    }

    pub fn coefficients(&self) -> [f64; 4] {
        [self.normal.x, self.normal.y, self.normal.z, self.d]
    }

    pub fn signed_distance(&self, p: &WorldPoint) -> f64 {
        self.normal.dot(&p.coords) + self.d
    }

    /// Intersection of the ray `origin + s * dir` (`s > 0`) with the plane.
    pub fn intersect_ray(&self, origin: &WorldPoint, dir: &Unit<Vector3<f64>>) -> Result<WorldPoint> {
        let denom = self.normal.dot(dir);
        if !(denom.abs() >= PARALLEL_EPS) {
            return Err(Error::RayParallelToPlane);
        }
        let s = -self.signed_distance(origin) / denom;
        if !(s > 0.0) {
            return Err(Error::IntersectionBehindCamera);
        }
        Ok(origin + dir.into_inner() * s)
    }
}

/// Road plane in canonical form: unit normal with `b > 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundPlane(Plane);

impl GroundPlane {
    pub fn a(&self) -> f64 {
        self.0.normal.x
    }
    pub fn b(&self) -> f64 {
        self.0.normal.y
    }
    pub fn c(&self) -> f64 {
        self.0.normal.z
    }

    pub fn as_plane(&self) -> &Plane {
        &self.0
    }

    /// Parallel plane through `point`, sharing this plane's normal.
    pub fn through_point(&self, point: &WorldPoint) -> GroundPlane {
        GroundPlane(Plane::through_point(self.0.normal, point))
    }

    /// Canonical ground plane from a normal of any scale.
    pub fn from_normal(normal: Vector3<f64>, d: f64) -> Result<Self> {
        canonicalize_plane([normal.x, normal.y, normal.z, d])
    }
}

impl Deref for GroundPlane {
    type Target = Plane;

    fn deref(&self) -> &Plane {
        &self.0
    }
}

/// Scales raw coefficients to a unit normal and orients it so `b > 0`.
pub fn canonicalize_plane(raw: [f64; 4]) -> Result<GroundPlane> {
    let [a, b, c, d] = raw;
    if !raw.iter().all(|v| v.is_finite()) {
        return Err(Error::ZeroNormal);
    }
    let norm = libm::sqrt(a * a + b * b + c * c);
    if !(norm > 0.0) {
        return Err(Error::ZeroNormal);
    }
    let scale = if b < 0.0 { -1.0 / norm } else { 1.0 / norm };
    if (b * scale).abs() < HORIZONTAL_NORMAL_EPS {
        return Err(Error::HorizontalNormal);
    }
    let n = Vector3::new(a * scale, b * scale, c * scale);
    Ok(GroundPlane(Plane {
        normal: Unit::new_unchecked(n),
        d: d * scale,
    }))
}

/// Intersects the viewing ray of `px` with `plane`.
pub fn backproject_to_plane(px: &Pixel, cam: &CameraModel, plane: &Plane) -> Result<WorldPoint> {
    plane.intersect_ray(&cam.center(), &cam.ray_direction(px))
}

pub fn plane_through_point_parallel(plane: &GroundPlane, point: &WorldPoint) -> GroundPlane {
    plane.through_point(point)
}

/// Orthonormal in-plane basis `(lateral, forward)` aligned with the camera
/// X and Z axes. Falls back to the Y axis for planes nearly perpendicular
/// to Z.
pub(crate) fn in_plane_basis(normal: &Unit<Vector3<f64>>) -> (Vector3<f64>, Vector3<f64>) {
    let z = Vector3::z();
    let mut fwd = z - normal.into_inner() * normal.dot(&z);
    if fwd.norm() < 1e-9 {
        let y = Vector3::y();
        fwd = y - normal.into_inner() * normal.dot(&y);
    }
    let fwd = fwd.normalize();
    // X right, Y down, Z forward: right = down x forward
    let lat = normal.cross(&fwd);
    (lat, fwd)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn cam0() -> CameraModel {
        CameraModel::new(1000.0, 1000.0, 640.0, 400.0).unwrap()
    }

    fn pi0() -> GroundPlane {
        canonicalize_plane([0.0, 1.0, 0.0, -1.5]).unwrap()
    }

    #[test]
    fn project_examples() {
        let cam = cam0();
        let p = project(&Point3::new(0.0, 1.5, 15.0), &cam).unwrap();
        assert_abs_diff_eq!(p.u, 640.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v, 500.0, epsilon = 1e-12);
        let p = project(&Point3::new(1.5, 1.5, 15.0), &cam).unwrap();
        assert_abs_diff_eq!(p.u, 740.0, epsilon = 1e-12);
        assert_abs_diff_eq!(p.v, 500.0, epsilon = 1e-12);
        let p = project(&Point3::new(0.0, 0.0, 10.0), &cam).unwrap();
        assert_eq!(p, Pixel::new(640.0, 400.0));
    }

    #[test]
    fn project_behind_camera() {
        let cam = cam0();
        assert_eq!(project(&Point3::new(0.0, 0.0, 0.0), &cam), Err(Error::PointBehindCamera));
        assert_eq!(project(&Point3::new(1.0, 0.0, -3.0), &cam), Err(Error::PointBehindCamera));
    }

    #[test]
    fn backproject_examples() {
        let cam = cam0();
        let plane = pi0();
        let p = backproject_to_plane(&Pixel::new(640.0, 500.0), &cam, &plane).unwrap();
        assert_abs_diff_eq!(p, Point3::new(0.0, 1.5, 15.0), epsilon = 1e-12);
        let p = backproject_to_plane(&Pixel::new(740.0, 500.0), &cam, &plane).unwrap();
        assert_abs_diff_eq!(p, Point3::new(1.5, 1.5, 15.0), epsilon = 1e-12);
        assert_eq!(
            backproject_to_plane(&Pixel::new(640.0, 400.0), &cam, &plane),
            Err(Error::RayParallelToPlane)
        );
        // above the horizon the ray meets the plane behind the camera
        assert_eq!(
            backproject_to_plane(&Pixel::new(640.0, 300.0), &cam, &plane),
            Err(Error::IntersectionBehindCamera)
        );
    }

    #[test]
    fn parallel_plane_examples() {
        let p = plane_through_point_parallel(&pi0(), &Point3::new(0.0, 1.0, 20.0));
        assert_eq!(p.coefficients(), [0.0, 1.0, 0.0, -1.0]);
        let p = plane_through_point_parallel(&pi0(), &Point3::new(0.0, 1.5, 7.0));
        assert_eq!(p, pi0());
        let base = canonicalize_plane([0.0, 1.0, 0.0, -2.0]).unwrap();
        let p = plane_through_point_parallel(&base, &Point3::new(3.0, 0.5, 9.0));
        assert_eq!(p.coefficients(), [0.0, 1.0, 0.0, -0.5]);
    }

    #[test]
    fn canonicalize_examples() {
        assert_eq!(canonicalize_plane([0.0, 2.0, 0.0, -3.0]).unwrap().coefficients(), [0.0, 1.0, 0.0, -1.5]);
        assert_eq!(canonicalize_plane([0.0, -1.0, 0.0, 1.5]).unwrap().coefficients(), [0.0, 1.0, 0.0, -1.5]);
        assert_eq!(canonicalize_plane([1.0, 0.0, 0.0, 5.0]), Err(Error::HorizontalNormal));
        assert_eq!(canonicalize_plane([0.0, 0.0, 0.0, 5.0]), Err(Error::ZeroNormal));
    }

    #[test]
    fn bad_camera() {
        assert!(CameraModel::new(0.0, 1.0, 0.0, 0.0).is_err());
        assert!(CameraModel::new(1.0, -1.0, 0.0, 0.0).is_err());
        let skew = Matrix3::new(1.0, 0.1, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0);
        assert!(cam0().with_extrinsics(skew, Vector3::zeros()).is_err());
    }

    #[test]
    fn extrinsics_round_trip() {
        let rot = nalgebra::Rotation3::from_euler_angles(0.02, -0.1, 0.05).into_inner();
        let cam = cam0().with_extrinsics(rot, Vector3::new(0.1, 1.2, 0.3)).unwrap();
        let plane = canonicalize_plane([0.01, 1.0, 0.03, -0.2]).unwrap();
        let px = Pixel::new(700.0, 610.0);
        let p = backproject_to_plane(&px, &cam, &plane).unwrap();
        let back = cam.project(&p).unwrap();
        assert!(back.distance(&px) < 1e-9);
        assert!(plane.signed_distance(&p).abs() < 1e-9);
    }

    fn arb_plane() -> impl Strategy<Value = GroundPlane> {
        (-0.5f64..0.5, 0.5f64..1.0, -0.5f64..0.5, -3.0f64..-0.5)
            .prop_filter_map("road plane", |(a, b, c, d)| {
                let p = canonicalize_plane([a, b, c, d]).ok()?;
                (p.b() > 0.5).then_some(p)
            })
    }

    proptest! {
        #[test]
        fn round_trip_below_horizon(plane in arb_plane(), u in 0.0f64..1280.0, v in 0.0f64..800.0) {
            let cam = cam0();
            let px = Pixel::new(u, v);
            if let Ok(p) = backproject_to_plane(&px, &cam, &plane) {
                let back = project(&p, &cam).unwrap();
                prop_assert!(back.distance(&px) < 1e-6);
                prop_assert!(plane.signed_distance(&p).abs() < 1e-9);
            }
        }

        #[test]
        fn canonicalize_idempotent(a in -5.0f64..5.0, b in -5.0f64..5.0, c in -5.0f64..5.0, d in -5.0f64..5.0) {
            if let Ok(p) = canonicalize_plane([a, b, c, d]) {
                let q = canonicalize_plane(p.coefficients()).unwrap();
                let (pc, qc) = (p.coefficients(), q.coefficients());
                for i in 0..4 {
                    prop_assert!((pc[i] - qc[i]).abs() <= 1e-15);
                }
                let n = p.a() * p.a() + p.b() * p.b() + p.c() * p.c();
                prop_assert!((n - 1.0).abs() < 1e-12);
                prop_assert!(p.b() > 0.0);
            }
        }

        #[test]
        fn doubling_focal_doubles_offset(x in -5.0f64..5.0, y in -5.0f64..5.0, z in 0.5f64..50.0) {
            let c1 = CameraModel::new(800.0, 900.0, 640.0, 400.0).unwrap();
            let c2 = CameraModel::new(1600.0, 900.0, 640.0, 400.0).unwrap();
            let p = Point3::new(x, y, z);
            let a = c1.project(&p).unwrap();
            let b = c2.project(&p).unwrap();
            prop_assert!((b.u - 640.0 - 2.0 * (a.u - 640.0)).abs() <= 1e-12 * b.u.abs());
            prop_assert_eq!(a.v, b.v);
        }
    }
}
