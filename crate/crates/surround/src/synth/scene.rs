//! Analytic scene: ego kinematics, cuboid vehicles on a flat road, and an
//! independent ray caster for depth and forward flow.
//!
//! World frame: the ego body frame at frame 0 (X right, Y down, Z forward)
//! with its origin at the camera center. The road is the plane
//! `y = camera.height_m`. The ego rotation center sits `mount_offset_m`
//! behind the camera and moves with constant body-frame velocity and yaw
//! rate. Pitch rotates the camera about its X axis relative to the body, so
//! the road normal in the camera frame is `(0, cos p, -sin p)`.

use nalgebra::{Matrix3, Rotation3, Vector3};
use rayon::prelude::*;
use surround_core::geometry::canonicalize_plane;
use surround_core::{BoxDetection, CameraModel, DepthRaster, FlowRaster, GroundPlane, Pixel, MPS_TO_KMH};

use super::spec::{SceneSpec, VehicleSpec};
use crate::error::Result;
use crate::eval::{EgoTruth, PlaneTruth, VehicleTruth};

/// Camera pose at one frame, camera to world.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CameraPose {
    pub center: Vector3<f64>,
    pub rotation: Matrix3<f64>,
}

impl CameraPose {
    pub fn to_camera(&self, p: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * (p - self.center)
    }

    pub fn dir_to_camera(&self, d: &Vector3<f64>) -> Vector3<f64> {
        self.rotation.transpose() * d
    }
}

/// A vehicle cuboid at one frame, world coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VehiclePose {
    pub id: u32,
    /// Center of the cuboid.
    pub center: Vector3<f64>,
    /// Heading and right unit vectors in the road plane.
    pub forward: Vector3<f64>,
    pub right: Vector3<f64>,
    pub half: Vector3<f64>,
    pub velocity: Vector3<f64>,
    pub yaw: f64,
}

impl VehiclePose {
    /// Bottom corners in detection order: near-left, near-right, far-right,
    /// far-left, with "near" the `-forward` edge.
    pub fn bottom_corners(&self) -> [Vector3<f64>; 4] {
        let down = Vector3::y();
        let base = self.center + down * self.half.y;
        let (r, f) = (self.right * self.half.x, self.forward * self.half.z);
        [base - f - r, base - f + r, base + f + r, base + f - r]
    }

    /// Ray parameter of the first hit on the cuboid, if any.
    fn intersect(&self, origin: &Vector3<f64>, dir: &Vector3<f64>) -> Option<f64> {
        let axes = [self.right, Vector3::y(), self.forward];
        let rel = origin - self.center;
        let (mut near, mut far) = (f64::NEG_INFINITY, f64::INFINITY);
        for (axis, h) in axes.iter().zip(self.half.iter()) {
            let o = axis.dot(&rel);
            let d = axis.dot(dir);
            if d.abs() < 1e-15 {
                if o.abs() > *h {
                    return None;
                }
                continue;
            }
            let (a, b) = ((-h - o) / d, (h - o) / d);
            near = near.max(a.min(b));
            far = far.min(a.max(b));
        }
        (near <= far && near > 1e-9).then_some(near)
    }
}

fn rot_y(a: f64) -> Matrix3<f64> {
    *Rotation3::from_axis_angle(&Vector3::y_axis(), a).matrix()
}

fn rot_x(a: f64) -> Matrix3<f64> {
    *Rotation3::from_axis_angle(&Vector3::x_axis(), a).matrix()
}

/// What a pixel ray sees.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Surface {
    Sky,
    Ground,
    Vehicle(usize),
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameTruth {
    pub frame: u32,
    /// Absent on the last frame.
    pub ego: Option<EgoTruth>,
    /// Only vehicles that are detected in this frame.
    pub vehicles: Vec<VehicleTruth>,
    pub plane: PlaneTruth,
}

#[derive(Debug, Clone)]
pub struct Scene {
    spec: SceneSpec,
    camera: CameraModel,
}

impl Scene {
    pub fn new(spec: SceneSpec) -> Result<Self> {
        spec.validate()?;
        let c = &spec.camera;
        let camera = CameraModel::new(c.fx, c.fy, c.cx, c.cy)?;
        Ok(Self { spec, camera })
    }

    pub fn spec(&self) -> &SceneSpec {
        &self.spec
    }

    pub fn camera(&self) -> &CameraModel {
        &self.camera
    }

    pub fn frames(&self) -> u32 {
        self.spec.frames
    }

    fn time(&self, t: u32) -> f64 {
        t as f64 / self.spec.fps
    }

    /// Camera pitch relative to the body, radians.
    pub fn pitch(&self, t: u32) -> f64 {
        let p = &self.spec.plane;
        let mut deg = p.pitch_offset_deg;
        if p.pitch_amp_deg != 0.0 {
            let phase = 2.0 * std::f64::consts::PI * t as f64 / p.pitch_period_frames + p.pitch_phase_deg.to_radians();
            deg += p.pitch_amp_deg * phase.sin();
        }
        deg.to_radians()
    }

    pub fn ego_yaw(&self, t: u32) -> f64 {
        self.spec.ego.yaw_rate_dps.to_radians() * self.time(t)
    }

    /// Rotation center position, integrating constant body velocity along
    /// the arc exactly.
    fn rotation_center(&self, t: u32) -> Vector3<f64> {
        let e = &self.spec.ego;
        let w = e.yaw_rate_dps.to_radians();
        let tt = self.time(t);
        let (s, c) = if w.abs() < 1e-12 {
            (tt, 0.0)
        } else {
            ((w * tt).sin() / w, (1.0 - (w * tt).cos()) / w)
        };
        let integrated = Matrix3::new(s, 0.0, c, 0.0, tt, 0.0, -c, 0.0, s);
        Vector3::new(0.0, 0.0, -self.spec.camera.mount_offset_m) + integrated * Vector3::new(e.lateral_mps, 0.0, e.forward_mps)
    }

    pub fn camera_pose(&self, t: u32) -> CameraPose {
        let yaw = self.ego_yaw(t);
        let heading = rot_y(yaw) * Vector3::z();
        CameraPose {
            center: self.rotation_center(t) + heading * self.spec.camera.mount_offset_m,
            rotation: rot_y(yaw) * rot_x(self.pitch(t)),
        }
    }

    fn plane_for_pitch(&self, p: f64) -> GroundPlane {
        canonicalize_plane([0.0, p.cos(), -p.sin(), -self.spec.camera.height_m]).expect("valid road plane")
    }

    /// Road plane in the camera frame at frame `t`.
    pub fn true_plane(&self, t: u32) -> GroundPlane {
        self.plane_for_pitch(self.pitch(t))
    }

    /// Road plane without the periodic pitch term.
    pub fn base_plane(&self) -> GroundPlane {
        self.plane_for_pitch(self.spec.plane.pitch_offset_deg.to_radians())
    }

    pub fn vehicle_pose(&self, v: &VehicleSpec, t: u32) -> VehiclePose {
        let tt = self.time(t);
        let yaw = v.start_pose[2].to_radians();
        let velocity = Vector3::new(v.velocity_mps[0], 0.0, v.velocity_mps[1]);
        let ground = self.spec.camera.height_m;
        VehiclePose {
            id: v.id,
            center: Vector3::new(v.start_pose[0], ground - v.height / 2.0, v.start_pose[1]) + velocity * tt,
            forward: Vector3::new(yaw.sin(), 0.0, yaw.cos()),
            right: Vector3::new(yaw.cos(), 0.0, -yaw.sin()),
            half: Vector3::new(v.size[1] / 2.0, v.height / 2.0, v.size[0] / 2.0),
            velocity,
            yaw,
        }
    }

    fn vehicle_poses(&self, t: u32) -> Vec<VehiclePose> {
        self.spec.vehicles.iter().map(|v| self.vehicle_pose(v, t)).collect()
    }

    /// Ray cast of pixel `(u, v)`. Returns the surface and the ray parameter
    /// along the direction with camera-frame `z = 1`, which is the planar
    /// depth.
    fn cast(&self, pose: &CameraPose, vehicles: &[VehiclePose], u: f64, v: f64) -> (Surface, f64) {
        let cam = &self.camera;
        let dir_c = Vector3::new((u - cam.cx()) / cam.fx(), (v - cam.cy()) / cam.fy(), 1.0);
        let dir = pose.rotation * dir_c;
        let mut best = (Surface::Sky, f64::INFINITY);
        if dir.y > 1e-12 {
            let s = (self.spec.camera.height_m - pose.center.y) / dir.y;
            if s > 0.0 {
                best = (Surface::Ground, s);
            }
        }
        for (i, veh) in vehicles.iter().enumerate() {
            if let Some(s) = veh.intersect(&pose.center, &dir) {
                if s < best.1 {
                    best = (Surface::Vehicle(i), s);
                }
            }
        }
        best
    }

    /// Depth value and forward flow of one pixel. Flow is zero for sky, for
    /// points that leave the view, and when `next` is `None`.
    fn shade(&self, pose: &CameraPose, next: Option<&CameraPose>, vehicles: &[VehiclePose], u: f64, v: f64) -> [f32; 3] {
        let (surface, s) = self.cast(pose, vehicles, u, v);
        let motion = match surface {
            Surface::Sky => return [0.0; 3],
            Surface::Ground => Vector3::zeros(),
            Surface::Vehicle(i) => vehicles[i].velocity / self.spec.fps,
        };
        let depth = (s / self.spec.k) as f32;
        let Some(next) = next else {
            return [depth, 0.0, 0.0];
        };
        let cam = &self.camera;
        let dir = pose.rotation * Vector3::new((u - cam.cx()) / cam.fx(), (v - cam.cy()) / cam.fy(), 1.0);
        let world = pose.center + dir * s + motion;
        match cam.project_camera(&next.to_camera(&world)) {
            Ok(px) => [depth, (px.u - u) as f32, (px.v - v) as f32],
            Err(_) => [depth, 0.0, 0.0],
        }
    }

    fn render_rasters(&self, t: u32, with_flow: bool) -> (DepthRaster, Option<FlowRaster>) {
        let (w, h) = (self.spec.width, self.spec.height);
        let pose = self.camera_pose(t);
        let next = (with_flow && t + 1 < self.spec.frames).then(|| self.camera_pose(t + 1));
        let vehicles = self.vehicle_poses(t);
        let mut depth = vec![0.0f32; w * h];
        let mut flow = vec![0.0f32; if next.is_some() { 2 * w * h } else { 0 }];
        let shade_row = |y: usize, drow: &mut [f32], frow: Option<&mut [f32]>| {
            let mut frow = frow;
            for x in 0..w {
                let [d, fu, fv] = self.shade(&pose, next.as_ref(), &vehicles, x as f64, y as f64);
                drow[x] = d;
                if let Some(f) = frow.as_deref_mut() {
                    f[2 * x] = fu;
                    f[2 * x + 1] = fv;
                }
            }
        };
        if next.is_some() {
            depth
                .par_chunks_mut(w)
                .zip(flow.par_chunks_mut(2 * w))
                .enumerate()
                .for_each(|(y, (d, f))| shade_row(y, d, Some(f)));
        } else {
            depth.par_chunks_mut(w).enumerate().for_each(|(y, d)| shade_row(y, d, None));
        }
        let depth = DepthRaster::new(w, h, depth).expect("rendered depth is valid");
        let flow = next.map(|_| FlowRaster::new(w, h, flow).expect("rendered flow is valid"));
        (depth, flow)
    }

    /// Planar depth of the nearest surface divided by `k`; 0 for sky.
    pub fn render_depth(&self, t: u32) -> DepthRaster {
        self.render_rasters(t, false).0
    }

    /// Exact forward flow of the visible surface point from `t` to `t + 1`.
    /// `None` on the last frame.
    pub fn render_flow(&self, t: u32) -> Option<FlowRaster> {
        self.render_rasters(t, true).1
    }

    /// Depth and flow from a single ray-casting pass.
    pub fn render_depth_and_flow(&self, t: u32) -> (DepthRaster, Option<FlowRaster>) {
        self.render_rasters(t, true)
    }

    fn in_image(&self, px: &Pixel) -> bool {
        px.u >= 0.0 && px.v >= 0.0 && px.u <= (self.spec.width - 1) as f64 && px.v <= (self.spec.height - 1) as f64
    }

    /// Projected bottom corners and the top of the first corner, or `None`
    /// when any bottom corner is behind the camera or outside the image.
    fn project_vehicle(&self, pose: &CameraPose, veh: &VehiclePose) -> Option<([Pixel; 4], Pixel)> {
        let corners = veh.bottom_corners();
        let mut px = [Pixel::new(0.0, 0.0); 4];
        for (p, c) in px.iter_mut().zip(corners.iter()) {
            *p = self.camera.project_camera(&pose.to_camera(c)).ok()?;
            if !self.in_image(p) {
                return None;
            }
        }
        let top = corners[0] - Vector3::y() * (2.0 * veh.half.y);
        let top = self.camera.project_camera(&pose.to_camera(&top)).ok()?;
        Some((px, top))
    }

    /// Noise-free detections of every vehicle fully in view.
    pub fn render_detections(&self, t: u32) -> Vec<BoxDetection> {
        let pose = self.camera_pose(t);
        self.vehicle_poses(t)
            .iter()
            .filter_map(|veh| {
                let (b, top) = self.project_vehicle(&pose, veh)?;
                BoxDetection::new(t, veh.id, b[0], b[1], b[2], b[0].v - top.v).ok()
            })
            .collect()
    }

    /// Detections with independent Gaussian noise on every vertex coordinate
    /// and on the top point used for the height.
    pub(crate) fn noisy_detections(&self, t: u32, mut noise: impl FnMut() -> f64) -> Vec<BoxDetection> {
        let pose = self.camera_pose(t);
        self.vehicle_poses(t)
            .iter()
            .filter_map(|veh| {
                let (b, top) = self.project_vehicle(&pose, veh)?;
                let mut jitter = |p: Pixel| {
                    let du = noise();
                    p.offset(du, noise())
                };
                let (b1, b2, b3, top) = (jitter(b[0]), jitter(b[1]), jitter(b[2]), jitter(top));
                BoxDetection::new(t, veh.id, b1, b2, b3, (b1.v - top.v).max(0.5)).ok()
            })
            .collect()
    }

    pub fn ego_truth(&self, t: u32) -> Option<EgoTruth> {
        if t + 1 >= self.spec.frames {
            return None;
        }
        let pose = self.camera_pose(t);
        let disp = pose.dir_to_camera(&(self.camera_pose(t + 1).center - pose.center)) * self.spec.fps * MPS_TO_KMH;
        Some(EgoTruth { frame: t, ego_vx_kmh: disp.x, ego_vz_kmh: disp.z })
    }

    pub fn vehicle_truth(&self, veh: &VehiclePose, t: u32) -> VehicleTruth {
        let pose = self.camera_pose(t);
        let center = pose.to_camera(&veh.center);
        let vel = pose.dir_to_camera(&veh.velocity) * MPS_TO_KMH;
        let yaw = surround_core::box3d::wrap_angle(veh.yaw - self.ego_yaw(t));
        VehicleTruth {
            frame: t,
            id: veh.id,
            x: center.x,
            y: center.y,
            z: center.z,
            yaw_deg: yaw.to_degrees(),
            vax_kmh: vel.x,
            vaz_kmh: vel.z,
        }
    }

    pub fn truth(&self, t: u32) -> FrameTruth {
        let pose = self.camera_pose(t);
        let vehicles = self
            .vehicle_poses(t)
            .iter()
            .filter(|veh| self.project_vehicle(&pose, veh).is_some())
            .map(|veh| self.vehicle_truth(veh, t))
            .collect();
        let [a, b, c, d] = self.true_plane(t).coefficients().map(|x| x + 0.0);
        FrameTruth { frame: t, ego: self.ego_truth(t), vehicles, plane: PlaneTruth { frame: t, a, b, c, d } }
    }
}
