//! Monocular ego-motion and surrounding-vehicle state estimation.
//!
//! The crate consumes precomputed per-frame perception outputs (a normalized
//! depth raster, a dense optical-flow raster and 3D box detections given as
//! image-space bottom vertices) and estimates:
//!
//! - the road plane in the camera frame, corrected every frame from nine
//!   depth samples with RANSAC and a three-way deviation gate,
//! - the ego ground velocity from flow lifted onto the road plane,
//! - each surrounding vehicle's box, position, yaw, relative and absolute
//!   velocity.
//!
//! Coordinates follow the camera convention used throughout: X right
//! (lateral), Y down, Z forward (longitudinal), meters.
//!
//! The crate is `no_std` and only needs an allocator. File formats, the
//! sequence loop, reporting and the synthetic scene oracle live in the
//! `surround` crate.
#![no_std]
#![deny(rust_2018_idioms, unsafe_code)]

extern crate alloc;
#[cfg(test)]
extern crate std;

pub mod box3d;
pub mod estimator;
pub mod geometry;
pub mod ground_plane;
pub mod metrics;
pub mod raster;
pub mod velocity;

pub use box3d::{BoxDetection, Box3D, FaceQuad, FacePixel};
pub use estimator::{EstimatorConfig, FrameBundle, FrameReport, SequenceEstimator};
pub use geometry::{CameraModel, GroundPlane, Pixel, Plane, WorldPoint};
pub use ground_plane::{DepthScale, GateThresholds, PlaneState, RansacParams, RoadSamplePattern};
pub use raster::{DepthRaster, FlowRaster};
pub use velocity::{EgoRoi, EgoVelocity, LateralGeometry, SurroundVelocity};

/// Meters per second to kilometers per hour.
pub const MPS_TO_KMH: f64 = 3.6;

/// Errors produced by the estimation core.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("point is behind the camera")]
    PointBehindCamera,
    #[error("viewing ray is parallel to the plane")]
    RayParallelToPlane,
    #[error("ray-plane intersection is behind the camera")]
    IntersectionBehindCamera,
    #[error("plane normal is zero")]
    ZeroNormal,
    #[error("plane normal is horizontal, not a road plane")]
    HorizontalNormal,
    #[error("invalid camera model: {0}")]
    InvalidCamera(&'static str),
    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),
    #[error("only {0} road points survived, need at least 3")]
    InsufficientRoadPoints(usize),
    #[error("too few points for a plane fit")]
    TooFewPoints,
    #[error("degenerate geometry")]
    DegenerateGeometry,
    #[error("initial plane offset is zero, relative gate undefined")]
    ZeroInitialOffset,
    #[error("box footprint is degenerate (collinear bottom vertices)")]
    NonConvexFootprint,
    #[error("camera is inside the box footprint")]
    CameraInsideFootprint,
    #[error("no pixels in the box region")]
    EmptyRegion,
    #[error("no liftable pixels in the ego region")]
    EmptyRoi,
    #[error("every pixel lift failed")]
    AllPixelsDegenerate,
    #[error("no matched estimate/truth pairs")]
    EmptyMatchSet,
    #[error("raster dimensions do not match")]
    DimensionMismatch,
}

pub type Result<T> = core::result::Result<T, Error>;
