//! Sequence loop and result files.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};
use surround_core::estimator::{PlaneStatus, VehicleStatus};
use surround_core::{EstimatorConfig, FrameBundle, FrameReport, SequenceEstimator, MPS_TO_KMH};

use crate::error::{csv_err, io_err, Result};

pub const EGO_FILE: &str = "ego.csv";
pub const VEHICLES_FILE: &str = "vehicles.csv";
pub const PLANE_FILE: &str = "plane.csv";
pub const METRICS_FILE: &str = "metrics.txt";

/// The ordered per-frame results of one run.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct StateReport {
    pub frames: Vec<FrameReport>,
}

/// Runs the estimator over `frames` in order. Loader errors abort; estimation
/// failures are recorded per frame.
pub fn run_sequence(
    frames: impl IntoIterator<Item = Result<FrameBundle>>,
    config: &EstimatorConfig,
) -> Result<StateReport> {
    let mut est = SequenceEstimator::new(config.clone())?;
    let mut report = StateReport::default();
    for frame in frames {
        report.frames.push(est.step(&frame?)?);
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EgoRecord {
    pub frame: u32,
    pub ego_vx_kmh: Option<f64>,
    pub ego_vz_kmh: Option<f64>,
    pub confidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VehicleRecord {
    pub frame: u32,
    pub id: u32,
    pub x: Option<f64>,
    pub y: Option<f64>,
    pub z: Option<f64>,
    pub yaw_deg: Option<f64>,
    pub vax_kmh: Option<f64>,
    pub vaz_kmh: Option<f64>,
    pub confidence: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PlaneRecord {
    pub frame: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
    pub updated: u8,
}

fn vehicle_confidence(s: &VehicleStatus) -> &'static str {
    match s {
        VehicleStatus::Ok => "ok",
        VehicleStatus::LowConfidence => "low",
        VehicleStatus::NoFlow => "no_flow",
        VehicleStatus::NoVelocity(_) => "no_velocity",
        VehicleStatus::Failed(_) => "failed",
    }
}

impl StateReport {
    /// One record per frame with flow.
    pub fn ego_records(&self) -> Vec<EgoRecord> {
        self.frames
            .iter()
            .filter_map(|f| {
                let ego = f.ego.as_ref()?;
                Some(match ego {
                    Ok(e) => EgoRecord {
                        frame: f.frame_id,
                        ego_vx_kmh: Some(e.lateral() * MPS_TO_KMH),
                        ego_vz_kmh: Some(e.longitudinal() * MPS_TO_KMH),
                        confidence: if e.low_confidence() { "low" } else { "ok" }.into(),
                    },
                    Err(_) => EgoRecord { frame: f.frame_id, ego_vx_kmh: None, ego_vz_kmh: None, confidence: "failed".into() },
                })
            })
            .collect()
    }

    pub fn vehicle_records(&self) -> Vec<VehicleRecord> {
        self.frames
            .iter()
            .flat_map(|f| {
                f.vehicles.iter().map(move |v| {
                    let b = v.box3d.as_ref();
                    VehicleRecord {
                        frame: f.frame_id,
                        id: v.vehicle_id,
                        x: b.map(|b| b.centroid.x),
                        y: b.map(|b| b.centroid.y),
                        z: b.map(|b| b.centroid.z),
                        yaw_deg: b.map(|b| b.yaw.to_degrees()),
                        vax_kmh: v.velocity.map(|s| s.absolute_lateral * MPS_TO_KMH),
                        vaz_kmh: v.velocity.map(|s| s.absolute_longitudinal * MPS_TO_KMH),
                        confidence: vehicle_confidence(&v.status).into(),
                    }
                })
            })
            .collect()
    }

    pub fn plane_records(&self) -> Vec<PlaneRecord> {
        self.frames
            .iter()
            .map(|f| {
                // + 0.0 turns -0 into 0
                let [a, b, c, d] = f.plane.coefficients().map(|x| x + 0.0);
                PlaneRecord { frame: f.frame_id, a, b, c, d, updated: f.plane_updated as u8 }
            })
            .collect()
    }

    /// Run counters as `key=value` lines.
    pub fn summary(&self) -> Vec<(String, String)> {
        let count = |pred: &dyn Fn(&FrameReport) -> bool| self.frames.iter().filter(|f| pred(f)).count();
        let vehicles = self.vehicle_records();
        let ego = self.ego_records();
        let kv = |k: &str, v: usize| (k.to_string(), v.to_string());
        vec![
            kv("frames", self.frames.len()),
            kv("plane_accepted", count(&|f| f.plane_status == PlaneStatus::Accepted)),
            kv("plane_held", count(&|f| f.plane_status == PlaneStatus::Held)),
            kv("plane_fit_failed", count(&|f| matches!(f.plane_status, PlaneStatus::FitFailed(_)))),
            kv("plane_reinitialized", count(&|f| f.plane_status == PlaneStatus::Reinitialized)),
            kv("ego_records", ego.len()),
            kv("ego_low_confidence", ego.iter().filter(|e| e.confidence == "low").count()),
            kv("ego_failed", ego.iter().filter(|e| e.confidence == "failed").count()),
            kv("vehicle_records", vehicles.len()),
            kv("vehicle_low_confidence", vehicles.iter().filter(|v| v.confidence == "low").count()),
            kv("vehicle_without_velocity", vehicles.iter().filter(|v| v.vaz_kmh.is_none()).count()),
            kv("vehicle_failed", vehicles.iter().filter(|v| v.confidence == "failed").count()),
        ]
    }
}

const EGO_HEADER: [&str; 4] = ["frame", "ego_vx_kmh", "ego_vz_kmh", "confidence"];
const VEHICLE_HEADER: [&str; 9] = ["frame", "id", "x", "y", "z", "yaw_deg", "vax_kmh", "vaz_kmh", "confidence"];
const PLANE_HEADER: [&str; 6] = ["frame", "a", "b", "c", "d", "updated"];

/// Writes `records` with an explicit header so empty tables still get one.
pub(crate) fn write_csv<T: Serialize>(path: &Path, header: &[&str], records: &[T]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_path(path).map_err(csv_err(path))?;
    w.write_record(header).map_err(csv_err(path))?;
    for r in records {
        w.serialize(r).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

pub(crate) fn read_csv<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let mut r = csv::Reader::from_path(path).map_err(csv_err(path))?;
    r.deserialize().map(|rec| rec.map_err(csv_err(path))).collect()
}

pub fn read_ego_records(path: &Path) -> Result<Vec<EgoRecord>> {
    read_csv(path)
}

pub fn read_vehicle_records(path: &Path) -> Result<Vec<VehicleRecord>> {
    read_csv(path)
}

pub fn read_plane_records(path: &Path) -> Result<Vec<PlaneRecord>> {
    read_csv(path)
}

pub fn format_key_values(pairs: &[(String, String)]) -> String {
    pairs.iter().map(|(k, v)| format!("{k}={v}\n")).collect()
}

/// Writes the three CSVs and `metrics.txt`; `extra` is appended to the run
/// counters in `metrics.txt`.
pub fn write_report(report: &StateReport, out: &Path, extra: &[(String, String)]) -> Result<()> {
    fs::create_dir_all(out).map_err(io_err(out))?;
    write_csv(&out.join(EGO_FILE), &EGO_HEADER, &report.ego_records())?;
    write_csv(&out.join(VEHICLES_FILE), &VEHICLE_HEADER, &report.vehicle_records())?;
    write_csv(&out.join(PLANE_FILE), &PLANE_HEADER, &report.plane_records())?;
    let mut kv = report.summary();
    kv.extend_from_slice(extra);
    let path = out.join(METRICS_FILE);
    fs::write(&path, format_key_values(&kv)).map_err(io_err(&path))
}
