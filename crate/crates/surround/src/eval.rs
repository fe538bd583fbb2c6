//! Estimate-vs-truth evaluation. Vehicles are matched by `(frame, id)`.
//!
//! Truth directory files:
//!
//! ```text
//! ego_truth.csv       frame,ego_vx_kmh,ego_vz_kmh
//! vehicles_truth.csv  frame,id,x,y,z,yaw_deg,vax_kmh,vaz_kmh
//! plane_truth.csv     frame,a,b,c,d            (optional)
//! ```

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use surround_core::metrics::{
    aos_metric, error_stats, position_metrics, ErrorStats, PositionMetrics, PositionPair, LATERAL_INVERSE_MIN_ABS_X,
};

use crate::error::Result;
use crate::report::{
    read_csv, read_ego_records, read_plane_records, read_vehicle_records, EgoRecord, PlaneRecord, VehicleRecord,
    EGO_FILE, PLANE_FILE, VEHICLES_FILE,
};

pub const EGO_TRUTH_FILE: &str = "ego_truth.csv";
pub const VEHICLES_TRUTH_FILE: &str = "vehicles_truth.csv";
pub const PLANE_TRUTH_FILE: &str = "plane_truth.csv";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EgoTruth {
    pub frame: u32,
    pub ego_vx_kmh: f64,
    pub ego_vz_kmh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VehicleTruth {
    pub frame: u32,
    pub id: u32,
    pub x: f64,
    pub y: f64,
    pub z: f64,
    pub yaw_deg: f64,
    pub vax_kmh: f64,
    pub vaz_kmh: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PlaneTruth {
    pub frame: u32,
    pub a: f64,
    pub b: f64,
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Truth {
    pub ego: Vec<EgoTruth>,
    pub vehicles: Vec<VehicleTruth>,
    pub plane: Vec<PlaneTruth>,
}

impl Truth {
    pub fn read(dir: &Path) -> Result<Self> {
        let plane_path = dir.join(PLANE_TRUTH_FILE);
        Ok(Self {
            ego: read_csv(&dir.join(EGO_TRUTH_FILE))?,
            vehicles: read_csv(&dir.join(VEHICLES_TRUTH_FILE))?,
            plane: if plane_path.exists() { read_csv(&plane_path)? } else { Vec::new() },
        })
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct Estimates {
    pub ego: Vec<EgoRecord>,
    pub vehicles: Vec<VehicleRecord>,
    pub plane: Vec<PlaneRecord>,
}

impl Estimates {
    pub fn read(dir: &Path) -> Result<Self> {
        let plane_path = dir.join(PLANE_FILE);
        Ok(Self {
            ego: read_ego_records(&dir.join(EGO_FILE))?,
            vehicles: read_vehicle_records(&dir.join(VEHICLES_FILE))?,
            plane: if plane_path.exists() { read_plane_records(&plane_path)? } else { Vec::new() },
        })
    }
}

/// Evaluation summary. Any group without matched pairs is `None`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsReport {
    pub position: Option<PositionMetrics>,
    pub aos: Option<f64>,
    pub aos_pairs: usize,
    /// Ego longitudinal speed, km/h.
    pub ego: Option<ErrorStats>,
    pub ego_lateral: Option<ErrorStats>,
    /// Surrounding-vehicle longitudinal absolute speed, km/h.
    pub surround: Option<ErrorStats>,
    pub surround_lateral: Option<ErrorStats>,
    /// Largest absolute coefficient error over matched plane frames.
    pub plane_max_error: Option<f64>,
}

pub fn evaluate(est: &Estimates, truth: &Truth) -> MetricsReport {
    let ego_truth: BTreeMap<u32, &EgoTruth> = truth.ego.iter().map(|t| (t.frame, t)).collect();
    let veh_truth: BTreeMap<(u32, u32), &VehicleTruth> = truth.vehicles.iter().map(|t| ((t.frame, t.id), t)).collect();

    let mut ego_long = Vec::new();
    let mut ego_lat = Vec::new();
    for e in &est.ego {
        if let (Some(t), Some(vx), Some(vz)) = (ego_truth.get(&e.frame), e.ego_vx_kmh, e.ego_vz_kmh) {
            ego_long.push(vz - t.ego_vz_kmh);
            ego_lat.push(vx - t.ego_vx_kmh);
        }
    }

    let mut positions = Vec::new();
    let mut yaws = Vec::new();
    let mut surround_long = Vec::new();
    let mut surround_lat = Vec::new();
    for v in &est.vehicles {
        let Some(t) = veh_truth.get(&(v.frame, v.id)) else { continue };
        if let (Some(x), Some(z)) = (v.x, v.z) {
            positions.push(PositionPair { estimate_x: x, estimate_z: z, truth_x: t.x, truth_z: t.z });
        }
        if let Some(yaw) = v.yaw_deg {
            yaws.push((yaw.to_radians(), t.yaw_deg.to_radians()));
        }
        if let Some(vz) = v.vaz_kmh {
            surround_long.push(vz - t.vaz_kmh);
        }
        if let Some(vx) = v.vax_kmh {
            surround_lat.push(vx - t.vax_kmh);
        }
    }

    let plane_truth: BTreeMap<u32, &PlaneTruth> = truth.plane.iter().map(|t| (t.frame, t)).collect();
    let plane_max_error = est
        .plane
        .iter()
        .filter_map(|p| {
            let t = plane_truth.get(&p.frame)?;
            Some([p.a - t.a, p.b - t.b, p.c - t.c, p.d - t.d].iter().fold(0.0f64, |m, e| m.max(e.abs())))
        })
        .reduce(f64::max);

    MetricsReport {
        position: position_metrics(&positions).ok(),
        aos: aos_metric(&yaws).ok(),
        aos_pairs: yaws.len(),
        ego: error_stats(ego_long).ok(),
        ego_lateral: error_stats(ego_lat).ok(),
        surround: error_stats(surround_long).ok(),
        surround_lateral: error_stats(surround_lat).ok(),
        plane_max_error,
    }
}

pub fn evaluate_dirs(estimates: &Path, truth: &Path) -> Result<MetricsReport> {
    Ok(evaluate(&Estimates::read(estimates)?, &Truth::read(truth)?))
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(|| "nan".to_string(), |v| v.to_string())
}

fn stats(out: &mut Vec<(String, String)>, prefix: &str, unit: &str, s: Option<ErrorStats>) {
    out.push((format!("{prefix}_pairs"), s.map_or(0, |s| s.count).to_string()));
    out.push((format!("{prefix}_mae_{unit}"), opt(s.map(|s| s.mae))));
    out.push((format!("{prefix}_rmse_{unit}"), opt(s.map(|s| s.rmse))));
}

impl MetricsReport {
    /// `key=value` pairs in a fixed order; unavailable values print `nan`.
    pub fn key_values(&self) -> Vec<(String, String)> {
        let mut out = Vec::new();
        let p = self.position;
        stats(&mut out, "lateral", "m", p.map(|p| p.lateral));
        stats(&mut out, "lateral_inverse", "inv_m", p.and_then(|p| p.lateral_inverse));
        out.push(("lateral_inverse_min_abs_x_m".into(), LATERAL_INVERSE_MIN_ABS_X.to_string()));
        stats(&mut out, "longitudinal", "m", p.map(|p| p.longitudinal));
        stats(&mut out, "longitudinal_inverse", "inv_m", p.and_then(|p| p.longitudinal_inverse));
        out.push(("aos_pairs".into(), self.aos_pairs.to_string()));
        out.push(("aos_pct".into(), opt(self.aos)));
        stats(&mut out, "ego", "kmh", self.ego);
        stats(&mut out, "ego_lateral", "kmh", self.ego_lateral);
        stats(&mut out, "surround", "kmh", self.surround);
        stats(&mut out, "surround_lateral", "kmh", self.surround_lateral);
        out.push(("plane_max_abs_error".into(), opt(self.plane_max_error)));
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn self_comparison_is_zero() {
        let truth = Truth {
            ego: vec![EgoTruth { frame: 0, ego_vx_kmh: 0.0, ego_vz_kmh: 36.0 }],
            vehicles: vec![VehicleTruth { frame: 0, id: 3, x: 1.0, y: 1.0, z: 12.0, yaw_deg: 10.0, vax_kmh: 0.0, vaz_kmh: 54.0 }],
            plane: vec![PlaneTruth { frame: 0, a: 0.0, b: 1.0, c: 0.0, d: -1.5 }],
        };
        let est = Estimates {
            ego: vec![EgoRecord { frame: 0, ego_vx_kmh: Some(0.0), ego_vz_kmh: Some(36.0), confidence: "ok".into() }],
            vehicles: vec![
                VehicleRecord {
                    frame: 0,
                    id: 3,
                    x: Some(1.0),
                    y: Some(1.0),
                    z: Some(12.0),
                    yaw_deg: Some(10.0),
                    vax_kmh: Some(0.0),
                    vaz_kmh: Some(54.0),
                    confidence: "ok".into(),
                },
                // unmatched id is ignored
                VehicleRecord {
                    frame: 0,
                    id: 9,
                    x: Some(5.0),
                    y: None,
                    z: Some(5.0),
                    yaw_deg: None,
                    vax_kmh: None,
                    vaz_kmh: None,
                    confidence: "no_flow".into(),
                },
            ],
            plane: vec![PlaneRecord { frame: 0, a: 0.0, b: 1.0, c: 0.0, d: -1.5, updated: 1 }],
        };
        let m = evaluate(&est, &truth);
        let p = m.position.unwrap();
        assert_eq!((p.lateral.mae, p.longitudinal.rmse, p.lateral.count), (0.0, 0.0, 1));
        assert_eq!(m.aos, Some(100.0));
        assert_eq!(m.ego.unwrap().rmse, 0.0);
        assert_eq!(m.surround.unwrap().mae, 0.0);
        assert_eq!(m.plane_max_error, Some(0.0));
        let kv = m.key_values();
        assert!(kv.iter().any(|(k, v)| k == "aos_pct" && v == "100"));
    }

    #[test]
    fn empty_inputs_give_nan() {
        let m = evaluate(&Estimates::default(), &Truth::default());
        assert!(m.position.is_none() && m.ego.is_none() && m.aos.is_none());
        assert!(m.key_values().iter().any(|(k, v)| k == "ego_mae_kmh" && v == "nan"));
    }
}
