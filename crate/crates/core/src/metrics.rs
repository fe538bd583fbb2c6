//! Evaluation metrics: MAE/RMSE, their inverse-distance variants, and the
//! matched-pair orientation similarity.

use core::f64::consts::PI;

use crate::box3d::wrap_angle;
use crate::{Error, Result};

/// Lateral inverse metrics only use pairs with `|x_true|` above this (m).
pub const LATERAL_INVERSE_MIN_ABS_X: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ErrorStats {
    pub mae: f64,
    pub rmse: f64,
    pub count: usize,
}

pub fn error_stats(errors: impl IntoIterator<Item = f64>) -> Result<ErrorStats> {
    let (mut abs, mut sq, mut n) = (0.0, 0.0, 0usize);
    for e in errors {
        abs += e.abs();
        sq += e * e;
        n += 1;
    }
    if n == 0 {
        return Err(Error::EmptyMatchSet);
    }
    Ok(ErrorStats { mae: abs / n as f64, rmse: libm::sqrt(sq / n as f64), count: n })
}

/// Estimated and true `(x, z)` of one matched vehicle observation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionPair {
    pub estimate_x: f64,
    pub estimate_z: f64,
    pub truth_x: f64,
    pub truth_z: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PositionMetrics {
    pub lateral: ErrorStats,
    pub longitudinal: ErrorStats,
    /// Over `1/|x_est| - 1/|x_true|`, pairs with `|x_true| > 0.5 m` only.
    pub lateral_inverse: Option<ErrorStats>,
    /// Over `1/z_est - 1/z_true`.
    pub longitudinal_inverse: Option<ErrorStats>,
}

pub fn position_metrics(pairs: &[PositionPair]) -> Result<PositionMetrics> {
    let lateral = error_stats(pairs.iter().map(|p| p.estimate_x - p.truth_x))?;
    let longitudinal = error_stats(pairs.iter().map(|p| p.estimate_z - p.truth_z))?;
    let lateral_inverse = error_stats(
        pairs
            .iter()
            .filter(|p| p.truth_x.abs() > LATERAL_INVERSE_MIN_ABS_X && p.estimate_x != 0.0)
            .map(|p| 1.0 / p.estimate_x.abs() - 1.0 / p.truth_x.abs()),
    )
    .ok();
    let longitudinal_inverse = error_stats(
        pairs
            .iter()
            .filter(|p| p.truth_z != 0.0 && p.estimate_z != 0.0)
            .map(|p| 1.0 / p.estimate_z - 1.0 / p.truth_z),
    )
    .ok();
    Ok(PositionMetrics { lateral, longitudinal, lateral_inverse, longitudinal_inverse })
}

/// Yaw difference folded into `[0, pi/2]`; headings are ambiguous by `pi`.
pub fn folded_yaw_difference(estimate: f64, truth: f64) -> f64 {
    let d = wrap_angle(estimate - truth).abs();
    if d > PI / 2.0 {
        PI - d
    } else {
        d
    }
}

/// Average orientation similarity in percent over `(estimate, truth)` yaw
/// pairs (radians).
pub fn aos_metric(pairs: &[(f64, f64)]) -> Result<f64> {
    if pairs.is_empty() {
        return Err(Error::EmptyMatchSet);
    }
    let sum: f64 = pairs
        .iter()
        .map(|&(e, t)| 0.5 * (1.0 + libm::cos(folded_yaw_difference(e, t))))
        .sum();
    Ok(100.0 * sum / pairs.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct VelocityMetrics {
    pub ego: ErrorStats,
    /// Longitudinal absolute speed.
    pub surround: ErrorStats,
    pub surround_lateral: Option<ErrorStats>,
}

/// `(estimate, truth)` pairs in km/h.
pub fn velocity_metrics(
    ego_pairs: &[(f64, f64)],
    surround_longitudinal: &[(f64, f64)],
    surround_lateral: &[(f64, f64)],
) -> Result<VelocityMetrics> {
    Ok(VelocityMetrics {
        ego: error_stats(ego_pairs.iter().map(|(e, t)| e - t))?,
        surround: error_stats(surround_longitudinal.iter().map(|(e, t)| e - t))?,
        surround_lateral: error_stats(surround_lateral.iter().map(|(e, t)| e - t)).ok(),
    })
}
