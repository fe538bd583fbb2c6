//! `calib.txt`: whitespace-separated `key= values...` tokens, one or more
//! keys per line. `#` starts a comment.
//!
//! Keys: `fx fy cx cy` (required), `R` (9 values, row-major), `T` (3),
//! `plane` (4, canonicalized on load), `k`, and the optional `width`,
//! `height` and `fps`.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use nalgebra::{Matrix3, Vector3};
use surround_core::geometry::canonicalize_plane;
use surround_core::{CameraModel, GroundPlane};

use crate::error::{io_err, Error, Result};

#[derive(Debug, Clone, PartialEq)]
pub struct Calibration {
    pub camera: CameraModel,
    pub plane: Option<GroundPlane>,
    pub k: Option<f64>,
    pub width: Option<usize>,
    pub height: Option<usize>,
    pub fps: Option<f64>,
}

const KEYS: [(&str, usize); 11] = [
    ("fx", 1),
    ("fy", 1),
    ("cx", 1),
    ("cy", 1),
    ("R", 9),
    ("T", 3),
    ("plane", 4),
    ("k", 1),
    ("width", 1),
    ("height", 1),
    ("fps", 1),
];

fn arity(key: &str) -> Option<usize> {
    KEYS.iter().find(|(k, _)| *k == key).map(|(_, n)| *n)
}

pub fn parse_calibration(path: &Path, text: &str) -> Result<Calibration> {
    let parse_err = |line: usize, msg: String| Error::Parse { path: path.to_path_buf(), line, msg };
    let mut values: Vec<(&str, Vec<f64>, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = raw.split('#').next().unwrap_or("");
        for tok in line.split_whitespace() {
            let rest = match tok.split_once('=') {
                Some((key, rest)) => {
                    if arity(key).is_none() {
                        return Err(parse_err(line_no, format!("unknown key `{key}`")));
                    }
                    if values.iter().any(|(k, _, _)| *k == key) {
                        return Err(parse_err(line_no, format!("duplicate key `{key}`")));
                    }
                    values.push((key, Vec::new(), line_no));
                    rest
                }
                None => tok,
            };
            if rest.is_empty() {
                continue;
            }
            let Some((key, vals, _)) = values.last_mut() else {
                return Err(parse_err(line_no, format!("value `{rest}` before any key")));
            };
            let v: f64 = rest.parse().map_err(|_| parse_err(line_no, format!("bad number `{rest}` for `{key}`")))?;
            vals.push(v);
        }
    }
    for (key, vals, line) in &values {
        let n = arity(key).unwrap();
        if vals.len() != n {
            return Err(parse_err(*line, format!("`{key}` takes {n} value(s), got {}", vals.len())));
        }
    }
    let get = |key: &str| values.iter().find(|(k, _, _)| *k == key).map(|(_, v, _)| v.as_slice());
    let scalar = |key: &str| get(key).map(|v| v[0]);
    let required = |key: &str| scalar(key).ok_or_else(|| Error::MissingCalibration(format!("{}: no `{key}=`", path.display())));

    let mut camera = CameraModel::new(required("fx")?, required("fy")?, required("cx")?, required("cy")?)?;
    if get("R").is_some() || get("T").is_some() {
        let r = get("R").map(Matrix3::from_row_slice).unwrap_or_else(Matrix3::identity);
        let t = get("T").map(Vector3::from_row_slice).unwrap_or_else(Vector3::zeros);
        camera = camera.with_extrinsics(r, t)?;
    }
    let plane = get("plane").map(|p| canonicalize_plane([p[0], p[1], p[2], p[3]])).transpose()?;
    let count = |key: &str| -> Result<Option<usize>> {
        scalar(key)
            .map(|v| {
                if v >= 1.0 && v.fract() == 0.0 {
                    Ok(v as usize)
                } else {
                    Err(Error::Config(format!("{}: `{key}` must be a positive integer", path.display())))
                }
            })
            .transpose()
    };
    Ok(Calibration {
        camera,
        plane,
        k: scalar("k"),
        width: count("width")?,
        height: count("height")?,
        fps: scalar("fps"),
    })
}

pub fn read_calibration(path: &Path) -> Result<Calibration> {
    let text = fs::read_to_string(path).map_err(|e| match e.kind() {
        std::io::ErrorKind::NotFound => Error::MissingCalibration(format!("{} not found", path.display())),
        _ => Error::Io { path: path.to_path_buf(), source: e },
    })?;
    parse_calibration(path, &text)
}

fn join(vals: impl IntoIterator<Item = f64>) -> String {
    vals.into_iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ")
}

pub fn format_calibration(c: &Calibration) -> String {
    let cam = &c.camera;
    let mut s = format!("fx={} fy={} cx={} cy={}\n", cam.fx(), cam.fy(), cam.cx(), cam.cy());
    let r = cam.rotation();
    let t = cam.translation();
    if *r != Matrix3::identity() || *t != Vector3::zeros() {
        let _ = writeln!(s, "R= {}", join((0..3).flat_map(|i| (0..3).map(move |j| r[(i, j)]))));
        let _ = writeln!(s, "T= {}", join(t.iter().copied()));
    }
    if let Some(p) = &c.plane {
        let _ = writeln!(s, "plane= {}", join(p.coefficients().map(|c| c + 0.0)));
    }
    if let Some(k) = c.k {
        let _ = writeln!(s, "k={k}");
    }
    if let (Some(w), Some(h)) = (c.width, c.height) {
        let _ = writeln!(s, "width={w} height={h}");
    }
    if let Some(fps) = c.fps {
        let _ = writeln!(s, "fps={fps}");
    }
    s
}

pub fn write_calibration(path: &Path, c: &Calibration) -> Result<()> {
    fs::write(path, format_calibration(c)).map_err(io_err(path))
}
