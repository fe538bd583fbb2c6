//! Sequence directory layout:
//!
//! ```text
//! calib.txt
//! detections.csv      frame,id,u1,v1,u2,v2,u3,v3,h_px
//! depth/NNNNNN.msr    one channel
//! flow/NNNNNN.msr     two channels, frame t -> t+1; optional on the last frame
//! truth/              optional, see `eval`
//! ```
//!
//! Detection vertices are the near-left, near-right and far-right bottom
//! corners as seen from the camera.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use surround_core::{BoxDetection, EstimatorConfig, FrameBundle, Pixel};

use crate::calib::{read_calibration, Calibration};
use crate::error::{csv_err, io_err, Error, Result};
use crate::msr;

pub const CALIB_FILE: &str = "calib.txt";
pub const DETECTIONS_FILE: &str = "detections.csv";
pub const DEPTH_DIR: &str = "depth";
pub const FLOW_DIR: &str = "flow";
pub const TRUTH_DIR: &str = "truth";

pub fn frame_file_name(frame: u32) -> String {
    format!("{frame:06}.msr")
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DetectionRecord {
    pub frame: u32,
    pub id: u32,
    pub u1: f64,
    pub v1: f64,
    pub u2: f64,
    pub v2: f64,
    pub u3: f64,
    pub v3: f64,
    pub h_px: f64,
}

impl From<&BoxDetection> for DetectionRecord {
    fn from(d: &BoxDetection) -> Self {
        Self {
            frame: d.frame_id,
            id: d.vehicle_id,
            u1: d.b1.u,
            v1: d.b1.v,
            u2: d.b2.u,
            v2: d.b2.v,
            u3: d.b3.u,
            v3: d.b3.v,
            h_px: d.h_px,
        }
    }
}

impl DetectionRecord {
    pub fn to_detection(&self) -> surround_core::Result<BoxDetection> {
        BoxDetection::new(
            self.frame,
            self.id,
            Pixel::new(self.u1, self.v1),
            Pixel::new(self.u2, self.v2),
            Pixel::new(self.u3, self.v3),
            self.h_px,
        )
    }
}

pub fn read_detections(path: &Path) -> Result<Vec<BoxDetection>> {
    let mut rdr = csv::Reader::from_path(path).map_err(csv_err(path))?;
    let mut out = Vec::new();
    for (i, rec) in rdr.deserialize::<DetectionRecord>().enumerate() {
        let rec = rec.map_err(csv_err(path))?;
        let det = rec
            .to_detection()
            .map_err(|e| Error::Parse { path: path.to_path_buf(), line: i + 2, msg: e.to_string() })?;
        out.push(det);
    }
    Ok(out)
}

pub fn write_detections(path: &Path, detections: &[BoxDetection]) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(csv_err(path))?;
    if detections.is_empty() {
        w.write_record(["frame", "id", "u1", "v1", "u2", "v2", "u3", "v3", "h_px"]).map_err(csv_err(path))?;
    }
    for d in detections {
        w.serialize(DetectionRecord::from(d)).map_err(csv_err(path))?;
    }
    w.flush().map_err(io_err(path))
}

/// Frame ids with a `NNNNNN.msr` file in `dir`, sorted.
fn list_frames(dir: &Path) -> Result<Vec<u32>> {
    let mut ids = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name();
        let Some(stem) = name.to_str().and_then(|n| n.strip_suffix(".msr")) else {
            continue;
        };
        if stem.len() == 6 && stem.bytes().all(|b| b.is_ascii_digit()) {
            ids.push(stem.parse().unwrap());
        }
    }
    ids.sort_unstable();
    Ok(ids)
}

/// A validated sequence directory. Rasters are read lazily by
/// [`Sequence::frames`].
#[derive(Debug, Clone)]
pub struct Sequence {
    dir: PathBuf,
    frame_ids: Vec<u32>,
    detections: BTreeMap<u32, Vec<BoxDetection>>,
    width: usize,
    height: usize,
}

/// Reads the calibration of a sequence directory.
pub fn read_sequence_calibration(dir: &Path) -> Result<Calibration> {
    read_calibration(&dir.join(CALIB_FILE))
}

/// Opens `dir` and validates its layout and every raster header against the
/// configured image size.
pub fn load_sequence(dir: &Path, config: &EstimatorConfig) -> Result<Sequence> {
    let (width, height) = (config.image_width, config.image_height);
    let depth_dir = dir.join(DEPTH_DIR);
    let flow_dir = dir.join(FLOW_DIR);
    let frame_ids = list_frames(&depth_dir)?;
    if let Some(&first) = frame_ids.first() {
        for (i, &id) in frame_ids.iter().enumerate() {
            let expected = first + i as u32;
            if id != expected {
                return Err(Error::NonContiguousFrameIds { expected, found: id });
            }
        }
    }
    let flow_ids = if flow_dir.exists() { list_frames(&flow_dir)? } else { Vec::new() };
    for (i, &id) in frame_ids.iter().enumerate() {
        msr::read_header(&depth_dir.join(frame_file_name(id)))?.expect(
            &depth_dir.join(frame_file_name(id)),
            width,
            height,
            1,
        )?;
        let last = i + 1 == frame_ids.len();
        if flow_ids.binary_search(&id).is_ok() {
            let p = flow_dir.join(frame_file_name(id));
            msr::read_header(&p)?.expect(&p, width, height, 2)?;
        } else if !last {
            return Err(Error::MissingFlow(id));
        }
    }
    if let Some(&extra) = flow_ids.iter().find(|id| frame_ids.binary_search(id).is_err()) {
        return Err(Error::Config(format!("flow frame {extra} has no depth raster")));
    }

    let det_path = dir.join(DETECTIONS_FILE);
    let mut detections: BTreeMap<u32, Vec<BoxDetection>> = BTreeMap::new();
    if det_path.exists() {
        for d in read_detections(&det_path)? {
            if frame_ids.binary_search(&d.frame_id).is_err() {
                return Err(Error::Config(format!("{}: detection for unknown frame {}", det_path.display(), d.frame_id)));
            }
            detections.entry(d.frame_id).or_default().push(d);
        }
    }
    Ok(Sequence { dir: dir.to_path_buf(), frame_ids, detections, width, height })
}

impl Sequence {
    pub fn dir(&self) -> &Path {
        &self.dir
    }

    pub fn frame_ids(&self) -> &[u32] {
        &self.frame_ids
    }

    pub fn len(&self) -> usize {
        self.frame_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.frame_ids.is_empty()
    }

    pub fn detections(&self, frame: u32) -> &[BoxDetection] {
        self.detections.get(&frame).map(Vec::as_slice).unwrap_or(&[])
    }

    pub fn load_frame(&self, frame: u32) -> Result<FrameBundle> {
        let name = frame_file_name(frame);
        let depth = msr::read_depth(&self.dir.join(DEPTH_DIR).join(&name), self.width, self.height)?;
        let flow_path = self.dir.join(FLOW_DIR).join(&name);
        let flow = if flow_path.exists() { Some(msr::read_flow(&flow_path, self.width, self.height)?) } else { None };
        Ok(FrameBundle { frame_id: frame, depth, flow, detections: self.detections(frame).to_vec() })
    }

    /// Bundles in frame order, one raster pair in memory at a time.
    pub fn frames(&self) -> impl Iterator<Item = Result<FrameBundle>> + '_ {
        self.frame_ids.iter().map(|&id| self.load_frame(id))
    }
}
