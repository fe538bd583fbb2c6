//! `MSR1` binary rasters: 4-byte magic, `width`, `height`, `channels` as
//! little-endian `u32`, then row-major little-endian `f32` samples with
//! channels interleaved.

use std::fs;
use std::io::Read;
use std::path::Path;

use surround_core::{DepthRaster, FlowRaster};

use crate::error::{io_err, Error, Result};

pub const MAGIC: &[u8; 4] = b"MSR1";
pub const HEADER_LEN: u64 = 16;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RasterHeader {
    pub width: u32,
    pub height: u32,
    pub channels: u32,
}

impl RasterHeader {
    pub fn file_len(&self) -> u64 {
        HEADER_LEN + 4 * self.width as u64 * self.height as u64 * self.channels as u64
    }

    fn describe(&self) -> String {
        format!("{}x{}x{}", self.width, self.height, self.channels)
    }

    /// Errors unless the header matches the expected shape.
    pub fn expect(&self, path: &Path, width: usize, height: usize, channels: u32) -> Result<()> {
        let want = RasterHeader { width: width as u32, height: height as u32, channels };
        if *self != want {
            return Err(Error::DimensionMismatch {
                path: path.to_path_buf(),
                expected: want.describe(),
                found: self.describe(),
            });
        }
        Ok(())
    }
}

fn parse_header(path: &Path, bytes: &[u8]) -> Result<RasterHeader> {
    if bytes.len() < 4 || &bytes[..4] != MAGIC {
        return Err(Error::BadMagic { path: path.to_path_buf() });
    }
    if (bytes.len() as u64) < HEADER_LEN {
        return Err(Error::ShortRead { path: path.to_path_buf(), expected: HEADER_LEN, found: bytes.len() as u64 });
    }
    let word = |i: usize| u32::from_le_bytes(bytes[4 + 4 * i..8 + 4 * i].try_into().unwrap());
    Ok(RasterHeader { width: word(0), height: word(1), channels: word(2) })
}

/// Reads and checks only the header, plus the file length against it.
pub fn read_header(path: &Path) -> Result<RasterHeader> {
    let mut f = fs::File::open(path).map_err(io_err(path))?;
    let mut buf = Vec::with_capacity(HEADER_LEN as usize);
    f.by_ref().take(HEADER_LEN).read_to_end(&mut buf).map_err(io_err(path))?;
    let header = parse_header(path, &buf)?;
    let len = f.metadata().map_err(io_err(path))?.len();
    check_len(path, &header, len)?;
    Ok(header)
}

fn check_len(path: &Path, header: &RasterHeader, found: u64) -> Result<()> {
    let expected = header.file_len();
    if found < expected {
        return Err(Error::ShortRead { path: path.to_path_buf(), expected, found });
    }
    if found > expected {
        return Err(Error::TrailingBytes { path: path.to_path_buf(), expected, found });
    }
    Ok(())
}

/// Reads a raster file into its header and samples.
pub fn read_raster(path: &Path) -> Result<(RasterHeader, Vec<f32>)> {
    let bytes = fs::read(path).map_err(io_err(path))?;
    let header = parse_header(path, &bytes)?;
    check_len(path, &header, bytes.len() as u64)?;
    let data = bytes[HEADER_LEN as usize..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((header, data))
}

pub fn encode_raster(width: usize, height: usize, channels: u32, data: &[f32]) -> Vec<u8> {
    debug_assert_eq!(data.len(), width * height * channels as usize);
    let mut out = Vec::with_capacity(HEADER_LEN as usize + 4 * data.len());
    out.extend_from_slice(MAGIC);
    for w in [width as u32, height as u32, channels] {
        out.extend_from_slice(&w.to_le_bytes());
    }
    for v in data {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn write_raster(path: &Path, width: usize, height: usize, channels: u32, data: &[f32]) -> Result<()> {
    fs::write(path, encode_raster(width, height, channels, data)).map_err(io_err(path))
}

pub fn read_depth(path: &Path, width: usize, height: usize) -> Result<DepthRaster> {
    let (header, data) = read_raster(path)?;
    header.expect(path, width, height, 1)?;
    Ok(DepthRaster::new(width, height, data)?)
}

pub fn read_flow(path: &Path, width: usize, height: usize) -> Result<FlowRaster> {
    let (header, data) = read_raster(path)?;
    header.expect(path, width, height, 2)?;
    Ok(FlowRaster::new(width, height, data)?)
}

pub fn write_depth(path: &Path, depth: &DepthRaster) -> Result<()> {
    write_raster(path, depth.width(), depth.height(), 1, depth.values())
}

pub fn write_flow(path: &Path, flow: &FlowRaster) -> Result<()> {
    write_raster(path, flow.width(), flow.height(), 2, flow.data())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip_and_errors() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("a.msr");
        let depth = DepthRaster::new(3, 2, vec![0.0, 1.5, 2.0, 3.0, f32::NAN, 7.25]).unwrap();
        write_depth(&p, &depth).unwrap();
        assert_eq!(fs::metadata(&p).unwrap().len(), 16 + 24);
        let back = read_depth(&p, 3, 2).unwrap();
        assert_eq!(back.values()[..4], depth.values()[..4]);
        assert!(back.values()[4].is_nan());
        assert_eq!(read_header(&p).unwrap(), RasterHeader { width: 3, height: 2, channels: 1 });

        assert!(matches!(read_depth(&p, 4, 2), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(read_flow(&p, 3, 2), Err(Error::DimensionMismatch { .. })));

        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 1]).unwrap();
        assert!(matches!(read_depth(&p, 3, 2), Err(Error::ShortRead { .. })));
        assert!(matches!(read_header(&p), Err(Error::ShortRead { .. })));
        fs::write(&p, &bytes[..10]).unwrap();
        assert!(matches!(read_depth(&p, 3, 2), Err(Error::ShortRead { .. })));

        let mut extra = bytes.clone();
        extra.push(0);
        fs::write(&p, &extra).unwrap();
        assert!(matches!(read_depth(&p, 3, 2), Err(Error::TrailingBytes { .. })));

        let mut bad = bytes;
        bad[3] = b'2';
        fs::write(&p, &bad).unwrap();
        assert!(matches!(read_depth(&p, 3, 2), Err(Error::BadMagic { .. })));
    }

    #[test]
    fn flow_interleaving() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.msr");
        let mut flow = FlowRaster::zeros(2, 2);
        flow.set(1, 0, (0.5, -2.0));
        write_flow(&p, &flow).unwrap();
        let bytes = fs::read(&p).unwrap();
        assert_eq!(&bytes[16 + 8..16 + 12], &0.5f32.to_le_bytes());
        assert_eq!(&bytes[16 + 12..16 + 16], &(-2.0f32).to_le_bytes());
        assert_eq!(read_flow(&p, 2, 2).unwrap(), flow);
    }
}
