use std::io;
use std::path::{Path, PathBuf};

#[derive(Debug, thiserror::Error)]
#[non_exhaustive]
pub enum Error {
    #[error("{path}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{path}: not an MSR1 raster")]
    BadMagic { path: PathBuf },
    #[error("{path}: truncated raster, expected {expected} bytes, found {found}")]
    ShortRead { path: PathBuf, expected: u64, found: u64 },
    #[error("{path}: {found} bytes, expected {expected}")]
    TrailingBytes { path: PathBuf, expected: u64, found: u64 },
    #[error("{path}: raster is {found}, expected {expected}")]
    DimensionMismatch { path: PathBuf, expected: String, found: String },
    #[error("missing calibration: {0}")]
    MissingCalibration(String),
    #[error("frame ids are not contiguous: expected {expected}, found {found}")]
    NonContiguousFrameIds { expected: u32, found: u32 },
    #[error("frame {0} has no flow raster and is not the last frame")]
    MissingFlow(u32),
    #[error("{path}:{line}: {msg}")]
    Parse { path: PathBuf, line: usize, msg: String },
    #[error("{path}")]
    Csv {
        path: PathBuf,
        #[source]
        source: csv::Error,
    },
    #[error("{path}")]
    Toml {
        path: PathBuf,
        #[source]
        source: toml::de::Error,
    },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Core(#[from] surround_core::Error),
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn io_err(path: &Path) -> impl FnOnce(io::Error) -> Error + '_ {
    move |source| Error::Io { path: path.to_path_buf(), source }
}

pub(crate) fn csv_err(path: &Path) -> impl FnOnce(csv::Error) -> Error + '_ {
    move |source| Error::Csv { path: path.to_path_buf(), source }
}
