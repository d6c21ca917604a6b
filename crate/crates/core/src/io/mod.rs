//! File formats: JSON scene documents, the binary map format, PPM images
//! and isoline CSV.

mod binary;
mod document;
mod image;
mod isoline_csv;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::engine::EngineError;
use crate::geometry::{GeometryError, SceneError};

pub use binary::{load_spm, read_spm, save_spm, write_spm, FORMAT_VERSION, MAGIC};
pub use document::{parse_scene, scene_to_json, SceneDocument, DOCUMENT_VERSION};
pub use image::{
    distance_image, export_distance_image, export_region_image, region_image, write_ppm, RgbImage,
};
pub use isoline_csv::{parse_isolines_csv, write_isolines_csv};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("syntax error at line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("unsupported document version {0} (expected {DOCUMENT_VERSION})")]
    Version(u32),
    #[error(transparent)]
    Scene(#[from] SceneError),
    #[error("source segment {index}: {source}")]
    SourceSegment {
        index: usize,
        #[source]
        source: GeometryError,
    },
    #[error(transparent)]
    Sources(#[from] EngineError),
    #[error("malformed map file: {0}")]
    Format(String),
    #[error("isoline csv line {line}: {message}")]
    Csv { line: usize, message: String },
    #[error("{}: {source}", path.display())]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl IoError {
    /// True for errors caused by the content of an input rather than by
    /// reading or writing it.
    pub fn is_validation(&self) -> bool {
        !matches!(self, IoError::File { .. } | IoError::Io(_))
    }

    fn at(path: &Path) -> impl FnOnce(std::io::Error) -> IoError + '_ {
        move |source| IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}
