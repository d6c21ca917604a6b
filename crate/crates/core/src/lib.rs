//! Shortest path maps over polygonal scenes.
//!
//! [`engine::build_spm`] propagates distance cones from sources and obstacle
//! vertices over a raster, producing per-pixel parents and geodesic
//! distances. [`query`] answers distance, path and isoline requests against
//! the finished map, [`oracle`] recomputes the same field exactly from a
//! visibility graph, and [`io`] handles scene documents, the binary map
//! format and image export.

pub mod engine;
pub mod geometry;
pub mod io;
pub mod oracle;
pub mod query;
pub mod scenes;

pub use engine::{build_spm, EngineConfig, EngineError, SourceSpec, SpmResult};
pub use geometry::{Point2, Polygon, Rect, Scene, Segment2};
