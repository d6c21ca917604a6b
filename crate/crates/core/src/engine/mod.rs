//! Shortest path map construction.
//!
//! Each iteration selects the closest unexpanded entry as the generator,
//! stencils out the pixels it cannot see, rasterizes its distance cone over
//! the rest with a strict depth test, and relaxes the obstacle vertices it
//! can see. When no entry is left to expand the framebuffer holds, per
//! pixel, the next point on the shortest path and the geodesic distance to
//! the nearest source.

mod data;
mod framebuffer;
mod passes;
mod shadow;

use thiserror::Error;

use crate::geometry::{Point2, PointLocation, Scene, Segment2};

pub use data::{build_data_array, critical_points, DataArray, DataEntry, EntryKind, Status};
pub use framebuffer::{Framebuffer, Pixel, StencilGrid};
pub use passes::{cone_pass, distance_pass};
pub use shadow::{shadow_mask, shadow_triangles, Triangle};

use passes::TiledRaster;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error("resolution must be at least 2, got {0}")]
    Resolution(usize),
    #[error("shadow vector factor {factor} must be positive and at least the domain diameter {diameter}")]
    ShadowFactor { factor: f64, diameter: f64 },
    #[error("no sources given")]
    NoSources,
    #[error("source point {index} lies outside the domain")]
    SourceOutsideDomain { index: usize },
    #[error("source point {index} is not in free space")]
    SourceBlocked { index: usize },
    #[error("source segment {index} is not in free space")]
    SegmentBlocked { index: usize },
}

/// How sub-segment generators decide per-pixel visibility.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum SegmentVisibility {
    /// Exact line of sight from each pixel center to its foot point.
    #[default]
    ExactLos,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EngineConfig {
    pub resolution: usize,
    pub shadow_vector_factor: f64,
    pub front_facing_threshold: f64,
    pub segment_visibility: SegmentVisibility,
}

impl Default for EngineConfig {
    fn default() -> Self {
        EngineConfig {
            resolution: 256,
            shadow_vector_factor: 4.0,
            front_facing_threshold: crate::geometry::FRONT_FACING_THRESHOLD,
            segment_visibility: SegmentVisibility::ExactLos,
        }
    }
}

impl EngineConfig {
    pub fn with_resolution(resolution: usize) -> Self {
        EngineConfig {
            resolution,
            ..Default::default()
        }
    }

    pub fn validate(&self, scene: &Scene) -> Result<(), EngineError> {
        if self.resolution < 2 {
            return Err(EngineError::Resolution(self.resolution));
        }
        let diameter = scene.domain().diameter();
        if !(self.shadow_vector_factor > 0.0 && self.shadow_vector_factor >= diameter) {
            return Err(EngineError::ShadowFactor {
                factor: self.shadow_vector_factor,
                diameter,
            });
        }
        Ok(())
    }
}

/// Point and segment sources.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct SourceSpec {
    pub points: Vec<Point2>,
    pub segments: Vec<Segment2>,
}

impl SourceSpec {
    pub fn point(p: Point2) -> Self {
        SourceSpec {
            points: vec![p],
            segments: Vec::new(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty() && self.segments.is_empty()
    }

    /// Sources must lie strictly in free space; segments may graze obstacle
    /// vertices but not cross an obstacle.
    pub fn validate(&self, scene: &Scene) -> Result<(), EngineError> {
        let domain = scene.domain();
        for (index, p) in self.points.iter().enumerate() {
            if !domain.contains(*p) {
                return Err(EngineError::SourceOutsideDomain { index });
            }
            if scene.locate(*p) != PointLocation::Outside {
                return Err(EngineError::SourceBlocked { index });
            }
        }
        for (index, s) in self.segments.iter().enumerate() {
            let free = |p: Point2| domain.contains(p) && scene.locate(p) == PointLocation::Outside;
            if !free(s.a) || !free(s.b) || !scene.line_of_sight(s.a, s.b) {
                return Err(EngineError::SegmentBlocked { index });
            }
        }
        Ok(())
    }
}

/// One generator extraction.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Expansion {
    pub entry: usize,
    pub distance: f64,
}

/// A finished shortest path map.
#[derive(Debug, Clone)]
pub struct SpmResult {
    pub framebuffer: Framebuffer,
    pub data: DataArray,
    pub scene: Scene,
    pub sources: SourceSpec,
    pub config: EngineConfig,
    /// Generators in extraction order.
    pub expansions: Vec<Expansion>,
}

impl SpmResult {
    pub fn resolution(&self) -> usize {
        self.framebuffer.resolution()
    }
}

fn prepare(
    scene: &Scene,
    sources: &SourceSpec,
    config: &EngineConfig,
) -> Result<DataArray, EngineError> {
    config.validate(scene)?;
    if sources.is_empty() {
        return Err(EngineError::NoSources);
    }
    build_data_array(scene, sources)
}

/// Runs the four passes to completion.
pub fn build_spm(
    scene: &Scene,
    sources: &SourceSpec,
    config: &EngineConfig,
) -> Result<SpmResult, EngineError> {
    let mut data = prepare(scene, sources, config)?;
    let mut fb = Framebuffer::new(config.resolution, scene.domain());
    let mut raster = TiledRaster::new(&fb, scene);
    let mut expansions = Vec::with_capacity(data.n_total());
    while let Some(id) = data.select_generator() {
        let g = *data.current();
        let distance = g.distance.expect("selected entries have a distance");
        if let Some(last) = expansions.last().map(|e: &Expansion| e.distance) {
            assert!(
                distance >= last,
                "generator distance decreased: {last} -> {distance}"
            );
        }
        expansions.push(Expansion {
            entry: id,
            distance,
        });
        if let Some(reach) = raster.reach(&g) {
            let tris = if g.is_segment() {
                Vec::new()
            } else {
                shadow::visible_shadow_triangles(scene, &g, config, reach)
            };
            raster.apply(&mut fb, &g, &tris, scene, reach);
        }
        distance_pass(&mut data, scene);
    }
    debug_assert!(raster
        .blocked()
        .iter()
        .zip(fb.pixels())
        .all(|(b, p)| !b || !p.is_reached()));
    Ok(SpmResult {
        framebuffer: fb,
        data,
        scene: scene.clone(),
        sources: sources.clone(),
        config: *config,
        expansions,
    })
}

/// Same result as [`build_spm`], computed with a full stencil and an
/// untiled cone pass every iteration. Quadratic in resolution per
/// generator; meant for cross-checking.
pub fn build_spm_reference(
    scene: &Scene,
    sources: &SourceSpec,
    config: &EngineConfig,
) -> Result<SpmResult, EngineError> {
    let mut data = prepare(scene, sources, config)?;
    let mut fb = Framebuffer::new(config.resolution, scene.domain());
    let mut expansions = Vec::new();
    while let Some(id) = data.select_generator() {
        let g = *data.current();
        expansions.push(Expansion {
            entry: id,
            distance: g.distance.unwrap(),
        });
        let stencil = if g.is_segment() {
            StencilGrid::new(config.resolution)
        } else {
            shadow_mask(scene, &g, config)
        };
        cone_pass(&mut fb, &stencil, &g, scene);
        distance_pass(&mut data, scene);
    }
    Ok(SpmResult {
        framebuffer: fb,
        data,
        scene: scene.clone(),
        sources: sources.clone(),
        config: *config,
        expansions,
    })
}
