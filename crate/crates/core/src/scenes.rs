//! Built-in test scenes: a small corpus covering the interesting cases and
//! a generator for grid-of-squares profiling maps.
//!
//! Coordinates avoid odd multiples of 1/256 and 1/1000 so no obstacle edge
//! runs exactly through pixel centers at the usual resolutions.

use std::f64::consts::PI;

use crate::engine::SourceSpec;
use crate::geometry::{Point2, Scene, Segment2};

/// A named scene with its sources.
#[derive(Debug, Clone)]
pub struct CorpusScene {
    pub name: &'static str,
    pub scene: Scene,
    pub sources: SourceSpec,
}

fn p(x: f64, y: f64) -> Point2 {
    Point2::new(x, y)
}

fn square(cx: f64, cy: f64, half: f64) -> Vec<Point2> {
    vec![
        p(cx - half, cy - half),
        p(cx + half, cy - half),
        p(cx + half, cy + half),
        p(cx - half, cy + half),
    ]
}

fn regular(cx: f64, cy: f64, radius: f64, sides: usize, phase: f64) -> Vec<Point2> {
    (0..sides)
        .map(|k| {
            let a = phase + 2.0 * PI * k as f64 / sides as f64;
            p(cx + radius * a.cos(), cy + radius * a.sin())
        })
        .collect()
}

/// Outline of an axis-aligned polyline thickened by `half` on each side.
fn thick_path(path: &[Point2], half: f64) -> Vec<Point2> {
    let normal = |a: Point2, b: Point2| {
        let d = (b - a).normalized().expect("distinct path points");
        p(-d.y, d.x)
    };
    let n = path.len();
    let offset = |k: usize| -> Point2 {
        if k == 0 {
            normal(path[0], path[1])
        } else if k == n - 1 {
            normal(path[n - 2], path[n - 1])
        } else {
            // right-angle turns: the miter is the sum of the two normals
            normal(path[k - 1], path[k]) + normal(path[k], path[k + 1])
        }
    };
    let mut out: Vec<Point2> = (0..n).map(|k| path[k] + offset(k) * half).collect();
    out.extend((0..n).rev().map(|k| path[k] - offset(k) * half));
    out
}

pub fn empty() -> CorpusScene {
    CorpusScene {
        name: "empty",
        scene: Scene::empty(),
        sources: SourceSpec::point(p(0.13, -0.07)),
    }
}

/// A centered square of side 0.5 with the source to its left.
pub fn square_scene() -> CorpusScene {
    CorpusScene {
        name: "square",
        scene: Scene::from_vertex_lists(vec![square(0.0, 0.0, 0.25)]).expect("valid scene"),
        sources: SourceSpec::point(p(-0.75, 0.0)),
    }
}

/// One concave obstacle winding around the source, forming a square spiral
/// corridor that paths must follow outward.
pub fn spiral() -> CorpusScene {
    let path = [
        p(0.1, 0.0),
        p(0.1, -0.3),
        p(-0.4, -0.3),
        p(-0.4, 0.4),
        p(0.5, 0.4),
        p(0.5, -0.7),
        p(-0.75, -0.7),
    ];
    CorpusScene {
        name: "spiral",
        scene: Scene::from_vertex_lists(vec![thick_path(&path, 0.04)]).expect("valid scene"),
        sources: SourceSpec::point(p(-0.2, 0.1)),
    }
}

/// Thirteen assorted polygons and three point sources.
pub fn cluttered() -> CorpusScene {
    let obstacles = vec![
        regular(-0.62, 0.62, 0.16, 3, 0.3),
        regular(-0.12, 0.7, 0.13, 5, 0.1),
        square(0.42, 0.66, 0.11),
        regular(0.78, 0.18, 0.12, 6, 0.0),
        regular(-0.7, 0.05, 0.14, 4, 0.4),
        regular(-0.3, 0.22, 0.1, 7, 0.2),
        vec![
            p(0.05, 0.1),
            p(0.35, 0.05),
            p(0.38, 0.35),
            p(0.2, 0.42),
            p(0.22, 0.22),
        ],
        regular(0.62, -0.25, 0.15, 3, 1.2),
        square(-0.45, -0.38, 0.09),
        vec![p(-0.15, -0.2), p(0.3, -0.3), p(0.32, -0.22), p(-0.1, -0.12)],
        regular(0.05, -0.66, 0.14, 8, 0.15),
        regular(-0.72, -0.72, 0.1, 5, 0.5),
        vec![
            p(0.55, -0.62),
            p(0.87, -0.57),
            p(0.85, -0.85),
            p(0.7, -0.72),
        ],
    ];
    CorpusScene {
        name: "cluttered",
        scene: Scene::from_vertex_lists(obstacles).expect("valid scene"),
        sources: SourceSpec {
            points: vec![p(-0.91, 0.93), p(0.52, 0.11), p(-0.28, -0.82)],
            segments: vec![],
        },
    }
}

/// The triangle scene with a second obstacle and a vertical segment source.
pub fn segment_source() -> CorpusScene {
    CorpusScene {
        name: "segment",
        scene: Scene::from_vertex_lists(vec![
            vec![p(0.4, 0.0), p(0.7, 0.2), p(0.4, 0.4)],
            vec![p(-0.6, -0.5), p(-0.3, -0.5), p(-0.3, -0.2), p(-0.6, -0.2)],
        ])
        .expect("valid scene"),
        sources: SourceSpec {
            points: vec![],
            segments: vec![Segment2::new(p(0.0, -0.9), p(0.0, 0.9)).expect("valid segment")],
        },
    }
}

/// `n` x `n` squares, one centered in each cell of a uniform grid, each 40%
/// of the cell wide, with one source near the lower-left corner.
pub fn grid(n: usize) -> CorpusScene {
    assert!(n >= 1);
    let cell = 2.0 / n as f64;
    let half = 0.2 * cell;
    let obstacles = (0..n)
        .flat_map(|j| (0..n).map(move |i| (i, j)))
        .map(|(i, j)| {
            square(
                -1.0 + (i as f64 + 0.5) * cell,
                -1.0 + (j as f64 + 0.5) * cell,
                half,
            )
        })
        .collect();
    // In the corridor next to the lower-left corner, off every cell line.
    let source = p(-1.0 + 0.07 * cell, -1.0 + 0.11 * cell);
    CorpusScene {
        name: "grid",
        scene: Scene::from_vertex_lists(obstacles).expect("valid scene"),
        sources: SourceSpec::point(source),
    }
}

/// The six acceptance scenes.
pub fn corpus() -> Vec<CorpusScene> {
    let mut g = grid(4);
    g.name = "grid4";
    vec![
        empty(),
        square_scene(),
        spiral(),
        cluttered(),
        segment_source(),
        g,
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn corpus_scenes_are_valid() {
        for c in corpus() {
            c.sources
                .validate(&c.scene)
                .unwrap_or_else(|e| panic!("{}: {e}", c.name));
        }
        assert_eq!(cluttered().scene.obstacles().len(), 13);
        assert_eq!(grid(10).scene.vertex_count(), 400);
        assert_eq!(grid(20).scene.vertex_count(), 1600);
    }

    #[test]
    fn spiral_outline() {
        let s = spiral();
        assert_eq!(s.scene.obstacles()[0].len(), 14);
        // the corridor keeps the source and the outside apart by a long detour
        assert!(!s.scene.line_of_sight(p(-0.2, 0.1), p(0.9, 0.9)));
    }
}
