use std::ops::ControlFlow;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::index::EdgeGrid;
use super::{
    orient_sign, point_in_polygon, segments_properly_intersect, within_extent, GeometryError,
    Point2, PointLocation, Polygon, Segment2, EPS,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SceneError {
    #[error("domain rectangle is empty or not finite")]
    InvalidDomain,
    #[error("obstacle {index}: {source}")]
    InvalidObstacle {
        index: usize,
        #[source]
        source: GeometryError,
    },
    #[error("obstacle {obstacle} vertex {vertex} lies outside the domain")]
    VertexOutsideDomain { obstacle: usize, vertex: usize },
    #[error("obstacles {0} and {1} overlap")]
    ObstaclesOverlap(usize, usize),
}

/// Axis-aligned rectangle, closed on all sides.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Rect {
    pub min: Point2,
    pub max: Point2,
}

impl Rect {
    pub const UNIT: Rect = Rect {
        min: Point2::new(-1.0, -1.0),
        max: Point2::new(1.0, 1.0),
    };

    pub fn new(min: Point2, max: Point2) -> Result<Self, SceneError> {
        if !min.is_finite() || !max.is_finite() || min.x >= max.x || min.y >= max.y {
            return Err(SceneError::InvalidDomain);
        }
        Ok(Rect { min, max })
    }

    pub fn contains(&self, p: Point2) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }

    pub fn width(&self) -> f64 {
        self.max.x - self.min.x
    }

    pub fn height(&self) -> f64 {
        self.max.y - self.min.y
    }

    pub fn diameter(&self) -> f64 {
        self.width().hypot(self.height())
    }
}

impl Default for Rect {
    fn default() -> Self {
        Rect::UNIT
    }
}

/// An obstacle edge together with its owner.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub segment: Segment2,
    pub obstacle: usize,
    /// Edge `index` runs from vertex `index` to vertex `index + 1`.
    pub index: usize,
}

/// The polygonal domain: a bounding rectangle and disjoint obstacles.
#[derive(Debug, Clone)]
pub struct Scene {
    domain: Rect,
    obstacles: Vec<Polygon>,
    edges: Vec<Edge>,
    grid: EdgeGrid,
}

impl Scene {
    pub fn new(domain: Rect, obstacles: Vec<Polygon>) -> Result<Self, SceneError> {
        Rect::new(domain.min, domain.max)?;
        for (oi, poly) in obstacles.iter().enumerate() {
            for (vi, v) in poly.vertices().iter().enumerate() {
                if !domain.contains(*v) {
                    return Err(SceneError::VertexOutsideDomain {
                        obstacle: oi,
                        vertex: vi,
                    });
                }
            }
        }
        for i in 0..obstacles.len() {
            for j in (i + 1)..obstacles.len() {
                if polygons_overlap(&obstacles[i], &obstacles[j]) {
                    return Err(SceneError::ObstaclesOverlap(i, j));
                }
            }
        }
        let edges: Vec<Edge> = obstacles
            .iter()
            .enumerate()
            .flat_map(|(oi, poly)| {
                (0..poly.len()).map(move |ei| Edge {
                    segment: poly.edge(ei),
                    obstacle: oi,
                    index: ei,
                })
            })
            .collect();
        let grid = EdgeGrid::build(domain, &obstacles, &edges);
        Ok(Scene {
            domain,
            obstacles,
            edges,
            grid,
        })
    }

    pub fn empty() -> Self {
        Scene::new(Rect::UNIT, Vec::new()).expect("unit domain is valid")
    }

    /// Builds a scene over the unit domain from raw vertex lists.
    pub fn from_vertex_lists(lists: Vec<Vec<Point2>>) -> Result<Self, SceneError> {
        let obstacles = lists
            .into_iter()
            .enumerate()
            .map(|(index, vs)| {
                Polygon::new(vs).map_err(|source| SceneError::InvalidObstacle { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Scene::new(Rect::UNIT, obstacles)
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn obstacles(&self) -> &[Polygon] {
        &self.obstacles
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    /// Total obstacle vertex count.
    pub fn vertex_count(&self) -> usize {
        self.edges.len()
    }

    pub fn vertices(&self) -> impl Iterator<Item = (usize, usize, Point2)> + '_ {
        self.obstacles.iter().enumerate().flat_map(|(oi, p)| {
            p.vertices()
                .iter()
                .enumerate()
                .map(move |(vi, v)| (oi, vi, *v))
        })
    }

    /// Location of `p` relative to the union of obstacles.
    pub fn locate(&self, p: Point2) -> PointLocation {
        let mut result = PointLocation::Outside;
        for &oi in self.grid.polygons_near(p) {
            match point_in_polygon(p, &self.obstacles[oi as usize]) {
                PointLocation::Inside => return PointLocation::Inside,
                PointLocation::Boundary => result = PointLocation::Boundary,
                PointLocation::Outside => {}
            }
        }
        result
    }

    /// True iff `p` is strictly inside some obstacle.
    pub fn is_blocked(&self, p: Point2) -> bool {
        self.grid
            .polygons_near(p)
            .iter()
            .any(|&oi| point_in_polygon(p, &self.obstacles[oi as usize]) == PointLocation::Inside)
    }

    /// Whether the closed segment `pq` stays in free space.
    ///
    /// Grazing contacts (through a vertex, or running along an edge) do not
    /// block. A proper crossing of any obstacle edge blocks. Between
    /// consecutive boundary contacts the segment is entirely inside or
    /// entirely outside each obstacle, so one midpoint per such piece decides
    /// the rest.
    pub fn line_of_sight(&self, p: Point2, q: Point2) -> bool {
        if p == q {
            return true;
        }
        let s = Segment2 { a: p, b: q };
        let d = q - p;
        let len_sq = d.norm_sq();
        let mut touches: Vec<f64> = Vec::new();
        let crossed = self.grid.for_each_edge_along(p, q, |ei| {
            let e = &self.edges[ei as usize].segment;
            if segments_properly_intersect(&s, e) {
                return ControlFlow::Break(());
            }
            let oa = orient_sign(p, q, e.a);
            let ob = orient_sign(p, q, e.b);
            if oa == 0 && within_extent(e.a, &s) {
                touches.push((e.a - p).dot(d) / len_sq);
            }
            if ob == 0 && within_extent(e.b, &s) {
                touches.push((e.b - p).dot(d) / len_sq);
            }
            ControlFlow::Continue(())
        });
        if crossed {
            return false;
        }
        if touches.is_empty() {
            return !self.is_blocked(p.midpoint(q));
        }
        touches.push(0.0);
        touches.push(1.0);
        touches.retain(|t| (0.0..=1.0).contains(t));
        touches.sort_by(f64::total_cmp);
        touches.dedup_by(|a, b| (*a - *b).abs() <= EPS);
        touches
            .windows(2)
            .all(|w| !self.is_blocked(p.lerp(q, 0.5 * (w[0] + w[1]))))
    }
}

/// Free-function form of [`Scene::line_of_sight`].
pub fn line_of_sight(p: Point2, q: Point2, scene: &Scene) -> bool {
    scene.line_of_sight(p, q)
}

fn polygons_overlap(a: &Polygon, b: &Polygon) -> bool {
    let (amin, amax) = a.bounds();
    let (bmin, bmax) = b.bounds();
    if amax.x < bmin.x || bmax.x < amin.x || amax.y < bmin.y || bmax.y < amin.y {
        return false;
    }
    for ea in a.edges() {
        for eb in b.edges() {
            if segments_properly_intersect(&ea, &eb) {
                return true;
            }
        }
    }
    let inside = |p: &Polygon, q: &Polygon| {
        q.vertices()
            .iter()
            .any(|v| point_in_polygon(*v, p) == PointLocation::Inside)
            || q.edges()
                .any(|e| point_in_polygon(e.midpoint(), p) == PointLocation::Inside)
    };
    inside(a, b) || inside(b, a)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn square_scene() -> Scene {
        Scene::from_vertex_lists(vec![vec![
            Point2::new(-0.25, -0.25),
            Point2::new(0.25, -0.25),
            Point2::new(0.25, 0.25),
            Point2::new(-0.25, 0.25),
        ]])
        .unwrap()
    }

    #[test]
    fn line_of_sight_examples() {
        let sc = square_scene();
        assert!(sc.line_of_sight(Point2::new(-0.75, 0.0), Point2::new(0.0, 0.75)));
        assert!(!sc.line_of_sight(Point2::new(-0.75, 0.0), Point2::new(0.75, 0.0)));
        let p = Point2::new(0.6, -0.6);
        assert!(sc.line_of_sight(p, p));
    }

    #[test]
    fn grazing_corner_is_visible() {
        let sc = square_scene();
        // passes exactly through (-0.25, 0.25)
        assert!(sc.line_of_sight(Point2::new(-0.75, 0.0), Point2::new(0.25, 0.5)));
        // runs along the top edge
        assert!(sc.line_of_sight(Point2::new(-0.75, 0.25), Point2::new(0.75, 0.25)));
    }

    #[test]
    fn own_vertices() {
        let sc = square_scene();
        let a = Point2::new(-0.25, -0.25);
        let b = Point2::new(0.25, -0.25);
        let c = Point2::new(0.25, 0.25);
        assert!(sc.line_of_sight(a, b));
        assert!(!sc.line_of_sight(a, c));
    }

    #[test]
    fn diagonal_through_two_corners_is_blocked() {
        let sc = square_scene();
        // midpoint (0.3, 0.3) lies outside the square, yet the segment crosses it
        assert!(!sc.line_of_sight(Point2::new(-0.4, -0.4), Point2::new(1.0, 1.0)));
        assert!(!sc.line_of_sight(Point2::new(0.8, 0.8), Point2::new(-0.25, -0.25)));
    }

    #[test]
    fn scene_validation() {
        let big = vec![
            Point2::new(0.0, 0.0),
            Point2::new(1.5, 0.0),
            Point2::new(0.0, 0.5),
        ];
        assert_eq!(
            Scene::from_vertex_lists(vec![big]).unwrap_err(),
            SceneError::VertexOutsideDomain {
                obstacle: 0,
                vertex: 1
            }
        );
        let a = vec![
            Point2::new(0.0, 0.0),
            Point2::new(0.5, 0.0),
            Point2::new(0.5, 0.5),
            Point2::new(0.0, 0.5),
        ];
        let b = vec![
            Point2::new(0.2, 0.2),
            Point2::new(0.7, 0.2),
            Point2::new(0.7, 0.7),
            Point2::new(0.2, 0.7),
        ];
        assert_eq!(
            Scene::from_vertex_lists(vec![a.clone(), b]).unwrap_err(),
            SceneError::ObstaclesOverlap(0, 1)
        );
        let inner = vec![
            Point2::new(0.1, 0.1),
            Point2::new(0.2, 0.1),
            Point2::new(0.2, 0.2),
        ];
        assert_eq!(
            Scene::from_vertex_lists(vec![a, inner]).unwrap_err(),
            SceneError::ObstaclesOverlap(0, 1)
        );
    }

    #[test]
    fn locate_and_blocked() {
        let sc = square_scene();
        assert!(sc.is_blocked(Point2::new(0.1, 0.0)));
        assert!(!sc.is_blocked(Point2::new(0.25, 0.0)));
        assert_eq!(sc.locate(Point2::new(0.25, 0.0)), PointLocation::Boundary);
        assert_eq!(sc.locate(Point2::new(0.9, 0.0)), PointLocation::Outside);
        assert_eq!(sc.vertex_count(), 4);
    }
}
