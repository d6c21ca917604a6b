//! Planar predicates and constructions shared by the engine, the oracle and
//! the query layer.
//!
//! All coordinates are plain `f64`. Predicates use a fixed absolute tolerance
//! of [`EPS`], which is adequate for scenes expressed in normalized units.

mod index;
mod scene;

use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use index::EdgeGrid;
pub use scene::{line_of_sight, Edge, Rect, Scene, SceneError};

/// Absolute tolerance for orientation and on-boundary tests.
pub const EPS: f64 = 1e-12;

/// Edges with `dot(g_hat, n_hat)` below this value cast a shadow.
pub const FRONT_FACING_THRESHOLD: f64 = 0.1;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeometryError {
    #[error("coordinate is not finite")]
    NonFinite,
    #[error("segment endpoints coincide")]
    DegenerateSegment,
    #[error("polygon has {0} vertices, at least 3 are required")]
    TooFewVertices(usize),
    #[error("polygon has zero area")]
    ZeroArea,
    #[error("polygon edges {0} and {1} intersect")]
    SelfIntersecting(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct Point2 {
    pub x: f64,
    pub y: f64,
}

impl Point2 {
    pub const ORIGIN: Point2 = Point2 { x: 0.0, y: 0.0 };

    #[inline]
    pub const fn new(x: f64, y: f64) -> Self {
        Point2 { x, y }
    }

    pub fn try_new(x: f64, y: f64) -> Result<Self, GeometryError> {
        if x.is_finite() && y.is_finite() {
            Ok(Point2 { x, y })
        } else {
            Err(GeometryError::NonFinite)
        }
    }

    #[inline]
    pub fn dot(self, o: Point2) -> f64 {
        self.x * o.x + self.y * o.y
    }

    /// z component of the 3D cross product.
    #[inline]
    pub fn cross(self, o: Point2) -> f64 {
        self.x * o.y - self.y * o.x
    }

    #[inline]
    pub fn norm_sq(self) -> f64 {
        self.dot(self)
    }

    /// Plain `sqrt(x^2 + y^2)`: coordinates are bounded, so the overflow
    /// protection of `hypot` buys nothing and it is several times slower.
    #[inline]
    pub fn norm(self) -> f64 {
        self.norm_sq().sqrt()
    }

    #[inline]
    pub fn distance(self, o: Point2) -> f64 {
        (self - o).norm()
    }

    /// Unit vector in the same direction, or `None` for the zero vector.
    pub fn normalized(self) -> Option<Point2> {
        let n = self.norm();
        if n > 0.0 && n.is_finite() {
            Some(Point2::new(self.x / n, self.y / n))
        } else {
            None
        }
    }

    #[inline]
    pub fn midpoint(self, o: Point2) -> Point2 {
        Point2::new((self.x + o.x) * 0.5, (self.y + o.y) * 0.5)
    }

    #[inline]
    pub fn lerp(self, o: Point2, t: f64) -> Point2 {
        Point2::new(self.x + (o.x - self.x) * t, self.y + (o.y - self.y) * t)
    }

    pub fn is_finite(self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

impl fmt::Display for Point2 {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "({}, {})", self.x, self.y)
    }
}

impl Add for Point2 {
    type Output = Point2;
    #[inline]
    fn add(self, o: Point2) -> Point2 {
        Point2::new(self.x + o.x, self.y + o.y)
    }
}

impl Sub for Point2 {
    type Output = Point2;
    #[inline]
    fn sub(self, o: Point2) -> Point2 {
        Point2::new(self.x - o.x, self.y - o.y)
    }
}

impl Mul<f64> for Point2 {
    type Output = Point2;
    #[inline]
    fn mul(self, s: f64) -> Point2 {
        Point2::new(self.x * s, self.y * s)
    }
}

impl Neg for Point2 {
    type Output = Point2;
    #[inline]
    fn neg(self) -> Point2 {
        Point2::new(-self.x, -self.y)
    }
}

/// A non-degenerate closed segment.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Segment2 {
    pub a: Point2,
    pub b: Point2,
}

impl Segment2 {
    pub fn new(a: Point2, b: Point2) -> Result<Self, GeometryError> {
        if !a.is_finite() || !b.is_finite() {
            return Err(GeometryError::NonFinite);
        }
        if a == b {
            return Err(GeometryError::DegenerateSegment);
        }
        Ok(Segment2 { a, b })
    }

    pub fn reversed(self) -> Segment2 {
        Segment2 {
            a: self.b,
            b: self.a,
        }
    }

    pub fn length(&self) -> f64 {
        self.a.distance(self.b)
    }

    pub fn midpoint(&self) -> Point2 {
        self.a.midpoint(self.b)
    }

    pub fn direction(&self) -> Point2 {
        self.b - self.a
    }

    /// Parameter of the orthogonal projection of `p` onto the supporting line.
    pub fn unclamped_param(&self, p: Point2) -> f64 {
        let d = self.direction();
        (p - self.a).dot(d) / d.norm_sq()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PointLocation {
    Inside,
    Boundary,
    Outside,
}

/// Result of [`project_on_segment`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Projection {
    pub t: f64,
    pub foot: Point2,
    pub dist: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Polygon {
    vertices: Vec<Point2>,
    min: Point2,
    max: Point2,
}

impl Polygon {
    /// Validates a simple polygon and stores it counter-clockwise.
    pub fn new(mut vertices: Vec<Point2>) -> Result<Self, GeometryError> {
        if vertices.len() < 3 {
            return Err(GeometryError::TooFewVertices(vertices.len()));
        }
        if vertices.iter().any(|v| !v.is_finite()) {
            return Err(GeometryError::NonFinite);
        }
        let area = signed_area(&vertices);
        if area.abs() <= EPS {
            return Err(GeometryError::ZeroArea);
        }
        if area < 0.0 {
            vertices.reverse();
        }
        let n = vertices.len();
        for i in 0..n {
            if vertices[i] == vertices[(i + 1) % n] {
                return Err(GeometryError::SelfIntersecting(i, i));
            }
        }
        for i in 0..n {
            let ei = Segment2 {
                a: vertices[i],
                b: vertices[(i + 1) % n],
            };
            for j in (i + 1)..n {
                let ej = Segment2 {
                    a: vertices[j],
                    b: vertices[(j + 1) % n],
                };
                let adjacent = j == i + 1 || (i == 0 && j == n - 1);
                if adjacent {
                    // Adjacent edges share one vertex; they must not fold back
                    // onto each other.
                    let (shared, other_i, other_j) = if j == i + 1 {
                        (ei.b, ei.a, ej.b)
                    } else {
                        (ei.a, ei.b, ej.a)
                    };
                    let u = other_i - shared;
                    let v = other_j - shared;
                    if u.cross(v).abs() <= EPS * u.norm() * v.norm() && u.dot(v) > 0.0 {
                        return Err(GeometryError::SelfIntersecting(i, j));
                    }
                } else if segments_intersect(&ei, &ej) {
                    return Err(GeometryError::SelfIntersecting(i, j));
                }
            }
        }
        let (min, max) = bounds(&vertices);
        Ok(Polygon { vertices, min, max })
    }

    pub fn vertices(&self) -> &[Point2] {
        &self.vertices
    }

    pub fn len(&self) -> usize {
        self.vertices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vertices.is_empty()
    }

    pub fn vertex(&self, i: usize) -> Point2 {
        self.vertices[i % self.vertices.len()]
    }

    /// Edge `i` runs from vertex `i` to vertex `i + 1`.
    pub fn edge(&self, i: usize) -> Segment2 {
        let n = self.vertices.len();
        Segment2 {
            a: self.vertices[i % n],
            b: self.vertices[(i + 1) % n],
        }
    }

    pub fn edges(&self) -> impl Iterator<Item = Segment2> + '_ {
        (0..self.vertices.len()).map(move |i| self.edge(i))
    }

    pub fn bounds(&self) -> (Point2, Point2) {
        (self.min, self.max)
    }

    pub fn area(&self) -> f64 {
        signed_area(&self.vertices)
    }

    pub fn centroid(&self) -> Point2 {
        let mut cx = 0.0;
        let mut cy = 0.0;
        let n = self.vertices.len();
        for i in 0..n {
            let p = self.vertices[i];
            let q = self.vertices[(i + 1) % n];
            let c = p.cross(q);
            cx += (p.x + q.x) * c;
            cy += (p.y + q.y) * c;
        }
        let a6 = 6.0 * self.area();
        Point2::new(cx / a6, cy / a6)
    }
}

fn signed_area(vertices: &[Point2]) -> f64 {
    let n = vertices.len();
    (0..n)
        .map(|i| vertices[i].cross(vertices[(i + 1) % n]))
        .sum::<f64>()
        * 0.5
}

fn bounds(points: &[Point2]) -> (Point2, Point2) {
    let mut min = Point2::new(f64::INFINITY, f64::INFINITY);
    let mut max = Point2::new(f64::NEG_INFINITY, f64::NEG_INFINITY);
    for p in points {
        min.x = min.x.min(p.x);
        min.y = min.y.min(p.y);
        max.x = max.x.max(p.x);
        max.y = max.y.max(p.y);
    }
    (min, max)
}

/// Twice the signed area of triangle `abc`; positive for a left turn.
#[inline]
pub fn orient(a: Point2, b: Point2, c: Point2) -> f64 {
    (b - a).cross(c - a)
}

#[inline]
fn orient_sign(a: Point2, b: Point2, c: Point2) -> i8 {
    let o = orient(a, b, c);
    if o > EPS {
        1
    } else if o < -EPS {
        -1
    } else {
        0
    }
}

/// `p` lies within the bounding box of `s` (used after a collinearity test).
fn within_extent(p: Point2, s: &Segment2) -> bool {
    p.x >= s.a.x.min(s.b.x) - EPS
        && p.x <= s.a.x.max(s.b.x) + EPS
        && p.y >= s.a.y.min(s.b.y) - EPS
        && p.y <= s.a.y.max(s.b.y) + EPS
}

/// True iff the open interiors cross at a single point. Shared endpoints,
/// T-contacts and collinear overlaps are not proper intersections.
pub fn segments_properly_intersect(s1: &Segment2, s2: &Segment2) -> bool {
    let o1 = orient_sign(s1.a, s1.b, s2.a);
    let o2 = orient_sign(s1.a, s1.b, s2.b);
    let o3 = orient_sign(s2.a, s2.b, s1.a);
    let o4 = orient_sign(s2.a, s2.b, s1.b);
    o1 * o2 < 0 && o3 * o4 < 0
}

/// Closed-segment intersection, touching included.
pub fn segments_intersect(s1: &Segment2, s2: &Segment2) -> bool {
    let o1 = orient_sign(s1.a, s1.b, s2.a);
    let o2 = orient_sign(s1.a, s1.b, s2.b);
    let o3 = orient_sign(s2.a, s2.b, s1.a);
    let o4 = orient_sign(s2.a, s2.b, s1.b);
    if o1 * o2 < 0 && o3 * o4 < 0 {
        return true;
    }
    (o1 == 0 && within_extent(s2.a, s1))
        || (o2 == 0 && within_extent(s2.b, s1))
        || (o3 == 0 && within_extent(s1.a, s2))
        || (o4 == 0 && within_extent(s1.b, s2))
}

/// Clamped orthogonal projection of `p` onto `s`.
pub fn project_on_segment(p: Point2, s: &Segment2) -> Projection {
    let d = s.direction();
    let t = s.unclamped_param(p).clamp(0.0, 1.0);
    if t == 0.0 {
        Projection {
            t,
            foot: s.a,
            dist: p.distance(s.a),
        }
    } else if t == 1.0 {
        Projection {
            t,
            foot: s.b,
            dist: p.distance(s.b),
        }
    } else {
        // Perpendicular distance straight from the cross product; recomputing
        // it from the rounded foot loses exactness for points on the segment.
        let dist = (p - s.a).cross(d).abs() / d.norm();
        Projection {
            t,
            foot: s.a + d * t,
            dist,
        }
    }
}

/// Distance from `p` to the closed segment `s`.
pub fn point_segment_distance(p: Point2, s: &Segment2) -> f64 {
    project_on_segment(p, s).dist
}

/// Classifies `p` against a polygon; points within [`EPS`] of an edge are on
/// the boundary.
pub fn point_in_polygon(p: Point2, poly: &Polygon) -> PointLocation {
    let (min, max) = poly.bounds();
    if p.x < min.x - EPS || p.x > max.x + EPS || p.y < min.y - EPS || p.y > max.y + EPS {
        return PointLocation::Outside;
    }
    let verts = poly.vertices();
    let n = verts.len();
    let mut inside = false;
    for i in 0..n {
        let a = verts[i];
        let b = verts[(i + 1) % n];
        if point_segment_distance(p, &Segment2 { a, b }) <= EPS {
            return PointLocation::Boundary;
        }
        // Half-open crossing rule on the horizontal ray towards +x.
        if (a.y > p.y) != (b.y > p.y) {
            let x = a.x + (p.y - a.y) / (b.y - a.y) * (b.x - a.x);
            if p.x < x {
                inside = !inside;
            }
        }
    }
    if inside {
        PointLocation::Inside
    } else {
        PointLocation::Outside
    }
}

/// `dot(g_hat, n_hat)` for edge `e` seen from `g`, where `n_hat` is the
/// right-hand normal `(dy, -dx)` (outward for counter-clockwise polygons).
/// `None` when `g` coincides with the edge midpoint.
pub fn facing_dot(e: &Segment2, g: Point2) -> Option<f64> {
    let g_hat = (e.midpoint() - g).normalized()?;
    let d = e.direction();
    let n_hat = Point2::new(d.y, -d.x).normalized()?;
    Some(g_hat.dot(n_hat))
}

/// Front-facing test with an explicit threshold.
pub fn front_facing_with(e: &Segment2, g: Point2, threshold: f64) -> bool {
    match facing_dot(e, g) {
        Some(d) => d < threshold,
        None => true,
    }
}

/// Whether edge `e` casts a shadow for a generator at `g`.
pub fn front_facing(e: &Segment2, g: Point2) -> bool {
    front_facing_with(e, g, FRONT_FACING_THRESHOLD)
}
