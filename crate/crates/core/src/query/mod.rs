//! Run-time queries against a finished [`SpmResult`]: point location,
//! distances, shortest paths and isolines.

mod isolines;

use thiserror::Error;

use crate::engine::{Pixel, SpmResult};
use crate::geometry::Point2;

pub use isolines::{extract_isolines, Isoline};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum QueryError {
    #[error("point {0} lies outside the domain")]
    OutsideDomain(Point2),
    #[error("point {0} lies inside an obstacle")]
    InsideObstacle(Point2),
    #[error("no path reaches {0}")]
    NoPath(Point2),
    #[error("parent chain starting at entry {0} does not terminate")]
    Cycle(usize),
}

/// The pixel cell holding a query point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Located {
    pub i: usize,
    pub j: usize,
    pub pixel: Pixel,
}

/// Shortest path from a query point to its source contact, query first.
#[derive(Debug, Clone, PartialEq)]
pub struct PathPolyline {
    pub points: Vec<Point2>,
    pub length: f64,
}

impl PathPolyline {
    fn new(points: Vec<Point2>) -> Self {
        let length = polyline_length(&points);
        PathPolyline { points, length }
    }
}

pub fn polyline_length(points: &[Point2]) -> f64 {
    points.windows(2).fold(0.0, |acc, w| acc + w[0].distance(w[1]))
}

/// Maps `p` to its pixel in constant time. The pixel may be unreached.
pub fn locate(p: Point2, spm: &SpmResult) -> Result<Located, QueryError> {
    let fb = &spm.framebuffer;
    let (i, j) = fb.cell_of(p).ok_or(QueryError::OutsideDomain(p))?;
    Ok(Located {
        i,
        j,
        pixel: *fb.get(i, j),
    })
}

/// The pixel's parent entry, after checking `p` is a valid query point.
fn parent_of(p: Point2, spm: &SpmResult) -> Result<(Located, usize), QueryError> {
    let loc = locate(p, spm)?;
    if spm.scene.is_blocked(p) {
        return Err(QueryError::InsideObstacle(p));
    }
    let id = loc.pixel.parent_id().ok_or(QueryError::NoPath(p))?;
    Ok((loc, id))
}

/// Geodesic distance from `p` through its pixel's parent, measured from the
/// exact coordinates of `p`.
pub fn distance(p: Point2, spm: &SpmResult) -> Result<f64, QueryError> {
    let (_, id) = parent_of(p, spm)?;
    Ok(spm
        .data
        .get(id)
        .distance_via(p)
        .expect("pixel parents are expanded"))
}

/// Like [`distance`], but through the parent chosen by [`refine_parent`].
pub fn refined_distance(p: Point2, spm: &SpmResult) -> Result<f64, QueryError> {
    let (_, id) = refine_parent(p, spm)?;
    Ok(spm
        .data
        .get(id)
        .distance_via(p)
        .expect("pixel parents are expanded"))
}

/// Picks, among the parents of the 3x3 pixel neighborhood that `p` can see,
/// the one giving the shortest total distance. Falls back to the pixel's
/// own parent when none is visible. Returns the contact point and entry.
pub fn refine_parent(p: Point2, spm: &SpmResult) -> Result<(Point2, usize), QueryError> {
    let (loc, own) = parent_of(p, spm)?;
    let fb = &spm.framebuffer;
    let r = fb.resolution();
    let mut ids: Vec<usize> = Vec::with_capacity(9);
    for j in loc.j.saturating_sub(1)..=(loc.j + 1).min(r - 1) {
        for i in loc.i.saturating_sub(1)..=(loc.i + 1).min(r - 1) {
            if let Some(id) = fb.get(i, j).parent_id() {
                if !ids.contains(&id) {
                    ids.push(id);
                }
            }
        }
    }
    ids.sort_unstable();
    let mut best: Option<(f64, Point2, usize)> = None;
    for id in ids {
        let e = spm.data.get(id);
        let Some(base) = e.distance else { continue };
        let (d, contact) = e.reach(p);
        let total = base + d;
        if best.is_some_and(|(b, _, _)| total >= b) {
            continue;
        }
        if spm.scene.line_of_sight(p, contact) {
            best = Some((total, contact, id));
        }
    }
    Ok(match best {
        Some((_, contact, id)) => (contact, id),
        None => (spm.data.get(own).reach(p).1, own),
    })
}

/// Follows parent links from `p` back to a source.
pub fn shortest_path(p: Point2, spm: &SpmResult, refine: bool) -> Result<PathPolyline, QueryError> {
    let (contact, mut id) = if refine {
        refine_parent(p, spm)?
    } else {
        let (_, id) = parent_of(p, spm)?;
        (spm.data.get(id).reach(p).1, id)
    };
    let mut points = vec![p];
    push_distinct(&mut points, contact);
    let limit = spm.data.n_total();
    let mut hops = 0;
    loop {
        let e = spm.data.get(id);
        if e.is_source() {
            break;
        }
        let parent = e.parent_id.ok_or(QueryError::NoPath(p))?;
        let next = spm.data.get(parent);
        let (here, there) = (
            e.distance.unwrap_or(f64::INFINITY),
            next.distance.unwrap_or(f64::INFINITY),
        );
        hops += 1;
        // a vertex lying on a source segment sits at distance 0 like its parent
        if hops > limit || !(there < here || (next.is_source() && there <= here)) {
            return Err(QueryError::Cycle(id));
        }
        let from = *points.last().expect("path is never empty");
        push_distinct(&mut points, next.reach(from).1);
        id = parent;
    }
    Ok(PathPolyline::new(points))
}

fn push_distinct(points: &mut Vec<Point2>, q: Point2) {
    if points.last() != Some(&q) {
        points.push(q);
    }
}
