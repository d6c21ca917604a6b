//! Exact ground truth from a visibility graph, independent of the raster
//! engine apart from the shared geometric predicates.

use std::cmp::{Ordering, Reverse};
use std::collections::BinaryHeap;

use rayon::prelude::*;
use thiserror::Error;

use crate::engine::{Framebuffer, SourceSpec, SpmResult};
use crate::geometry::{project_on_segment, Point2, PointLocation, Scene, Segment2};

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum OracleError {
    #[error("resolution mismatch: engine {engine}, oracle {oracle}")]
    ResolutionMismatch { engine: usize, oracle: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NodeKind {
    SourcePoint(usize),
    SegmentEndpoint { segment: usize, end: usize },
    CriticalPoint { segment: usize },
    Vertex { obstacle: usize, vertex: usize },
}

#[derive(Debug, Clone)]
pub struct VisibilityGraph {
    pub nodes: Vec<Point2>,
    pub kinds: Vec<NodeKind>,
    /// Neighbors with edge weights, sorted by neighbor index.
    pub adjacency: Vec<Vec<(usize, f64)>>,
    pub source_nodes: Vec<usize>,
    /// Pieces of the source segments between consecutive critical points.
    pub pieces: Vec<Segment2>,
}

impl VisibilityGraph {
    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum::<usize>() / 2
    }

    pub fn has_edge(&self, a: usize, b: usize) -> bool {
        self.adjacency[a].iter().any(|&(n, _)| n == b)
    }
}

/// Interior points of `l` hit orthogonally by a visible obstacle vertex.
fn segment_stops(l: &Segment2, scene: &Scene) -> Vec<Point2> {
    let d = l.b - l.a;
    let len2 = d.norm_sq();
    let mut stops: Vec<(f64, Point2)> = Vec::new();
    for (_, _, v) in scene.vertices() {
        let t = (v - l.a).dot(d) / len2;
        if t > 0.0 && t < 1.0 {
            let q = l.a + d * t;
            if scene.line_of_sight(v, q) {
                stops.push((t, q));
            }
        }
    }
    stops.sort_by(|a, b| a.0.total_cmp(&b.0));
    stops.dedup_by(|a, b| (a.0 - b.0).abs() <= 1e-9);
    stops.into_iter().map(|(_, q)| q).collect()
}

/// All-pairs visibility graph over sources, segment endpoints, critical
/// points and obstacle vertices.
pub fn build_visibility_graph(scene: &Scene, sources: &SourceSpec) -> VisibilityGraph {
    let mut nodes = Vec::new();
    let mut kinds = Vec::new();
    let mut pieces = Vec::new();
    for (i, &p) in sources.points.iter().enumerate() {
        nodes.push(p);
        kinds.push(NodeKind::SourcePoint(i));
    }
    for (si, l) in sources.segments.iter().enumerate() {
        nodes.push(l.a);
        kinds.push(NodeKind::SegmentEndpoint {
            segment: si,
            end: 0,
        });
        nodes.push(l.b);
        kinds.push(NodeKind::SegmentEndpoint {
            segment: si,
            end: 1,
        });
        let stops = segment_stops(l, scene);
        let mut prev = l.a;
        for &q in &stops {
            nodes.push(q);
            kinds.push(NodeKind::CriticalPoint { segment: si });
            pieces.push(Segment2 { a: prev, b: q });
            prev = q;
        }
        pieces.push(Segment2 { a: prev, b: l.b });
    }
    let source_nodes: Vec<usize> = (0..nodes.len()).collect();
    for (oi, vi, v) in scene.vertices() {
        nodes.push(v);
        kinds.push(NodeKind::Vertex {
            obstacle: oi,
            vertex: vi,
        });
    }

    let m = nodes.len();
    let upper: Vec<Vec<(usize, f64)>> = (0..m)
        .into_par_iter()
        .map(|a| {
            ((a + 1)..m)
                .filter(|&b| scene.line_of_sight(nodes[a], nodes[b]))
                .map(|b| (b, nodes[a].distance(nodes[b])))
                .collect()
        })
        .collect();
    let mut adjacency = vec![Vec::new(); m];
    for (a, list) in upper.iter().enumerate() {
        for &(b, w) in list {
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
    }
    for list in &mut adjacency {
        list.sort_by_key(|&(n, _)| n);
    }
    VisibilityGraph {
        nodes,
        kinds,
        adjacency,
        source_nodes,
        pieces,
    }
}

/// Smallest distance from `p` straight to a source it can see, if any.
fn direct_source_distance(
    p: Point2,
    scene: &Scene,
    sources: &SourceSpec,
    pieces: &[Segment2],
) -> f64 {
    let mut best = f64::INFINITY;
    for &s in &sources.points {
        let d = p.distance(s);
        if d < best && scene.line_of_sight(p, s) {
            best = d;
        }
    }
    for piece in pieces {
        let pr = project_on_segment(p, piece);
        if pr.dist < best && scene.line_of_sight(p, pr.foot) {
            best = pr.dist;
        }
    }
    best
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Key(f64);

impl Eq for Key {}

impl PartialOrd for Key {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Key {
    fn cmp(&self, other: &Self) -> Ordering {
        self.0.total_cmp(&other.0)
    }
}

/// Geodesic distance of every node; `f64::INFINITY` where unreachable.
///
/// Sources start at zero; every node is also seeded with its distance to
/// any segment piece whose foot point it can see.
pub fn multi_source_dijkstra(g: &VisibilityGraph, scene: &Scene, sources: &SourceSpec) -> Vec<f64> {
    let m = g.node_count();
    let mut dist: Vec<f64> = (0..m)
        .into_par_iter()
        .map(|v| {
            if g.source_nodes.contains(&v) {
                0.0
            } else {
                let mut best = f64::INFINITY;
                for piece in &g.pieces {
                    let pr = project_on_segment(g.nodes[v], piece);
                    if pr.dist < best && scene.line_of_sight(g.nodes[v], pr.foot) {
                        best = pr.dist;
                    }
                }
                best
            }
        })
        .collect();
    debug_assert!(sources.points.len() + 2 * sources.segments.len() <= g.source_nodes.len());
    let mut heap: BinaryHeap<Reverse<(Key, usize)>> = (0..m)
        .filter(|&v| dist[v].is_finite())
        .map(|v| Reverse((Key(dist[v]), v)))
        .collect();
    let mut done = vec![false; m];
    while let Some(Reverse((Key(d), v))) = heap.pop() {
        if done[v] || d > dist[v] {
            continue;
        }
        done[v] = true;
        for &(n, w) in &g.adjacency[v] {
            let nd = d + w;
            if nd < dist[n] {
                dist[n] = nd;
                heap.push(Reverse((Key(nd), n)));
            }
        }
    }
    dist
}

/// Exact geodesic distances for a fixed scene and source set.
#[derive(Debug, Clone)]
pub struct Oracle {
    pub scene: Scene,
    pub sources: SourceSpec,
    pub graph: VisibilityGraph,
    pub node_distance: Vec<f64>,
}

impl Oracle {
    pub fn new(scene: &Scene, sources: &SourceSpec) -> Self {
        let graph = build_visibility_graph(scene, sources);
        let node_distance = multi_source_dijkstra(&graph, scene, sources);
        Oracle {
            scene: scene.clone(),
            sources: sources.clone(),
            graph,
            node_distance,
        }
    }

    /// Node distance of obstacle vertex `vertex` of obstacle `obstacle`.
    pub fn vertex_distance(&self, obstacle: usize, vertex: usize) -> Option<f64> {
        let k = self
            .graph
            .kinds
            .iter()
            .position(|k| *k == NodeKind::Vertex { obstacle, vertex })?;
        Some(self.node_distance[k])
    }

    pub fn distance(&self, p: Point2) -> f64 {
        exact_distance(
            p,
            &self.scene,
            &self.sources,
            &self.graph,
            &self.node_distance,
        )
    }

    pub fn raster(&self, r: usize) -> OracleGrid {
        let fb = Framebuffer::new(r, self.scene.domain());
        let cells = (0..r * r)
            .into_par_iter()
            .map(|k| {
                let c = fb.center(k % r, k / r);
                if self.scene.locate(c) == PointLocation::Inside {
                    return OracleCell::Blocked;
                }
                let d = self.distance(c);
                if d.is_finite() {
                    OracleCell::Distance(d)
                } else {
                    OracleCell::Unreachable
                }
            })
            .collect();
        OracleGrid {
            resolution: r,
            cells,
        }
    }
}

/// Shortest distance from `p` to the sources: straight to a visible source,
/// or to a visible node plus that node's distance.
pub fn exact_distance(
    p: Point2,
    scene: &Scene,
    sources: &SourceSpec,
    g: &VisibilityGraph,
    node_distance: &[f64],
) -> f64 {
    let direct = direct_source_distance(p, scene, sources, &g.pieces);
    let mut candidates: Vec<(f64, usize)> = node_distance
        .iter()
        .enumerate()
        .filter(|(_, d)| d.is_finite())
        .map(|(v, d)| (d + p.distance(g.nodes[v]), v))
        .filter(|(total, _)| *total < direct)
        .collect();
    candidates.sort_by(|a, b| a.0.total_cmp(&b.0));
    // Candidates are exact totals, so the first visible one is the minimum.
    for (total, v) in candidates {
        if scene.line_of_sight(p, g.nodes[v]) {
            return total;
        }
    }
    direct
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum OracleCell {
    Blocked,
    Unreachable,
    Distance(f64),
}

/// Exact distances at the pixel centers of an `r`x`r` raster.
#[derive(Debug, Clone, PartialEq)]
pub struct OracleGrid {
    pub resolution: usize,
    pub cells: Vec<OracleCell>,
}

impl OracleGrid {
    pub fn get(&self, i: usize, j: usize) -> OracleCell {
        self.cells[j * self.resolution + i]
    }
}

pub fn exact_spm_raster(scene: &Scene, sources: &SourceSpec, r: usize) -> OracleGrid {
    Oracle::new(scene, sources).raster(r)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ComparisonReport {
    pub total_free_pixels: usize,
    pub matched: usize,
    /// Row-major indices of mismatched free pixels.
    pub mismatch_locations: Vec<usize>,
    pub max_abs_error: f64,
    /// Every mismatch lies within Chebyshev distance 1 of a pixel whose
    /// neighborhood holds another parent, an unreached pixel or an obstacle.
    pub boundary_confined: bool,
}

impl ComparisonReport {
    pub fn matched_fraction(&self) -> f64 {
        if self.total_free_pixels == 0 {
            1.0
        } else {
            self.matched as f64 / self.total_free_pixels as f64
        }
    }

    pub fn passes(&self, min_fraction: f64) -> bool {
        self.matched_fraction() >= min_fraction && self.boundary_confined
    }
}

/// Compares engine distances against the oracle raster, pixel by pixel.
pub fn compare(
    spm: &SpmResult,
    grid: &OracleGrid,
    tolerance: f64,
) -> Result<ComparisonReport, OracleError> {
    let fb = &spm.framebuffer;
    let r = fb.resolution();
    if grid.resolution != r {
        return Err(OracleError::ResolutionMismatch {
            engine: r,
            oracle: grid.resolution,
        });
    }
    let mut total = 0;
    let mut mismatches = Vec::new();
    let mut max_abs_error: f64 = 0.0;
    for (k, (px, cell)) in fb.pixels().iter().zip(&grid.cells).enumerate() {
        let ok = match (*cell, px.distance()) {
            (OracleCell::Blocked, _) => continue,
            (OracleCell::Unreachable, None) => true,
            (OracleCell::Distance(want), Some(got)) => {
                let err = (got - want).abs();
                max_abs_error = max_abs_error.max(err);
                err <= tolerance
            }
            _ => {
                max_abs_error = f64::INFINITY;
                false
            }
        };
        total += 1;
        if !ok {
            mismatches.push(k);
        }
    }

    let neighbors = |k: usize| {
        let (i, j) = ((k % r) as isize, (k / r) as isize);
        (-1..=1)
            .flat_map(move |dj| (-1..=1).map(move |di| (i + di, j + dj)))
            .filter_map(move |(x, y)| {
                (x >= 0 && y >= 0 && (x as usize) < r && (y as usize) < r)
                    .then(|| y as usize * r + x as usize)
            })
    };
    let px = fb.pixels();
    let is_boundary = |k: usize| {
        neighbors(k)
            .any(|n| grid.cells[n] == OracleCell::Blocked || px[n].parent_id() != px[k].parent_id())
    };
    let boundary_confined = mismatches.iter().all(|&k| neighbors(k).any(is_boundary));
    Ok(ComparisonReport {
        total_free_pixels: total,
        matched: total - mismatches.len(),
        mismatch_locations: mismatches,
        max_abs_error,
        boundary_confined,
    })
}
