//! Shadow stencil: three triangles behind every front-facing obstacle edge,
//! plus the interior-angle wedge of the generator's own obstacle when the
//! generator is an obstacle vertex.

use std::f64::consts::PI;

use crate::geometry::{facing_dot, point_segment_distance, Edge, Point2, Polygon, Scene};

use super::data::{DataEntry, EntryKind};
use super::framebuffer::{pixel_center, StencilGrid};
use super::EngineConfig;

/// Largest angle covered by a single wedge triangle.
const WEDGE_STEP: f64 = PI / 3.0;

/// Floor on the half-angle cosine used to stretch edge shadows.
const MIN_HALF_COS: f64 = 1e-6;

/// A counter-clockwise triangle prepared for inclusive point tests.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Triangle {
    pub a: Point2,
    pub b: Point2,
    pub c: Point2,
    pub min: Point2,
    pub max: Point2,
    /// Edge functions `(A, B, C)` of `ab`, `bc`, `ca`, positive inside.
    edges: [[f64; 3]; 3],
}

impl Triangle {
    /// `None` for degenerate (zero-area) input.
    pub fn new(a: Point2, b: Point2, c: Point2) -> Option<Self> {
        let area = (b - a).cross(c - a);
        if !area.is_finite() || area.abs() < 1e-18 {
            return None;
        }
        let (b, c) = if area < 0.0 { (c, b) } else { (b, c) };
        Some(Triangle {
            a,
            b,
            c,
            min: Point2::new(a.x.min(b.x).min(c.x), a.y.min(b.y).min(c.y)),
            max: Point2::new(a.x.max(b.x).max(c.x), a.y.max(b.y).max(c.y)),
            edges: [
                edge_coefficients(a, b),
                edge_coefficients(b, c),
                edge_coefficients(c, a),
            ],
        })
    }

    #[inline]
    fn edge_values(&self, p: Point2) -> [f64; 3] {
        self.edges.map(|[ea, eb, ec]| ea * p.x + eb * p.y + ec)
    }

    /// Closed containment: edges and vertices count as inside.
    #[inline]
    pub fn contains(&self, p: Point2) -> bool {
        let [e0, e1, e2] = self.edge_values(p);
        e0 >= 0.0 && e1 >= 0.0 && e2 >= 0.0
    }

    #[inline]
    pub(crate) fn overlaps_box(&self, min: Point2, max: Point2) -> bool {
        self.max.x >= min.x && self.min.x <= max.x && self.max.y >= min.y && self.min.y <= max.y
    }

    /// How the box `[min, max]` relates to the triangle: `Some(true)` if all
    /// four corners are strictly inside by `margin`, `Some(false)` if the box
    /// lies strictly outside one edge (or outside the bounding box), `None`
    /// otherwise. Edge functions are linear, so corner verdicts hold for
    /// every point of the box.
    pub(crate) fn classify_box(&self, min: Point2, max: Point2, margin: f64) -> Option<bool> {
        if !self.overlaps_box(min, max) {
            return Some(false);
        }
        let mut all_inside = true;
        for [ea, eb, ec] in self.edges {
            // extreme corners of the box along the edge normal
            let (xl, xh) = if ea >= 0.0 {
                (min.x, max.x)
            } else {
                (max.x, min.x)
            };
            let (yl, yh) = if eb >= 0.0 {
                (min.y, max.y)
            } else {
                (max.y, min.y)
            };
            if ea * xh + eb * yh + ec < -margin {
                return Some(false);
            }
            all_inside &= ea * xl + eb * yl + ec > margin;
        }
        all_inside.then_some(true)
    }
}

/// Coefficients of the orientation of `p` against `ab`, derived with the
/// endpoints in a fixed order and negated exactly when reversed, so two
/// triangles sharing an edge never both exclude a point on it.
fn edge_coefficients(a: Point2, b: Point2) -> [f64; 3] {
    let (lo, hi, sign) = if (a.x, a.y) <= (b.x, b.y) {
        (a, b, 1.0)
    } else {
        (b, a, -1.0)
    };
    let ea = lo.y - hi.y;
    let eb = hi.x - lo.x;
    let ec = -(ea * lo.x + eb * lo.y);
    [sign * ea, sign * eb, sign * ec]
}

/// Obstacle edges that cast a shadow from `gen`: front-facing and, for a
/// vertex generator, not incident to it. With a `window`, edges whose
/// bounding box misses it are dropped first.
fn casting_edges<'a>(
    scene: &'a Scene,
    gen: &DataEntry,
    config: &EngineConfig,
    window: Option<(Point2, Point2)>,
) -> impl Iterator<Item = &'a Edge> + 'a {
    let g = gen.p1;
    let threshold = config.front_facing_threshold;
    let own = match gen.kind {
        EntryKind::Vertex { obstacle, vertex } => {
            Some((obstacle, vertex, scene.obstacles()[obstacle].len()))
        }
        _ => None,
    };
    scene.edges().iter().filter_map(move |edge| {
        if let Some((lo, hi)) = window {
            let (a, b) = (edge.segment.a, edge.segment.b);
            if a.x.max(b.x) < lo.x
                || a.x.min(b.x) > hi.x
                || a.y.max(b.y) < lo.y
                || a.y.min(b.y) > hi.y
            {
                return None;
            }
        }
        if let Some((o, v, n)) = own {
            if edge.obstacle == o && (edge.index == v || (edge.index + 1) % n == v) {
                return None;
            }
        }
        let facing = facing_dot(&edge.segment, g);
        (!facing.is_some_and(|dot| dot >= threshold)).then_some(edge)
    })
}

/// The three shadow triangles behind `edge` as seen from `g`.
///
/// The far chords p1s-pms and pms-p2s come within `len * cos(half angle)`
/// of `g`, so the extrusion is stretched to keep them at least `c_svf` away
/// even when `g` sits close to the edge line. The stretch at a vertex
/// depends only on the vertex, so neighboring edges extrude it to the same
/// point and their shared boundary stays watertight.
fn edge_shadow(scene: &Scene, edge: &Edge, g: Point2, c_svf: f64, out: &mut Vec<Triangle>) {
    let e = &edge.segment;
    let d = e.direction();
    let Some(n_hat) = Point2::new(d.y, -d.x).normalized() else {
        return;
    };
    let poly = &scene.obstacles()[edge.obstacle];
    let (p1, p2, pm) = (e.a, e.b, e.midpoint());
    // Generator on the midpoint: fall back to the inward normal.
    let g_hat = (pm - g).normalized().unwrap_or(-n_hat);
    let v1 = (p1 - g).normalized().unwrap_or(g_hat);
    let v2 = (p2 - g).normalized().unwrap_or(g_hat);
    let l1 = vertex_stretch(poly, edge.index, g, c_svf);
    let l2 = vertex_stretch(poly, edge.index + 1, g, c_svf);
    let p1s = p1 + v1 * l1;
    let p2s = p2 + v2 * l2;
    let pms = pm + g_hat * l1.max(l2);
    out.extend(Triangle::new(p1, pms, p1s));
    out.extend(Triangle::new(p2, p2s, pms));
    out.extend(Triangle::new(p1, p2, pms));
}

/// Extrusion length at vertex `k` of `poly`: enough for both incident edges.
fn vertex_stretch(poly: &Polygon, k: usize, g: Point2, c_svf: f64) -> f64 {
    let p = poly.vertex(k);
    let Some(v) = (p - g).normalized() else {
        return c_svf;
    };
    let n = poly.len();
    let half_cos = |other: Point2| match (p.lerp(other, 0.5) - g).normalized() {
        Some(m) => ((1.0 + v.dot(m)) / 2.0).max(0.0).sqrt(),
        None => 1.0,
    };
    let worst = half_cos(poly.vertex(k + n - 1)).min(half_cos(poly.vertex(k + 1)));
    c_svf / worst.max(MIN_HALF_COS)
}

fn own_wedge(scene: &Scene, gen: &DataEntry, config: &EngineConfig, out: &mut Vec<Triangle>) {
    if let EntryKind::Vertex { obstacle, vertex } = gen.kind {
        wedge_triangles(
            scene,
            obstacle,
            vertex,
            2.0 * config.shadow_vector_factor,
            out,
        );
    }
}

/// Shadow geometry for a point generator.
pub fn shadow_triangles(scene: &Scene, gen: &DataEntry, config: &EngineConfig) -> Vec<Triangle> {
    let mut out = Vec::new();
    for e in casting_edges(scene, gen, config, None) {
        edge_shadow(scene, e, gen.p1, config.shadow_vector_factor, &mut out);
    }
    own_wedge(scene, gen, config, &mut out);
    out
}

/// Angular resolution of the occlusion buffer.
const OCCLUSION_BINS: usize = 2048;
const ANGLE_MARGIN: f64 = 1e-8;
const DEPTH_MARGIN: f64 = 1e-7;
const WINDOW_MARGIN: f64 = 1e-9;

/// [`shadow_triangles`] minus the triangles of edges hidden behind nearer
/// edges, which cover no pixel the rest does not.
///
/// An edge is hidden when every angular bin it touches is spanned, with
/// margin, by an occluder lying entirely closer to `g` than the edge's
/// nearest point. Every ray through the hidden edge then crosses that
/// occluder first, so all points behind it lie strictly inside the
/// occluder's shadow. Within the domain, shadow triangles reach past every
/// point (c_svf is at least the diameter).
///
/// Occluders are single casting edges and runs of consecutive casting
/// edges of one polygon turning the same way. A run's angular spans are
/// contiguous and neighboring shadows share their boundary triangle edge
/// exactly, so the run shadows its whole span. Hidden edges still count as
/// occluders: whatever lies behind them is behind a kept edge too.
///
/// Only pixels inside the box `reach` will be tested. A shadow covers `p`
/// only where the segment from `g` to `p` crosses the casting edge, so
/// edges away from the bounding box of `g` and `reach` are skipped.
pub(crate) fn visible_shadow_triangles(
    scene: &Scene,
    gen: &DataEntry,
    config: &EngineConfig,
    reach: (Point2, Point2),
) -> Vec<Triangle> {
    struct Caster<'a> {
        edge: &'a Edge,
        near: f64,
        far: f64,
        /// signed angle from `a` to `b` around `g`
        sweep: f64,
        /// counter-clockwise start of the span, in bins
        start: f64,
    }

    let g = gen.p1;
    let to_bins = OCCLUSION_BINS as f64 / (2.0 * PI);
    let margin = ANGLE_MARGIN * to_bins;
    let angle_bins = |v: Point2| (v.y.atan2(v.x) + PI) * to_bins;
    let pad = Point2::new(WINDOW_MARGIN, WINDOW_MARGIN);
    let window = (
        Point2::new(reach.0.x.min(g.x), reach.0.y.min(g.y)) - pad,
        Point2::new(reach.1.x.max(g.x), reach.1.y.max(g.y)) + pad,
    );
    let mut casters: Vec<Caster> = casting_edges(scene, gen, config, Some(window))
        .map(|edge| {
            let e = &edge.segment;
            let (u, v) = (e.a - g, e.b - g);
            let sweep = u.cross(v).atan2(u.dot(v));
            Caster {
                edge,
                near: point_segment_distance(g, e),
                far: u.norm().max(v.norm()),
                sweep,
                start: angle_bins(if sweep > 0.0 { u } else { v }),
            }
        })
        .collect();
    let usable = |sweep: f64| sweep.abs() >= ANGLE_MARGIN && sweep.abs() <= PI - ANGLE_MARGIN;

    let bin = |x: i64| x.rem_euclid(OCCLUSION_BINS as i64) as usize;
    let mut occ = vec![f64::INFINITY; OCCLUSION_BINS];
    let mut cover = |start: f64, width: f64, far: f64| {
        let first = (start + margin).ceil() as i64;
        let last = (start + width - margin).floor() as i64 - 1;
        for x in first..=last {
            let o = &mut occ[bin(x)];
            *o = o.min(far);
        }
    };
    for c in casters.iter().filter(|c| usable(c.sweep)) {
        cover(c.start, c.sweep.abs() * to_bins, c.far);
    }

    // Runs: casters arrive grouped by obstacle in edge order.
    let mut k = 0;
    while k < casters.len() {
        let (o, mut index) = (casters[k].edge.obstacle, casters[k].edge.index);
        let (mut sweep, mut far, mut len) = (casters[k].sweep, casters[k].far, 1);
        let first = k;
        k += 1;
        while k < casters.len() {
            let c = &casters[k];
            let joins = c.edge.obstacle == o
                && c.edge.index == index + 1
                && usable(c.sweep)
                && c.sweep.signum() == sweep.signum()
                && usable(sweep + c.sweep);
            if !joins {
                break;
            }
            sweep += c.sweep;
            far = far.max(c.far);
            index += 1;
            len += 1;
            k += 1;
        }
        if len > 1 && usable(casters[first].sweep) {
            let start = if sweep > 0.0 {
                casters[first].start
            } else {
                casters[k - 1].start
            };
            cover(start, sweep.abs() * to_bins, far);
        }
    }

    casters.sort_by(|a, b| a.near.total_cmp(&b.near));
    let mut out = Vec::new();
    for c in casters {
        if usable(c.sweep) {
            let first = (c.start - margin).floor() as i64;
            let last = (c.start + c.sweep.abs() * to_bins + margin).floor() as i64;
            if (first..=last).all(|x| occ[bin(x)] + DEPTH_MARGIN < c.near) {
                continue;
            }
        }
        edge_shadow(scene, c.edge, g, config.shadow_vector_factor, &mut out);
    }
    own_wedge(scene, gen, config, &mut out);
    out
}

/// Fan of triangles covering the interior angle of obstacle `o` at vertex
/// `v`, out to `radius`. Every ray from the vertex into that angle enters
/// the obstacle immediately.
fn wedge_triangles(scene: &Scene, o: usize, v: usize, radius: f64, out: &mut Vec<Triangle>) {
    let poly = &scene.obstacles()[o];
    let n = poly.len();
    let g = poly.vertex(v);
    let (Some(u_next), Some(u_prev)) = (
        (poly.vertex(v + 1) - g).normalized(),
        (poly.vertex(v + n - 1) - g).normalized(),
    ) else {
        return;
    };
    let mut angle = u_next.cross(u_prev).atan2(u_next.dot(u_prev));
    if angle <= 0.0 {
        angle += 2.0 * PI;
    }
    let steps = (angle / WEDGE_STEP).ceil().max(1.0) as usize;
    let base = u_next.y.atan2(u_next.x);
    let dir = |k: usize| -> Point2 {
        if k == 0 {
            u_next
        } else if k == steps {
            u_prev
        } else {
            let th = base + angle * k as f64 / steps as f64;
            Point2::new(th.cos(), th.sin())
        }
    };
    for k in 0..steps {
        out.extend(Triangle::new(
            g,
            g + dir(k) * radius,
            g + dir(k + 1) * radius,
        ));
    }
}

/// Rasterizes the shadow of `g_cur` by testing every pixel center.
pub fn shadow_mask(scene: &Scene, g_cur: &DataEntry, config: &EngineConfig) -> StencilGrid {
    let r = config.resolution;
    let domain = scene.domain();
    let tris = shadow_triangles(scene, g_cur, config);
    let mut stencil = StencilGrid::new(r);
    for j in 0..r {
        for i in 0..r {
            let c = pixel_center(&domain, r, i, j);
            if tris.iter().any(|t| t.contains(c)) {
                stencil.set(i, j, true);
            }
        }
    }
    stencil
}
