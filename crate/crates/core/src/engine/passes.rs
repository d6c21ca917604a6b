//! The per-iteration raster and vertex passes.
//!
//! [`cone_pass`] and [`distance_pass`] are the reference forms that operate
//! on a full stencil. [`TiledRaster`] fuses stencil and cone into one pass
//! over 16x16 tiles, skipping tiles the current cone cannot improve or that
//! lie wholly in shadow. Both produce identical pixels; the fused form is
//! what `build_spm` runs.

use rayon::prelude::*;

use crate::geometry::{point_segment_distance, Point2, Rect, Scene, Segment2};

use super::data::{DataArray, DataEntry, Status};
use super::framebuffer::{pixel_center, Framebuffer, Pixel, StencilGrid};
use super::shadow::Triangle;

const TILE: usize = 16;
/// Side of the sub-tile blocks culled and shadow-tested as a unit.
const BLOCK: usize = 4;
/// Slack on box-vs-triangle verdicts, well above the rounding of an edge
/// function evaluated inside the domain.
const BOX_MARGIN: f64 = 1e-10;

/// Writes the clipped cone of `g_cur` into every unshadowed pixel it improves.
///
/// Point generators use the Euclidean distance; sub-segment generators use
/// the clamped projection. Sub-segments ignore `stencil` and test visibility
/// of each pixel's foot point exactly, which requires `scene`.
pub fn cone_pass(fb: &mut Framebuffer, stencil: &StencilGrid, g_cur: &DataEntry, scene: &Scene) {
    let r = fb.resolution();
    let domain = fb.domain();
    let base = g_cur.distance.expect("generator has a distance");
    let id = g_cur.original_index;
    let segment = g_cur.is_segment();
    for j in 0..r {
        for i in 0..r {
            if !segment && stencil.get(i, j) {
                continue;
            }
            let c = pixel_center(&domain, r, i, j);
            let (d, contact) = g_cur.reach(c);
            let new_dist = base + d;
            let px = &mut fb.pixels_mut()[j * r + i];
            if new_dist < px.depth() && (!segment || scene.line_of_sight(c, contact)) {
                *px = Pixel::reached(contact, new_dist, id);
            }
        }
    }
}

/// Relaxes every unexpanded obstacle vertex visible from `g_cur`.
pub fn distance_pass(data: &mut DataArray, scene: &Scene) {
    let g = *data.current();
    let base = g.distance.expect("generator has a distance");
    data.entries_mut()[1..].par_iter_mut().for_each(|v| {
        if v.status != Status::Obstacle {
            return;
        }
        let (d, contact) = g.reach(v.p1);
        let new_dist = base + d;
        if v.distance.is_none_or(|cur| new_dist < cur) && scene.line_of_sight(v.p1, contact) {
            v.distance = Some(new_dist);
            v.parent_id = Some(g.original_index);
        }
    });
}

/// Fused stencil + cone pass over 16x16 tiles.
///
/// A quadtree descent over the tiles drops nodes the cone cannot improve
/// and nodes covered by a single shadow triangle, narrowing the triangle
/// list on the way down. Surviving tiles are then filled in parallel.
#[derive(Debug)]
pub(crate) struct TiledRaster {
    r: usize,
    domain: Rect,
    tiles_x: usize,
    /// Smallest power of two covering `tiles_x`.
    span: usize,
    /// Pixel centers strictly inside an obstacle; never written.
    blocked: Vec<bool>,
    /// Per tile: the largest depth among its free pixels (`+inf` if any is
    /// unreached, `-inf` if the tile has no free pixel).
    tile_max: Vec<f64>,
}

/// A tile to fill and the triangles that may shadow part of it.
type TileWork = (usize, Vec<u32>);

impl TiledRaster {
    pub(crate) fn new(fb: &Framebuffer, scene: &Scene) -> Self {
        let r = fb.resolution();
        let domain = fb.domain();
        let blocked: Vec<bool> = (0..r * r)
            .into_par_iter()
            .map(|k| scene.is_blocked(pixel_center(&domain, r, k % r, k / r)))
            .collect();
        let tiles_x = r.div_ceil(TILE);
        let mut raster = TiledRaster {
            r,
            domain,
            tiles_x,
            span: tiles_x.next_power_of_two(),
            blocked,
            tile_max: vec![0.0; tiles_x * tiles_x],
        };
        for ty in 0..tiles_x {
            for tx in 0..tiles_x {
                let m = raster.compute_tile_max(fb.pixels(), tx, ty);
                raster.tile_max[ty * tiles_x + tx] = m;
            }
        }
        raster
    }

    pub(crate) fn blocked(&self) -> &[bool] {
        &self.blocked
    }

    fn compute_tile_max(&self, pixels: &[Pixel], tx: usize, ty: usize) -> f64 {
        let r = self.r;
        let mut m = f64::NEG_INFINITY;
        for j in ty * TILE..((ty + 1) * TILE).min(r) {
            for i in tx * TILE..((tx + 1) * TILE).min(r) {
                let k = j * r + i;
                if !self.blocked[k] {
                    m = m.max(pixels[k].depth());
                }
            }
        }
        m
    }

    /// Box spanned by the pixel centers of tiles `[tx0, tx1) x [ty0, ty1)`.
    fn center_box(&self, tx0: usize, ty0: usize, tx1: usize, ty1: usize) -> (Point2, Point2) {
        let r = self.r;
        let lo = pixel_center(&self.domain, r, tx0 * TILE, ty0 * TILE);
        let hi = pixel_center(
            &self.domain,
            r,
            (tx1 * TILE).min(r) - 1,
            (ty1 * TILE).min(r) - 1,
        );
        (lo, hi)
    }

    /// Grows `bbox` (tile ranges, inclusive) over the tiles where `g` could
    /// lower some depth, ignoring shadows.
    fn reach_box(
        &self,
        tx0: usize,
        ty0: usize,
        size: usize,
        g: &DataEntry,
        base: f64,
        bbox: &mut [usize; 4],
    ) {
        let n = self.tiles_x;
        if tx0 >= n || ty0 >= n {
            return;
        }
        let (tx1, ty1) = ((tx0 + size).min(n), (ty0 + size).min(n));
        if tx0 >= bbox[0] && tx1 <= bbox[2] + 1 && ty0 >= bbox[1] && ty1 <= bbox[3] + 1 {
            return;
        }
        let mut node_max = f64::NEG_INFINITY;
        for ty in ty0..ty1 {
            for &m in &self.tile_max[ty * n + tx0..ty * n + tx1] {
                node_max = node_max.max(m);
            }
        }
        let (lo, hi) = self.center_box(tx0, ty0, tx1, ty1);
        if node_max == f64::NEG_INFINITY || base + lower_bound(g, lo, hi) > node_max {
            return;
        }
        if size == 1 {
            *bbox = [
                bbox[0].min(tx0),
                bbox[1].min(ty0),
                bbox[2].max(tx0),
                bbox[3].max(ty0),
            ];
            return;
        }
        let h = size / 2;
        for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
            self.reach_box(tx0 + dx, ty0 + dy, h, g, base, bbox);
        }
    }

    #[allow(clippy::too_many_arguments)]
    fn descend(
        &self,
        tx0: usize,
        ty0: usize,
        size: usize,
        g: &DataEntry,
        base: f64,
        tris: &[Triangle],
        tri_lb: &[f64],
        candidates: &[u32],
        work: &mut [Vec<TileWork>],
    ) {
        let n = self.tiles_x;
        if tx0 >= n || ty0 >= n {
            return;
        }
        let (tx1, ty1) = ((tx0 + size).min(n), (ty0 + size).min(n));
        let mut node_max = f64::NEG_INFINITY;
        for ty in ty0..ty1 {
            for &m in &self.tile_max[ty * n + tx0..ty * n + tx1] {
                node_max = node_max.max(m);
            }
        }
        if node_max == f64::NEG_INFINITY {
            return;
        }
        let (lo, hi) = self.center_box(tx0, ty0, tx1, ty1);
        if base + lower_bound(g, lo, hi) > node_max {
            return;
        }
        let mut keep = Vec::with_capacity(candidates.len());
        for &t in candidates {
            if tri_lb[t as usize] > node_max {
                continue;
            }
            match tris[t as usize].classify_box(lo, hi, BOX_MARGIN) {
                Some(true) => return,
                Some(false) => {}
                None => keep.push(t),
            }
        }
        if size == 1 {
            work[ty0].push((tx0, keep));
            return;
        }
        let h = size / 2;
        for (dx, dy) in [(0, 0), (h, 0), (0, h), (h, h)] {
            self.descend(tx0 + dx, ty0 + dy, h, g, base, tris, tri_lb, &keep, work);
        }
    }

    /// Bounding box of the pixel centers whose depth `g` could lower,
    /// ignoring shadows. `None` when there are none.
    pub(crate) fn reach(&self, g: &DataEntry) -> Option<(Point2, Point2)> {
        let base = g.distance.expect("generator has a distance");
        let mut bbox = [usize::MAX, usize::MAX, 0, 0];
        self.reach_box(0, 0, self.span, g, base, &mut bbox);
        (bbox[0] != usize::MAX).then(|| self.center_box(bbox[0], bbox[1], bbox[2] + 1, bbox[3] + 1))
    }

    /// Applies the cone of `g` (with shadow `tris` for point generators) to
    /// the pixels in `reach`.
    pub(crate) fn apply(
        &mut self,
        fb: &mut Framebuffer,
        g: &DataEntry,
        tris: &[Triangle],
        scene: &Scene,
        reach: (Point2, Point2),
    ) {
        let r = self.r;
        let tiles_x = self.tiles_x;
        let domain = self.domain;
        let base = g.distance.expect("generator has a distance");
        let id = g.original_index;
        let segment = g.is_segment();

        let (lo, hi) = reach;
        let all: Vec<u32> = if segment {
            Vec::new()
        } else {
            (0..tris.len() as u32)
                .filter(|&t| tris[t as usize].overlaps_box(lo, hi))
                .collect()
        };
        // No pixel inside triangle t can end up below tri_lb[t], so nodes
        // whose depths are all smaller can ignore it.
        let tri_lb: Vec<f64> = tris
            .iter()
            .map(|t| base + shave(triangle_distance(g.p1, t)))
            .collect();
        let mut work: Vec<Vec<TileWork>> = vec![Vec::new(); tiles_x];
        self.descend(0, 0, self.span, g, base, tris, &tri_lb, &all, &mut work);

        let blocked = &self.blocked;
        fb.pixels_mut()
            .par_chunks_mut(TILE * r)
            .zip(self.tile_max.par_chunks_mut(tiles_x))
            .zip(work.par_iter())
            .enumerate()
            .for_each(|(ty, ((rows, maxes), items))| {
                let j0 = ty * TILE;
                let j1 = (j0 + TILE).min(r);
                let mut block_tris: Vec<u32> = Vec::new();
                for (tx, local) in items {
                    let i0 = tx * TILE;
                    let i1 = (i0 + TILE).min(r);
                    let mut changed = false;
                    for bj in (j0..j1).step_by(BLOCK) {
                        for bi in (i0..i1).step_by(BLOCK) {
                            let (bj1, bi1) = ((bj + BLOCK).min(j1), (bi + BLOCK).min(i1));
                            let mut block_max = f64::NEG_INFINITY;
                            for j in bj..bj1 {
                                for i in bi..bi1 {
                                    if !blocked[j * r + i] {
                                        block_max = block_max.max(rows[(j - j0) * r + i].depth());
                                    }
                                }
                            }
                            if block_max == f64::NEG_INFINITY {
                                continue;
                            }
                            let lo = pixel_center(&domain, r, bi, bj);
                            let hi = pixel_center(&domain, r, bi1 - 1, bj1 - 1);
                            if base + lower_bound(g, lo, hi) > block_max {
                                continue;
                            }
                            block_tris.clear();
                            let mut covered = false;
                            for &t in local {
                                if tri_lb[t as usize] > block_max {
                                    continue;
                                }
                                match tris[t as usize].classify_box(lo, hi, BOX_MARGIN) {
                                    Some(true) => {
                                        covered = true;
                                        break;
                                    }
                                    Some(false) => {}
                                    None => block_tris.push(t),
                                }
                            }
                            if covered {
                                continue;
                            }

                            for j in bj..bj1 {
                                for i in bi..bi1 {
                                    let k = j * r + i;
                                    if blocked[k] {
                                        continue;
                                    }
                                    let c = pixel_center(&domain, r, i, j);
                                    let (d, contact) = g.reach(c);
                                    let new_dist = base + d;
                                    let px = &mut rows[(j - j0) * r + i];
                                    if !(new_dist < px.depth()) {
                                        continue;
                                    }
                                    let visible = if segment {
                                        scene.line_of_sight(c, contact)
                                    } else {
                                        !block_tris.iter().any(|&t| tris[t as usize].contains(c))
                                    };
                                    if visible {
                                        *px = Pixel::reached(contact, new_dist, id);
                                        changed = true;
                                    }
                                }
                            }
                        }
                    }
                    if changed {
                        let mut m = f64::NEG_INFINITY;
                        for j in j0..j1 {
                            for i in i0..i1 {
                                if !blocked[j * r + i] {
                                    m = m.max(rows[(j - j0) * r + i].depth());
                                }
                            }
                        }
                        maxes[*tx] = m;
                    }
                }
            });
    }
}

/// Lower bound on the distance from `g` to any point of the box `[lo, hi]`,
/// shaved slightly so rounding never culls a pixel the cone would improve.
fn lower_bound(g: &DataEntry, lo: Point2, hi: Point2) -> f64 {
    let d = if g.is_segment() {
        let center = lo.midpoint(hi);
        let half = 0.5 * (hi - lo).norm();
        (g.reach(center).0 - half).max(0.0)
    } else {
        let p = g.p1;
        let dx = (lo.x - p.x).max(0.0).max(p.x - hi.x);
        let dy = (lo.y - p.y).max(0.0).max(p.y - hi.y);
        (dx * dx + dy * dy).sqrt()
    };
    shave(d)
}

#[inline]
fn shave(d: f64) -> f64 {
    (d * (1.0 - 1e-12) - 1e-12).max(0.0)
}

/// Distance from `p` to the closed triangle `t`.
fn triangle_distance(p: Point2, t: &Triangle) -> f64 {
    if t.contains(p) {
        return 0.0;
    }
    [(t.a, t.b), (t.b, t.c), (t.c, t.a)]
        .iter()
        .map(|&(a, b)| point_segment_distance(p, &Segment2 { a, b }))
        .fold(f64::INFINITY, f64::min)
}
