use std::ops::ControlFlow;

use super::scene::{Edge, Rect};
use super::{Point2, Polygon};

const PAD: f64 = 1e-9;

/// Uniform bucket grid over the domain used to cull edge and polygon tests.
#[derive(Debug, Clone)]
pub struct EdgeGrid {
    origin: Point2,
    cell_w: f64,
    cell_h: f64,
    nx: usize,
    ny: usize,
    edge_cells: Vec<Vec<u32>>,
    poly_cells: Vec<Vec<u32>>,
}

impl EdgeGrid {
    pub(crate) fn build(domain: Rect, obstacles: &[Polygon], edges: &[Edge]) -> Self {
        let n = ((edges.len() as f64).sqrt().ceil() as usize).clamp(1, 64);
        let mut grid = EdgeGrid {
            origin: domain.min,
            cell_w: domain.width() / n as f64,
            cell_h: domain.height() / n as f64,
            nx: n,
            ny: n,
            edge_cells: vec![Vec::new(); n * n],
            poly_cells: vec![Vec::new(); n * n],
        };
        for (ei, e) in edges.iter().enumerate() {
            let s = e.segment;
            let lo = Point2::new(s.a.x.min(s.b.x), s.a.y.min(s.b.y));
            let hi = Point2::new(s.a.x.max(s.b.x), s.a.y.max(s.b.y));
            grid.visit_box(lo, hi, |c, g| g.edge_cells[c].push(ei as u32));
        }
        for (pi, poly) in obstacles.iter().enumerate() {
            let (lo, hi) = poly.bounds();
            grid.visit_box(lo, hi, |c, g| g.poly_cells[c].push(pi as u32));
        }
        grid
    }

    fn col(&self, x: f64) -> usize {
        let c = ((x - self.origin.x) / self.cell_w).floor();
        if c < 0.0 {
            0
        } else {
            (c as usize).min(self.nx - 1)
        }
    }

    fn row(&self, y: f64) -> usize {
        let r = ((y - self.origin.y) / self.cell_h).floor();
        if r < 0.0 {
            0
        } else {
            (r as usize).min(self.ny - 1)
        }
    }

    fn visit_box(&mut self, lo: Point2, hi: Point2, mut f: impl FnMut(usize, &mut Self)) {
        let (c0, c1) = (self.col(lo.x - PAD), self.col(hi.x + PAD));
        let (r0, r1) = (self.row(lo.y - PAD), self.row(hi.y + PAD));
        for r in r0..=r1 {
            for c in c0..=c1 {
                f(r * self.nx + c, self);
            }
        }
    }

    /// Obstacles whose bounding boxes touch the cell containing `p`.
    pub fn polygons_near(&self, p: Point2) -> &[u32] {
        &self.poly_cells[self.row(p.y) * self.nx + self.col(p.x)]
    }

    /// Calls `f` with every edge id bucketed in a cell crossed by segment
    /// `pq`. Ids may repeat. Returns `true` if `f` broke out early.
    pub fn for_each_edge_along(
        &self,
        p: Point2,
        q: Point2,
        mut f: impl FnMut(u32) -> ControlFlow<()>,
    ) -> bool {
        let (ylo, yhi) = (p.y.min(q.y), p.y.max(q.y));
        let (xlo, xhi) = (p.x.min(q.x), p.x.max(q.x));
        let (r0, r1) = (self.row(ylo - PAD), self.row(yhi + PAD));
        let dy = q.y - p.y;
        for r in r0..=r1 {
            let band_lo = (self.origin.y + r as f64 * self.cell_h).max(ylo);
            let band_hi = (self.origin.y + (r + 1) as f64 * self.cell_h).min(yhi);
            let (mut x0, mut x1) = if dy.abs() <= f64::EPSILON * 16.0 {
                (xlo, xhi)
            } else {
                let xa = p.x + (q.x - p.x) * ((band_lo - p.y) / dy);
                let xb = p.x + (q.x - p.x) * ((band_hi - p.y) / dy);
                (xa.min(xb), xa.max(xb))
            };
            x0 = x0.max(xlo);
            x1 = x1.min(xhi);
            let (c0, c1) = (self.col(x0 - PAD), self.col(x1 + PAD));
            for c in c0..=c1 {
                for &ei in &self.edge_cells[r * self.nx + c] {
                    if f(ei).is_break() {
                        return true;
                    }
                }
            }
        }
        false
    }
}
