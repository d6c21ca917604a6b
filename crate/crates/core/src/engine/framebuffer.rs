use crate::geometry::{Point2, Rect};

/// One framebuffer cell: the parent point, the accumulated geodesic distance
/// and the index of the parent entry. Unreached cells carry an infinite
/// distance so a plain `<` doubles as the "nothing stored yet" test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Pixel {
    parent: Point2,
    distance: f64,
    parent_id: u32,
}

impl Pixel {
    pub const UNREACHED: Pixel = Pixel {
        parent: Point2::ORIGIN,
        distance: f64::INFINITY,
        parent_id: u32::MAX,
    };

    pub fn reached(parent: Point2, distance: f64, parent_id: usize) -> Self {
        debug_assert!(distance.is_finite());
        Pixel {
            parent,
            distance,
            parent_id: parent_id as u32,
        }
    }

    #[inline]
    pub fn is_reached(&self) -> bool {
        self.parent_id != u32::MAX
    }

    pub fn parent(&self) -> Option<Point2> {
        self.is_reached().then_some(self.parent)
    }

    pub fn distance(&self) -> Option<f64> {
        self.is_reached().then_some(self.distance)
    }

    pub fn parent_id(&self) -> Option<usize> {
        self.is_reached().then_some(self.parent_id as usize)
    }

    /// Raw distance; infinite when unreached.
    #[inline]
    pub fn depth(&self) -> f64 {
        self.distance
    }
}

/// Square grid of pixels covering the scene domain. Pixel `(i, j)` has its
/// center at `min + ((i + 0.5) * w / r, (j + 0.5) * h / r)`; `j = 0` is the
/// bottom row.
#[derive(Debug, Clone, PartialEq)]
pub struct Framebuffer {
    resolution: usize,
    domain: Rect,
    pixels: Vec<Pixel>,
}

impl Framebuffer {
    pub fn new(resolution: usize, domain: Rect) -> Self {
        assert!(resolution >= 2, "resolution must be at least 2");
        Framebuffer {
            resolution,
            domain,
            pixels: vec![Pixel::UNREACHED; resolution * resolution],
        }
    }

    pub fn from_pixels(resolution: usize, domain: Rect, pixels: Vec<Pixel>) -> Self {
        assert_eq!(pixels.len(), resolution * resolution);
        Framebuffer {
            resolution,
            domain,
            pixels,
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn domain(&self) -> Rect {
        self.domain
    }

    pub fn pixels(&self) -> &[Pixel] {
        &self.pixels
    }

    pub fn pixels_mut(&mut self) -> &mut [Pixel] {
        &mut self.pixels
    }

    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.resolution + i
    }

    pub fn get(&self, i: usize, j: usize) -> &Pixel {
        &self.pixels[self.index(i, j)]
    }

    pub fn pixel_width(&self) -> f64 {
        self.domain.width() / self.resolution as f64
    }

    pub fn pixel_height(&self) -> f64 {
        self.domain.height() / self.resolution as f64
    }

    #[inline]
    pub fn center(&self, i: usize, j: usize) -> Point2 {
        pixel_center(&self.domain, self.resolution, i, j)
    }

    /// Cell containing `p`: half-open `[x_i, x_{i+1})`, with the last cell
    /// closed so every domain point maps somewhere.
    pub fn cell_of(&self, p: Point2) -> Option<(usize, usize)> {
        if !self.domain.contains(p) {
            return None;
        }
        let r = self.resolution;
        let fi = ((p.x - self.domain.min.x) / self.domain.width() * r as f64).floor();
        let fj = ((p.y - self.domain.min.y) / self.domain.height() * r as f64).floor();
        Some(((fi as usize).min(r - 1), (fj as usize).min(r - 1)))
    }

    /// Half of a pixel's diagonal.
    pub fn half_diagonal(&self) -> f64 {
        0.5 * self.pixel_width().hypot(self.pixel_height())
    }
}

#[inline]
pub(crate) fn pixel_center(domain: &Rect, r: usize, i: usize, j: usize) -> Point2 {
    Point2::new(
        domain.min.x + (i as f64 + 0.5) * domain.width() / r as f64,
        domain.min.y + (j as f64 + 0.5) * domain.height() / r as f64,
    )
}

/// Per-pixel shadow flags; `true` means occluded from the current generator.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct StencilGrid {
    resolution: usize,
    cells: Vec<bool>,
}

impl StencilGrid {
    pub fn new(resolution: usize) -> Self {
        StencilGrid {
            resolution,
            cells: vec![false; resolution * resolution],
        }
    }

    pub fn resolution(&self) -> usize {
        self.resolution
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.cells[j * self.resolution + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.cells[j * self.resolution + i] = v;
    }

    pub fn cells(&self) -> &[bool] {
        &self.cells
    }

    pub fn count(&self) -> usize {
        self.cells.iter().filter(|&&c| c).count()
    }
}
