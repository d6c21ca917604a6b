use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use crate::engine::SpmResult;

use super::IoError;

/// 8-bit RGB raster, rows stored top to bottom.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    pub width: usize,
    pub height: usize,
    pub data: Vec<u8>,
}

impl RgbImage {
    fn black(width: usize, height: usize) -> Self {
        RgbImage {
            width,
            height,
            data: vec![0; width * height * 3],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [u8; 3] {
        let k = 3 * (y * self.width + x);
        [self.data[k], self.data[k + 1], self.data[k + 2]]
    }

    fn set(&mut self, x: usize, y: usize, rgb: [u8; 3]) {
        let k = 3 * (y * self.width + x);
        self.data[k..k + 3].copy_from_slice(&rgb);
    }
}

/// Binary P6 encoding.
pub fn write_ppm(img: &RgbImage, mut out: impl Write) -> std::io::Result<()> {
    write!(out, "P6\n{} {}\n255\n", img.width, img.height)?;
    out.write_all(&img.data)?;
    out.flush()
}

/// Maps `t` in [0, 1] to 0..=255 with every level equally wide.
fn quantize(t: f64) -> u8 {
    (t.clamp(0.0, 1.0) * 255.999).floor() as u8
}

/// Each reached pixel colored by its parent point: red from x, green from
/// y, both normalized over the domain. Unreached pixels are black.
pub fn region_image(spm: &SpmResult) -> RgbImage {
    let fb = &spm.framebuffer;
    let r = fb.resolution();
    let d = fb.domain();
    let mut img = RgbImage::black(r, r);
    for j in 0..r {
        for i in 0..r {
            if let Some(p) = fb.get(i, j).parent() {
                let red = quantize((p.x - d.min.x) / d.width());
                let green = quantize((p.y - d.min.y) / d.height());
                img.set(i, r - 1 - j, [red, green, 0]);
            }
        }
    }
    img
}

/// Grayscale distance field scaled to the largest reached distance, with
/// white rings on pixels within half a pixel of a positive multiple of
/// `spacing`. Unreached pixels are black. The field itself tops out at 254
/// so rings stay distinguishable.
pub fn distance_image(spm: &SpmResult, spacing: f64) -> RgbImage {
    assert!(spacing > 0.0, "isoline spacing must be positive");
    let fb = &spm.framebuffer;
    let r = fb.resolution();
    let half = 0.5 * fb.pixel_width().max(fb.pixel_height());
    let max = fb
        .pixels()
        .iter()
        .filter_map(|p| p.distance())
        .fold(0.0, f64::max);
    let mut img = RgbImage::black(r, r);
    for j in 0..r {
        for i in 0..r {
            let Some(v) = fb.get(i, j).distance() else {
                continue;
            };
            let k = (v / spacing).round();
            let gray = if k >= 1.0 && (v - k * spacing).abs() <= half {
                255
            } else if max > 0.0 {
                ((v / max).clamp(0.0, 1.0) * 254.999).floor() as u8
            } else {
                0
            };
            img.set(i, r - 1 - j, [gray; 3]);
        }
    }
    img
}

fn save(img: &RgbImage, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(IoError::at(path))?;
    write_ppm(img, BufWriter::new(file)).map_err(IoError::at(path))
}

pub fn export_region_image(spm: &SpmResult, path: &Path) -> Result<(), IoError> {
    save(&region_image(spm), path)
}

pub fn export_distance_image(spm: &SpmResult, path: &Path, spacing: f64) -> Result<(), IoError> {
    save(&distance_image(spm, spacing), path)
}

#[cfg(test)]
mod tests {
    use std::collections::HashSet;

    use super::*;
    use crate::engine::{build_spm, EngineConfig, SourceSpec};
    use crate::geometry::{Point2, Scene};
    use crate::scenes;

    fn empty_center(r: usize) -> SpmResult {
        build_spm(
            &Scene::empty(),
            &SourceSpec::point(Point2::ORIGIN),
            &EngineConfig::with_resolution(r),
        )
        .unwrap()
    }

    #[test]
    fn header_format() {
        let img = RgbImage::black(3, 2);
        let mut out = Vec::new();
        write_ppm(&img, &mut out).unwrap();
        assert_eq!(&out[..11], b"P6\n3 2\n255\n");
        assert_eq!(out.len(), 11 + 18);
    }

    #[test]
    fn single_region_is_uniform() {
        let img = region_image(&empty_center(16));
        let colors: HashSet<[u8; 3]> = (0..16)
            .flat_map(|y| (0..16).map(move |x| (x, y)))
            .map(|(x, y)| img.pixel(x, y))
            .collect();
        assert_eq!(colors.into_iter().collect::<Vec<_>>(), vec![[127, 127, 0]]);
    }

    #[test]
    fn square_regions() {
        let c = scenes::square_scene();
        let spm = build_spm(&c.scene, &c.sources, &EngineConfig::with_resolution(64)).unwrap();
        let img = region_image(&spm);
        let colors: HashSet<[u8; 3]> = img.data.chunks(3).map(|c| [c[0], c[1], c[2]]).collect();
        // source, four corners, black interior
        assert!(colors.len() >= 6, "{colors:?}");
        assert_eq!(img.pixel(32, 32), [0, 0, 0]);
        // the top row of the image is the top of the domain
        let top = spm.framebuffer.get(10, 63).parent().unwrap();
        let want = [quantize((top.x + 1.0) / 2.0), quantize((top.y + 1.0) / 2.0), 0];
        assert_eq!(img.pixel(10, 0), want);
    }

    #[test]
    fn rings() {
        let spm = empty_center(64);
        let img = distance_image(&spm, 0.25);
        let fb = &spm.framebuffer;
        let mut white = 0;
        for j in 0..64 {
            for i in 0..64 {
                let d = fb.get(i, j).distance().unwrap();
                let on_ring = [0.25, 0.5, 0.75, 1.0, 1.25]
                    .iter()
                    .any(|l| (d - l).abs() <= 1.0 / 64.0);
                if img.pixel(i, 63 - j) == [255; 3] {
                    white += 1;
                    assert!(on_ring, "{i} {j} {d}");
                }
            }
        }
        assert!(white > 100);
        let plain = distance_image(&spm, 10.0);
        assert!(plain.data.iter().all(|&v| v < 255));
    }

    #[test]
    fn rings_avoid_obstacle_interior() {
        let c = scenes::square_scene();
        let spm = build_spm(&c.scene, &c.sources, &EngineConfig::with_resolution(64)).unwrap();
        let img = distance_image(&spm, 0.2);
        for j in 0..64 {
            for i in 0..64 {
                if img.pixel(i, 63 - j) == [255; 3] {
                    assert!(spm.framebuffer.get(i, j).is_reached());
                }
            }
        }
        assert_eq!(img.pixel(32, 32), [0, 0, 0]);
    }
}
