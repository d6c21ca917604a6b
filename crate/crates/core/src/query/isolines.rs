//! Marching squares over the pixel-center distance grid.

use std::collections::HashMap;

use crate::engine::SpmResult;
use crate::geometry::Point2;

/// Contour fragments of one level. Closed fragments repeat their first
/// point at the end.
#[derive(Debug, Clone, PartialEq)]
pub struct Isoline {
    pub level: f64,
    pub polylines: Vec<Vec<Point2>>,
}

/// Grid edges are keyed by their lower-left corner and orientation, so the
/// crossing on an edge shared by two cells is computed once.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
enum GridEdge {
    /// (i, j) to (i + 1, j)
    H(usize, usize),
    /// (i, j) to (i, j + 1)
    V(usize, usize),
}

/// Contours `spm`'s distance field at each of `levels`. Cells with an
/// unreached corner are skipped; saddles are resolved by the average of the
/// four corners.
pub fn extract_isolines(spm: &SpmResult, levels: &[f64]) -> Vec<Isoline> {
    levels
        .iter()
        .map(|&level| Isoline {
            level,
            polylines: contour(spm, level),
        })
        .collect()
}

fn contour(spm: &SpmResult, level: f64) -> Vec<Vec<Point2>> {
    let fb = &spm.framebuffer;
    let r = fb.resolution();
    let value = |i: usize, j: usize| fb.get(i, j).distance();
    let crossing = |e: GridEdge| -> Point2 {
        let (a, b) = match e {
            GridEdge::H(i, j) => ((i, j), (i + 1, j)),
            GridEdge::V(i, j) => ((i, j), (i, j + 1)),
        };
        let (va, vb) = (value(a.0, a.1).unwrap(), value(b.0, b.1).unwrap());
        let t = (level - va) / (vb - va);
        fb.center(a.0, a.1).lerp(fb.center(b.0, b.1), t)
    };

    let mut segments: Vec<[GridEdge; 2]> = Vec::new();
    for j in 0..r - 1 {
        for i in 0..r - 1 {
            let corners = [(i, j), (i + 1, j), (i + 1, j + 1), (i, j + 1)];
            let mut vals = [0.0; 4];
            let mut skip = false;
            for (k, &(ci, cj)) in corners.iter().enumerate() {
                match value(ci, cj) {
                    Some(v) => vals[k] = v,
                    None => skip = true,
                }
            }
            if skip {
                continue;
            }
            let inside = vals.map(|v| v >= level);
            // bottom, right, top, left
            let edges = [
                GridEdge::H(i, j),
                GridEdge::V(i + 1, j),
                GridEdge::H(i, j + 1),
                GridEdge::V(i, j),
            ];
            let crosses: Vec<usize> = (0..4)
                .filter(|&k| inside[k] != inside[(k + 1) % 4])
                .collect();
            match crosses.len() {
                0 => {}
                2 => segments.push([edges[crosses[0]], edges[crosses[1]]]),
                _ => {
                    // Saddle: cut off the two corners that disagree with the center.
                    let center = vals.iter().sum::<f64>() / 4.0 >= level;
                    for k in 0..4 {
                        if inside[k] != center {
                            segments.push([edges[(k + 3) % 4], edges[k]]);
                        }
                    }
                }
            }
        }
    }
    stitch(&segments, crossing)
}

fn stitch(segments: &[[GridEdge; 2]], point: impl Fn(GridEdge) -> Point2) -> Vec<Vec<Point2>> {
    let mut at: HashMap<GridEdge, Vec<usize>> = HashMap::new();
    for (s, ends) in segments.iter().enumerate() {
        for e in ends {
            at.entry(*e).or_default().push(s);
        }
    }
    let mut used = vec![false; segments.len()];
    let mut out = Vec::new();
    let walk = |start_seg: usize, start: GridEdge, used: &mut Vec<bool>| {
        let mut pts = vec![point(start)];
        let (mut seg, mut from) = (start_seg, start);
        loop {
            used[seg] = true;
            let [a, b] = segments[seg];
            let to = if a == from { b } else { a };
            pts.push(point(to));
            match at[&to].iter().find(|&&s| !used[s]) {
                Some(&next) => {
                    seg = next;
                    from = to;
                }
                None => break,
            }
        }
        pts
    };
    // open fragments first, starting at their free ends
    for s in 0..segments.len() {
        if used[s] {
            continue;
        }
        if let Some(&end) = segments[s].iter().find(|e| at[*e].len() == 1) {
            out.push(walk(s, end, &mut used));
        }
    }
    for s in 0..segments.len() {
        if !used[s] {
            out.push(walk(s, segments[s][0], &mut used));
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{build_spm, EngineConfig, SourceSpec};
    use crate::geometry::Scene;

    #[test]
    fn circle_around_source() {
        let r = 128;
        let spm = build_spm(
            &Scene::empty(),
            &SourceSpec::point(Point2::ORIGIN),
            &EngineConfig::with_resolution(r),
        )
        .unwrap();
        let iso = extract_isolines(&spm, &[0.5]);
        assert_eq!(iso.len(), 1);
        assert_eq!(iso[0].polylines.len(), 1);
        let ring = &iso[0].polylines[0];
        assert_eq!(ring.first(), ring.last());
        assert!(ring.len() > 50);
        for p in ring {
            assert!((p.norm() - 0.5).abs() <= 2.0 / r as f64, "{p}");
        }
    }

    #[test]
    fn out_of_range_levels() {
        let spm = build_spm(
            &Scene::empty(),
            &SourceSpec::point(Point2::new(0.1, 0.1)),
            &EngineConfig::with_resolution(32),
        )
        .unwrap();
        let iso = extract_isolines(&spm, &[0.0, 10.0]);
        assert!(iso[0].polylines.is_empty());
        assert!(iso[1].polylines.is_empty());
    }

    #[test]
    fn saddle_resolution() {
        // Two sources with a level between them and the bisector value.
        let sources = SourceSpec {
            points: vec![Point2::new(-0.3, 0.0), Point2::new(0.3, 0.0)],
            segments: vec![],
        };
        let spm = build_spm(
            &Scene::empty(),
            &sources,
            &EngineConfig::with_resolution(64),
        )
        .unwrap();
        let iso = extract_isolines(&spm, &[0.2, 0.4]);
        // two separate circles, then one merged contour
        assert_eq!(iso[0].polylines.len(), 2);
        assert_eq!(iso[1].polylines.len(), 1);
    }
}
