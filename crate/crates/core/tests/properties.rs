use proptest::prelude::*;

use spm_core::engine::{build_spm, EngineConfig, SourceSpec, SpmResult};
use spm_core::geometry::{
    facing_dot, front_facing, point_in_polygon, project_on_segment, PointLocation,
    FRONT_FACING_THRESHOLD,
};
use spm_core::io::{read_spm, write_spm};
use spm_core::oracle::Oracle;
use spm_core::query::{self, extract_isolines};
use spm_core::scenes;
use spm_core::{Point2, Polygon, Scene, Segment2};

fn coord() -> impl Strategy<Value = f64> {
    -1.0..1.0f64
}

fn point() -> impl Strategy<Value = Point2> {
    (coord(), coord()).prop_map(|(x, y)| Point2::new(x, y))
}

fn corpus_scene(k: usize) -> Scene {
    match k % 4 {
        0 => scenes::square_scene().scene,
        1 => scenes::spiral().scene,
        2 => scenes::cluttered().scene,
        _ => scenes::grid(4).scene,
    }
}

/// A corpus scene with one random free source point.
fn scene_with_source() -> impl Strategy<Value = (Scene, SourceSpec)> {
    (0..4usize, -0.98..0.98f64, -0.98..0.98f64).prop_filter_map("source blocked", |(k, x, y)| {
        let scene = corpus_scene(k);
        let sources = SourceSpec::point(Point2::new(x, y));
        sources.validate(&scene).ok()?;
        Some((scene, sources))
    })
}

fn build(scene: &Scene, sources: &SourceSpec, r: usize) -> SpmResult {
    build_spm(scene, sources, &EngineConfig::with_resolution(r)).unwrap()
}

fn to_bytes(spm: &SpmResult) -> Vec<u8> {
    let mut out = Vec::new();
    write_spm(spm, &mut out).unwrap();
    out
}

/// Star-shaped simple polygon around the origin.
fn star_polygon() -> impl Strategy<Value = Polygon> {
    prop::collection::vec((0.2..0.9f64, 0.1..0.9f64), 3..12).prop_map(|spokes| {
        let n = spokes.len() as f64;
        let vs = spokes
            .iter()
            .enumerate()
            .map(|(k, &(radius, jitter))| {
                let a = (k as f64 + jitter) * std::f64::consts::TAU / n;
                Point2::new(radius * a.cos(), radius * a.sin())
            })
            .collect();
        Polygon::new(vs).unwrap()
    })
}

fn winding_number(p: Point2, vs: &[Point2]) -> i32 {
    let mut w = 0;
    for k in 0..vs.len() {
        let (a, b) = (vs[k], vs[(k + 1) % vs.len()]);
        let side = (b - a).cross(p - a);
        if a.y <= p.y && b.y > p.y && side > 0.0 {
            w += 1;
        } else if a.y > p.y && b.y <= p.y && side < 0.0 {
            w -= 1;
        }
    }
    w
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn line_of_sight_is_symmetric(k in 0..4usize, p in point(), q in point()) {
        let scene = corpus_scene(k);
        prop_assert_eq!(scene.line_of_sight(p, q), scene.line_of_sight(q, p));
    }

    #[test]
    fn reversing_an_edge_flips_facing(a in point(), b in point(), g in point()) {
        let Ok(e) = Segment2::new(a, b) else { return Ok(()) };
        let rev = Segment2::new(b, a).unwrap();
        if let (Some(d), Some(r)) = (facing_dot(&e, g), facing_dot(&rev, g)) {
            prop_assert!((d + r).abs() <= 1e-12);
            if d.abs() >= FRONT_FACING_THRESHOLD {
                prop_assert!(front_facing(&e, g) ^ front_facing(&rev, g));
            }
        }
    }

    #[test]
    fn projection_satisfies_pythagoras(p in point(), a in point(), b in point()) {
        let Ok(s) = Segment2::new(a, b) else { return Ok(()) };
        let pr = project_on_segment(p, &s);
        if pr.t > 0.0 && pr.t < 1.0 {
            let len = b.distance(a);
            let want = (p - a).norm_sq() - (pr.t * len).powi(2);
            prop_assert!((pr.dist * pr.dist - want).abs() <= 1e-9);
        }
    }

    #[test]
    fn point_in_polygon_matches_winding(poly in star_polygon(), pts in prop::collection::vec(point(), 1000)) {
        let vs = poly.vertices();
        for p in pts {
            let near_edge = (0..vs.len()).any(|k| {
                let e = Segment2::new(vs[k], vs[(k + 1) % vs.len()]).unwrap();
                project_on_segment(p, &e).dist < 1e-9
            });
            if near_edge {
                continue;
            }
            let inside = winding_number(p, vs) != 0;
            let got = point_in_polygon(p, &poly);
            prop_assert_eq!(got, if inside { PointLocation::Inside } else { PointLocation::Outside }, "{}", p);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn builds_are_deterministic((scene, sources) in scene_with_source(), r in 16..48usize) {
        let a = build(&scene, &sources, r);
        let b = build(&scene, &sources, r);
        prop_assert_eq!(to_bytes(&a), to_bytes(&b));
    }

    #[test]
    fn binary_round_trip((scene, sources) in scene_with_source(), r in 8..40usize) {
        let spm = build(&scene, &sources, r);
        let bytes = to_bytes(&spm);
        let back = read_spm(bytes.as_slice()).unwrap();
        prop_assert_eq!(&back.framebuffer, &spm.framebuffer);
        prop_assert_eq!(&back.data, &spm.data);
        prop_assert_eq!(to_bytes(&back), bytes);
    }

    #[test]
    fn pixels_agree_with_their_parents((scene, sources) in scene_with_source()) {
        let spm = build(&scene, &sources, 40);
        let fb = &spm.framebuffer;
        for j in 0..40 {
            for i in 0..40 {
                let px = fb.get(i, j);
                let Some(id) = px.parent_id() else { continue };
                let want = spm.data.get(id).distance_via(fb.center(i, j)).unwrap();
                let got = px.distance().unwrap();
                prop_assert!((got - want).abs() <= 1e-12 * want.max(1.0));
            }
        }
    }

    #[test]
    fn oracle_bounds_engine_from_below((scene, sources) in scene_with_source()) {
        let r = 40;
        let spm = build(&scene, &sources, r);
        let oracle = Oracle::new(&scene, &sources);
        let fb = &spm.framebuffer;
        for j in 0..r {
            for i in 0..r {
                if let Some(d) = fb.get(i, j).distance() {
                    let exact = oracle.distance(fb.center(i, j));
                    prop_assert!(d >= exact - 1e-9, "pixel ({}, {}): engine {} oracle {}", i, j, d, exact);
                }
            }
        }
    }

    #[test]
    fn path_length_matches_distance(
        (scene, sources) in scene_with_source(),
        queries in prop::collection::vec(point(), 20),
    ) {
        let spm = build(&scene, &sources, 48);
        for p in queries {
            let Ok(d) = query::distance(p, &spm) else { continue };
            let path = query::shortest_path(p, &spm, false).unwrap();
            // only meaningful where the pixel's parent is visible from p
            if scene.line_of_sight(p, path.points[1.min(path.points.len() - 1)]) {
                prop_assert!((path.length - d).abs() <= 1e-9, "{}: {} vs {}", p, path.length, d);
            }
            let stored: Vec<f64> = path.points[1..]
                .iter()
                .map(|q| stored_distance(&spm, *q))
                .collect();
            prop_assert!(stored.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn exact_distance_is_lipschitz((scene, sources) in scene_with_source(), pairs in prop::collection::vec((point(), point()), 30)) {
        let oracle = Oracle::new(&scene, &sources);
        for (p, q) in pairs {
            if scene.is_blocked(p) || scene.is_blocked(q) || !scene.line_of_sight(p, q) {
                continue;
            }
            let (dp, dq) = (oracle.distance(p), oracle.distance(q));
            prop_assert!((dp - dq).abs() <= p.distance(q) + 1e-9);
        }
    }

    #[test]
    fn isolines_nest((scene, sources) in scene_with_source(), a in 0.1..1.5f64, gap in 0.05..1.0f64) {
        let r = 48;
        let spm = build(&scene, &sources, r);
        let b = a + gap;
        let iso = extract_isolines(&spm, &[a, b]);
        let fb = &spm.framebuffer;
        let value = |p: Point2| -> f64 {
            // vertices lie on grid edges: interpolate along the edge they sit on
            let (w, h) = (fb.pixel_width(), fb.pixel_height());
            let d = fb.domain();
            let (u, v) = ((p.x - d.min.x) / w - 0.5, (p.y - d.min.y) / h - 0.5);
            let at = |i: f64, j: f64| fb.get(i as usize, j as usize).distance().unwrap();
            if (u - u.round()).abs() < 1e-9 {
                let (i, j) = (u.round(), v.floor());
                at(i, j) * (1.0 - (v - j)) + at(i, j + 1.0) * (v - j)
            } else {
                let (i, j) = (u.floor(), v.round());
                at(i, j) * (1.0 - (u - i)) + at(i + 1.0, j) * (u - i)
            }
        };
        for line in &iso[0].polylines {
            for p in line {
                prop_assert!(value(*p) <= b, "{}", p);
                prop_assert!((value(*p) - a).abs() <= 1e-9);
            }
        }
    }
}

/// Smallest stored distance among entries sitting at `q`.
fn stored_distance(spm: &SpmResult, q: Point2) -> f64 {
    spm.data
        .entries()
        .iter()
        .skip(1)
        .filter(|e| e.p1 == q || (e.is_segment() && e.reach(q).0 == 0.0))
        .filter_map(|e| e.distance)
        .fold(f64::INFINITY, f64::min)
}

#[test]
fn isolines_nest_geometrically_without_obstacles() {
    let r = 96;
    let s = Point2::new(0.11, -0.23);
    let spm = build(&Scene::empty(), &SourceSpec::point(s), r);
    let iso = extract_isolines(&spm, &[0.3, 0.4, 0.7]);
    for w in iso.windows(2) {
        let outer_min = w[1].polylines.iter().flatten().map(|p| p.distance(s)).fold(f64::INFINITY, f64::min);
        let inner_max = w[0].polylines.iter().flatten().map(|p| p.distance(s)).fold(0.0, f64::max);
        assert!(inner_max < outer_min, "{} vs {}", w[0].level, w[1].level);
    }
}
