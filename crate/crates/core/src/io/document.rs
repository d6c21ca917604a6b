use serde::{Deserialize, Serialize};

use crate::engine::SourceSpec;
use crate::geometry::{Point2, Polygon, Rect, Scene, SceneError, Segment2};

use super::IoError;

pub const DOCUMENT_VERSION: u32 = 1;

/// On-disk scene description. Points are `[x, y]` pairs; the domain is
/// `[[min_x, min_y], [max_x, max_y]]` and defaults to `[-1, 1]²`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SceneDocument {
    pub version: u32,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub domain: Option<[[f64; 2]; 2]>,
    #[serde(default)]
    pub obstacles: Vec<Vec<[f64; 2]>>,
    #[serde(default)]
    pub source_points: Vec<[f64; 2]>,
    #[serde(default)]
    pub source_segments: Vec<[[f64; 2]; 2]>,
}

fn pt([x, y]: [f64; 2]) -> Point2 {
    Point2::new(x, y)
}

impl SceneDocument {
    pub fn from_scene(scene: &Scene, sources: &SourceSpec) -> Self {
        let xy = |p: Point2| [p.x, p.y];
        let d = scene.domain();
        SceneDocument {
            version: DOCUMENT_VERSION,
            domain: (d != Rect::UNIT).then(|| [xy(d.min), xy(d.max)]),
            obstacles: scene
                .obstacles()
                .iter()
                .map(|o| o.vertices().iter().copied().map(xy).collect())
                .collect(),
            source_points: sources.points.iter().copied().map(xy).collect(),
            source_segments: sources
                .segments
                .iter()
                .map(|s| [xy(s.a), xy(s.b)])
                .collect(),
        }
    }

    /// Builds and validates the scene and its sources. Obstacles are
    /// reoriented counter-clockwise.
    pub fn validate(&self) -> Result<(Scene, SourceSpec), IoError> {
        if self.version != DOCUMENT_VERSION {
            return Err(IoError::Version(self.version));
        }
        let domain = match self.domain {
            Some([lo, hi]) => Rect::new(pt(lo), pt(hi))?,
            None => Rect::UNIT,
        };
        let obstacles = self
            .obstacles
            .iter()
            .enumerate()
            .map(|(index, vs)| {
                Polygon::new(vs.iter().copied().map(pt).collect())
                    .map_err(|source| SceneError::InvalidObstacle { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let scene = Scene::new(domain, obstacles)?;
        let segments = self
            .source_segments
            .iter()
            .enumerate()
            .map(|(index, [a, b])| {
                Segment2::new(pt(*a), pt(*b))
                    .map_err(|source| IoError::SourceSegment { index, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        let sources = SourceSpec {
            points: self.source_points.iter().copied().map(pt).collect(),
            segments,
        };
        sources.validate(&scene)?;
        Ok((scene, sources))
    }
}

/// Parses and validates a JSON scene document.
pub fn parse_scene(text: &str) -> Result<(Scene, SourceSpec), IoError> {
    let doc: SceneDocument = serde_json::from_str(text).map_err(|e| IoError::Syntax {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })?;
    doc.validate()
}

/// Pretty-printed document for `scene` and `sources`.
pub fn scene_to_json(scene: &Scene, sources: &SourceSpec) -> String {
    let doc = SceneDocument::from_scene(scene, sources);
    serde_json::to_string_pretty(&doc).expect("documents always serialize")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::EngineError;
    use crate::geometry::GeometryError;

    const SQUARE: &str = r#"{
        "version": 1,
        "obstacles": [[[-0.25, -0.25], [0.25, -0.25], [0.25, 0.25], [-0.25, 0.25]]],
        "source_points": [[-0.75, 0.0]]
    }"#;

    #[test]
    fn minimal_document() {
        let (scene, sources) = parse_scene(SQUARE).unwrap();
        assert_eq!(scene.vertex_count(), 4);
        assert_eq!(sources.points.len(), 1);
        assert!(sources.segments.is_empty());
        assert_eq!(scene.domain(), Rect::UNIT);
    }

    #[test]
    fn source_at_centroid_is_named() {
        let text = SQUARE.replace("[[-0.75, 0.0]]", "[[-0.75, 0.0], [0.0, 0.0]]");
        let err = parse_scene(&text).unwrap_err();
        assert!(matches!(
            err,
            IoError::Sources(EngineError::SourceBlocked { index: 1 })
        ));
        assert!(err.to_string().contains("source point 1"), "{err}");
    }

    #[test]
    fn clockwise_polygon_is_reversed() {
        let text = r#"{"version": 1,
            "obstacles": [[[-0.25, 0.25], [0.25, 0.25], [0.25, -0.25], [-0.25, -0.25]]],
            "source_points": [[0.5, 0.5]]}"#;
        let (scene, _) = parse_scene(text).unwrap();
        let vs = scene.obstacles()[0].vertices();
        assert_eq!(vs[0], Point2::new(-0.25, -0.25));
        assert_eq!(vs[1], Point2::new(0.25, -0.25));
    }

    #[test]
    fn syntax_errors_carry_position() {
        let err = parse_scene("{\n  \"version\": 1,\n  \"obstacles\": [,]\n}").unwrap_err();
        match err {
            IoError::Syntax { line, column, .. } => assert_eq!((line, column), (3, 17)),
            other => panic!("{other}"),
        }
        // unknown fields and wrong types are positioned too
        assert!(matches!(
            parse_scene(r#"{"version": 1, "sources": []}"#),
            Err(IoError::Syntax { line: 1, .. })
        ));
        assert!(matches!(
            parse_scene(r#"{"version": "one"}"#),
            Err(IoError::Syntax { .. })
        ));
    }

    #[test]
    fn semantic_errors_name_elements() {
        let two = r#"{"version": 1, "obstacles": [[[0.5, 0.5], [0.6, 0.5], [0.55, 0.6]], [[0, 0], [0.1, 0]]],
            "source_points": [[-0.5, -0.5]]}"#;
        let err = parse_scene(two).unwrap_err();
        assert!(matches!(
            err,
            IoError::Scene(SceneError::InvalidObstacle {
                index: 1,
                source: GeometryError::TooFewVertices(2)
            })
        ));
        let bowtie = r#"{"version": 1, "obstacles": [[[0, 0], [0.5, 0.5], [0.5, 0], [0, 0.3]]],
            "source_points": [[-0.5, -0.5]]}"#;
        assert!(matches!(
            parse_scene(bowtie),
            Err(IoError::Scene(SceneError::InvalidObstacle {
                index: 0,
                source: GeometryError::SelfIntersecting(..)
            }))
        ));
        let outside = r#"{"version": 1, "obstacles": [[[0, 0], [1.5, 0], [0, 0.5]]], "source_points": [[-0.5, -0.5]]}"#;
        assert!(matches!(
            parse_scene(outside),
            Err(IoError::Scene(SceneError::VertexOutsideDomain {
                obstacle: 0,
                vertex: 1
            }))
        ));
        let far = r#"{"version": 1, "source_points": [[0, 0], [2, 0]]}"#;
        assert!(matches!(
            parse_scene(far),
            Err(IoError::Sources(EngineError::SourceOutsideDomain { index: 1 }))
        ));
        let dot = r#"{"version": 1, "source_segments": [[[0.1, 0.1], [0.1, 0.1]]]}"#;
        assert!(matches!(
            parse_scene(dot),
            Err(IoError::SourceSegment { index: 0, .. })
        ));
        assert!(matches!(
            parse_scene(r#"{"version": 2, "source_points": [[0, 0]]}"#),
            Err(IoError::Version(2))
        ));
    }

    #[test]
    fn custom_domain() {
        let text = r#"{"version": 1, "domain": [[0, 0], [4, 2]], "source_points": [[3, 1]]}"#;
        let (scene, sources) = parse_scene(text).unwrap();
        assert_eq!(scene.domain().max, Point2::new(4.0, 2.0));
        let again = parse_scene(&scene_to_json(&scene, &sources)).unwrap();
        assert_eq!(again.0.domain(), scene.domain());
    }

    #[test]
    fn json_round_trip() {
        let c = crate::scenes::cluttered();
        let text = scene_to_json(&c.scene, &c.sources);
        assert!(!text.contains("domain"));
        let (scene, sources) = parse_scene(&text).unwrap();
        assert_eq!(sources, c.sources);
        for (a, b) in scene.obstacles().iter().zip(c.scene.obstacles()) {
            assert_eq!(a.vertices(), b.vertices());
        }
    }
}
