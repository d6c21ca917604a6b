//! Per-point propagation state: the array of sources, sub-segments and
//! obstacle vertices that the engine expands one generator at a time.

use serde::{Deserialize, Serialize};

use crate::geometry::{project_on_segment, Point2, Scene, Segment2};

use super::{EngineError, SourceSpec};

/// Tolerance for merging coincident critical points, in segment parameter.
const CRITICAL_MERGE_EPS: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Status {
    Source,
    SourceSegment,
    Obstacle,
    Expanded,
}

/// Where an entry came from. Survives the transition to [`Status::Expanded`].
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EntryKind {
    /// Slot 0, holding a copy of the current generator.
    Reserved,
    SourcePoint {
        source: usize,
    },
    SegmentEndpoint {
        segment: usize,
        end: usize,
    },
    SubSegment {
        segment: usize,
        piece: usize,
    },
    Vertex {
        obstacle: usize,
        vertex: usize,
    },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DataEntry {
    pub p1: Point2,
    /// Second endpoint; equal to `p1` unless the entry is a sub-segment.
    pub p2: Point2,
    pub status: Status,
    pub distance: Option<f64>,
    pub parent_id: Option<usize>,
    pub original_index: usize,
    pub kind: EntryKind,
}

impl DataEntry {
    fn source(p: Point2, index: usize, kind: EntryKind) -> Self {
        DataEntry {
            p1: p,
            p2: p,
            status: Status::Source,
            distance: Some(0.0),
            parent_id: Some(index),
            original_index: index,
            kind,
        }
    }

    pub fn is_segment(&self) -> bool {
        matches!(self.kind, EntryKind::SubSegment { .. })
    }

    pub fn is_source(&self) -> bool {
        matches!(
            self.kind,
            EntryKind::SourcePoint { .. }
                | EntryKind::SegmentEndpoint { .. }
                | EntryKind::SubSegment { .. }
        )
    }

    /// Distance from `p` to this entry and the point of contact. Sub-segments
    /// use the clamped projection, everything else the Euclidean distance to
    /// `p1`.
    #[inline]
    pub fn reach(&self, p: Point2) -> (f64, Point2) {
        if self.is_segment() {
            let pr = project_on_segment(
                p,
                &Segment2 {
                    a: self.p1,
                    b: self.p2,
                },
            );
            (pr.dist, pr.foot)
        } else {
            (p.distance(self.p1), self.p1)
        }
    }

    /// Accumulated distance of a path that reaches `p` through this entry.
    pub fn distance_via(&self, p: Point2) -> Option<f64> {
        self.distance.map(|d| d + self.reach(p).0)
    }
}

/// Propagation array. Index 0 is the generator slot; the remaining entries
/// are sources, segment pieces and obstacle vertices, in that order.
#[derive(Debug, Clone, PartialEq)]
pub struct DataArray {
    entries: Vec<DataEntry>,
}

impl DataArray {
    pub fn from_entries(entries: Vec<DataEntry>) -> Self {
        DataArray { entries }
    }

    pub fn entries(&self) -> &[DataEntry] {
        &self.entries
    }

    pub fn entries_mut(&mut self) -> &mut [DataEntry] {
        &mut self.entries
    }

    pub fn get(&self, i: usize) -> &DataEntry {
        &self.entries[i]
    }

    /// The current generator (slot 0).
    pub fn current(&self) -> &DataEntry {
        &self.entries[0]
    }

    /// Number of entries excluding the generator slot.
    pub fn n_total(&self) -> usize {
        self.entries.len() - 1
    }

    /// Picks the unexpanded entry with the smallest known distance (lowest
    /// index on ties), copies it into slot 0 and marks it expanded. Returns
    /// `None` once no entry with a known distance remains.
    pub fn select_generator(&mut self) -> Option<usize> {
        let mut best: Option<(usize, f64)> = None;
        for (i, e) in self.entries.iter().enumerate().skip(1) {
            if e.status == Status::Expanded {
                continue;
            }
            if let Some(d) = e.distance {
                if best.is_none_or(|(_, bd)| d < bd) {
                    best = Some((i, d));
                }
            }
        }
        let (id, _) = best?;
        self.entries[0] = self.entries[id];
        self.entries[id].status = Status::Expanded;
        Some(id)
    }

    pub fn is_finished(&self) -> bool {
        self.entries
            .iter()
            .skip(1)
            .all(|e| e.status == Status::Expanded || e.distance.is_none())
    }
}

/// Points on `l` onto which an obstacle vertex projects orthogonally with an
/// unobstructed view, sorted along `l`.
pub fn critical_points(l: &Segment2, scene: &Scene) -> Vec<Point2> {
    let mut found: Vec<(f64, Point2)> = scene
        .vertices()
        .filter_map(|(_, _, v)| {
            let t = l.unclamped_param(v);
            if t <= 0.0 || t >= 1.0 {
                return None;
            }
            let q = l.a + l.direction() * t;
            scene.line_of_sight(v, q).then_some((t, q))
        })
        .collect();
    found.sort_by(|a, b| a.0.total_cmp(&b.0));
    found.dedup_by(|a, b| (a.0 - b.0).abs() <= CRITICAL_MERGE_EPS);
    found.into_iter().map(|(_, q)| q).collect()
}

/// Lays out the propagation array for `scene` and `sources`.
pub fn build_data_array(scene: &Scene, sources: &SourceSpec) -> Result<DataArray, EngineError> {
    sources.validate(scene)?;
    let mut entries = vec![DataEntry {
        p1: Point2::ORIGIN,
        p2: Point2::ORIGIN,
        status: Status::Expanded,
        distance: None,
        parent_id: None,
        original_index: 0,
        kind: EntryKind::Reserved,
    }];

    for (si, &p) in sources.points.iter().enumerate() {
        let idx = entries.len();
        entries.push(DataEntry::source(
            p,
            idx,
            EntryKind::SourcePoint { source: si },
        ));
    }

    for (li, l) in sources.segments.iter().enumerate() {
        for (end, p) in [l.a, l.b].into_iter().enumerate() {
            let idx = entries.len();
            entries.push(DataEntry::source(
                p,
                idx,
                EntryKind::SegmentEndpoint { segment: li, end },
            ));
        }
        let mut stops = vec![l.a];
        stops.extend(critical_points(l, scene));
        stops.push(l.b);
        for (piece, w) in stops.windows(2).enumerate() {
            let idx = entries.len();
            entries.push(DataEntry {
                p1: w[0],
                p2: w[1],
                status: Status::SourceSegment,
                distance: Some(0.0),
                parent_id: Some(idx),
                original_index: idx,
                kind: EntryKind::SubSegment { segment: li, piece },
            });
        }
    }

    for (oi, vi, v) in scene.vertices() {
        let idx = entries.len();
        entries.push(DataEntry {
            p1: v,
            p2: v,
            status: Status::Obstacle,
            distance: None,
            parent_id: None,
            original_index: idx,
            kind: EntryKind::Vertex {
                obstacle: oi,
                vertex: vi,
            },
        });
    }

    Ok(DataArray { entries })
}
