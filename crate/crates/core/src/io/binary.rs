//! The binary map format. Little-endian throughout:
//!
//! ```text
//! "SPMF" u16 version, u32 resolution
//! r*r pixel records, bottom row first:
//!     f64 parent_x, f64 parent_y, f64 distance, i32 parent_id (-1 = unreached)
//! u32 entry count, then per DataArray entry:
//!     f64 x1, y1, x2, y2; u8 status; u8 has_distance, f64 distance;
//!     i32 parent_id; u32 original_index; u8 kind, u32 a, u32 b
//! scene and build context:
//!     f64 domain min_x, min_y, max_x, max_y
//!     u32 obstacle count, per obstacle u32 n and n (f64, f64) vertices
//!     u32 point count and points; u32 segment count and (a, b) pairs
//!     f64 shadow factor, f64 front-facing threshold, u8 segment visibility
//!     u32 expansion count, per expansion u32 entry, f64 distance
//! ```
//!
//! The trailing sections let a loaded map answer path and visibility
//! queries without the original scene document.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use crate::engine::{
    DataArray, DataEntry, EngineConfig, EntryKind, Expansion, Framebuffer, Pixel,
    SegmentVisibility, SourceSpec, SpmResult, Status,
};
use crate::geometry::{Point2, Polygon, Rect, Scene, Segment2};

use super::IoError;

pub const MAGIC: &[u8; 4] = b"SPMF";
pub const FORMAT_VERSION: u16 = 1;

struct Writer<W> {
    out: W,
}

impl<W: Write> Writer<W> {
    fn bytes(&mut self, b: &[u8]) -> std::io::Result<()> {
        self.out.write_all(b)
    }
    fn u8(&mut self, v: u8) -> std::io::Result<()> {
        self.bytes(&[v])
    }
    fn u32(&mut self, v: u32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn i32(&mut self, v: i32) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn f64(&mut self, v: f64) -> std::io::Result<()> {
        self.bytes(&v.to_le_bytes())
    }
    fn point(&mut self, p: Point2) -> std::io::Result<()> {
        self.f64(p.x)?;
        self.f64(p.y)
    }
    fn len(&mut self, n: usize) -> std::io::Result<()> {
        self.u32(u32::try_from(n).expect("counts fit in u32"))
    }
    fn id(&mut self, id: Option<usize>) -> std::io::Result<()> {
        self.i32(id.map_or(-1, |i| i32::try_from(i).expect("ids fit in i32")))
    }
}

fn status_code(s: Status) -> u8 {
    match s {
        Status::Source => 0,
        Status::SourceSegment => 1,
        Status::Obstacle => 2,
        Status::Expanded => 3,
    }
}

fn kind_code(k: EntryKind) -> (u8, u32, u32) {
    let c = |v: usize| v as u32;
    match k {
        EntryKind::Reserved => (0, 0, 0),
        EntryKind::SourcePoint { source } => (1, c(source), 0),
        EntryKind::SegmentEndpoint { segment, end } => (2, c(segment), c(end)),
        EntryKind::SubSegment { segment, piece } => (3, c(segment), c(piece)),
        EntryKind::Vertex { obstacle, vertex } => (4, c(obstacle), c(vertex)),
    }
}

/// Serializes `spm` to `out`.
pub fn write_spm(spm: &SpmResult, out: impl Write) -> std::io::Result<()> {
    let mut w = Writer { out };
    let r = spm.resolution();
    w.bytes(MAGIC)?;
    w.bytes(&FORMAT_VERSION.to_le_bytes())?;
    w.len(r)?;
    for px in spm.framebuffer.pixels() {
        let parent = px.parent().unwrap_or(Point2::ORIGIN);
        w.point(parent)?;
        w.f64(px.depth())?;
        w.id(px.parent_id())?;
    }

    let entries = spm.data.entries();
    w.len(entries.len())?;
    for e in entries {
        w.point(e.p1)?;
        w.point(e.p2)?;
        w.u8(status_code(e.status))?;
        w.u8(e.distance.is_some() as u8)?;
        w.f64(e.distance.unwrap_or(0.0))?;
        w.id(e.parent_id)?;
        w.len(e.original_index)?;
        let (tag, a, b) = kind_code(e.kind);
        w.u8(tag)?;
        w.u32(a)?;
        w.u32(b)?;
    }

    let d = spm.scene.domain();
    w.point(d.min)?;
    w.point(d.max)?;
    w.len(spm.scene.obstacles().len())?;
    for o in spm.scene.obstacles() {
        w.len(o.len())?;
        for v in o.vertices() {
            w.point(*v)?;
        }
    }
    w.len(spm.sources.points.len())?;
    for p in &spm.sources.points {
        w.point(*p)?;
    }
    w.len(spm.sources.segments.len())?;
    for s in &spm.sources.segments {
        w.point(s.a)?;
        w.point(s.b)?;
    }
    w.f64(spm.config.shadow_vector_factor)?;
    w.f64(spm.config.front_facing_threshold)?;
    w.u8(match spm.config.segment_visibility {
        SegmentVisibility::ExactLos => 0,
    })?;
    w.len(spm.expansions.len())?;
    for x in &spm.expansions {
        w.len(x.entry)?;
        w.f64(x.distance)?;
    }
    w.out.flush()
}

struct Reader<R> {
    input: R,
}

fn malformed(what: impl Into<String>) -> IoError {
    IoError::Format(what.into())
}

impl<R: Read> Reader<R> {
    fn array<const N: usize>(&mut self) -> Result<[u8; N], IoError> {
        let mut buf = [0; N];
        self.input.read_exact(&mut buf).map_err(|e| match e.kind() {
            std::io::ErrorKind::UnexpectedEof => malformed("file is truncated"),
            _ => IoError::Io(e),
        })?;
        Ok(buf)
    }
    fn u8(&mut self) -> Result<u8, IoError> {
        Ok(self.array::<1>()?[0])
    }
    fn u32(&mut self) -> Result<u32, IoError> {
        Ok(u32::from_le_bytes(self.array()?))
    }
    fn i32(&mut self) -> Result<i32, IoError> {
        Ok(i32::from_le_bytes(self.array()?))
    }
    fn f64(&mut self) -> Result<f64, IoError> {
        Ok(f64::from_le_bytes(self.array()?))
    }
    fn point(&mut self) -> Result<Point2, IoError> {
        Ok(Point2::new(self.f64()?, self.f64()?))
    }
    fn len(&mut self) -> Result<usize, IoError> {
        Ok(self.u32()? as usize)
    }
    fn id(&mut self) -> Result<Option<usize>, IoError> {
        match self.i32()? {
            -1 => Ok(None),
            i if i >= 0 => Ok(Some(i as usize)),
            i => Err(malformed(format!("negative id {i}"))),
        }
    }
    /// A count of items, each at least `min_bytes` long, sanity-capped so
    /// a corrupt header cannot trigger a huge allocation.
    fn count(&mut self, min_bytes: usize) -> Result<usize, IoError> {
        let n = self.len()?;
        if n.saturating_mul(min_bytes) > 1 << 36 {
            return Err(malformed(format!("implausible count {n}")));
        }
        Ok(n)
    }
}

fn read_status(code: u8) -> Result<Status, IoError> {
    Ok(match code {
        0 => Status::Source,
        1 => Status::SourceSegment,
        2 => Status::Obstacle,
        3 => Status::Expanded,
        c => return Err(malformed(format!("unknown status {c}"))),
    })
}

fn read_kind(tag: u8, a: u32, b: u32) -> Result<EntryKind, IoError> {
    let (a, b) = (a as usize, b as usize);
    Ok(match tag {
        0 => EntryKind::Reserved,
        1 => EntryKind::SourcePoint { source: a },
        2 => EntryKind::SegmentEndpoint { segment: a, end: b },
        3 => EntryKind::SubSegment {
            segment: a,
            piece: b,
        },
        4 => EntryKind::Vertex {
            obstacle: a,
            vertex: b,
        },
        t => return Err(malformed(format!("unknown entry kind {t}"))),
    })
}

/// Reads a map written by [`write_spm`].
pub fn read_spm(input: impl Read) -> Result<SpmResult, IoError> {
    let mut r = Reader { input };
    if &r.array::<4>()? != MAGIC {
        return Err(malformed("missing SPMF signature"));
    }
    let version = u16::from_le_bytes(r.array()?);
    if version != FORMAT_VERSION {
        return Err(malformed(format!("unsupported version {version}")));
    }
    let res = r.len()?;
    if !(2..=1 << 16).contains(&res) {
        return Err(malformed(format!("bad resolution {res}")));
    }
    let mut pixels = Vec::with_capacity(res * res);
    for _ in 0..res * res {
        let parent = r.point()?;
        let distance = r.f64()?;
        pixels.push(match r.id()? {
            None => Pixel::UNREACHED,
            Some(_) if !distance.is_finite() => {
                return Err(malformed("reached pixel without a finite distance"))
            }
            Some(id) => Pixel::reached(parent, distance, id),
        });
    }

    let n = r.count(50)?;
    let mut entries = Vec::with_capacity(n);
    for _ in 0..n {
        let p1 = r.point()?;
        let p2 = r.point()?;
        let status = read_status(r.u8()?)?;
        let has_distance = r.u8()? != 0;
        let d = r.f64()?;
        let parent_id = r.id()?;
        let original_index = r.len()?;
        let (tag, a, b) = (r.u8()?, r.u32()?, r.u32()?);
        entries.push(DataEntry {
            p1,
            p2,
            status,
            distance: has_distance.then_some(d),
            parent_id,
            original_index,
            kind: read_kind(tag, a, b)?,
        });
    }

    let domain = Rect::new(r.point()?, r.point()?)?;
    let mut obstacles = Vec::new();
    for index in 0..r.count(52)? {
        let m = r.count(16)?;
        let vs = (0..m).map(|_| r.point()).collect::<Result<Vec<_>, _>>()?;
        let poly = Polygon::new(vs).map_err(|source| {
            IoError::Scene(crate::geometry::SceneError::InvalidObstacle { index, source })
        })?;
        obstacles.push(poly);
    }
    let scene = Scene::new(domain, obstacles)?;
    let points = (0..r.count(16)?)
        .map(|_| r.point())
        .collect::<Result<Vec<_>, _>>()?;
    let mut segments = Vec::new();
    for index in 0..r.count(32)? {
        let (a, b) = (r.point()?, r.point()?);
        segments.push(
            Segment2::new(a, b).map_err(|source| IoError::SourceSegment { index, source })?,
        );
    }
    let shadow_vector_factor = r.f64()?;
    let front_facing_threshold = r.f64()?;
    let segment_visibility = match r.u8()? {
        0 => SegmentVisibility::ExactLos,
        v => return Err(malformed(format!("unknown segment visibility {v}"))),
    };
    let expansions = (0..r.count(12)?)
        .map(|_| {
            Ok(Expansion {
                entry: r.len()?,
                distance: r.f64()?,
            })
        })
        .collect::<Result<Vec<_>, IoError>>()?;
    if r.input.read(&mut [0u8])? != 0 {
        return Err(malformed("trailing bytes"));
    }
    // Queries index entries by these ids without further checks.
    let n = entries.len();
    let dangling = pixels.iter().filter_map(|p| p.parent_id()).any(|i| i >= n)
        || entries.iter().filter_map(|e| e.parent_id).any(|i| i >= n)
        || expansions.iter().any(|x| x.entry >= n);
    if n == 0 || dangling {
        return Err(malformed("entry reference out of range"));
    }

    Ok(SpmResult {
        framebuffer: Framebuffer::from_pixels(res, domain, pixels),
        data: DataArray::from_entries(entries),
        scene,
        sources: SourceSpec { points, segments },
        config: EngineConfig {
            resolution: res,
            shadow_vector_factor,
            front_facing_threshold,
            segment_visibility,
        },
        expansions,
    })
}

pub fn save_spm(spm: &SpmResult, path: &Path) -> Result<(), IoError> {
    let file = File::create(path).map_err(IoError::at(path))?;
    write_spm(spm, BufWriter::new(file)).map_err(IoError::at(path))
}

pub fn load_spm(path: &Path) -> Result<SpmResult, IoError> {
    let file = File::open(path).map_err(IoError::at(path))?;
    read_spm(BufReader::new(file))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::build_spm;
    use crate::scenes;

    fn round_trip(spm: &SpmResult) -> (Vec<u8>, SpmResult) {
        let mut bytes = Vec::new();
        write_spm(spm, &mut bytes).unwrap();
        let back = read_spm(bytes.as_slice()).unwrap();
        (bytes, back)
    }

    fn assert_same(a: &SpmResult, b: &SpmResult) {
        assert_eq!(a.framebuffer, b.framebuffer);
        assert_eq!(a.data, b.data);
        assert_eq!(a.sources, b.sources);
        assert_eq!(a.config, b.config);
        assert_eq!(a.expansions, b.expansions);
        assert_eq!(a.scene.domain(), b.scene.domain());
        for (p, q) in a.scene.obstacles().iter().zip(b.scene.obstacles()) {
            assert_eq!(p.vertices(), q.vertices());
        }
    }

    #[test]
    fn header_and_size() {
        let c = scenes::square_scene();
        let spm = build_spm(&c.scene, &c.sources, &EngineConfig::with_resolution(16)).unwrap();
        let (bytes, back) = round_trip(&spm);
        assert_eq!(&bytes[..4], b"SPMF");
        assert_eq!(&bytes[4..6], &[1, 0]);
        assert_eq!(&bytes[6..10], &[16, 0, 0, 0]);
        // 28 bytes per pixel, then the entry count
        let n = u32::from_le_bytes(bytes[10 + 28 * 256..14 + 28 * 256].try_into().unwrap());
        assert_eq!(n as usize, spm.data.entries().len());
        assert_same(&spm, &back);
        // unreached pixels store id -1
        let inside = spm.framebuffer.index(8, 8);
        let rec = &bytes[10 + 28 * inside..10 + 28 * (inside + 1)];
        assert_eq!(&rec[24..], &(-1i32).to_le_bytes());
    }

    #[test]
    fn corpus_round_trips_bit_exactly() {
        for c in scenes::corpus() {
            let spm = build_spm(&c.scene, &c.sources, &EngineConfig::with_resolution(24)).unwrap();
            let (bytes, back) = round_trip(&spm);
            assert_same(&spm, &back);
            let mut again = Vec::new();
            write_spm(&back, &mut again).unwrap();
            assert_eq!(bytes, again, "{}", c.name);
        }
    }

    #[test]
    fn rejects_damaged_files() {
        let c = scenes::empty();
        let spm = build_spm(&c.scene, &c.sources, &EngineConfig::with_resolution(4)).unwrap();
        let mut bytes = Vec::new();
        write_spm(&spm, &mut bytes).unwrap();
        let short = &bytes[..bytes.len() - 3];
        assert!(matches!(read_spm(short), Err(IoError::Format(m)) if m.contains("truncated")));
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(read_spm(bad.as_slice()), Err(IoError::Format(_))));
        let mut long = bytes.clone();
        long.push(0);
        assert!(matches!(read_spm(long.as_slice()), Err(IoError::Format(m)) if m.contains("trailing")));
    }

    #[test]
    fn file_errors_name_the_path() {
        let dir = tempfile::tempdir().unwrap();
        let missing = dir.path().join("nope.bin");
        let err = load_spm(&missing).unwrap_err();
        assert!(err.to_string().contains("nope.bin"), "{err}");
        assert!(!err.is_validation());

        let c = scenes::empty();
        let spm = build_spm(&c.scene, &c.sources, &EngineConfig::with_resolution(8)).unwrap();
        let path = dir.path().join("map.bin");
        save_spm(&spm, &path).unwrap();
        assert_eq!(load_spm(&path).unwrap().framebuffer, spm.framebuffer);
    }
}
