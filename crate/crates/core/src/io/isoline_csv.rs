//! Isolines as CSV rows `level,polyline_id,x,y`, one row per vertex.
//! Polyline ids count from zero within each level.

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::geometry::Point2;
use crate::query::Isoline;

use super::IoError;

#[derive(Debug, Serialize, Deserialize)]
struct Row {
    level: f64,
    polyline_id: usize,
    x: f64,
    y: f64,
}

fn csv_error(e: csv::Error) -> IoError {
    let line = e.position().map_or(0, |p| p.line() as usize);
    match e.into_kind() {
        csv::ErrorKind::Io(io) => IoError::Io(io),
        other => IoError::Csv {
            line,
            message: format!("{other:?}"),
        },
    }
}

pub fn write_isolines_csv(isolines: &[Isoline], out: impl Write) -> Result<(), IoError> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(out);
    w.write_record(["level", "polyline_id", "x", "y"])
        .map_err(csv_error)?;
    for iso in isolines {
        for (polyline_id, line) in iso.polylines.iter().enumerate() {
            for p in line {
                w.serialize(Row {
                    level: iso.level,
                    polyline_id,
                    x: p.x,
                    y: p.y,
                })
                .map_err(csv_error)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

/// Regroups rows into isolines in order of first appearance. Levels with no
/// polylines do not survive a round trip.
pub fn parse_isolines_csv(input: impl Read) -> Result<Vec<Isoline>, IoError> {
    let mut rd = csv::Reader::from_reader(input);
    let headers = rd.headers().map_err(csv_error)?.clone();
    if headers != vec!["level", "polyline_id", "x", "y"] {
        return Err(IoError::Csv {
            line: 1,
            message: format!("unexpected header {headers:?}"),
        });
    }
    let mut out: Vec<Isoline> = Vec::new();
    for (k, row) in rd.deserialize::<Row>().enumerate() {
        let row = row.map_err(csv_error)?;
        let line = k + 2;
        let iso = match out.iter().position(|i| i.level.to_bits() == row.level.to_bits()) {
            Some(at) => &mut out[at],
            None => {
                out.push(Isoline {
                    level: row.level,
                    polylines: Vec::new(),
                });
                out.last_mut().expect("just pushed")
            }
        };
        let n = iso.polylines.len();
        if row.polyline_id == n {
            iso.polylines.push(Vec::new());
        } else if row.polyline_id + 1 != n {
            return Err(IoError::Csv {
                line,
                message: format!("polyline id {} out of sequence", row.polyline_id),
            });
        }
        iso.polylines[row.polyline_id].push(Point2::new(row.x, row.y));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::engine::{build_spm, EngineConfig};
    use crate::query::extract_isolines;
    use crate::scenes;

    #[test]
    fn round_trip_is_exact() {
        let c = scenes::square_scene();
        let spm = build_spm(&c.scene, &c.sources, &EngineConfig::with_resolution(48)).unwrap();
        let iso = extract_isolines(&spm, &[0.3, 0.7, 1.1]);
        let mut bytes = Vec::new();
        write_isolines_csv(&iso, &mut bytes).unwrap();
        let text = String::from_utf8(bytes.clone()).unwrap();
        assert!(text.starts_with("level,polyline_id,x,y\n"));
        assert_eq!(parse_isolines_csv(bytes.as_slice()).unwrap(), iso);
    }

    #[test]
    fn bad_rows() {
        let skip = "level,polyline_id,x,y\n0.5,0,0.1,0.2\n0.5,2,0.1,0.2\n";
        assert!(matches!(
            parse_isolines_csv(skip.as_bytes()),
            Err(IoError::Csv { line: 3, .. })
        ));
        let junk = "level,polyline_id,x,y\n0.5,0,abc,0.2\n";
        assert!(matches!(
            parse_isolines_csv(junk.as_bytes()),
            Err(IoError::Csv { line: 2, .. })
        ));
        assert!(parse_isolines_csv("a,b\n".as_bytes()).is_err());
    }
}
