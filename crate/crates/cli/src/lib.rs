//! The `spm` command line: build maps from scene documents, query them,
//! export isolines, and check the engine against the exact oracle.

use std::ffi::OsString;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use thiserror::Error;

use spm_core::engine::{build_spm, EngineConfig, EngineError, SourceSpec, SpmResult};
use spm_core::io::{self, IoError};
use spm_core::oracle::{compare, Oracle};
use spm_core::query::{self, QueryError};
use spm_core::{Point2, Scene};

/// Exit statuses.
pub mod exit {
    pub const OK: i32 = 0;
    pub const USAGE: i32 = 1;
    pub const VALIDATION: i32 = 2;
    pub const VERIFY_FAILED: i32 = 3;
}

/// Share of free pixels that must agree with the oracle for `verify`.
pub const VERIFY_MIN_FRACTION: f64 = 0.99;

#[derive(Debug, Parser)]
#[command(name = "spm", version, about = "Shortest path maps over polygonal scenes")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Resolution {
    /// Pixels per side of the map.
    #[arg(long, short, default_value_t = 256)]
    pub resolution: usize,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Build a map from a scene document and save it.
    Build {
        scene: PathBuf,
        #[command(flatten)]
        resolution: Resolution,
        #[arg(long)]
        out: PathBuf,
        /// Also write a region image (P6 PPM) colored by parent point.
        #[arg(long)]
        regions: Option<PathBuf>,
        /// Also write a distance image (P6 PPM) with isoline rings.
        #[arg(long, requires = "spacing")]
        distance: Option<PathBuf>,
        /// Ring spacing for --distance.
        #[arg(long, requires = "distance", value_parser = positive)]
        spacing: Option<f64>,
    },
    /// Print the geodesic distance at a point.
    Query {
        map: PathBuf,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        point: Point2,
        /// Choose the best parent among neighboring pixels.
        #[arg(long)]
        refine: bool,
    },
    /// Print the shortest path from a point back to a source.
    Path {
        map: PathBuf,
        #[arg(long, value_parser = point, allow_hyphen_values = true)]
        point: Point2,
        #[arg(long)]
        refine: bool,
    },
    /// Write contour lines of the distance field as CSV.
    Isolines {
        map: PathBuf,
        #[arg(long, value_delimiter = ',', required = true, allow_hyphen_values = true)]
        levels: Vec<f64>,
        #[arg(long)]
        out: PathBuf,
    },
    /// Build a map and compare it pixel by pixel with the exact oracle.
    Verify {
        scene: PathBuf,
        #[command(flatten)]
        resolution: Resolution,
        #[arg(long, default_value_t = 1e-5, allow_hyphen_values = true)]
        tolerance: f64,
    },
    /// Time map construction.
    Bench {
        scene: PathBuf,
        #[command(flatten)]
        resolution: Resolution,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(1..))]
        repeat: u32,
    },
}

fn point(s: &str) -> Result<Point2, String> {
    let (x, y) = s
        .split_once(',')
        .ok_or_else(|| format!("expected X,Y, got {s:?}"))?;
    let num = |v: &str| {
        v.trim()
            .parse::<f64>()
            .ok()
            .filter(|v| v.is_finite())
            .ok_or_else(|| format!("not a finite number: {v:?}"))
    };
    Ok(Point2::new(num(x)?, num(y)?))
}

fn positive(s: &str) -> Result<f64, String> {
    match s.parse::<f64>() {
        Ok(v) if v > 0.0 && v.is_finite() => Ok(v),
        _ => Err(format!("expected a positive number, got {s:?}")),
    }
}

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Usage(#[from] clap::Error),
    #[error("{}: {source}", path.display())]
    Read {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("{}: {source}", path.display())]
    Input {
        path: PathBuf,
        #[source]
        source: IoError,
    },
    #[error(transparent)]
    Output(#[from] IoError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Query(#[from] QueryError),
    #[error("verification failed")]
    VerifyFailed,
    #[error(transparent)]
    Stdout(#[from] std::io::Error),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Usage(_) | CliError::Read { .. } | CliError::Stdout(_) => exit::USAGE,
            CliError::Input { source, .. } | CliError::Output(source) => {
                if source.is_validation() {
                    exit::VALIDATION
                } else {
                    exit::USAGE
                }
            }
            CliError::Engine(_) | CliError::Query(_) => exit::VALIDATION,
            CliError::VerifyFailed => exit::VERIFY_FAILED,
        }
    }
}

fn load_scene(path: &Path) -> Result<(Scene, SourceSpec), CliError> {
    let text = fs::read_to_string(path).map_err(|source| CliError::Read {
        path: path.to_path_buf(),
        source,
    })?;
    io::parse_scene(&text).map_err(|source| CliError::Input {
        path: path.to_path_buf(),
        source,
    })
}

fn load_map(path: &Path) -> Result<SpmResult, CliError> {
    io::load_spm(path).map_err(|source| match source {
        IoError::File { path, source } => CliError::Read { path, source },
        source => CliError::Input {
            path: path.to_path_buf(),
            source,
        },
    })
}

/// Parses `args` (program name first), runs the command and returns the
/// exit status. Normal output goes to `out`, diagnostics to `err`.
pub fn run<I, T>(args: I, out: &mut impl Write, err: &mut impl Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let result = Cli::try_parse_from(args)
        .map_err(CliError::from)
        .and_then(|cli| execute(cli.command, out));
    match result {
        Ok(()) => exit::OK,
        Err(CliError::Usage(e)) if !e.use_stderr() => {
            // --help and --version
            let _ = write!(out, "{e}");
            exit::OK
        }
        Err(CliError::Usage(e)) => {
            let _ = write!(err, "{e}");
            exit::USAGE
        }
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

pub fn execute(command: Command, out: &mut impl Write) -> Result<(), CliError> {
    match command {
        Command::Build {
            scene,
            resolution,
            out: map,
            regions,
            distance,
            spacing,
        } => {
            let (scene, sources) = load_scene(&scene)?;
            let config = EngineConfig::with_resolution(resolution.resolution);
            let spm = build_spm(&scene, &sources, &config)?;
            io::save_spm(&spm, &map)?;
            if let Some(path) = regions {
                io::export_region_image(&spm, &path)?;
            }
            if let (Some(path), Some(spacing)) = (distance, spacing) {
                io::export_distance_image(&spm, &path, spacing)?;
            }
            let reached = spm.framebuffer.pixels().iter().filter(|p| p.is_reached()).count();
            writeln!(
                out,
                "built {r}x{r} map: {} generators, {reached} reached pixels",
                spm.expansions.len(),
                r = spm.resolution()
            )?;
        }
        Command::Query { map, point, refine } => {
            let spm = load_map(&map)?;
            let d = if refine {
                query::refined_distance(point, &spm)?
            } else {
                query::distance(point, &spm)?
            };
            writeln!(out, "{d}")?;
        }
        Command::Path { map, point, refine } => {
            let spm = load_map(&map)?;
            let path = query::shortest_path(point, &spm, refine)?;
            for p in &path.points {
                writeln!(out, "{},{}", p.x, p.y)?;
            }
            writeln!(out, "length {}", path.length)?;
        }
        Command::Isolines { map, levels, out: file } => {
            let spm = load_map(&map)?;
            let iso = query::extract_isolines(&spm, &levels);
            let f = fs::File::create(&file).map_err(|source| {
                IoError::File {
                    path: file.clone(),
                    source,
                }
            })?;
            io::write_isolines_csv(&iso, std::io::BufWriter::new(f)).map_err(|e| match e {
                IoError::Io(source) => IoError::File {
                    path: file.clone(),
                    source,
                },
                e => e,
            })?;
            let fragments: usize = iso.iter().map(|i| i.polylines.len()).sum();
            writeln!(out, "{} levels, {fragments} polylines", iso.len())?;
        }
        Command::Verify {
            scene,
            resolution,
            tolerance,
        } => {
            let (scene, sources) = load_scene(&scene)?;
            let r = resolution.resolution;
            let spm = build_spm(&scene, &sources, &EngineConfig::with_resolution(r))?;
            let grid = Oracle::new(&scene, &sources).raster(r);
            let report = compare(&spm, &grid, tolerance).expect("same resolution");
            writeln!(out, "free pixels:       {}", report.total_free_pixels)?;
            writeln!(
                out,
                "matched:           {} ({:.4}%)",
                report.matched,
                100.0 * report.matched_fraction()
            )?;
            writeln!(out, "mismatches:        {}", report.mismatch_locations.len())?;
            writeln!(out, "max abs error:     {:e}", report.max_abs_error)?;
            writeln!(out, "boundary confined: {}", report.boundary_confined)?;
            let ok = report.passes(VERIFY_MIN_FRACTION);
            writeln!(out, "{}", if ok { "PASS" } else { "FAIL" })?;
            if !ok {
                return Err(CliError::VerifyFailed);
            }
        }
        Command::Bench {
            scene,
            resolution,
            repeat,
        } => {
            let (scene, sources) = load_scene(&scene)?;
            let config = EngineConfig::with_resolution(resolution.resolution);
            config.validate(&scene)?;
            let mut times = Vec::with_capacity(repeat as usize);
            for _ in 0..repeat {
                let t = Instant::now();
                build_spm(&scene, &sources, &config)?;
                times.push(t.elapsed().as_secs_f64());
            }
            let mean = times.iter().sum::<f64>() / times.len() as f64;
            let min = times.iter().copied().fold(f64::INFINITY, f64::min);
            writeln!(
                out,
                "{} runs at {r}x{r}: mean {mean:.6} s, min {min:.6} s",
                times.len(),
                r = resolution.resolution
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn point_arguments() {
        assert_eq!(point("0.75,0"), Ok(Point2::new(0.75, 0.0)));
        assert_eq!(point(" -1 , 2.5"), Ok(Point2::new(-1.0, 2.5)));
        assert!(point("0.75").is_err());
        assert!(point("a,b").is_err());
        assert!(point("nan,0").is_err());
    }

    #[test]
    fn usage_errors_exit_1() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["spm"], &mut out, &mut err), exit::USAGE);
        assert_eq!(run(["spm", "frobnicate"], &mut out, &mut err), exit::USAGE);
        assert_eq!(
            run(["spm", "query", "m.bin", "--point", "1"], &mut out, &mut err),
            exit::USAGE
        );
        assert_eq!(
            run(["spm", "build", "s.json", "--out", "m.bin", "--distance", "d.ppm"], &mut out, &mut err),
            exit::USAGE
        );
    }

    #[test]
    fn help_exits_0() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        assert_eq!(run(["spm", "--help"], &mut out, &mut err), exit::OK);
        let text = String::from_utf8(out).unwrap();
        for cmd in ["build", "query", "path", "isolines", "verify", "bench"] {
            assert!(text.contains(cmd), "{cmd}");
        }
    }

    #[test]
    fn missing_files_exit_1() {
        let (mut out, mut err) = (Vec::new(), Vec::new());
        let code = run(["spm", "query", "/nonexistent/m.bin", "--point", "0,0"], &mut out, &mut err);
        assert_eq!(code, exit::USAGE);
        assert!(String::from_utf8(err).unwrap().contains("/nonexistent/m.bin"));
    }
}
