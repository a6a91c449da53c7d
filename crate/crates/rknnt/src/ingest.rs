//! Reading, writing, and generating geographic inputs.
//!
//! Everything upstream of the engine speaks degrees; everything downstream
//! speaks kilometers in a local planar frame.  The boundary is here:
//!
//! * coordinates are quantized to one microdegree the moment they are read
//!   or generated, so a value that goes through a file round-trip compares
//!   bit-for-bit equal to the value that was written;
//! * a [`Frame`] anchored at the dataset centroid maps quantized degrees to
//!   planar kilometers (equirectangular — fine at city scale, where the
//!   datasets live).
//!
//! File formats are plain CSV, one point per line:
//!
//! * tracks with ordering — routes, generated queries —
//!   as `id,seq,lat,lon`;
//! * trajectories — observed trips — as one line per trip,
//!   `id,lat,lon,lat,lon,…` (two or more points; a trip with `n` points
//!   yields `n-1` origin/destination transitions downstream).
//!
//! Blank lines and lines starting with `#` are ignored in both.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::geometry::GeoPoint;
use crate::{Error, Result};

/// Mean Earth radius, kilometers.
pub const EARTH_RADIUS_KM: f64 = 6371.0;

/// Snap a degree value to the one-microdegree grid.  The `+ 0.0` folds a
/// negative zero into positive zero so quantized values are bitwise unique.
pub fn quantize_deg(deg: f64) -> f64 {
    (deg * 1e6).round() / 1e6 + 0.0
}

/// A named sequence of (lat, lon) points in quantized degrees — a route, a
/// generated query, or an observed trip, depending on which file it came
/// from.
#[derive(Clone, Debug, PartialEq)]
pub struct NamedTrack {
    pub name: String,
    /// (latitude, longitude) pairs.
    pub points: Vec<(f64, f64)>,
}

/// The local planar frame: an equirectangular projection anchored at a fixed
/// (lat, lon).  `x` grows east, `y` grows north, both in kilometers.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Frame {
    pub anchor_lat: f64,
    pub anchor_lon: f64,
}

impl Frame {
    pub fn new(anchor_lat: f64, anchor_lon: f64) -> Self {
        Frame { anchor_lat, anchor_lon }
    }

    /// Anchor a frame at the centroid of every point in the dataset.
    /// `None` if there are no points at all.
    pub fn for_tracks<'a>(tracks: impl IntoIterator<Item = &'a NamedTrack>) -> Option<Frame> {
        let (mut lat, mut lon, mut n) = (0.0, 0.0, 0usize);
        for t in tracks {
            for &(la, lo) in &t.points {
                lat += la;
                lon += lo;
                n += 1;
            }
        }
        (n > 0).then(|| Frame::new(quantize_deg(lat / n as f64), quantize_deg(lon / n as f64)))
    }

    /// Quantized degrees to planar kilometers.
    pub fn project(&self, lat: f64, lon: f64) -> GeoPoint {
        let x = EARTH_RADIUS_KM * (lon - self.anchor_lon).to_radians()
            * self.anchor_lat.to_radians().cos();
        let y = EARTH_RADIUS_KM * (lat - self.anchor_lat).to_radians();
        GeoPoint::new(x, y)
    }

    /// Planar kilometers back to degrees (not re-quantized).
    pub fn unproject(&self, p: &GeoPoint) -> (f64, f64) {
        let lat = self.anchor_lat + (p.y / EARTH_RADIUS_KM).to_degrees();
        let lon = self.anchor_lon
            + (p.x / (EARTH_RADIUS_KM * self.anchor_lat.to_radians().cos())).to_degrees();
        (lat, lon)
    }
}

fn parse_field<T: std::str::FromStr>(
    path: &Path,
    line: usize,
    field: &str,
    what: &str,
) -> Result<T> {
    field.trim().parse().map_err(|_| Error::Parse {
        path: path.display().to_string(),
        line,
        msg: format!("bad {what}: {field:?}"),
    })
}

fn parse_error(path: &Path, line: usize, msg: impl Into<String>) -> Error {
    Error::Parse { path: path.display().to_string(), line, msg: msg.into() }
}

fn content_lines(path: &Path) -> Result<Vec<(usize, String)>> {
    let file = File::open(path)?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line?;
        let trimmed = line.trim();
        if trimmed.is_empty() || trimmed.starts_with('#') {
            continue;
        }
        out.push((i + 1, trimmed.to_string()));
    }
    Ok(out)
}

/// Read an ordered-track file (`id,seq,lat,lon`).  Rows may arrive in any
/// order; each track's points are sorted by `seq`.  Tracks keep their order
/// of first appearance.
pub fn read_tracks(path: &Path) -> Result<Vec<NamedTrack>> {
    let mut order: Vec<String> = Vec::new();
    let mut rows: std::collections::HashMap<String, Vec<(i64, f64, f64)>> =
        std::collections::HashMap::new();
    for (lineno, line) in content_lines(path)? {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() != 4 {
            return Err(parse_error(path, lineno, format!("expected id,seq,lat,lon, got {line:?}")));
        }
        let name = fields[0].trim().to_string();
        if name.is_empty() {
            return Err(parse_error(path, lineno, "empty id"));
        }
        let seq: i64 = parse_field(path, lineno, fields[1], "sequence number")?;
        let lat: f64 = parse_field(path, lineno, fields[2], "latitude")?;
        let lon: f64 = parse_field(path, lineno, fields[3], "longitude")?;
        check_lat_lon(path, lineno, lat, lon)?;
        let entry = rows.entry(name.clone()).or_default();
        if entry.is_empty() {
            order.push(name);
        }
        if entry.iter().any(|&(s, _, _)| s == seq) {
            return Err(parse_error(path, lineno, format!("duplicate sequence number {seq}")));
        }
        entry.push((seq, quantize_deg(lat), quantize_deg(lon)));
    }
    let mut out = Vec::with_capacity(order.len());
    for name in order {
        let mut pts = rows.remove(&name).unwrap();
        pts.sort_unstable_by_key(|&(s, _, _)| s);
        out.push(NamedTrack { name, points: pts.into_iter().map(|(_, la, lo)| (la, lo)).collect() });
    }
    Ok(out)
}

/// Read a trajectory file (`id,lat,lon,lat,lon,…`, at least two points per
/// line, ids unique).
pub fn read_trajectories(path: &Path) -> Result<Vec<NamedTrack>> {
    let mut seen = std::collections::HashSet::new();
    let mut out = Vec::new();
    for (lineno, line) in content_lines(path)? {
        let fields: Vec<&str> = line.split(',').collect();
        if fields.len() < 5 || fields.len().is_multiple_of(2) {
            return Err(parse_error(
                path,
                lineno,
                format!("expected id plus two or more lat,lon pairs, got {} fields", fields.len()),
            ));
        }
        let name = fields[0].trim().to_string();
        if name.is_empty() {
            return Err(parse_error(path, lineno, "empty id"));
        }
        if !seen.insert(name.clone()) {
            return Err(parse_error(path, lineno, format!("duplicate trajectory id {name:?}")));
        }
        let mut points = Vec::with_capacity((fields.len() - 1) / 2);
        for pair in fields[1..].chunks(2) {
            let lat: f64 = parse_field(path, lineno, pair[0], "latitude")?;
            let lon: f64 = parse_field(path, lineno, pair[1], "longitude")?;
            check_lat_lon(path, lineno, lat, lon)?;
            points.push((quantize_deg(lat), quantize_deg(lon)));
        }
        out.push(NamedTrack { name, points });
    }
    Ok(out)
}

fn check_lat_lon(path: &Path, line: usize, lat: f64, lon: f64) -> Result<()> {
    if !(-90.0..=90.0).contains(&lat) {
        return Err(parse_error(path, line, format!("latitude {lat} outside [-90, 90]")));
    }
    if !(-180.0..=180.0).contains(&lon) {
        return Err(parse_error(path, line, format!("longitude {lon} outside [-180, 180]")));
    }
    Ok(())
}

/// Write an ordered-track file.  Six decimal places — exactly the
/// quantization grid, so reading the file back reproduces the input.
pub fn write_tracks(path: &Path, tracks: &[NamedTrack]) -> Result<()> {
    let mut out = String::new();
    for t in tracks {
        for (seq, &(lat, lon)) in t.points.iter().enumerate() {
            writeln!(out, "{},{seq},{lat:.6},{lon:.6}", t.name).expect("string write");
        }
    }
    Ok(File::create(path)?.write_all(out.as_bytes())?)
}

/// Write a trajectory file (one line per trajectory).
pub fn write_trajectories(path: &Path, tracks: &[NamedTrack]) -> Result<()> {
    let mut out = String::new();
    for t in tracks {
        out.push_str(&t.name);
        for &(lat, lon) in &t.points {
            write!(out, ",{lat:.6},{lon:.6}").expect("string write");
        }
        out.push('\n');
    }
    Ok(File::create(path)?.write_all(out.as_bytes())?)
}

/// Degree-space bounding box of a set of tracks.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct DegreeBounds {
    pub min_lat: f64,
    pub max_lat: f64,
    pub min_lon: f64,
    pub max_lon: f64,
}

impl DegreeBounds {
    pub fn of_tracks(tracks: &[NamedTrack]) -> Option<Self> {
        let mut it = tracks.iter().flat_map(|t| t.points.iter().copied());
        let (la, lo) = it.next()?;
        let mut b = DegreeBounds { min_lat: la, max_lat: la, min_lon: lo, max_lon: lo };
        for (la, lo) in it {
            b.min_lat = b.min_lat.min(la);
            b.max_lat = b.max_lat.max(la);
            b.min_lon = b.min_lon.min(lo);
            b.max_lon = b.max_lon.max(lo);
        }
        Some(b)
    }
}

/// Generate `count` synthetic two-point trips uniformly inside `bounds`.
/// Deterministic in `seed`, now and across releases (the generator is
/// pinned, unlike [`rand::rngs::StdRng`]).
pub fn gen_transitions(bounds: &DegreeBounds, count: usize, seed: u64) -> Vec<NamedTrack> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let pick = |rng: &mut ChaCha8Rng| {
        (
            quantize_deg(rng.random_range(bounds.min_lat..=bounds.max_lat)),
            quantize_deg(rng.random_range(bounds.min_lon..=bounds.max_lon)),
        )
    };
    (0..count)
        .map(|i| NamedTrack {
            name: format!("t{i}"),
            points: vec![pick(&mut rng), pick(&mut rng)],
        })
        .collect()
}

/// Generate `count` random query routes.  Each starts at a stop of a random
/// input track and walks `points - 1` legs of `interval_km`; the first
/// heading is uniform, each following heading deviates from the previous by
/// at most a right angle, so queries wander like plausible routes instead of
/// scribbling.  Deterministic in `seed`.
pub fn gen_queries(
    tracks: &[NamedTrack],
    frame: &Frame,
    count: usize,
    points: usize,
    interval_km: f64,
    seed: u64,
) -> Vec<NamedTrack> {
    assert!(!tracks.is_empty(), "no tracks to start queries from");
    assert!(points >= 1 && interval_km > 0.0);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = Vec::with_capacity(count);
    for i in 0..count {
        let track = &tracks[rng.random_range(0..tracks.len())];
        let &(lat, lon) = &track.points[rng.random_range(0..track.points.len())];
        let mut at = frame.project(lat, lon);
        let mut heading: f64 = rng.random_range(0.0..std::f64::consts::TAU);
        let mut pts = vec![(lat, lon)];
        for _ in 1..points {
            at = GeoPoint::new(
                at.x + interval_km * heading.cos(),
                at.y + interval_km * heading.sin(),
            );
            let (la, lo) = frame.unproject(&at);
            pts.push((quantize_deg(la), quantize_deg(lo)));
            heading += rng.random_range(-std::f64::consts::FRAC_PI_2..=std::f64::consts::FRAC_PI_2);
        }
        out.push(NamedTrack { name: format!("q{i}"), points: pts });
    }
    out
}

/// What a dataset was built from, pinned down well enough to audit: input
/// digests, the projection anchor, and the headline counts.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub routes_file: String,
    pub routes_sha256: String,
    pub trips_file: String,
    pub trips_sha256: String,
    pub frame: Frame,
    pub route_count: usize,
    pub stop_count: usize,
    pub transition_count: usize,
    pub vertex_count: usize,
    pub edge_count: usize,
}

impl DatasetManifest {
    pub fn save(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)
            .map_err(|e| Error::Snapshot(format!("manifest: {e}")))?;
        Ok(File::create(path)?.write_all(text.as_bytes())?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut text = String::new();
        File::open(path)?.read_to_string(&mut text)?;
        serde_json::from_str(&text).map_err(|e| Error::Snapshot(format!("manifest: {e}")))
    }
}

/// Hex SHA-256 of a file's contents.
pub fn sha256_hex(path: &Path) -> Result<String> {
    let mut file = File::open(path)?;
    let mut hasher = Sha256::new();
    let mut buf = [0u8; 64 * 1024];
    loop {
        let n = file.read(&mut buf)?;
        if n == 0 {
            break;
        }
        hasher.update(&buf[..n]);
    }
    let digest = hasher.finalize();
    let mut hex = String::with_capacity(64);
    for b in digest {
        write!(hex, "{b:02x}").expect("string write");
    }
    Ok(hex)
}
