//! Convert a GTFS feed into the engine's route file.
//!
//! A GTFS route usually carries many trips (directions, service days,
//! short-turns).  The engine wants one stop sequence per route, so each
//! route is represented by its longest trip — the one calling at the most
//! stops — with ties going to the lexicographically smallest `trip_id` so
//! conversion is deterministic.  Routes whose best trip has fewer than two
//! stops are dropped (and reported), since they cannot answer anything.

use std::collections::HashMap;
use std::path::Path;

use anyhow::{bail, Context, Result};
use rknnt::ingest::{quantize_deg, NamedTrack};

/// Read `stops.txt`, `routes.txt`, `trips.txt`, and `stop_times.txt` from
/// `dir` and assemble one track per usable route, in `routes.txt` order.
/// Returns the tracks and the ids of routes that were dropped.
pub fn convert(dir: &Path) -> Result<(Vec<NamedTrack>, Vec<String>)> {
    let stops = read_stops(&dir.join("stops.txt"))?;
    let route_order = read_routes(&dir.join("routes.txt"))?;
    let trips = read_trips(&dir.join("trips.txt"))?;
    let stop_times = read_stop_times(&dir.join("stop_times.txt"))?;

    let mut tracks = Vec::new();
    let mut dropped = Vec::new();
    for route_id in route_order {
        let Some(trip_ids) = trips.get(&route_id) else {
            dropped.push(route_id);
            continue;
        };
        // Longest trip wins; ties go to the smallest trip id.
        let best = trip_ids
            .iter()
            .map(|t| (stop_times.get(t).map_or(0, Vec::len), t))
            .max_by(|a, b| a.0.cmp(&b.0).then_with(|| b.1.cmp(a.1)));
        let Some((stop_count, trip_id)) = best else {
            dropped.push(route_id);
            continue;
        };
        if stop_count < 2 {
            dropped.push(route_id);
            continue;
        }
        let mut calls = stop_times[trip_id].clone();
        calls.sort_by_key(|&(seq, _)| seq);
        let mut points = Vec::with_capacity(calls.len());
        for (_, stop_id) in calls {
            let &(lat, lon) = stops
                .get(&stop_id)
                .with_context(|| format!("trip {trip_id} calls at unknown stop {stop_id}"))?;
            points.push((quantize_deg(lat), quantize_deg(lon)));
        }
        tracks.push(NamedTrack { name: route_id, points });
    }
    Ok((tracks, dropped))
}

fn open(path: &Path) -> Result<(csv::Reader<std::fs::File>, Vec<String>)> {
    let mut reader = csv::ReaderBuilder::new()
        .trim(csv::Trim::All)
        .flexible(true)
        .from_path(path)
        .with_context(|| format!("opening {}", path.display()))?;
    let headers = reader
        .headers()
        .with_context(|| format!("reading headers of {}", path.display()))?
        .iter()
        .map(str::to_string)
        .collect();
    Ok((reader, headers))
}

fn column(headers: &[String], name: &str, path: &Path) -> Result<usize> {
    headers
        .iter()
        .position(|h| h == name)
        .with_context(|| format!("{} has no {name} column", path.display()))
}

fn field<'r>(record: &'r csv::StringRecord, at: usize, name: &str, path: &Path) -> Result<&'r str> {
    let value = record.get(at).unwrap_or("");
    if value.is_empty() {
        bail!("{}: record {:?} has an empty {name}", path.display(), record.position().map(|p| p.line()));
    }
    Ok(value)
}

/// stop_id -> (lat, lon)
fn read_stops(path: &Path) -> Result<HashMap<String, (f64, f64)>> {
    let (mut reader, headers) = open(path)?;
    let id_at = column(&headers, "stop_id", path)?;
    let lat_at = column(&headers, "stop_lat", path)?;
    let lon_at = column(&headers, "stop_lon", path)?;
    let mut out = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let id = field(&record, id_at, "stop_id", path)?.to_string();
        let lat: f64 = field(&record, lat_at, "stop_lat", path)?
            .parse()
            .with_context(|| format!("{}: bad stop_lat for stop {id}", path.display()))?;
        let lon: f64 = field(&record, lon_at, "stop_lon", path)?
            .parse()
            .with_context(|| format!("{}: bad stop_lon for stop {id}", path.display()))?;
        out.insert(id, (lat, lon));
    }
    Ok(out)
}

/// route ids in file order
fn read_routes(path: &Path) -> Result<Vec<String>> {
    let (mut reader, headers) = open(path)?;
    let id_at = column(&headers, "route_id", path)?;
    let mut out = Vec::new();
    for record in reader.records() {
        let record = record?;
        out.push(field(&record, id_at, "route_id", path)?.to_string());
    }
    Ok(out)
}

/// route_id -> trip ids
fn read_trips(path: &Path) -> Result<HashMap<String, Vec<String>>> {
    let (mut reader, headers) = open(path)?;
    let route_at = column(&headers, "route_id", path)?;
    let trip_at = column(&headers, "trip_id", path)?;
    let mut out: HashMap<String, Vec<String>> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let route = field(&record, route_at, "route_id", path)?.to_string();
        let trip = field(&record, trip_at, "trip_id", path)?.to_string();
        out.entry(route).or_default().push(trip);
    }
    Ok(out)
}

/// trip_id -> (stop_sequence, stop_id)
fn read_stop_times(path: &Path) -> Result<HashMap<String, Vec<(i64, String)>>> {
    let (mut reader, headers) = open(path)?;
    let trip_at = column(&headers, "trip_id", path)?;
    let seq_at = column(&headers, "stop_sequence", path)?;
    let stop_at = column(&headers, "stop_id", path)?;
    let mut out: HashMap<String, Vec<(i64, String)>> = HashMap::new();
    for record in reader.records() {
        let record = record?;
        let trip = field(&record, trip_at, "trip_id", path)?.to_string();
        let seq: i64 = field(&record, seq_at, "stop_sequence", path)?
            .parse()
            .with_context(|| format!("{}: bad stop_sequence in trip {trip}", path.display()))?;
        let stop = field(&record, stop_at, "stop_id", path)?.to_string();
        out.entry(trip).or_default().push((seq, stop));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn write_feed(dir: &Path) {
        std::fs::write(
            dir.join("stops.txt"),
            "stop_id,stop_name,stop_lat,stop_lon\n\
             s1,First,48.20,16.37\n\
             s2,Second,48.21,16.38\n\
             s3,Third,48.22,16.39\n\
             s4,Fourth,48.23,16.40\n",
        )
        .unwrap();
        std::fs::write(
            dir.join("routes.txt"),
            "route_id,route_short_name\nR2,Two\nR1,One\nR3,Three\n",
        )
        .unwrap();
        std::fs::write(
            dir.join("trips.txt"),
            "route_id,service_id,trip_id\n\
             R1,wd,r1-long\n\
             R1,we,r1-short\n\
             R2,wd,r2-b\n\
             R2,wd,r2-a\n\
             R3,wd,r3-stub\n",
        )
        .unwrap();
        // r1-long: 3 stops; r1-short: 2; r2-a and r2-b tie at 2 stops;
        // r3-stub has a single stop and must be dropped.
        std::fs::write(
            dir.join("stop_times.txt"),
            "trip_id,arrival_time,departure_time,stop_id,stop_sequence\n\
             r1-long,,,s1,1\n\
             r1-long,,,s3,5\n\
             r1-long,,,s2,3\n\
             r1-short,,,s1,1\n\
             r1-short,,,s2,2\n\
             r2-a,,,s4,1\n\
             r2-a,,,s1,2\n\
             r2-b,,,s2,1\n\
             r2-b,,,s3,2\n\
             r3-stub,,,s1,1\n",
        )
        .unwrap();
    }

    #[test]
    fn picks_longest_trip_breaks_ties_low_and_drops_stubs() {
        let dir = tempfile::tempdir().unwrap();
        write_feed(dir.path());
        let (tracks, dropped) = convert(dir.path()).unwrap();

        // routes.txt order, minus the dropped stub.
        assert_eq!(tracks.len(), 2);
        assert_eq!(tracks[0].name, "R2");
        assert_eq!(tracks[1].name, "R1");
        assert_eq!(dropped, vec!["R3".to_string()]);

        // R2's tie between r2-a and r2-b goes to r2-a (smaller id).
        assert_eq!(tracks[0].points, vec![(48.23, 16.40), (48.20, 16.37)]);
        // R1 takes the three-stop trip, ordered by stop_sequence.
        assert_eq!(
            tracks[1].points,
            vec![(48.20, 16.37), (48.21, 16.38), (48.22, 16.39)]
        );
    }

    #[test]
    fn unknown_stops_and_missing_columns_fail_loudly() {
        let dir = tempfile::tempdir().unwrap();
        write_feed(dir.path());
        std::fs::write(
            dir.path().join("stop_times.txt"),
            "trip_id,stop_id,stop_sequence\nr1-long,ghost,1\nr1-long,s1,2\n",
        )
        .unwrap();
        let err = convert(dir.path()).unwrap_err();
        assert!(err.to_string().contains("ghost"), "{err}");

        std::fs::write(dir.path().join("stops.txt"), "stop_id,stop_lat\ns1,48.2\n").unwrap();
        let err = convert(dir.path()).unwrap_err();
        assert!(err.to_string().contains("stop_lon"), "{err}");
    }
}
