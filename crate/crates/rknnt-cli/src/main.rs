//! Command-line front end: build datasets, precompute, query, plan, bench.
//!
//! Exit codes: 0 on success, 2 on usage or input problems, 3 when a
//! `--self-check` run disagrees with its reference.

mod gtfs;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand};

use rknnt::engine::{load_precomputed, save_precomputed, Engine};
use rknnt::geometry::GeoPoint;
use rknnt::ingest::{
    gen_queries, gen_transitions, quantize_deg, read_tracks, read_trajectories, sha256_hex,
    write_tracks, write_trajectories, DatasetManifest, DegreeBounds, Frame, NamedTrack,
};
use rknnt::model::{QueryRoute, Semantics};
use rknnt::planner::{
    methods as plan_methods, DominancePolicy, Objective, PlanOptions, Precomputed,
    ReachabilityBound, VertexId,
};
use rknnt::query::methods as query_methods;

const INDEX_FILE: &str = "index.bin";
const MANIFEST_FILE: &str = "manifest.json";

#[derive(Parser)]
#[command(name = "rknnt", version, about = "Reverse-kNN transition queries and route planning")]
struct Cli {
    /// Worker threads for parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse route and trip files and write a dataset directory.
    Build {
        /// Route stops as `id,seq,lat,lon` lines.
        #[arg(long)]
        routes: PathBuf,
        /// Observed trips as `id,lat,lon,lat,lon,…` lines.
        #[arg(long)]
        trips: PathBuf,
        /// Output dataset directory (created if missing).
        #[arg(long)]
        out: PathBuf,
    },

    /// Precompute per-vertex attraction sets and shortest paths for `plan`.
    Precompute {
        /// Dataset directory from `build`.
        #[arg(long)]
        index: PathBuf,
        /// Neighborhood size the sets are computed for.
        #[arg(long)]
        k: u32,
    },

    /// Which transitions would adopt a candidate route?
    Query(QueryArgs),

    /// Best route between two points under a travel-distance budget.
    Plan(PlanArgs),

    /// Benchmark query strategies or the planner; emits one CSV.
    Bench(BenchArgs),

    /// Generate synthetic trips inside the bounding box of a route file.
    GenTransitions {
        #[arg(long)]
        routes: PathBuf,
        #[arg(long)]
        count: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },

    /// Generate random query routes anchored on a route file.
    GenQueries {
        #[arg(long)]
        routes: PathBuf,
        #[arg(long)]
        count: usize,
        /// Stops per generated query.
        #[arg(long, default_value_t = 4)]
        points: usize,
        /// Leg length between consecutive stops, kilometers.
        #[arg(long, default_value_t = 0.8)]
        interval_km: f64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
    },

    /// Convert a GTFS feed directory into a route file.
    GtfsConvert {
        /// Directory holding stops.txt, routes.txt, trips.txt, stop_times.txt.
        #[arg(long)]
        gtfs: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },

    /// List the registered query and plan strategies.
    Methods,
}

#[derive(Args)]
struct QueryArgs {
    /// Dataset directory from `build`.
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    k: u32,
    /// `exists` (one endpoint suffices) or `forall` (both endpoints).
    #[arg(long, default_value = "exists")]
    semantics: String,
    /// Query strategy; see `rknnt methods`.
    #[arg(long, default_value = "voronoi")]
    method: String,
    /// Inline query route: `lat,lon;lat,lon;…`.
    #[arg(long, conflicts_with = "queries")]
    query: Option<String>,
    /// Batch of query routes as `id,seq,lat,lon` lines.
    #[arg(long)]
    queries: Option<PathBuf>,
    /// Evaluate as if this route (by name) did not exist.
    #[arg(long)]
    mask: Option<String>,
    /// Re-run every query against the exhaustive reference; exit 3 on any
    /// disagreement.
    #[arg(long)]
    self_check: bool,
}

#[derive(Args)]
struct PlanArgs {
    /// Dataset directory from `build` (must be precomputed for this `k`).
    #[arg(long)]
    index: PathBuf,
    #[arg(long)]
    k: u32,
    /// Origin as `lat,lon`; snapped to the nearest stop.
    #[arg(long)]
    from: String,
    /// Destination as `lat,lon`; snapped to the nearest stop.
    #[arg(long)]
    to: String,
    /// Travel-distance budget, kilometers.
    #[arg(long)]
    tau: f64,
    /// `max` (attract transitions) or `min` (avoid them).
    #[arg(long, default_value = "max")]
    objective: String,
    #[arg(long, default_value = "exists")]
    semantics: String,
    /// Plan strategy; see `rknnt methods`.
    #[arg(long, default_value = "search")]
    method: String,
    /// Label dominance rule: `off`, `exact`, or `aggressive` (a heuristic
    /// that may miss the optimum).
    #[arg(long, default_value = "exact")]
    dominance: String,
    /// Reachability bound: `shortest-path` or `straight-line`.
    #[arg(long, default_value = "shortest-path")]
    bound: String,
    /// Disable incumbent-based pruning (min objective only).
    #[arg(long)]
    no_incumbent_bound: bool,
    /// Also run the exhaustive planner and compare; exit 3 on disagreement.
    #[arg(long)]
    self_check: bool,
}

#[derive(Args)]
struct BenchArgs {
    /// Dataset directory from `build`.
    #[arg(long)]
    index: PathBuf,
    /// Neighborhood sizes to sweep, comma-separated (one row per cell).
    #[arg(long, value_delimiter = ',', default_values_t = [10])]
    k: Vec<u32>,
    /// Query strategies to run (default: all).
    #[arg(long)]
    method: Option<String>,
    /// Queries per row.
    #[arg(long, default_value_t = 100)]
    queries: usize,
    /// Stops per generated query, comma-separated sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [4])]
    qlen: Vec<usize>,
    /// Leg lengths between query stops in kilometers, comma-separated sweep.
    #[arg(long, value_delimiter = ',', default_values_t = [0.8])]
    interval_km: Vec<f64>,
    /// Repetitions per query (averaged).
    #[arg(long, default_value_t = 3)]
    reps: usize,
    #[arg(long, default_value = "exists")]
    semantics: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also bench the planner at these budget ratios over the shortest
    /// path, comma-separated sweep (needs precomputations for every k).
    #[arg(long, value_delimiter = ',')]
    tau_ratio: Option<Vec<f64>>,
    /// Where to write the CSV (default: stdout).
    #[arg(long)]
    out: Option<PathBuf>,
}

/// A `--self-check` disagreement: distinct from usage errors so scripts can
/// tell "the engine is inconsistent" (3) from "I called it wrong" (2).
#[derive(Debug)]
struct SelfCheckFailed(String);

impl fmt::Display for SelfCheckFailed {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "self-check failed: {}", self.0)
    }
}

impl std::error::Error for SelfCheckFailed {}

fn main() -> std::process::ExitCode {
    // Die quietly when the reader hangs up (`rknnt … | head`), like any
    // other Unix tool; Rust ignores SIGPIPE by default, which would turn
    // the hangup into a panic mid-print.
    #[cfg(unix)]
    unsafe {
        libc::signal(libc::SIGPIPE, libc::SIG_DFL);
    }
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: --threads: {e}");
            return std::process::ExitCode::from(2);
        }
    }
    match run(cli.command) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) if e.is::<SelfCheckFailed>() => {
            eprintln!("{e}");
            std::process::ExitCode::from(3)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            std::process::ExitCode::from(2)
        }
    }
}

fn run(command: Command) -> Result<()> {
    match command {
        Command::Build { routes, trips, out } => build(&routes, &trips, &out),
        Command::Precompute { index, k } => precompute(&index, k),
        Command::Query(args) => query(args),
        Command::Plan(args) => plan(args),
        Command::Bench(args) => bench(args),
        Command::GenTransitions { routes, count, seed, out } => {
            let tracks = read_tracks(&routes)?;
            let bounds = DegreeBounds::of_tracks(&tracks)
                .ok_or_else(|| anyhow!("{} holds no points", routes.display()))?;
            let trips = gen_transitions(&bounds, count, seed);
            write_trajectories(&out, &trips)?;
            println!("wrote {} trips to {}", trips.len(), out.display());
            Ok(())
        }
        Command::GenQueries { routes, count, points, interval_km, seed, out } => {
            let tracks = read_tracks(&routes)?;
            let frame = Frame::for_tracks(&tracks)
                .ok_or_else(|| anyhow!("{} holds no points", routes.display()))?;
            if points == 0 || interval_km <= 0.0 {
                bail!("--points must be at least 1 and --interval-km positive");
            }
            let queries = gen_queries(&tracks, &frame, count, points, interval_km, seed);
            write_tracks(&out, &queries)?;
            println!("wrote {} queries to {}", queries.len(), out.display());
            Ok(())
        }
        Command::GtfsConvert { gtfs, out } => {
            let (tracks, dropped) = gtfs::convert(&gtfs)?;
            for id in &dropped {
                eprintln!("note: route {id} has fewer than two usable stops; dropped");
            }
            write_tracks(&out, &tracks)?;
            println!("wrote {} routes to {}", tracks.len(), out.display());
            Ok(())
        }
        Command::Methods => {
            println!("query strategies (--method for `query` and `bench`):");
            for m in query_methods::all() {
                println!("  {:<16} {}", m.name(), m.describe());
            }
            println!("plan strategies (--method for `plan`):");
            for m in plan_methods::all() {
                println!("  {:<16} {}", m.name(), m.describe());
            }
            Ok(())
        }
    }
}

fn build(routes_path: &Path, trips_path: &Path, out: &Path) -> Result<()> {
    let started = Instant::now();
    let route_tracks = read_tracks(routes_path)?;
    let trips = read_trajectories(trips_path)?;
    let frame = Frame::for_tracks(route_tracks.iter().chain(trips.iter()))
        .ok_or_else(|| anyhow!("inputs hold no points at all"))?;
    let engine = Engine::build(frame, &route_tracks, &trips)?;

    std::fs::create_dir_all(out)?;
    engine.save(&out.join(INDEX_FILE))?;
    let manifest = DatasetManifest {
        routes_file: routes_path.display().to_string(),
        routes_sha256: sha256_hex(routes_path)?,
        trips_file: trips_path.display().to_string(),
        trips_sha256: sha256_hex(trips_path)?,
        frame,
        route_count: engine.routes.len(),
        stop_count: engine.rr.stop_count(),
        transition_count: engine.tr.transition_count(),
        vertex_count: engine.graph.vertex_count(),
        edge_count: engine.graph.edge_count(),
    };
    manifest.save(&out.join(MANIFEST_FILE))?;

    println!(
        "built {}: {} routes, {} distinct stops, {} transitions, graph {}v/{}e ({} ms)",
        out.display(),
        manifest.route_count,
        manifest.stop_count,
        manifest.transition_count,
        manifest.vertex_count,
        manifest.edge_count,
        started.elapsed().as_millis()
    );
    Ok(())
}

fn precomp_file(index: &Path, k: u32) -> PathBuf {
    index.join(format!("precomp_k{k}.bin"))
}

fn load_engine(index: &Path) -> Result<Engine> {
    Engine::load(&index.join(INDEX_FILE))
        .with_context(|| format!("loading dataset {}", index.display()))
}

fn precompute(index: &Path, k: u32) -> Result<()> {
    let engine = load_engine(index)?;
    let started = Instant::now();
    let pre = engine.precompute(k);
    let path = precomp_file(index, k);
    save_precomputed(&path, &pre)?;
    println!(
        "precomputed k={k} for {} vertices into {} ({} ms)",
        engine.graph.vertex_count(),
        path.display(),
        started.elapsed().as_millis()
    );
    Ok(())
}

fn load_precomp(index: &Path, engine: &Engine, k: u32) -> Result<Precomputed> {
    let path = precomp_file(index, k);
    if !path.exists() {
        bail!(
            "{} is missing; run `rknnt precompute --index {} --k {k}` first",
            path.display(),
            index.display()
        );
    }
    Ok(load_precomputed(&path, engine.graph.vertex_count())?)
}

/// Parse `lat,lon`.
fn parse_point(s: &str) -> Result<(f64, f64)> {
    let (lat, lon) = s
        .split_once(',')
        .ok_or_else(|| anyhow!("expected `lat,lon`, got {s:?}"))?;
    let lat: f64 = lat.trim().parse().map_err(|_| anyhow!("bad latitude {lat:?}"))?;
    let lon: f64 = lon.trim().parse().map_err(|_| anyhow!("bad longitude {lon:?}"))?;
    if !(-90.0..=90.0).contains(&lat) || !(-180.0..=180.0).contains(&lon) {
        bail!("({lat}, {lon}) is off the globe");
    }
    Ok((quantize_deg(lat), quantize_deg(lon)))
}

/// Parse `lat,lon;lat,lon;…` into a projected query route.
fn parse_query(s: &str, frame: &Frame) -> Result<QueryRoute> {
    let mut points = Vec::new();
    for part in s.split(';') {
        let (lat, lon) = parse_point(part)?;
        points.push(frame.project(lat, lon));
    }
    if points.is_empty() {
        bail!("the query route has no points");
    }
    Ok(QueryRoute::new(points))
}

fn query(args: QueryArgs) -> Result<()> {
    let engine = load_engine(&args.index)?;
    let semantics = Semantics::from_str(&args.semantics).map_err(|e| anyhow!(e))?;
    let method = query_methods::by_name(&args.method)?;
    let mask = match &args.mask {
        None => None,
        Some(name) => Some(
            engine
               .route_by_name(name)
                .ok_or_else(|| anyhow!("no route named {name:?} in this dataset"))?,
        ),
    };
    let ctx = engine.query_context(mask);

    let batch: Vec<(String, QueryRoute)> = match (&args.query, &args.queries) {
        (Some(inline), None) => vec![("query".to_string(), parse_query(inline, &engine.frame)?)],
        (None, Some(path)) => read_tracks(path)?
            .into_iter()
            .map(|t| {
                let points =
                    t.points.iter().map(|&(la, lo)| engine.frame.project(la, lo)).collect();
                (t.name, QueryRoute::new(points))
            })
            .collect(),
        (None, None) => bail!("pass --query or --queries"),
        (Some(_), Some(_)) => unreachable!("clap forbids both"),
    };

    let oracle = query_methods::by_name("oracle")?;
    for (name, q) in &batch {
        let (result, stats) = method.run(&ctx, q, args.k, semantics);
        let mut names: Vec<&str> = result
            .transitions
            .iter()
            .map(|&id| engine.transition_name(id).unwrap_or("?"))
            .collect();
        names.sort_unstable();
        println!(
            "{name}: {} transitions under k={} {} ({:.2} ms): {}",
            result.transitions.len(),
            args.k,
            args.semantics,
            stats.wall_ms,
            names.join(" ")
        );

        if args.self_check && args.method != "oracle" {
            let (want, _) = oracle.run(&ctx, q, args.k, semantics);
            if want.transitions != result.transitions
                || want.endpoint_hits != result.endpoint_hits
            {
                return Err(SelfCheckFailed(format!(
                    "{name}: {} found {:?}, the exhaustive reference found {:?}",
                    args.method,
                    result.ids(),
                    want.ids()
                ))
                .into());
            }
        }
    }
    if args.self_check {
        println!("self-check passed: {} agrees with the exhaustive scan", args.method);
    }
    Ok(())
}

fn plan(args: PlanArgs) -> Result<()> {
    let engine = load_engine(&args.index)?;
    let pre = load_precomp(&args.index, &engine, args.k)?;
    let semantics = Semantics::from_str(&args.semantics).map_err(|e| anyhow!(e))?;
    let objective = Objective::from_str(&args.objective).map_err(|e| anyhow!(e))?;
    let method = plan_methods::by_name(&args.method)?;

    let mut opts = PlanOptions::new(objective, semantics);
    opts.dominance = match args.dominance.as_str() {
        "off" => DominancePolicy::Off,
        "exact" => DominancePolicy::Exact,
        "aggressive" => DominancePolicy::Aggressive,
        other => bail!("unknown dominance rule {other:?} (off, exact, aggressive)"),
    };
    opts.reachability = match args.bound.as_str() {
        "shortest-path" => ReachabilityBound::ShortestPath,
        "straight-line" => ReachabilityBound::StraightLine,
        other => bail!("unknown reachability bound {other:?} (shortest-path, straight-line)"),
    };
    opts.use_bounds = !args.no_incumbent_bound;

    let snap = |label: &str, s: &str| -> Result<VertexId> {
        let (lat, lon) = parse_point(s)?;
        let p = engine.frame.project(lat, lon);
        let v = engine
            .graph
            .nearest_vertex(&p)
            .ok_or_else(|| anyhow!("the transit graph is empty"))?;
        let at = engine.graph.location(v);
        println!("{label}: snapped to vertex {v} ({:.3} km away)", p.dist(&at));
        Ok(v)
    };
    let origin = snap("from", &args.from)?;
    let dest = snap("to", &args.to)?;

    let ctx = plan_methods::PlanContext { graph: &engine.graph, pre: &pre };
    let started = Instant::now();
    let (route, stats) = method.run(&ctx, origin, dest, args.tau, &opts)?;
    let elapsed_ms = started.elapsed().as_secs_f64() * 1e3;

    match &route {
        None => println!(
            "no route from vertex {origin} to vertex {dest} within {} km",
            args.tau
        ),
        Some(r) => {
            println!(
                "best route: {} stops, {:.3} km travelled, {} transitions attracted ({} {}), {:.2} ms",
                r.vertices.len(),
                r.td,
                r.count(semantics),
                args.objective,
                args.semantics,
                elapsed_ms
            );
            for &v in &r.vertices {
                let (lat, lon) = engine.frame.unproject(&engine.graph.location(v));
                println!("  vertex {v}: {lat:.6},{lon:.6}");
            }
        }
    }
    if args.method == "search" {
        println!(
            "search stats: {} popped, {} pushed, {} dominated, {} evicted, {} bounded, {} unreachable",
            stats.popped, stats.pushed, stats.dominated, stats.evicted, stats.bounded,
            stats.unreachable
        );
    }

    if args.self_check && args.method != "bruteforce" {
        let reference = plan_methods::by_name("bruteforce")?;
        let (want, _) = reference.run(&ctx, origin, dest, args.tau, &opts)?;
        let agree = match (&route, &want) {
            (None, None) => true,
            (Some(a), Some(b)) => {
                a.vertices == b.vertices && a.td == b.td && a.omega_ids(semantics) == b.omega_ids(semantics)
            }
            _ => false,
        };
        if !agree {
            return Err(SelfCheckFailed(format!(
                "{} found {:?}, the exhaustive reference found {:?}",
                args.method,
                route.as_ref().map(|r| &r.vertices),
                want.as_ref().map(|r| &r.vertices)
            ))
            .into());
        }
        println!("self-check passed: {} agrees with the exhaustive planner", args.method);
    }
    Ok(())
}

/// The one CSV schema both bench modes share; planner rows leave the
/// query-shape columns empty and vice versa.
const BENCH_HEADER: &str = "method,k,qlen,interval_km,td_se,tau_ratio,reps,queries,avg_wall_ms,avg_filter_ms,avg_refine_ms,avg_result_size,seed";

fn bench(args: BenchArgs) -> Result<()> {
    let engine = load_engine(&args.index)?;
    let semantics = Semantics::from_str(&args.semantics).map_err(|e| anyhow!(e))?;
    if args.k.is_empty() || args.qlen.is_empty() || args.interval_km.is_empty() {
        bail!("every sweep list needs at least one value");
    }
    if args.qlen.contains(&0) || args.interval_km.iter().any(|&i| i <= 0.0) {
        bail!("--qlen entries must be at least 1 and --interval-km entries positive");
    }
    let mut rows = vec![BENCH_HEADER.to_string()];

    let methods: Vec<&'static dyn query_methods::QueryMethod> = match &args.method {
        Some(name) => vec![query_methods::by_name(name)?],
        None => query_methods::all().to_vec(),
    };

    // One cell per (query shape, k, method); queries are generated once per
    // shape, in degree space, and shared by every method and k so rows are
    // comparable.
    let tracks = degree_tracks(&engine);
    let ctx = engine.query_context(None);
    for &qlen in &args.qlen {
        for &interval_km in &args.interval_km {
            let generated =
                gen_queries(&tracks, &engine.frame, args.queries, qlen, interval_km, args.seed);
            let queries: Vec<QueryRoute> = generated
                .iter()
                .map(|t| {
                    QueryRoute::new(
                        t.points.iter().map(|&(la, lo)| engine.frame.project(la, lo)).collect(),
                    )
                })
                .collect();
            for &k in &args.k {
                for method in &methods {
                    let (mut wall, mut filter, mut refine, mut size) = (0.0, 0.0, 0.0, 0.0);
                    for q in &queries {
                        for _ in 0..args.reps {
                            let (result, stats) = method.run(&ctx, q, k, semantics);
                            wall += stats.wall_ms;
                            filter += stats.filter_ms;
                            refine += stats.refine_ms;
                            size += result.transitions.len() as f64;
                        }
                    }
                    let n = (queries.len() * args.reps) as f64;
                    rows.push(format!(
                        "{},{},{},{},,,{},{},{:.4},{:.4},{:.4},{:.2},{}",
                        method.name(),
                        k,
                        qlen,
                        interval_km,
                        args.reps,
                        args.queries,
                        wall / n,
                        filter / n,
                        refine / n,
                        size / n,
                        args.seed
                    ));
                }
            }
        }
    }

    if let Some(ratios) = &args.tau_ratio {
        for &k in &args.k {
            let pre = load_precomp(&args.index, &engine, k)?;
            for &ratio in ratios {
                rows.push(bench_plan(&args, &engine, &pre, semantics, k, ratio)?);
            }
        }
    }

    let csv = rows.join("\n") + "\n";
    match &args.out {
        Some(path) => {
            std::fs::write(path, csv)?;
            println!("wrote {} rows to {}", rows.len() - 1, path.display());
        }
        None => print!("{csv}"),
    }
    Ok(())
}

/// One planner row: random reachable pairs, budget = ratio × shortest path.
fn bench_plan(
    args: &BenchArgs,
    engine: &Engine,
    pre: &Precomputed,
    semantics: Semantics,
    k: u32,
    ratio: f64,
) -> Result<String> {
    use rand::Rng;
    if ratio < 1.0 {
        bail!("--tau-ratio below 1 leaves every destination unreachable");
    }
    let opts = PlanOptions::new(Objective::Max, semantics);
    let n = engine.graph.vertex_count() as u32;
    let mut rng = seeded_rng(args.seed);
    let mut pairs = Vec::with_capacity(args.queries);
    let mut guard = 0;
    while pairs.len() < args.queries && guard < args.queries * 1000 {
        guard += 1;
        let o = rng.random_range(0..n);
        let d = rng.random_range(0..n);
        if o != d && pre.m_psi.get(o, d).is_finite() {
            pairs.push((o, d));
        }
    }
    if pairs.is_empty() {
        bail!("found no connected vertex pairs to plan between");
    }

    let (mut wall, mut size, mut td_se) = (0.0, 0.0, 0.0);
    for &(o, d) in &pairs {
        let shortest = pre.m_psi.get(o, d);
        td_se += shortest;
        for _ in 0..args.reps {
            let started = Instant::now();
            let (route, _) =
                rknnt::planner::plan(&engine.graph, pre, o, d, shortest * ratio, &opts)?;
            wall += started.elapsed().as_secs_f64() * 1e3;
            size += route.map_or(0, |r| r.count(semantics)) as f64;
        }
    }
    let runs = (pairs.len() * args.reps) as f64;
    Ok(format!(
        "search,{},,,{:.4},{},{},{},{:.4},,,{:.2},{}",
        k,
        td_se / pairs.len() as f64,
        ratio,
        args.reps,
        pairs.len(),
        wall / runs,
        size / runs,
        args.seed
    ))
}

/// ChaCha-based seeded RNG for the bench pair picker (the same family the
/// generators use, so runs stay reproducible across releases).
fn seeded_rng(seed: u64) -> impl rand::Rng {
    use rand::SeedableRng;
    rand_chacha::ChaCha8Rng::seed_from_u64(seed)
}

/// Engine routes, back in degree space, for the query generator.
fn degree_tracks(engine: &Engine) -> Vec<NamedTrack> {
    engine
        .routes
        .iter()
        .zip(&engine.route_names)
        .map(|(r, name)| NamedTrack {
            name: name.clone(),
            points: r
                .points
                .iter()
                .map(|p: &GeoPoint| {
                    let (la, lo) = engine.frame.unproject(p);
                    (quantize_deg(la), quantize_deg(lo))
                })
                .collect(),
        })
        .collect()
}
