//! `netmo`: build a road network, generate moving objects on it, and query
//! them.
//!
//! All commands work on a workspace directory (`--dir`, default `.`) that
//! holds the imported edges, the built network, the record stores and the
//! generator's samples as CSV files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::info;
use netmo::generator::{self, GenParams};
use netmo::motion::{GLine, GPoint, MoId, Period, Periods, RouteInterval, Timestamp};
use netmo::moql::{self, templates, Context};
use netmo::network::{
    read_edges, read_restrictions, write_edges, Network, RouteKey, Tolerances, JUNCTIONS_FILE, NODES_FILE,
    ROUTES_FILE, SECTIONS_FILE,
};
use netmo::store::{GLineRecord, GPointRecord, Store, MGPOINTS_FILE};
use thiserror::Error;

const EDGES_FILE: &str = "edges.csv";
const META_FILE: &str = "network_meta.csv";
const SAMPLES_FILE: &str = "samples.csv";

#[derive(Debug, Error)]
enum CliError {
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Data(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Data(_) => 2,
        }
    }
}

fn data(e: impl std::fmt::Display) -> CliError {
    CliError::Data(e.to_string())
}

fn usage(e: impl std::fmt::Display) -> CliError {
    CliError::Usage(e.to_string())
}

#[derive(Parser)]
#[command(name = "netmo", version, about = "Moving objects on linear-referenced road networks")]
struct Cli {
    /// Workspace directory
    #[arg(long, global = true, default_value = ".")]
    dir: PathBuf,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum What {
    Network,
    Samples,
    Mgpoints,
}

#[derive(Subcommand)]
enum Command {
    /// Copy an edge file (`name,kind,wkt`) into the workspace
    ImportEdges { csv: PathBuf },
    /// Build nodes, sections, routes and junctions from the imported edges
    BuildNetwork {
        /// Turn restrictions (`node_id,from_route,from_dir,to_route,to_dir,allow`)
        #[arg(long)]
        restrictions: Option<PathBuf>,
        /// How sections are grouped into routes: by_name or per_section
        #[arg(long, default_value = "by_name")]
        route_key: String,
        /// Endpoint snapping distance in meters
        #[arg(long, default_value_t = 0.01)]
        snap: f64,
        #[arg(long, default_value_t = 1)]
        netid: u32,
    },
    /// Generate trips and store their motion
    Generate {
        #[arg(long)]
        periods: u32,
        /// Seconds between batches
        #[arg(long)]
        interval: f64,
        #[arg(long)]
        per_period: u32,
        #[arg(long)]
        seed: u64,
        #[arg(long, default_value_t = 14.0)]
        cruise: f64,
        #[arg(long, default_value_t = 2.0)]
        accel: f64,
        #[arg(long, default_value_t = 3.0)]
        decel: f64,
        #[arg(long, default_value_t = 0.3)]
        red_prob: f64,
        #[arg(long, default_value_t = 20.0)]
        red_wait: f64,
        /// Start time of the first batch (ISO-8601)
        #[arg(long, default_value = "2011-01-21T00:00:00.000Z")]
        start: String,
    },
    /// Evaluate a MOQL expression
    Query { text: String },
    /// Places visited by one object, optionally within a period
    Visited {
        #[arg(long)]
        moid: MoId,
        #[arg(long, requires = "to")]
        from: Option<String>,
        #[arg(long, requires = "from")]
        to: Option<String>,
    },
    /// Objects that passed through a stored gline or named route during a period
    PassedThrough {
        #[arg(long)]
        gline: String,
        #[arg(long)]
        from: String,
        #[arg(long)]
        to: String,
    },
    /// Routes holding more than `min` objects at an instant (or their last positions)
    CountByRoute {
        #[arg(long, default_value_t = 0)]
        min: usize,
        /// `now` or an ISO-8601 timestamp
        #[arg(long, default_value = "now")]
        at: String,
    },
    /// Check every stored record against the network
    Audit,
    /// Copy workspace files to another directory
    Export {
        #[arg(long, value_enum)]
        what: What,
        #[arg(long)]
        out: PathBuf,
    },
    /// Store a named gline; intervals are `rid:pos1:pos2[:side]`
    AddGline {
        #[arg(long)]
        name: String,
        #[arg(long = "interval", required = true)]
        intervals: Vec<String>,
    },
    /// Store a named gpoint
    AddGpoint {
        #[arg(long)]
        name: String,
        #[arg(long)]
        rid: u32,
        #[arg(long)]
        measure: f64,
        #[arg(long, default_value_t = 0, allow_hyphen_values = true)]
        side: i8,
    },
}

fn write_meta(dir: &Path, netid: u32, snap: f64) -> Result<(), CliError> {
    fs::write(dir.join(META_FILE), format!("netid,snap\n{netid},{snap}\n")).map_err(data)
}

fn load_network(dir: &Path) -> Result<Network, CliError> {
    let meta = fs::read_to_string(dir.join(META_FILE))
        .map_err(|_| CliError::Data(format!("no network in {}; run build-network first", dir.display())))?;
    let fields: Vec<&str> = meta.lines().nth(1).unwrap_or("").split(',').collect();
    let (Some(Ok(netid)), Some(Ok(snap))) = (fields.first().map(|s| s.parse()), fields.get(1).map(|s| s.parse())) else {
        return Err(CliError::Data(format!("{META_FILE}: malformed")));
    };
    let tol = Tolerances {
        snap,
        ..Tolerances::default()
    };
    Network::load_dump(dir, netid, tol).map_err(data)
}

fn load_store(dir: &Path) -> Result<Store, CliError> {
    Store::load(dir).map_err(data)
}

fn timestamp(s: &str) -> Result<Timestamp, CliError> {
    Timestamp::parse_iso(s).map_err(usage)
}

fn period(from: &str, to: &str) -> Result<Periods, CliError> {
    Ok(Periods::single(Period::new(timestamp(from)?, timestamp(to)?).map_err(usage)?))
}

fn parse_interval(text: &str) -> Result<RouteInterval, CliError> {
    let parts: Vec<&str> = text.split(':').collect();
    let bad = || CliError::Usage(format!("interval {text:?} is not rid:pos1:pos2[:side]"));
    if !(3..=4).contains(&parts.len()) {
        return Err(bad());
    }
    let side = match parts.get(3) {
        Some(s) => s.parse().map_err(|_| bad())?,
        None => 0,
    };
    Ok(RouteInterval::new(
        parts[0].parse().map_err(|_| bad())?,
        parts[1].parse().map_err(|_| bad())?,
        parts[2].parse().map_err(|_| bad())?,
        side,
    ))
}

fn copy_files(from: &Path, to: &Path, files: &[&str]) -> Result<(), CliError> {
    fs::create_dir_all(to).map_err(data)?;
    for f in files {
        let src = from.join(f);
        if !src.exists() {
            return Err(CliError::Data(format!("{} does not exist", src.display())));
        }
        fs::copy(&src, to.join(f)).map_err(data)?;
    }
    Ok(())
}

fn run(cli: Cli) -> Result<(), CliError> {
    let dir = cli.dir.as_path();
    match cli.command {
        Command::ImportEdges { csv } => {
            let file = fs::File::open(&csv).map_err(|e| CliError::Data(format!("{}: {e}", csv.display())))?;
            let edges = read_edges(file, &csv.display().to_string()).map_err(data)?;
            fs::create_dir_all(dir).map_err(data)?;
            let out = fs::File::create(dir.join(EDGES_FILE)).map_err(data)?;
            write_edges(out, &edges).map_err(data)?;
            println!("imported {} edges", edges.len());
        }
        Command::BuildNetwork {
            restrictions,
            route_key,
            snap,
            netid,
        } => {
            let key: RouteKey = route_key.parse().map_err(usage)?;
            if !(snap.is_finite() && snap >= 0.0) {
                return Err(usage("--snap must be a non-negative number"));
            }
            let path = dir.join(EDGES_FILE);
            let file = fs::File::open(&path).map_err(|_| CliError::Data("no edges imported; run import-edges first".into()))?;
            let edges = read_edges(file, EDGES_FILE).map_err(data)?;
            let rules = match restrictions {
                Some(p) => {
                    let f = fs::File::open(&p).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
                    read_restrictions(f, &p.display().to_string()).map_err(data)?
                }
                None => Vec::new(),
            };
            let tol = Tolerances {
                snap,
                ..Tolerances::default()
            };
            let net = Network::build(netid, &edges, key, &rules, tol).map_err(data)?;
            net.save_dump(dir).map_err(data)?;
            write_meta(dir, netid, snap)?;
            println!(
                "nodes {} sections {} routes {} junctions {}",
                net.node_count(),
                net.section_count(),
                net.route_count(),
                net.junctions().count()
            );
        }
        Command::Generate {
            periods,
            interval,
            per_period,
            seed,
            cruise,
            accel,
            decel,
            red_prob,
            red_wait,
            start,
        } => {
            let params = GenParams {
                periods,
                interval,
                per_period,
                seed,
                cruise_speed: cruise,
                accel,
                decel,
                red_prob,
                red_wait,
                start_time: timestamp(&start)?,
                ..GenParams::default()
            };
            params.validate().map_err(usage)?;
            let net = load_network(dir)?;
            let mut store = load_store(dir)?;
            store.clear_mgpoints();
            let summary = generator::generate(&net, &params, &mut store).map_err(data)?;
            store.save(dir).map_err(data)?;
            let out = fs::File::create(dir.join(SAMPLES_FILE)).map_err(data)?;
            generator::write_samples(std::io::BufWriter::new(out), &summary.samples).map_err(data)?;
            info!("wrote {} and {}", MGPOINTS_FILE, SAMPLES_FILE);
            println!(
                "objects {} units {} samples {}",
                summary.objects,
                summary.units,
                summary.samples.len()
            );
        }
        Command::Query { text } => {
            let expr = moql::parse(&text).map_err(usage)?;
            moql::typecheck(&expr).map_err(usage)?;
            let net = load_network(dir)?;
            let store = load_store(dir)?;
            let ctx = Context { net: &net, store: &store };
            let value = moql::eval(&expr, &ctx).map_err(data)?;
            println!("{value}");
        }
        Command::Visited { moid, from, to } => {
            let periods = match (from, to) {
                (Some(f), Some(t)) => Some(period(&f, &t)?),
                _ => None,
            };
            let net = load_network(dir)?;
            let store = load_store(dir)?;
            let ctx = Context { net: &net, store: &store };
            let g = templates::visited(&ctx, moid, periods.as_ref()).map_err(data)?;
            println!("{g}");
        }
        Command::PassedThrough { gline, from, to } => {
            let periods = period(&from, &to)?;
            let net = load_network(dir)?;
            let store = load_store(dir)?;
            let ctx = Context { net: &net, store: &store };
            let g = templates::resolve_gline(&ctx, &gline).map_err(data)?;
            println!("{}", templates::format_moids(&templates::passed_through(&ctx, &g, &periods)));
        }
        Command::CountByRoute { min, at } => {
            let at = if at.eq_ignore_ascii_case("now") { None } else { Some(timestamp(&at)?) };
            let net = load_network(dir)?;
            let store = load_store(dir)?;
            let ctx = Context { net: &net, store: &store };
            println!("routeid,name,count");
            for row in templates::count_by_route(&ctx, at, min) {
                println!("{},{},{}", row.rid, row.name, row.count);
            }
        }
        Command::Audit => {
            let net = load_network(dir)?;
            let store = load_store(dir)?;
            let problems = store.audit(&net);
            for p in &problems {
                println!("{p}");
            }
            if !problems.is_empty() {
                return Err(CliError::Data(format!("{} problem(s) found", problems.len())));
            }
            println!(
                "ok: {} gpoints, {} glines, {} objects, {} units",
                store.gpoints().count(),
                store.glines().count(),
                store.object_count(),
                store.unit_count()
            );
        }
        Command::Export { what, out } => {
            let files: &[&str] = match what {
                What::Network => &[NODES_FILE, SECTIONS_FILE, ROUTES_FILE, JUNCTIONS_FILE, META_FILE],
                What::Samples => &[SAMPLES_FILE],
                What::Mgpoints => &[MGPOINTS_FILE],
            };
            copy_files(dir, &out, files)?;
            println!("exported {} file(s) to {}", files.len(), out.display());
        }
        Command::AddGline { name, intervals } => {
            let intervals = intervals.iter().map(|s| parse_interval(s)).collect::<Result<Vec<_>, _>>()?;
            let net = load_network(dir)?;
            let mut store = load_store(dir)?;
            let rec = GLineRecord {
                id: 0,
                geom: GLine::new(net.net_id, 0, intervals),
                name,
            };
            let id = store.insert_gline(&net, rec).map_err(data)?;
            store.save(dir).map_err(data)?;
            println!("gline {id}");
        }
        Command::AddGpoint {
            name,
            rid,
            measure,
            side,
        } => {
            let net = load_network(dir)?;
            let mut store = load_store(dir)?;
            let rec = GPointRecord {
                id: 0,
                geom: GPoint::new(net.net_id, rid, measure, side),
                name,
            };
            let id = store.insert_gpoint(&net, rec).map_err(data)?;
            store.save(dir).map_err(data)?;
            println!("gpoint {id}");
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code())
        }
    }
}
