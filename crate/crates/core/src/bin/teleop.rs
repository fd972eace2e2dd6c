use std::fs;
use std::io::Write;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::Arc;
use std::thread;
use std::time::{Duration, Instant};

use clap::{Args, Parser, Subcommand};
use log::info;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use teleop_core::client::live::{LiveClient, LiveOptions};
use teleop_core::client::{lag_report, record_paths, ClientConfig};
use teleop_core::netsim::{parse_profile, sample_delay, NetsimError};
use teleop_core::server::live::LiveServer;
use teleop_core::server::{Server, ServerConfig, ServerError};
use teleop_core::sim::{parse_script, SimConfig, SimError, Simulation};
use teleop_core::world::generate::{corridor, scattered_room};
use teleop_core::world::{Scenario, WorldError};

#[derive(Debug, Error)]
enum CliError {
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
    #[error(transparent)]
    Socket(#[from] std::io::Error),
    #[error(transparent)]
    World(#[from] WorldError),
    #[error(transparent)]
    Netsim(#[from] NetsimError),
    #[error(transparent)]
    Sim(#[from] SimError),
    #[error(transparent)]
    Server(#[from] ServerError),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_owned(),
        source,
    })
}

#[derive(Parser)]
#[command(name = "teleop", version, about = "Mobile-robot teleoperation over impaired links")]
struct Cli {
    #[command(subcommand)]
    command: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Robot-side server on real sockets, driving the simulated robot.
    Server(ServerArgs),
    /// Operator client on real sockets, with the console gateway.
    Client(ClientArgs),
    /// Server and client on one virtual clock through simulated links.
    Sim(SimArgs),
    /// Samples the delay model and prints min/mean/max per size.
    Delay(DelayArgs),
}

#[derive(Args)]
struct WorldArgs {
    /// Scenario file (bounds, start, safe_point, box, polygon, segment).
    #[arg(long, conflicts_with_all = ["room", "corridor"])]
    scenario: Option<PathBuf>,
    /// Generated room with scattered boxes, from this seed.
    #[arg(long, conflicts_with = "corridor")]
    room: Option<u64>,
    /// Generated corridor with staggered obstacles, from this seed.
    #[arg(long)]
    corridor: Option<u64>,
}

impl WorldArgs {
    fn load(&self) -> Result<Scenario, CliError> {
        Ok(match (&self.scenario, self.room, self.corridor) {
            (Some(p), _, _) => read(p)?.parse()?,
            (_, _, Some(seed)) => corridor(seed),
            (_, room, None) => scattered_room(room.unwrap_or(0)),
        })
    }
}

#[derive(Args)]
struct ServerArgs {
    #[command(flatten)]
    world: WorldArgs,
    #[arg(long, default_value = "0.0.0.0:7000")]
    listen: SocketAddr,
    #[arg(long, default_value = "0.0.0.0:7001")]
    datagram: SocketAddr,
    #[arg(long, default_value = "teleop")]
    token: String,
    /// Stop after this many seconds; runs until killed otherwise.
    #[arg(long)]
    duration_s: Option<u64>,
    /// Disable the camera stream.
    #[arg(long)]
    no_video: bool,
}

#[derive(Args)]
struct ClientArgs {
    #[arg(long, default_value = "127.0.0.1:7000")]
    server: SocketAddr,
    #[arg(long, default_value = "127.0.0.1:7001")]
    datagram: SocketAddr,
    /// WebSocket address for consoles.
    #[arg(long, default_value = "127.0.0.1:8080")]
    gateway: SocketAddr,
    #[arg(long, default_value = "teleop")]
    token: String,
    #[arg(long)]
    duration_s: Option<u64>,
}

#[derive(Args)]
struct SimArgs {
    #[command(flatten)]
    world: WorldArgs,
    /// Operator script (`t_ms action args` per line).
    #[arg(long)]
    script: Option<PathBuf>,
    /// Network profile file; the built-in delay table if absent.
    #[arg(long)]
    profile: Option<PathBuf>,
    /// Overrides the profile seed.
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 60_000)]
    duration_ms: u64,
    /// Truth and operator-side paths as CSV.
    #[arg(long)]
    paths: Option<PathBuf>,
    /// Server event log as JSON lines.
    #[arg(long)]
    events: Option<PathBuf>,
    /// Full report as JSON.
    #[arg(long)]
    report: Option<PathBuf>,
    /// Render camera frames too (slow).
    #[arg(long)]
    video: bool,
}

#[derive(Args)]
struct DelayArgs {
    #[arg(long)]
    profile: Option<PathBuf>,
    #[arg(long, default_value_t = 10_000)]
    samples: usize,
    #[arg(long, default_value_t = 1)]
    seed: u64,
    /// Datagram sizes in bytes.
    #[arg(default_values_t = [100, 500, 1000, 2000])]
    sizes: Vec<usize>,
}

fn stop_after(duration_s: Option<u64>) -> Arc<AtomicBool> {
    let stop = Arc::new(AtomicBool::new(false));
    if let Some(s) = duration_s {
        let flag = Arc::clone(&stop);
        thread::spawn(move || {
            thread::sleep(Duration::from_secs(s));
            flag.store(true, Ordering::SeqCst);
        });
    }
    stop
}

fn run_server(a: ServerArgs) -> Result<(), CliError> {
    let scenario = a.world.load()?;
    let mut config = ServerConfig {
        token: a.token,
        ..ServerConfig::default()
    };
    if a.no_video {
        config.frame_period_ms = None;
    }
    let server = Server::new(config, scenario.world, scenario.start)?;
    let live = LiveServer::bind(a.listen, a.datagram)?;
    live.run(server, stop_after(a.duration_s), |_| {});
    Ok(())
}

fn run_client(a: ClientArgs) -> Result<(), CliError> {
    let config = ClientConfig {
        token: a.token,
        ..ClientConfig::default()
    };
    let live = LiveClient::start(
        config,
        LiveOptions {
            server: a.server,
            server_datagram: a.datagram,
            gateway: Some(a.gateway),
            tick: Duration::from_millis(10),
        },
    )?;
    info!("console gateway on ws://{}", a.gateway);
    let stop = stop_after(a.duration_s);
    while !stop.load(Ordering::SeqCst) {
        thread::sleep(Duration::from_millis(100));
    }
    live.shutdown();
    Ok(())
}

fn run_sim(a: SimArgs) -> Result<(), CliError> {
    let scenario = a.world.load()?;
    let mut config = SimConfig::default();
    if let Some(p) = &a.profile {
        let file = parse_profile(&read(p)?)?;
        config.profile = file.profile;
        config.interruptions = file.interruptions;
    }
    if let Some(seed) = a.seed {
        config.profile.seed = seed;
    }
    if !a.video {
        config.server.frame_period_ms = None;
    }
    let script = match &a.script {
        Some(p) => parse_script(&read(p)?)?,
        None => parse_script("0 connect\n")?,
    };

    let started = Instant::now();
    let mut sim = Simulation::new(config, scenario.world, scenario.start)?.with_script(script);
    sim.run_until(a.duration_ms)?;
    let report = sim.report();

    let truth: Vec<_> = report.truth.iter().map(|t| (t.t_ms, t.truth)).collect();
    let paths = record_paths(&truth, sim.client().represent().trajectory());
    let lag = lag_report(&truth, sim.client().displays());
    let pose = sim.server().pose();
    println!("simulated {} ms in {:.2} s", report.end_ms, started.elapsed().as_secs_f64());
    println!("final pose x {:.3} y {:.3} theta {:.3}, mode {}", pose.x, pose.y, pose.theta, sim.server().mode());
    println!("collisions {}, server events {}", report.collisions, report.events.len());
    println!(
        "uplink {:?}\ndownlink {:?}",
        report.uplink, report.downlink
    );
    println!(
        "display latency mean {:.1} ms over {} renders; path max dx {:.4} m, max dy {:.4} m",
        lag.mean_latency_ms,
        report.renders.len(),
        paths.max_dx,
        paths.max_dy
    );
    for (t, e) in &report.client_errors {
        println!("client refused at {t} ms: {e}");
    }

    if let Some(p) = &a.paths {
        write(p, &paths.to_csv())?;
    }
    if let Some(p) = &a.events {
        let mut out = String::new();
        for e in &report.events {
            out.push_str(&serde_json::to_string(e)?);
            out.push('\n');
        }
        write(p, &out)?;
    }
    if let Some(p) = &a.report {
        write(p, &serde_json::to_string_pretty(&report)?)?;
    }
    Ok(())
}

fn run_delay(a: DelayArgs) -> Result<(), CliError> {
    let profile = match &a.profile {
        Some(p) => parse_profile(&read(p)?)?.profile,
        None => teleop_core::netsim::DelayProfile::field_trial(),
    };
    let mut rng = ChaCha8Rng::seed_from_u64(a.seed);
    let mut out = std::io::stdout().lock();
    writeln!(out, "size_bytes,min_ms,mean_ms,max_ms")?;
    for size in a.sizes {
        let d: Vec<f64> = (0..a.samples.max(1)).map(|_| sample_delay(size, &profile, &mut rng)).collect();
        let min = d.iter().copied().fold(f64::INFINITY, f64::min);
        let max = d.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mean = d.iter().sum::<f64>() / d.len() as f64;
        writeln!(out, "{size},{min:.1},{mean:.1},{max:.1}")?;
    }
    Ok(())
}

fn main() {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let result = match Cli::parse().command {
        Cmd::Server(a) => run_server(a),
        Cmd::Client(a) => run_client(a),
        Cmd::Sim(a) => run_sim(a),
        Cmd::Delay(a) => run_delay(a),
    };
    if let Err(e) = result {
        eprintln!("teleop: {e}");
        std::process::exit(1);
    }
}
