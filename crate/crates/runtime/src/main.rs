use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Duration;

use clap::{Parser, Subcommand, ValueEnum};
use dpt_core::agents::AgentKind;
use dpt_core::log::Verdict;
use dpt_runtime::backend::BackendSpec;
use dpt_runtime::config::ExperimentConfig;
use dpt_runtime::episode::RunMode;
use dpt_runtime::harness::{format_csv, format_table, replay_file, report_dir, run_batch};
use dpt_runtime::server::{serve, ServerConfig};

const EXIT_CONFIG: u8 = 1;
const EXIT_DEGRADED: u8 = 2;

#[derive(Parser)]
#[command(name = "dpt", version, about = "Run, replay and serve dual-process kitchen agents")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run a batch of episodes.
    Run(RunArgs),
    /// Re-simulate a log and check every tick.
    Replay {
        #[arg(long)]
        log: PathBuf,
    },
    /// Aggregate the logs in a directory.
    Report {
        #[arg(long)]
        dir: PathBuf,
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
    /// Host live sessions for human players.
    Serve(ServeArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Json,
    Csv,
}

#[derive(clap::Args)]
struct Overrides {
    /// TOML experiment file; flags below override it.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    layout: Option<String>,
    #[arg(long)]
    agent: Option<String>,
    #[arg(long)]
    backend: Option<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    ticks: Option<u32>,
    #[arg(long)]
    tick_period: Option<f64>,
}

#[derive(clap::Args)]
struct RunArgs {
    #[command(flatten)]
    common: Overrides,
    /// Second seat, for example `rule:beef`. Omit for a single agent.
    #[arg(long)]
    partner: Option<String>,
    #[arg(long, value_enum)]
    mode: Option<RunMode>,
    #[arg(long)]
    runs: Option<u32>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(clap::Args)]
struct ServeArgs {
    #[command(flatten)]
    common: Overrides,
    #[arg(long, default_value = "127.0.0.1:8080")]
    addr: std::net::SocketAddr,
    #[arg(long, default_value_t = 8)]
    capacity: usize,
    /// Seconds a session keeps running after its controller disconnects.
    #[arg(long, default_value_t = 10.0)]
    grace: f64,
    #[arg(long, default_value = "sessions")]
    log_dir: PathBuf,
}

fn base_config(o: &Overrides) -> Result<ExperimentConfig, String> {
    let mut cfg = match &o.config {
        Some(p) => ExperimentConfig::load(p).map_err(|e| e.to_string())?,
        None => ExperimentConfig::default(),
    };
    if let Some(l) = &o.layout {
        cfg.layout = l.clone();
    }
    if let Some(a) = &o.agent {
        cfg.agent = AgentKind::parse(a).map_err(|e| e.to_string())?;
    }
    if let Some(b) = &o.backend {
        cfg.backend = BackendSpec::parse(b).map_err(|e| e.to_string())?;
    }
    if let Some(s) = o.seed {
        cfg.seed = s;
    }
    if let Some(t) = o.ticks {
        cfg.horizon = t;
    }
    if let Some(p) = o.tick_period {
        cfg.tick_period = p;
    }
    Ok(cfg)
}

fn run(args: RunArgs) -> Result<ExitCode, String> {
    let mut cfg = base_config(&args.common)?;
    if let Some(p) = &args.partner {
        cfg.partner = Some(AgentKind::parse(p).map_err(|e| e.to_string())?);
    }
    if let Some(m) = args.mode {
        cfg.mode = m;
    }
    if let Some(r) = args.runs {
        cfg.runs = r;
    }
    if args.out.is_some() {
        cfg.out = args.out;
    }
    cfg.validate().map_err(|e| e.to_string())?;
    if cfg.needs_backend() {
        // Fail at startup rather than on the first call.
        cfg.backend.open(&cfg.http).map_err(|e| e.to_string())?;
    }
    let report = run_batch(&cfg).map_err(|e| e.to_string())?;
    for r in &report.runs {
        match (&r.report, &r.error) {
            (Some(m), _) => println!(
                "run {:>3} seed {:>6} score {:>4} deliveries {:>2}{}",
                r.index,
                r.seed,
                m.score,
                m.deliveries,
                if r.degraded { " (degraded)" } else { "" }
            ),
            (None, e) => println!("run {:>3} seed {:>6} failed: {}", r.index, r.seed, e.as_deref().unwrap_or("?")),
        }
    }
    for (name, a) in &report.aggregates {
        println!(
            "{name:<22} iqm {:>9.3} ± {:>7.3} over {} runs{}",
            a.iqm,
            a.stderr,
            a.retained,
            if a.degraded { " (fewer than 4 runs)" } else { "" }
        );
    }
    Ok(if report.degraded() { ExitCode::from(EXIT_DEGRADED) } else { ExitCode::SUCCESS })
}

fn main() -> ExitCode {
    tracing_subscriber::fmt()
        .with_env_filter(tracing_subscriber::EnvFilter::try_from_default_env().unwrap_or_else(|_| "warn".into()))
        .with_writer(std::io::stderr)
        .init();
    let result = match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Replay { log } => replay_file(&log).map_err(|e| e.to_string()).map(|v| {
            println!("{}", serde_json::to_string(&v).expect("verdict serializes"));
            match v {
                Verdict::Verified { .. } => ExitCode::SUCCESS,
                Verdict::Diverged { .. } => ExitCode::from(EXIT_DEGRADED),
            }
        }),
        Command::Report { dir, format } => report_dir(&dir).map_err(|e| e.to_string()).map(|groups| {
            match format {
                Format::Table => print!("{}", format_table(&groups)),
                Format::Csv => print!("{}", format_csv(&groups)),
                Format::Json => println!("{}", serde_json::to_string_pretty(&groups).expect("report serializes")),
            }
            ExitCode::SUCCESS
        }),
        Command::Serve(args) => (|| {
            let experiment = base_config(&args.common)?;
            experiment.load_layout().map_err(|e| e.to_string())?;
            let config = ServerConfig {
                experiment,
                capacity: args.capacity,
                grace: Duration::from_secs_f64(args.grace.max(0.0)),
                log_dir: args.log_dir,
            };
            let rt = tokio::runtime::Runtime::new().map_err(|e| e.to_string())?;
            rt.block_on(serve(args.addr, config)).map_err(|e| e.to_string())?;
            Ok(ExitCode::SUCCESS)
        })(),
    };
    result.unwrap_or_else(|e| {
        eprintln!("error: {e}");
        ExitCode::from(EXIT_CONFIG)
    })
}
