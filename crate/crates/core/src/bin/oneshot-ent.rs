//! Command-line front end. Results go to stdout as JSON, logs to stderr.
//!
//! Exit codes: 0 success, 1 a theorem record failed, 2 invalid input,
//! 3 solver non-convergence, 4 relaxation gap, 5 channel not non-entangling.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::{info, warn};
use serde_json::json;

use oneshot_ent::error::exit;
use oneshot_ent::experiments::{self, Status};
use oneshot_ent::io::{self, MeasureRecord, ResultCache, RunConfig};
use oneshot_ent::measures::Measure;
use oneshot_ent::{protocols, Error, Result};

#[derive(Parser)]
#[command(name = "oneshot-ent", version, about = "One-shot entanglement measures and non-entangling protocols")]
struct Cli {
    /// JSON run configuration.
    #[arg(long, global = true, env = "ONESHOT_ENT_CONFIG")]
    config: Option<PathBuf>,
    /// Overrides the configured output directory.
    #[arg(long, global = true)]
    out_dir: Option<PathBuf>,
    /// Overrides the configured see-saw seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Writes every SDP in plain-text form into this directory.
    #[arg(long, global = true)]
    dump_sdp: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluates one measure on a state file.
    Measure {
        #[arg(long)]
        state: PathBuf,
        #[arg(long)]
        measure: String,
        #[arg(long)]
        eps: Option<f64>,
        /// Second argument of dmax/dmin; maximally mixed by default.
        #[arg(long)]
        sigma: Option<PathBuf>,
        /// Fails with exit 4 if the bracket is wider than this.
        #[arg(long)]
        max_width: Option<f64>,
    },
    /// Builds and certifies a protocol channel.
    Protocol {
        kind: ProtocolKind,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 0.0)]
        eps: f64,
        #[arg(long)]
        delta: Option<f64>,
    },
    /// Runs a report suite.
    Experiments {
        suite: Suite,
        /// State for `regularize`; the configured battery otherwise.
        #[arg(long)]
        state: Option<PathBuf>,
        #[arg(long, default_value_t = 0.01)]
        eps: f64,
        #[arg(long, default_value_t = 2)]
        nmax: usize,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ProtocolKind {
    Distill,
    Dilute,
    CatalyticDilute,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    Theorems,
    Regularize,
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn run(cli: Cli) -> Result<i32> {
    let mut config = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(dir) = cli.out_dir {
        config.out_dir = dir;
    }
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    let mut opts = config.options();
    opts.dump_dir = cli.dump_sdp;

    match cli.command {
        Command::Measure { state, measure, eps, sigma, max_width } => {
            let measure: Measure = measure.parse()?;
            let file = io::load_state(&state)?;
            let rho = file.to_state()?;
            let sigma = sigma.map(|p| io::load_state(&p)?.to_state()).transpose()?;
            let eps = eps.filter(|_| measure.needs_eps());
            let cache = config.cache_dir.as_ref().map(ResultCache::new);
            let key = ResultCache::key(&file, measure.name(), eps, &config);
            let cached = if sigma.is_none() { cache.as_ref().and_then(|c| c.get(&key)) } else { None };
            let record = match cached {
                Some(r) => {
                    info!("cache hit {key}");
                    r
                }
                None => {
                    let value = measure.evaluate(&rho, eps, sigma.as_ref(), &opts)?;
                    let r = MeasureRecord::new(measure.name(), &file.name, eps, &value);
                    if let (Some(c), None) = (&cache, &sigma) {
                        if let Err(e) = c.put(&key, &r) {
                            warn!("cache write failed: {e}");
                        }
                    }
                    r
                }
            };
            io::write_json(&config.out_dir.join(format!("measure-{}-{}.json", file.name, measure.name())), &record)?;
            println!("{}", serde_json::to_string_pretty(&record)?);
            if let Some(w) = max_width {
                let width = record.value_upper - record.value_lower;
                if width > w {
                    return Err(Error::RelaxationGap(format!("bracket width {width:e} exceeds {w:e}")));
                }
            }
            Ok(0)
        }
        Command::Protocol { kind, state, eps, delta } => {
            let file = io::load_state(&state)?;
            let rho = file.to_state()?;
            let (name, outcome) = match kind {
                ProtocolKind::Distill => ("distill", protocols::build_distill(&rho, eps, &opts)?),
                ProtocolKind::Dilute => ("dilute", protocols::build_dilute(&rho, eps, &opts)?),
                ProtocolKind::CatalyticDilute => {
                    let delta = delta.ok_or_else(|| Error::InvalidParameter("catalytic-dilute needs --delta".into()))?;
                    ("catalytic-dilute", protocols::build_catalytic_dilute(&rho, eps, delta, &opts)?)
                }
            };
            let stem = config.out_dir.join(format!("{name}-{}", file.name));
            io::write_json(&with_suffix(&stem, "outcome.json"), &outcome)?;
            io::save_channel(&with_suffix(&stem, "channel.json"), &outcome.channel)?;
            let summary = json!({
                "protocol": name,
                "state": file.name,
                "eps": eps,
                "delta": delta,
                "log_m": outcome.log_m,
                "m": outcome.m,
                "achieved_fidelity": outcome.achieved_fidelity,
                "catalyst_k": outcome.catalyst_k,
                "sandwich": outcome.sandwich,
                "sandwich_holds": outcome.sandwich.holds(outcome.log_m),
            });
            println!("{}", serde_json::to_string_pretty(&summary)?);
            Ok(0)
        }
        Command::Experiments { suite, state, eps, nmax } => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(config.workers)
                .build()
                .map_err(|e| Error::InvalidParameter(e.to_string()))?;
            pool.install(|| match suite {
                Suite::Theorems => run_theorems(&config, &opts),
                Suite::Regularize => run_regularize(&config, &opts, state.as_deref(), eps, nmax),
            })
        }
    }
}

fn with_suffix(stem: &Path, suffix: &str) -> PathBuf {
    let mut s = stem.as_os_str().to_owned();
    s.push(".");
    s.push(suffix);
    PathBuf::from(s)
}

fn run_theorems(config: &RunConfig, opts: &oneshot_ent::Options) -> Result<i32> {
    let battery = config.resolve_battery()?;
    let theorems = config.theorem_list()?;
    let tasks = experiments::theorem_grid(&theorems, battery.len(), &config.eps, &config.deltas);
    info!("{} tasks over {} states", tasks.len(), battery.len());
    let records = experiments::run_theorems(&battery, &tasks, config.record_timing, opts);
    let json_path = config.out_dir.join("theorems.json");
    let csv_path = config.out_dir.join("theorems.csv");
    io::write_json(&json_path, &records)?;
    std::fs::write(&csv_path, io::records_csv(&records)?)?;
    let count = |s: Status| records.iter().filter(|r| r.status == s).count();
    let (passed, failed, open) = (count(Status::Pass), count(Status::Fail), count(Status::Inconclusive));
    if open > 0 {
        warn!("{open} inconclusive records");
    }
    let summary = json!({
        "records": records.len(),
        "passed": passed,
        "failed": failed,
        "inconclusive": open,
        "json": json_path,
        "csv": csv_path,
    });
    println!("{}", serde_json::to_string_pretty(&summary)?);
    Ok(if failed > 0 { exit::RECORD_FAILED } else { 0 })
}

fn run_regularize(config: &RunConfig, opts: &oneshot_ent::Options, state: Option<&Path>, eps: f64, nmax: usize) -> Result<i32> {
    let states = match state {
        Some(p) => vec![io::load_state(p)?.to_named()?],
        None => config.resolve_battery()?,
    };
    let series = states
        .iter()
        .map(|s| experiments::regularization_series(s, eps, nmax, config.max_side, opts))
        .collect::<Result<Vec<_>>>()?;
    let json_path = config.out_dir.join("regularize.json");
    let csv_path = config.out_dir.join("regularize.csv");
    io::write_json(&json_path, &series)?;
    std::fs::write(&csv_path, io::series_csv(&series)?)?;
    println!("{}", serde_json::to_string_pretty(&series)?);
    Ok(0)
}
