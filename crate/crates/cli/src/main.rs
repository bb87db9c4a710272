//! Command-line surface for the rankdecay engine: event-log replay with
//! snapshot persistence, top-k queries, rank-reduction parameter
//! computation, synthetic log generation, and simulation runs.
//!
//! Machine-readable output goes to stdout or the named files;
//! diagnostics go to stderr. Exit codes: 0 success, 2 bad input
//! (paths, flags, malformed logs), 3 snapshot problems during `process`,
//! 1 anything else.

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

use rankdecay::decay::{alpha_from_half_life, InsertionStrategy};
use rankdecay::event::{read_events, Event, EventKind};
use rankdecay::sim::{self, run_simulation, SimConfig, SimResult};
use rankdecay::snapshot::{load_snapshot, save_snapshot, Snapshot, SnapshotError};
use rankdecay::table::{compute_alphas_from_log, Alphas, EngineConfig, RecTable, RecencyLists};

#[derive(Parser)]
#[command(name = "rankdecay", version, about = "Click-decay recommendation engine")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replay a JSON-lines event log into a snapshot
    Process(ProcessArgs),
    /// Print the top-k recommendations for an anchor from a snapshot
    Query(QueryArgs),
    /// Compute rank reduction parameters from a log or a half-life
    Alpha(AlphaArgs),
    /// Run the simplex-walk simulation and emit metrics
    Simulate(SimulateArgs),
    /// Generate a synthetic event log
    Genlog(GenlogArgs),
}

#[derive(Clone, Copy, ValueEnum)]
enum InsertionArg {
    /// Insert unseen items below the current minimum probability
    MinProb,
    /// Insert unseen items at the entropy-maximizing weight
    MaxEntropy,
}

impl From<InsertionArg> for InsertionStrategy {
    fn from(value: InsertionArg) -> Self {
        match value {
            InsertionArg::MinProb => InsertionStrategy::MinProb,
            InsertionArg::MaxEntropy => InsertionStrategy::MaxEntropy,
        }
    }
}

#[derive(Args)]
struct EngineOverrides {
    /// Engine config JSON (same schema as a snapshot's config block)
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    alpha_rec: Option<f64>,
    #[arg(long)]
    alpha_checkout: Option<f64>,
    #[arg(long)]
    alpha_cart: Option<f64>,
    #[arg(long)]
    epsilon: Option<f64>,
    #[arg(long, value_enum)]
    insertion: Option<InsertionArg>,
    #[arg(long)]
    period_of_interest_ms: Option<i64>,
    #[arg(long)]
    recent_window_ms: Option<i64>,
    #[arg(long)]
    propagate: Option<bool>,
}

#[derive(Args)]
struct ProcessArgs {
    /// Event log to replay
    #[arg(long)]
    log: PathBuf,
    /// Snapshot to resume from (empty table if omitted)
    #[arg(long)]
    snapshot_in: Option<PathBuf>,
    /// Where to write the resulting snapshot
    #[arg(long)]
    snapshot_out: PathBuf,
    /// Recompute the alphas from this log's click rates before replaying
    #[arg(long)]
    auto_alpha: bool,
    #[command(flatten)]
    overrides: EngineOverrides,
}

#[derive(Args)]
struct QueryArgs {
    #[arg(long)]
    snapshot: PathBuf,
    #[arg(long)]
    anchor: String,
    #[arg(short, long, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
}

#[derive(Args)]
#[group(required = true, multiple = false)]
struct AlphaSource {
    /// Compute per-event-type alphas from this log
    #[arg(long)]
    log: Option<PathBuf>,
    /// Compute a single alpha from this half-life (in updates)
    #[arg(long)]
    half_life: Option<f64>,
}

#[derive(Args)]
struct AlphaArgs {
    #[command(flatten)]
    source: AlphaSource,
    /// Period of interest for the per-product rate conversion
    #[arg(long)]
    period_of_interest_ms: Option<i64>,
}

#[derive(Args)]
struct SimulateArgs {
    /// Number of items (simplex dimension)
    #[arg(long, default_value_t = 10)]
    n: usize,
    /// Tracker decay parameter; defaults to a half-life of one phase
    #[arg(long)]
    alpha: Option<f64>,
    /// Number of phases
    #[arg(long, default_value_t = 14)]
    days: usize,
    /// Mean phase length in clicks
    #[arg(long, default_value_t = 90.0)]
    mu: f64,
    /// Scale of the walk's covariance perturbation
    #[arg(long, default_value_t = 0.01)]
    eps_walk: f64,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    /// Sweep this many consecutive seeds starting at --seed
    #[arg(long, default_value_t = 1, value_parser = clap::value_parser!(u64).range(1..))]
    seeds: u64,
    /// Per-phase metrics CSV path
    #[arg(long)]
    metrics_out: Option<PathBuf>,
    /// Summary JSON path
    #[arg(long)]
    summary_out: Option<PathBuf>,
    /// Per-click trajectory CSV path (single-seed runs only)
    #[arg(long)]
    trajectories_out: Option<PathBuf>,
}

#[derive(Args)]
struct GenlogArgs {
    /// Item pool size
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    items: u64,
    /// Anchor pool size
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    anchors: u64,
    /// Number of events to generate
    #[arg(long, value_parser = clap::value_parser!(i64))]
    events: i64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
}

struct Failure {
    code: u8,
    message: String,
}

fn fail(code: u8, message: impl Into<String>) -> Failure {
    Failure {
        code,
        message: message.into(),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Process(args) => cmd_process(args),
        Command::Query(args) => cmd_query(args),
        Command::Alpha(args) => cmd_alpha(args),
        Command::Simulate(args) => cmd_simulate(args),
        Command::Genlog(args) => cmd_genlog(args),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            eprintln!("error: {}", failure.message);
            ExitCode::from(failure.code)
        }
    }
}

fn build_engine_config(overrides: &EngineOverrides) -> Result<EngineConfig, Failure> {
    let mut config = match &overrides.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| fail(2, format!("cannot read config {}: {e}", path.display())))?;
            serde_json::from_str::<EngineConfig>(&text)
                .map_err(|e| fail(2, format!("bad config {}: {e}", path.display())))?
        }
        None => EngineConfig::default(),
    };
    if let Some(v) = overrides.alpha_rec {
        config.alpha_rec = v;
    }
    if let Some(v) = overrides.alpha_checkout {
        config.alpha_checkout = v;
    }
    if let Some(v) = overrides.alpha_cart {
        config.alpha_cart = v;
    }
    if let Some(v) = overrides.epsilon {
        config.epsilon = v;
    }
    if let Some(v) = overrides.insertion {
        config.insertion = v.into();
    }
    if let Some(v) = overrides.period_of_interest_ms {
        config.period_of_interest_ms = v;
    }
    if let Some(v) = overrides.recent_window_ms {
        config.recent_window_ms = v;
    }
    if let Some(v) = overrides.propagate {
        config.propagate = v;
    }
    config
        .validate()
        .map_err(|e| fail(2, format!("invalid config: {e}")))?;
    Ok(config)
}

fn read_log(path: &PathBuf) -> Result<(Vec<Event>, u64), Failure> {
    let file = File::open(path)
        .map_err(|e| fail(2, format!("cannot open log {}: {e}", path.display())))?;
    let (events, bad) = read_events(BufReader::new(file))
        .map_err(|e| fail(2, format!("cannot read log {}: {e}", path.display())))?;
    for line in &bad {
        eprintln!("{}:{}: skipping unparseable line: {}", path.display(), line.line, line.message);
    }
    Ok((events, bad.len() as u64))
}

fn cmd_process(args: ProcessArgs) -> Result<(), Failure> {
    let mut config = build_engine_config(&args.overrides)?;

    let (mut table, mut recents, resumed_at) = match &args.snapshot_in {
        Some(path) => {
            let Snapshot {
                table,
                recents,
                created_at,
                ..
            } = load_snapshot(path).map_err(|e| {
                let code = match e {
                    SnapshotError::VersionMismatch { .. } => 3,
                    _ => 3,
                };
                fail(code, format!("cannot load snapshot {}: {e}", path.display()))
            })?;
            (table, recents, created_at)
        }
        None => (RecTable::new(), RecencyLists::default(), 0),
    };

    let (events, parse_rejects) = read_log(&args.log)?;

    if args.auto_alpha {
        let defaults = Alphas {
            alpha_rec: config.alpha_rec,
            alpha_checkout: config.alpha_checkout,
            alpha_cart: config.alpha_cart,
        };
        match compute_alphas_from_log(&events, config.period_of_interest_ms, defaults) {
            Ok(alphas) => {
                config.alpha_rec = alphas.alpha_rec;
                config.alpha_checkout = alphas.alpha_checkout;
                config.alpha_cart = alphas.alpha_cart;
            }
            Err(e) => eprintln!("auto-alpha skipped ({e}); keeping configured alphas"),
        }
    }

    let mut stats = table
        .process_log(&events, &config, &mut recents)
        .map_err(|e| fail(2, format!("replay failed: {e}")))?;
    stats.rejected += parse_rejects;

    // Snapshot timestamps come from the data, not the wall clock, so
    // identical inputs produce byte-identical snapshots.
    let created_at = events
        .iter()
        .filter(|e| e.validate().is_ok())
        .map(|e| e.ts)
        .max()
        .unwrap_or(resumed_at);

    save_snapshot(&args.snapshot_out, &table, &recents, &config, created_at).map_err(|e| {
        fail(
            1,
            format!("cannot write snapshot {}: {e}", args.snapshot_out.display()),
        )
    })?;

    println!(
        "{}",
        serde_json::to_string(&stats).expect("stats serialize")
    );
    Ok(())
}

fn cmd_query(args: QueryArgs) -> Result<(), Failure> {
    let snapshot = load_snapshot(&args.snapshot).map_err(|e| {
        fail(
            2,
            format!("cannot load snapshot {}: {e}", args.snapshot.display()),
        )
    })?;
    let top = snapshot.table.top_k(&args.anchor, args.k as usize);
    println!("{}", serde_json::to_string(&top).expect("top-k serialize"));
    Ok(())
}

fn cmd_alpha(args: AlphaArgs) -> Result<(), Failure> {
    if let Some(half_life) = args.source.half_life {
        let alpha = alpha_from_half_life(half_life)
            .map_err(|e| fail(2, format!("invalid half-life: {e}")))?;
        println!("{}", serde_json::to_string(&alpha).expect("number serialize"));
        return Ok(());
    }
    let log = args.source.log.as_ref().expect("clap group guarantees one source");
    let (events, _) = read_log(log)?;
    let period = args
        .period_of_interest_ms
        .unwrap_or_else(|| EngineConfig::default().period_of_interest_ms);
    let default_config = EngineConfig::default();
    let alphas = compute_alphas_from_log(
        &events,
        period,
        Alphas {
            alpha_rec: default_config.alpha_rec,
            alpha_checkout: default_config.alpha_checkout,
            alpha_cart: default_config.alpha_cart,
        },
    )
    .map_err(|e| fail(2, format!("cannot compute alphas: {e}")))?;
    println!("{}", serde_json::to_string(&alphas).expect("alphas serialize"));
    Ok(())
}

fn write_file(path: &PathBuf, contents: &str) -> Result<(), Failure> {
    std::fs::write(path, contents)
        .map_err(|e| fail(1, format!("cannot write {}: {e}", path.display())))
}

fn cmd_simulate(args: SimulateArgs) -> Result<(), Failure> {
    let alpha = match args.alpha {
        Some(alpha) => alpha,
        None => alpha_from_half_life(args.mu)
            .map_err(|e| fail(2, format!("cannot derive alpha from mu: {e}")))?,
    };
    let base = SimConfig {
        n: args.n,
        alpha,
        days: args.days,
        mu: args.mu,
        eps_walk: args.eps_walk,
        seed: args.seed,
    };
    base.validate()
        .map_err(|e| fail(2, format!("invalid simulation flags: {e}")))?;
    if args.seeds > 1 && args.trajectories_out.is_some() {
        return Err(fail(2, "--trajectories-out requires --seeds 1"));
    }

    if args.seeds == 1 {
        let record = args.trajectories_out.is_some();
        let result = run_simulation(&base, record).map_err(|e| fail(2, e.to_string()))?;
        if let Some(path) = &args.metrics_out {
            write_file(path, &sim::metrics_csv(&result))?;
        }
        let summary = sim::summary_json(&result, &base);
        if let Some(path) = &args.summary_out {
            write_file(path, &format!("{summary}\n"))?;
        }
        if let Some(path) = &args.trajectories_out {
            let csv = sim::trajectories_csv(&result).expect("trajectories were recorded");
            write_file(path, &csv)?;
        }
        println!("{summary}");
        return Ok(());
    }

    // Seed sweep: one run per consecutive seed, output in seed order.
    let mut runs: Vec<(u64, SimResult)> = Vec::with_capacity(args.seeds as usize);
    for offset in 0..args.seeds {
        let config = SimConfig {
            seed: args.seed + offset,
            ..base.clone()
        };
        let result = run_simulation(&config, false).map_err(|e| fail(2, e.to_string()))?;
        runs.push((config.seed, result));
    }
    if let Some(path) = &args.metrics_out {
        let mut csv = String::from("seed,phase,length,delta_x,delta_r\n");
        for (seed, result) in &runs {
            for (k, ((dx, dr), len)) in result
                .delta_x
                .iter()
                .zip(&result.delta_r)
                .zip(result.schedule.lengths())
                .enumerate()
            {
                csv.push_str(&format!("{seed},{},{len},{dx},{dr}\n", k + 1));
            }
        }
        write_file(path, &csv)?;
    }
    let count = runs.len() as f64;
    let mean_dx: f64 = runs.iter().map(|(_, r)| r.mean_delta_x).sum::<f64>() / count;
    let mean_dr: f64 = runs.iter().map(|(_, r)| r.mean_delta_r).sum::<f64>() / count;
    let per_seed: Vec<serde_json::Value> = runs
        .iter()
        .map(|(seed, r)| {
            serde_json::json!({
                "seed": seed,
                "mean_delta_x": r.mean_delta_x,
                "mean_delta_r": r.mean_delta_r,
            })
        })
        .collect();
    let summary = serde_json::json!({
        "mean_delta_x": mean_dx,
        "mean_delta_r": mean_dr,
        "config": &base,
        "per_seed": per_seed,
    });
    let summary = serde_json::to_string(&summary).expect("summary serialize");
    if let Some(path) = &args.summary_out {
        write_file(path, &format!("{summary}\n"))?;
    }
    println!("{summary}");
    Ok(())
}

fn cmd_genlog(args: GenlogArgs) -> Result<(), Failure> {
    use rand::{RngExt, SeedableRng};
    use rankdecay::event::to_log_line;

    if args.events <= 0 {
        return Err(fail(2, "--events must be positive"));
    }
    let file = File::create(&args.out)
        .map_err(|e| fail(2, format!("cannot create {}: {e}", args.out.display())))?;
    let mut out = std::io::BufWriter::new(file);
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(args.seed);
    let mut ts: i64 = 1_000;
    let write_error =
        |e: std::io::Error| fail(1, format!("cannot write {}: {e}", args.out.display()));
    writeln!(
        out,
        "# rankdecay genlog items={} anchors={} events={} seed={}",
        args.items, args.anchors, args.events, args.seed
    )
    .map_err(write_error)?;
    for _ in 0..args.events {
        ts += rng.random_range(1..=1_000);
        let kind = match rng.random::<f64>() {
            roll if roll < 0.05 => EventKind::Checkout,
            roll if roll < 0.12 => EventKind::AddToCart,
            _ => EventKind::RecClick,
        };
        let anchor = format!("A{}", rng.random_range(1..=args.anchors));
        let item = format!("I{}", rng.random_range(1..=args.items));
        writeln!(out, "{}", to_log_line(&Event::new(ts, kind, anchor, item)))
            .map_err(write_error)?;
    }
    out.flush().map_err(write_error)?;
    Ok(())
}
