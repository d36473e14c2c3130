use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use moc_core::benchmark::{run_benchmark, Manifest, Method};
use moc_core::export::{reported_indices, write_run_dir, RunExport, DEFAULT_LIMIT};
use moc_core::model::response_surface_grid;
use moc_core::{load_model, run_moc, DesiredOutcome, EvolutionConfig, MocProblem, ObservedDataset};

#[derive(Parser)]
#[command(name = "moco", version, about = "Multi-objective counterfactual explanations")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Search counterfactuals for one row and write a run directory.
    Explain(ExplainArgs),
    /// Compare search methods over the instances listed in a manifest.
    Benchmark(BenchmarkArgs),
    /// Start the HTTP service.
    Serve(ServeArgs),
}

/// Search settings shared by `explain` and `benchmark`; unset flags keep
/// the value from `--config` or the default.
#[derive(Args)]
struct SearchFlags {
    /// JSON file with search parameters.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Population size.
    #[arg(long)]
    pop: Option<usize>,
    #[arg(long)]
    generations: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
}

impl SearchFlags {
    fn base(&self) -> Result<Option<EvolutionConfig>, CliError> {
        self.config
            .as_ref()
            .map(|p| {
                let text = fs::read_to_string(p).map_err(|e| CliError::Config(format!("{}: {e}", p.display())))?;
                Ok(EvolutionConfig::from_json_str(&text)?)
            })
            .transpose()
    }

    fn apply(&self, cfg: &mut EvolutionConfig) {
        if let Some(v) = self.pop {
            cfg.mu = v;
        }
        if let Some(v) = self.generations {
            cfg.generations = v;
        }
        if let Some(v) = self.seed {
            cfg.seed = v;
        }
    }
}

#[derive(Args)]
struct ExplainArgs {
    #[arg(long)]
    data: PathBuf,
    #[arg(long)]
    schema: PathBuf,
    #[arg(long)]
    model: PathBuf,
    /// 0-based row of the data file to explain; it is left out of the
    /// observed data.
    #[arg(long)]
    row: usize,
    /// Desired outcome `a:b`, `(` or `)` opening an endpoint, or a value.
    #[arg(long, allow_hyphen_values = true)]
    target: String,
    #[command(flatten)]
    search: SearchFlags,
    #[arg(long)]
    epsilon: Option<f64>,
    /// Features that must keep their value.
    #[arg(long, value_delimiter = ',')]
    freeze: Vec<String>,
    /// Narrowed bounds, `name=lo:hi`.
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    bounds: Vec<String>,
    #[arg(long)]
    no_ice_init: bool,
    #[arg(long)]
    no_conditional: bool,
    /// Number of nearest observed points for the plausibility objective.
    #[arg(long)]
    k: Option<usize>,
    /// Maximum number of reported counterfactuals.
    #[arg(long, default_value_t = DEFAULT_LIMIT)]
    limit: usize,
    #[arg(long)]
    out: PathBuf,
    /// Response surface `f1,f2,resolution`.
    #[arg(long)]
    surface: Option<String>,
}

#[derive(Args)]
struct BenchmarkArgs {
    #[arg(long)]
    manifest: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Methods to compare, overriding the manifest.
    #[arg(long, value_delimiter = ',')]
    methods: Vec<String>,
    #[command(flatten)]
    search: SearchFlags,
}

#[derive(Args)]
struct ServeArgs {
    #[arg(long, default_value_t = 8080)]
    port: u16,
    #[arg(long, default_value = "127.0.0.1")]
    host: String,
    /// Directory scanned for `<id>.csv`, `<id>.schema.json`, `<id>.model.json`.
    #[arg(long)]
    data_dir: PathBuf,
    /// Where job results are kept; defaults to `<data-dir>/jobs`.
    #[arg(long)]
    jobs_dir: Option<PathBuf>,
    #[arg(long, default_value_t = moc_service::DEFAULT_QUEUE_DEPTH)]
    queue_depth: usize,
}

#[derive(Debug)]
enum CliError {
    Config(String),
    Model(String),
}

impl From<moc_core::Error> for CliError {
    fn from(e: moc_core::Error) -> Self {
        match e {
            moc_core::Error::Model(_) => CliError::Model(e.to_string()),
            other => CliError::Config(other.to_string()),
        }
    }
}

fn parse_bounds(spec: &str) -> Result<(String, f64, f64), CliError> {
    let bad = || CliError::Config(format!("bounds `{spec}` must look like name=lo:hi"));
    let (name, range) = spec.split_once('=').ok_or_else(bad)?;
    let (lo, hi) = range.split_once(':').ok_or_else(bad)?;
    let lo: f64 = lo.trim().parse().map_err(|_| bad())?;
    let hi: f64 = hi.trim().parse().map_err(|_| bad())?;
    Ok((name.trim().to_string(), lo, hi))
}

fn parse_surface(spec: &str) -> Result<(String, String, usize), CliError> {
    let bad = || CliError::Config(format!("surface `{spec}` must look like f1,f2,resolution"));
    let parts: Vec<&str> = spec.split(',').map(str::trim).collect();
    let [a, b, res] = parts[..] else {
        return Err(bad());
    };
    Ok((a.to_string(), b.to_string(), res.parse().map_err(|_| bad())?))
}

fn explain(args: &ExplainArgs) -> Result<(), CliError> {
    let target: DesiredOutcome = args.target.parse()?;
    let data = ObservedDataset::load(&args.data, &args.schema)?;
    let (x_star, observed) = data.split_off_row(args.row)?;
    let mut schema = observed.schema().clone();
    schema.freeze(&args.freeze)?;
    for spec in &args.bounds {
        let (name, lo, hi) = parse_bounds(spec)?;
        schema.set_user_bounds(&name, lo, hi)?;
    }
    let observed = observed.with_schema(schema)?;
    let model = load_model(&args.model, observed.schema())?;

    let mut config = args.search.base()?.unwrap_or_default();
    args.search.apply(&mut config);
    if args.epsilon.is_some() {
        config.epsilon = args.epsilon;
    }
    if let Some(k) = args.k {
        config.k = k;
    }
    if args.no_ice_init {
        config.use_ice_init = false;
    }
    if args.no_conditional {
        config.use_conditional_mutator = false;
    }
    config.validate()?;
    if args.limit == 0 {
        return Err(CliError::Config("--limit must be at least 1".into()));
    }
    let surface_spec = args.surface.as_deref().map(parse_surface).transpose()?;

    let problem = MocProblem {
        model: model.as_ref(),
        observed: &observed,
        x_star: &x_star,
        target,
        sampler: None,
    };
    let result = run_moc(&problem, &config)?;

    let surface = match surface_spec {
        Some((a, b, res)) => {
            let index = |n: &str| {
                observed
                    .schema()
                    .index_of(n)
                    .ok_or_else(|| CliError::Config(format!("unknown surface feature `{n}`")))
            };
            Some(response_surface_grid(model.as_ref(), &x_star, &observed, index(&a)?, index(&b)?, res)?)
        }
        None => None,
    };
    write_run_dir(
        &args.out,
        &RunExport {
            schema: observed.schema(),
            x_star: &x_star,
            target: &target,
            config: &config,
            result: &result,
            limit: args.limit,
            surface: surface.as_ref(),
        },
    )?;

    let reported = reported_indices(&result, &target, Some(args.limit)).len();
    let attaining = result
        .counterfactuals
        .iter()
        .filter(|&&i| target.contains(result.archive.entries()[i].prediction))
        .count();
    println!("prediction at x*: {}", result.x_star_prediction);
    println!(
        "nondominated: {} ({} attain {}), reported: {}",
        result.counterfactuals.len(),
        attaining,
        target,
        reported
    );
    println!("final hypervolume: {}", result.archive.hv_trace().last().copied().unwrap_or(0.0));
    println!("wrote {}", args.out.display());
    Ok(())
}

fn write_report(dir: &Path, name: &str, f: impl FnOnce(&mut Vec<u8>) -> moc_core::Result<()>) -> Result<(), CliError> {
    let mut buf = Vec::new();
    f(&mut buf)?;
    let path = dir.join(name);
    fs::write(&path, buf).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn benchmark(args: &BenchmarkArgs) -> Result<(), CliError> {
    let mut manifest = Manifest::from_json_file(&args.manifest)?;
    if !args.methods.is_empty() {
        manifest.methods = args.methods.iter().map(|m| m.parse::<Method>()).collect::<moc_core::Result<_>>()?;
    }
    let mut config = match args.search.base()? {
        Some(c) => c,
        None => manifest.config.clone().unwrap_or_default(),
    };
    args.search.apply(&mut config);
    manifest.config = Some(config);
    manifest.validate()?;

    let report = run_benchmark(&manifest)?;
    fs::create_dir_all(&args.out).map_err(|e| CliError::Config(format!("{}: {e}", args.out.display())))?;
    write_report(&args.out, "mean_ranks.csv", |b| report.write_mean_ranks_csv(b))?;
    write_report(&args.out, "summary.csv", |b| report.write_summary_csv(b))?;
    write_report(&args.out, "coverage.csv", |b| report.write_coverage_csv(b))?;

    let ranks = report.mean_ranks();
    if let Some(last) = ranks.last() {
        for (m, r) in report.methods.iter().zip(last) {
            println!("{m}: mean rank {r:.3} at generation {}", ranks.len() - 1);
        }
    }
    println!("wrote {}", args.out.display());
    Ok(())
}

fn serve(args: &ServeArgs) -> Result<(), CliError> {
    let datasets = moc_service::scan_datasets(&args.data_dir)?;
    let jobs_dir = args.jobs_dir.clone().unwrap_or_else(|| args.data_dir.join("jobs"));
    let rt = tokio::runtime::Runtime::new().map_err(|e| CliError::Config(e.to_string()))?;
    rt.block_on(async {
        let addr = format!("{}:{}", args.host, args.port);
        let listener = tokio::net::TcpListener::bind(&addr)
            .await
            .map_err(|e| CliError::Config(format!("bind failure on {addr}: {e}")))?;
        let state = moc_service::AppState::start(datasets, jobs_dir, args.queue_depth)
            .map_err(|e| CliError::Config(e.to_string()))?;
        eprintln!("listening on {}", listener.local_addr().map(|a| a.to_string()).unwrap_or(addr));
        moc_service::serve(listener, state)
            .await
            .map_err(|e| CliError::Config(e.to_string()))
    })
}

/// `MOCO_THREADS` caps the pool used for batch evaluation.
fn init_threads() -> Result<(), CliError> {
    let Ok(v) = std::env::var("MOCO_THREADS") else {
        return Ok(());
    };
    let n: usize = v
        .parse()
        .ok()
        .filter(|&n| n > 0)
        .ok_or_else(|| CliError::Config(format!("MOCO_THREADS must be a positive integer, got `{v}`")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build_global()
        .map_err(|e| CliError::Config(e.to_string()))
}

fn main() -> ExitCode {
    // usage errors share the config exit code; 2 is reserved for model failures
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = init_threads().and_then(|()| match &cli.command {
        Command::Explain(a) => explain(a),
        Command::Benchmark(a) => benchmark(a),
        Command::Serve(a) => serve(a),
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Model(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
    }
}
