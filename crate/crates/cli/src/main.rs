use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use log::info;

use causal_rules::causal::{self, DiscreteScm, ExperimentConfig, ExperimentKind};
use causal_rules::{Dataset, Error, Pool, RoleSpec, ScoreParams, SearchConfig, StratumIndex};

mod report;

/// Discover rules with a large, reliably estimated causal effect.
#[derive(Parser, Debug)]
#[command(name = "causal-rules", version, about)]
struct Cli {
    /// Worker threads for search and simulations (default: all cores).
    #[arg(long, global = true, env = "CR_THREADS")]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Find the top-k rules on a CSV file.
    Discover(DiscoverArgs),
    /// Check a causal graph against the admissibility criteria.
    CheckGraph(CheckGraphArgs),
    /// Run an estimator study on a simulated population.
    SynthExperiment(SynthArgs),
    /// Report search effort for k = 1, 10 and 100.
    Bench(BenchArgs),
}

#[derive(Args, Debug)]
struct DataArgs {
    /// CSV file with a header row.
    #[arg(long)]
    data: PathBuf,
    /// Target column.
    #[arg(long)]
    target: String,
    /// Target value whose probability rules should raise.
    #[arg(long)]
    outcome: String,
    /// Comma-separated actionable columns.
    #[arg(long, value_delimiter = ',', required = true)]
    actionable: Vec<String>,
    /// Comma-separated control columns.
    #[arg(long, value_delimiter = ',')]
    control: Vec<String>,
    /// Confidence penalty (z-score).
    #[arg(long, default_value_t = 2.0, value_parser = non_negative)]
    beta: f64,
    /// Approximation factor in (0, 1].
    #[arg(long, default_value_t = 1.0, value_parser = unit_interval)]
    gamma: f64,
    /// Maximum number of conditions per rule.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    /// Maximum number of equi-frequent bins for numeric columns.
    #[arg(long, default_value_t = 8, value_parser = clap::value_parser!(u64).range(2..=64))]
    bins: u64,
}

#[derive(Args, Debug)]
struct DiscoverArgs {
    #[command(flatten)]
    data: DataArgs,
    /// Number of rules to report.
    #[arg(long, default_value_t = 10, value_parser = clap::value_parser!(u64).range(1..))]
    k: u64,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    /// Write the report here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Render rules with logical symbols instead of ASCII.
    #[arg(long)]
    unicode: bool,
}

#[derive(Args, Debug)]
struct BenchArgs {
    #[command(flatten)]
    data: DataArgs,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct CheckGraphArgs {
    /// Graph or model JSON file.
    #[arg(required_unless_present = "preset", conflicts_with = "preset")]
    graph: Option<PathBuf>,
    /// Built-in model instead of a file.
    #[arg(long, value_enum)]
    preset: Option<Preset>,
    #[arg(long, value_enum, default_value_t = Format::Table)]
    format: Format,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(value_enum)]
    experiment: Experiment,
    /// Built-in model.
    #[arg(
        long,
        value_enum,
        required_unless_present = "scm",
        conflicts_with = "scm"
    )]
    preset: Option<Preset>,
    /// Model JSON file.
    #[arg(long)]
    scm: Option<PathBuf>,
    /// Sizes 100, 500, 1000, 3000 with 25 repetitions.
    #[arg(long)]
    fast: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Override the number of repetitions per sample size.
    #[arg(long, value_parser = clap::value_parser!(u64).range(1..))]
    repetitions: Option<u64>,
    #[arg(long, default_value_t = 2.0, value_parser = non_negative)]
    beta: f64,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u64).range(1..))]
    max_depth: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
enum Format {
    Table,
    Json,
    Tsv,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Preset {
    Fig4,
}

#[derive(Clone, Copy, Debug, ValueEnum)]
enum Experiment {
    Variance,
    Generalisation,
    Mse,
    Recovery,
    BetaSweep,
}

impl From<Experiment> for ExperimentKind {
    fn from(e: Experiment) -> Self {
        match e {
            Experiment::Variance => ExperimentKind::Variance,
            Experiment::Generalisation => ExperimentKind::Generalisation,
            Experiment::Mse => ExperimentKind::Mse,
            Experiment::Recovery => ExperimentKind::Recovery,
            Experiment::BetaSweep => ExperimentKind::BetaSweep,
        }
    }
}

fn non_negative(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x.is_finite() && x >= 0.0 {
        Ok(x)
    } else {
        Err("must be a finite number >= 0".into())
    }
}

fn unit_interval(s: &str) -> Result<f64, String> {
    let x: f64 = s.parse().map_err(|e| format!("{e}"))?;
    if x > 0.0 && x <= 1.0 {
        Ok(x)
    } else {
        Err("must lie in (0, 1]".into())
    }
}

const EXIT_DATA: u8 = 1;
const EXIT_CONFIG: u8 = 2;
const EXIT_NOT_ADMISSIBLE: u8 = 3;

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(err) => {
            eprintln!("error: {err:#}");
            let config = err.downcast_ref::<Error>().is_some_and(Error::is_config);
            ExitCode::from(if config { EXIT_CONFIG } else { EXIT_DATA })
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        builder = builder.num_threads(n);
    }
    let pool = builder.build().context("cannot start worker threads")?;
    pool.install(|| match cli.command {
        Command::Discover(args) => discover(args),
        Command::CheckGraph(args) => check_graph(args),
        Command::SynthExperiment(args) => synth(args),
        Command::Bench(args) => bench(args),
    })
}

struct Loaded {
    ds: Dataset,
    pool: Pool,
    idx: StratumIndex,
}

fn load(args: &DataArgs) -> Result<Loaded> {
    let roles = RoleSpec::new()
        .target(args.target.clone())
        .actionable(args.actionable.iter().cloned())
        .control(args.control.iter().cloned());
    let ds = causal_rules::ingest_csv(&args.data, &roles)?;
    let bins = args.bins as usize;
    let pool = Pool::from_dataset(&ds, bins)?;
    let idx = StratumIndex::build_with_bins(&ds, bins)?;
    info!(
        "{} rows, {} propositions, {} strata",
        ds.n_rows(),
        pool.len(),
        idx.observed_strata_count()
    );
    Ok(Loaded { ds, pool, idx })
}

fn search_config(args: &DataArgs, k: usize) -> SearchConfig {
    SearchConfig::new(ScoreParams::new(args.outcome.clone()).beta(args.beta))
        .k(k)
        .gamma(args.gamma)
        .max_depth(args.max_depth as usize)
}

/// Writes the whole report at once so that a failed run leaves no file.
fn emit(text: &str, out: Option<&Path>) -> Result<()> {
    match out {
        Some(path) => {
            fs::write(path, text).with_context(|| format!("cannot write {}", path.display()))
        }
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn discover(args: DiscoverArgs) -> Result<ExitCode> {
    let loaded = load(&args.data)?;
    let cfg = search_config(&args.data, args.k as usize);
    let result = causal_rules::discover_topk(&loaded.ds, &loaded.idx, &loaded.pool, &cfg)?;
    let ctx = report::Context {
        data: &args.data.data,
        ds: &loaded.ds,
        idx: &loaded.idx,
        pool: &loaded.pool,
        cfg: &cfg,
        unicode: args.unicode,
    };
    let text = match args.format {
        Format::Table => report::discover_table(&ctx, &result),
        Format::Json => report::discover_json(&ctx, &result)?,
        Format::Tsv => report::discover_tsv(&ctx, &result),
    };
    emit(&text, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn bench(args: BenchArgs) -> Result<ExitCode> {
    let loaded = load(&args.data)?;
    let mut runs = Vec::new();
    for k in [1, 10, 100] {
        let cfg = search_config(&args.data, k);
        let result = causal_rules::discover_topk(&loaded.ds, &loaded.idx, &loaded.pool, &cfg)?;
        info!("k = {k}: {} nodes expanded", result.stats.nodes_expanded);
        runs.push((k, result.stats));
    }
    let text = match args.format {
        Format::Table => report::bench_table(
            &runs,
            args.data.gamma,
            loaded.pool.len(),
            loaded.ds.n_rows(),
        ),
        Format::Json => report::bench_json(&runs, args.data.gamma)?,
        Format::Tsv => report::bench_tsv(&runs, args.data.gamma),
    };
    emit(&text, args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}

fn check_graph(args: CheckGraphArgs) -> Result<ExitCode> {
    let graph = match (&args.graph, args.preset) {
        (_, Some(Preset::Fig4)) => causal::fig4_preset().graph().clone(),
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            causal::CausalGraph::from_json(&text)?
        }
        (None, None) => unreachable!("clap requires a graph or a preset"),
    };
    let summary = report::GraphSummary::new(&graph);
    let text = match args.format {
        Format::Json => serde_json::to_string_pretty(&summary)? + "\n",
        Format::Table | Format::Tsv => summary.to_text(),
    };
    print!("{text}");
    Ok(if summary.admissibility.admissible {
        ExitCode::SUCCESS
    } else {
        ExitCode::from(EXIT_NOT_ADMISSIBLE)
    })
}

fn synth(args: SynthArgs) -> Result<ExitCode> {
    let scm = match (&args.scm, args.preset) {
        (_, Some(Preset::Fig4)) => causal::fig4_preset(),
        (Some(path), None) => {
            let text = fs::read_to_string(path)
                .with_context(|| format!("cannot read {}", path.display()))?;
            DiscreteScm::from_json(&text)?
        }
        (None, None) => unreachable!("clap requires a model or a preset"),
    };
    let kind = ExperimentKind::from(args.experiment);
    let mut cfg = if args.fast {
        ExperimentConfig::fast()
    } else {
        ExperimentConfig::full(kind)
    };
    cfg.seed = args.seed;
    cfg.beta = args.beta;
    cfg.max_depth = args.max_depth as usize;
    if let Some(r) = args.repetitions {
        cfg.repetitions = r as usize;
    }
    let report = causal::run_experiment(kind, &scm, &cfg)?;
    emit(&report.to_tsv(), args.out.as_deref())?;
    Ok(ExitCode::SUCCESS)
}
