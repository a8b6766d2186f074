use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context as _, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use kgnotable::context::{MetapathSet, NamedMetapathSet, WalkConfig};
use kgnotable::graph::{GraphError, KnowledgeGraph, LoadOptions};
use kgnotable::pipeline::{self, round_sig6, Algorithm, OutputFormat, PipelineError, RunConfig};
use kgnotable::synth::{self, eval, GroundTruth, Grid, SyntheticSpec};

const EXIT_INPUT: u8 = 2;
const EXIT_UNRESOLVED: u8 = 3;

#[derive(Parser)]
#[command(name = "kgnotable", version, about = "Notable characteristics of node sets in knowledge graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Rank the nodes most similar to a query.
    Context(ContextArgs),
    /// Find the notable characteristics of a query.
    Findnc(FindncArgs),
    /// Evaluate context quality over a parameter grid.
    Eval(EvalArgs),
    /// Write a synthetic graph and its ground truth.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct GraphArgs {
    /// TSV file of subject, predicate, object triples.
    #[arg(long)]
    graph: PathBuf,
    /// Name inverse predicates `p_inv` instead of `p⁻¹`.
    #[arg(long)]
    ascii_inverse: bool,
    /// Input already contains every reverse edge.
    #[arg(long)]
    provided_inverses: bool,
    /// Predicate whose triples set node labels instead of adding edges.
    #[arg(long)]
    type_predicate: Option<String>,
}

impl GraphArgs {
    fn load(&self) -> Result<KnowledgeGraph> {
        let mut opts = if self.ascii_inverse {
            LoadOptions::ascii()
        } else {
            LoadOptions::default()
        };
        if self.provided_inverses {
            opts.reverse = kgnotable::graph::ReverseEdges::Provided;
        }
        opts.type_predicate = self.type_predicate.clone();
        KnowledgeGraph::load_tsv_path(&self.graph, &opts).with_context(|| format!("loading {}", self.graph.display()))
    }
}

#[derive(Args)]
struct WalkArgs {
    /// Number of context nodes.
    #[arg(long, default_value_t = 100)]
    k: usize,
    #[arg(long, default_value_t = 1_000_000)]
    walks: u64,
    #[arg(long, default_value_t = 5)]
    max_path_len: usize,
    #[arg(long, default_value_t = 5)]
    num_metapaths: usize,
    #[arg(long, default_value_t = 0.8)]
    damping: f64,
    #[arg(long, default_value_t = 10)]
    iterations: usize,
    /// Pick walk steps uniformly instead of by label rarity.
    #[arg(long)]
    uniform_steps: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl WalkArgs {
    fn config(&self) -> WalkConfig {
        WalkConfig {
            damping: self.damping,
            iterations: self.iterations,
            num_walk_samples: self.walks,
            max_metapath_len: self.max_path_len,
            num_metapaths: self.num_metapaths,
            step_choice: if self.uniform_steps {
                kgnotable::context::StepChoice::Uniform
            } else {
                kgnotable::context::StepChoice::Weighted
            },
            rng_seed: self.seed,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum ContextAlgo {
    Contextrw,
    Randomwalk,
}

#[derive(Clone, Copy, ValueEnum)]
enum FindAlgo {
    Findnc,
    Rwmult,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Tsv,
}

impl From<Format> for OutputFormat {
    fn from(f: Format) -> Self {
        match f {
            Format::Json => OutputFormat::Json,
            Format::Tsv => OutputFormat::Tsv,
        }
    }
}

#[derive(Args)]
struct ContextArgs {
    #[command(flatten)]
    graph: GraphArgs,
    /// Query node name; repeat for several.
    #[arg(long = "query", required = true)]
    query: Vec<String>,
    #[command(flatten)]
    walk: WalkArgs,
    #[arg(long, value_enum, default_value = "contextrw")]
    algo: ContextAlgo,
    /// Reuse a metapath set written by `--metapaths-out`.
    #[arg(long)]
    metapaths_in: Option<PathBuf>,
    #[arg(long)]
    metapaths_out: Option<PathBuf>,
    /// Output file; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct FindncArgs {
    #[command(flatten)]
    graph: GraphArgs,
    #[arg(long = "query", required = true)]
    query: Vec<String>,
    #[command(flatten)]
    walk: WalkArgs,
    #[arg(long, default_value_t = 0.05)]
    alpha: f64,
    #[arg(long, value_enum, default_value = "findnc")]
    algo: FindAlgo,
    /// Largest number of outcomes enumerated before sampling instead.
    #[arg(long, default_value_t = 1_000_000)]
    exact_budget: u64,
    #[arg(long, default_value_t = 100_000)]
    mc_samples: u64,
    /// Report zero timings, making output byte-reproducible.
    #[arg(long)]
    no_timings: bool,
    #[arg(long, value_enum, default_value = "json")]
    format: Format,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// Synthetic spec (JSON); its graph and truth are generated.
    #[arg(long, conflicts_with_all = ["graph", "truth"])]
    spec: Option<PathBuf>,
    /// Graph for evaluation with an external truth file.
    #[arg(long, requires_all = ["truth", "query"])]
    graph: Option<PathBuf>,
    /// Relevant node names, one per line.
    #[arg(long)]
    truth: Option<PathBuf>,
    #[arg(long = "query")]
    query: Vec<String>,
    #[arg(long)]
    ascii_inverse: bool,
    /// Grid (JSON); defaults to both algorithms at default settings.
    #[arg(long)]
    grid: Option<PathBuf>,
    #[arg(long)]
    no_timings: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct GenerateArgs {
    /// Synthetic spec (JSON); built-in default when absent.
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Triple file to write.
    #[arg(long)]
    out: PathBuf,
    /// Writes the relevant node names, one per line.
    #[arg(long)]
    truth_out: Option<PathBuf>,
    /// Prints the default spec and exits.
    #[arg(long, conflicts_with = "spec")]
    print_spec: bool,
}

/// Input problems map to exit code 2.
#[derive(Debug)]
struct InputError(anyhow::Error);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{:#}", self.0)
    }
}

impl std::error::Error for InputError {}

fn input<T>(r: Result<T>) -> Result<T> {
    r.map_err(|e| InputError(e).into())
}

fn emit(out: Option<&Path>, text: &str) -> Result<()> {
    match out {
        Some(path) => fs::write(path, text).with_context(|| format!("writing {}", path.display())),
        None => {
            std::io::stdout().write_all(text.as_bytes())?;
            Ok(())
        }
    }
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing {}", path.display()))
}

#[derive(Serialize)]
struct ContextRowOut {
    node: String,
    #[serde(serialize_with = "sig6")]
    score: f64,
}

fn sig6<S: serde::Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig6(*x))
}

#[derive(Serialize)]
struct ContextOut {
    query: Vec<String>,
    algorithm: &'static str,
    context: Vec<ContextRowOut>,
    warnings: Vec<String>,
}

fn run_context(args: ContextArgs) -> Result<()> {
    let g = input(args.graph.load())?;
    let walk = args.walk.config();
    input(walk.validate().map_err(Into::into))?;
    let resolved = pipeline::resolve_query(&g, &args.query)?;
    let mut warnings = resolved.warnings;
    for w in &warnings {
        log::warn!("{w}");
    }
    let given = match &args.metapaths_in {
        Some(path) => {
            let named: NamedMetapathSet = input(read_json(path))?;
            Some(input(MetapathSet::from_named(&g, &named).map_err(anyhow::Error::msg))?)
        }
        None => None,
    };
    let algorithm = match args.algo {
        ContextAlgo::Contextrw => Algorithm::FindNc,
        ContextAlgo::Randomwalk => Algorithm::RwMult,
    };
    let outcome = pipeline::discover_context(&g, &resolved.query, args.walk.k, algorithm, &walk, given);
    if outcome.fell_back {
        warnings.push("no metapath reached the query; context selected by PageRank".into());
    }
    if let (Some(path), Some(m)) = (&args.metapaths_out, &outcome.metapaths) {
        fs::write(path, serde_json::to_string_pretty(&m.to_named(&g))? + "\n")?;
    }
    let out = ContextOut {
        query: resolved.query.nodes().iter().map(|&n| g.node_name(n).to_string()).collect(),
        algorithm: if outcome.fell_back || algorithm == Algorithm::RwMult {
            "randomwalk"
        } else {
            "contextrw"
        },
        context: outcome
            .context
            .entries
            .iter()
            .map(|e| ContextRowOut {
                node: g.node_name(e.node).to_string(),
                score: e.score,
            })
            .collect(),
        warnings,
    };
    emit(args.out.as_deref(), &(serde_json::to_string_pretty(&out)? + "\n"))
}

fn run_findnc(args: FindncArgs) -> Result<()> {
    let g = input(args.graph.load())?;
    let cfg = RunConfig {
        walk: args.walk.config(),
        k: args.walk.k,
        alpha: args.alpha,
        algorithm: match args.algo {
            FindAlgo::Findnc => Algorithm::FindNc,
            FindAlgo::Rwmult => Algorithm::RwMult,
        },
        format: args.format.into(),
        rng_seed: args.walk.seed,
        exact_budget: args.exact_budget,
        mc_samples: args.mc_samples,
        record_timings: !args.no_timings,
    };
    let report = pipeline::find_notable(&g, &args.query, &cfg)?;
    for w in &report.warnings {
        log::warn!("{w}");
    }
    emit(args.out.as_deref(), &report.render(cfg.format))
}

fn run_eval(args: EvalArgs) -> Result<()> {
    let mut grid: Grid = match &args.grid {
        Some(path) => input(read_json(path))?,
        None => Grid::default(),
    };
    if args.no_timings {
        grid.record_timings = false;
    }
    let (g, truth) = if let Some(path) = &args.spec {
        let spec: SyntheticSpec = input(read_json(path))?;
        let s = input(synth::generate(&spec).map_err(Into::into))?;
        (s.graph(&LoadOptions::default()), s.truth)
    } else if let (Some(graph), Some(truth)) = (&args.graph, &args.truth) {
        let opts = if args.ascii_inverse {
            LoadOptions::ascii()
        } else {
            LoadOptions::default()
        };
        let g = input(KnowledgeGraph::load_tsv_path(graph, &opts).map_err(Into::into))?;
        let text = input(fs::read_to_string(truth).with_context(|| format!("reading {}", truth.display())))?;
        let relevant = text.lines().map(str::trim).filter(|l| !l.is_empty()).map(str::to_string).collect();
        (
            g,
            GroundTruth {
                query: args.query.clone(),
                relevant,
            },
        )
    } else {
        return input(Err(anyhow::anyhow!("either --spec or --graph with --truth and --query is required")));
    };
    let rows = synth::run_grid(&g, &[truth], &grid)?;
    emit(args.out.as_deref(), &eval::to_csv(&rows))
}

fn run_generate(args: GenerateArgs) -> Result<()> {
    if args.print_spec {
        println!("{}", serde_json::to_string_pretty(&SyntheticSpec::default())?);
        return Ok(());
    }
    let mut spec: SyntheticSpec = match &args.spec {
        Some(path) => input(read_json(path))?,
        None => SyntheticSpec::default(),
    };
    if let Some(seed) = args.seed {
        spec.rng_seed = seed;
    }
    let s = input(synth::generate(&spec).map_err(Into::into))?;
    fs::write(&args.out, s.to_tsv()).with_context(|| format!("writing {}", args.out.display()))?;
    if let Some(path) = &args.truth_out {
        fs::write(path, s.truth.relevant_lines())?;
    }
    println!("query: {}", s.truth.query.join(", "));
    if !s.planted.is_empty() {
        println!("planted: {}", s.planted.iter().cloned().collect::<Vec<_>>().join(", "));
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<InputError>().is_some() || err.downcast_ref::<GraphError>().is_some() {
        return EXIT_INPUT;
    }
    match err.downcast_ref::<PipelineError>() {
        Some(PipelineError::Unresolved(_)) => EXIT_UNRESOLVED,
        Some(PipelineError::Graph(_) | PipelineError::InvalidConfig(_) | PipelineError::Context(_)) => EXIT_INPUT,
        _ => match err.downcast_ref::<eval::EvalError>() {
            Some(eval::EvalError::Pipeline(PipelineError::Unresolved(_))) => EXIT_UNRESOLVED,
            Some(_) => EXIT_INPUT,
            None => 1,
        },
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Context(a) => run_context(a),
        Command::Findnc(a) => run_findnc(a),
        Command::Eval(a) => run_eval(a),
        Command::Generate(a) => run_generate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
