use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use gedforge_core::bipartite::{hungarian_ged, vj_ged};
use gedforge_core::data::{generate_synthetic, split_dataset, Dataset, GedPair, SyntheticConfig};
use gedforge_core::eval::{bench_rows, evaluate, make_heuristic, parse_methods, write_csv, HeuristicKind, Method};
use gedforge_core::genn::{FeatureConfig, GennModel};
use gedforge_core::training::{build_finetune_set, finetune_with_paths, train_regression, write_curve_csv, TrainConfig};
use gedforge_core::{CostModel, GedError, Graph, Search, SearchLimits};
use log::info;
use serde_json::json;

#[derive(Parser)]
#[command(name = "gedforge", version, about = "Graph edit distance solvers with a learned A* heuristic")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Solve one pair and print the result as JSON.
    Solve {
        #[arg(long)]
        g1: PathBuf,
        #[arg(long)]
        g2: PathBuf,
        /// Cost-model JSON; unit uniform-label costs when omitted.
        #[arg(long)]
        cost: Option<PathBuf>,
        /// astar, beam, hungarian or vj.
        #[arg(long, default_value = "astar")]
        method: String,
        /// zero, hungarian or genn (search methods only).
        #[arg(long, default_value = "hungarian")]
        heuristic: String,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = 10)]
        beam_width: usize,
        #[arg(long)]
        max_states: Option<u64>,
    },
    /// Train a model on the labeled pairs of a manifest.
    Train {
        #[arg(long)]
        manifest: PathBuf,
        /// Output checkpoint.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, value_enum, default_value_t = Stage::Regression)]
        stage: Stage,
        /// Stage-1 checkpoint to finetune.
        #[arg(long)]
        model: Option<PathBuf>,
        /// Training configuration JSON; missing fields take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        epochs: Option<usize>,
        #[arg(long)]
        batch_size: Option<usize>,
        #[arg(long)]
        finetune_pairs: Option<usize>,
        /// Loss-curve CSV.
        #[arg(long)]
        curve: Option<PathBuf>,
    },
    /// Metrics of each method over the labeled query pairs of a split.
    Eval {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Comma-separated method names; a default set when omitted.
        #[arg(long)]
        methods: Option<String>,
        #[arg(long, value_enum, default_value_t = EvalSplit::Test)]
        split: EvalSplit,
        /// Cutoff of the precision-at-k metric.
        #[arg(long, default_value_t = 10)]
        k: usize,
        #[arg(long)]
        max_states: Option<u64>,
        /// Directory for eval.csv and eval.json.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Per-instance results of every method on the test pairs, as CSV.
    Bench {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        methods: String,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        model: Option<PathBuf>,
        /// Use only the first N test pairs.
        #[arg(long)]
        limit: Option<usize>,
        #[arg(long)]
        max_states: Option<u64>,
    },
    /// Write a synthetic corpus with its split and unlabeled pairs.
    Gen {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 4)]
        min_nodes: usize,
        #[arg(long, default_value_t = 8)]
        max_nodes: usize,
        #[arg(long, default_value_t = 0.3)]
        edge_prob: f64,
        /// Number of node labels; 0 for unlabeled graphs.
        #[arg(long, default_value_t = 3)]
        labels: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Cost-model JSON; uniform-label or unlabeled unit costs when omitted.
        #[arg(long)]
        cost: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Also compute exact GED labels.
        #[arg(long)]
        label: bool,
    },
    /// Compute exact GED labels for the unlabeled pairs of a manifest, in place.
    Label {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long, default_value_t = 1_000_000)]
        max_states: u64,
        /// Divide edge weights by this value first (geometric corpora).
        #[arg(long, num_args = 0..=1, default_missing_value = "300")]
        edge_norm: Option<f64>,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Stage {
    Regression,
    Finetune,
}

#[derive(Clone, Copy, ValueEnum)]
enum EvalSplit {
    Validation,
    Test,
}

/// Exit codes: 1 other failures, 2 usage (clap), 3 unknown method or
/// heuristic, 4 model checkpoint missing or unreadable, 5 malformed JSON or
/// graph, 6 I/O, 7 search budget exhausted.
struct Failure {
    code: u8,
    message: String,
}

impl From<GedError> for Failure {
    fn from(e: GedError) -> Self {
        let code = match e {
            GedError::Checkpoint(_) => 4,
            GedError::Json(_) | GedError::InvalidGraph(_) => 5,
            GedError::Io(_) => 6,
            GedError::BudgetExhausted { .. } => 7,
            _ => 1,
        };
        Failure { code, message: e.to_string() }
    }
}

fn unknown(e: GedError) -> Failure {
    Failure { code: 3, message: e.to_string() }
}

type CliResult<T> = Result<T, Failure>;

fn load_model(path: Option<&Path>) -> CliResult<Option<Arc<GennModel>>> {
    path.map(|p| {
        GennModel::load(p)
            .map(Arc::new)
            .map_err(|e| Failure { code: 4, message: format!("cannot load model {}: {e}", p.display()) })
    })
    .transpose()
}

fn require_model(model: Option<Arc<GennModel>>, methods: &[Method]) -> CliResult<Option<Arc<GennModel>>> {
    if model.is_none() {
        if let Some(m) = methods.iter().find(|m| m.needs_model()) {
            return Err(GedError::Checkpoint(format!("method {m} needs --model")).into());
        }
    }
    Ok(model)
}

fn load_cost(path: Option<&Path>, default: CostModel) -> CliResult<CostModel> {
    match path {
        Some(p) => Ok(CostModel::from_json(&fs::read_to_string(p).map_err(GedError::from)?)?),
        None => Ok(default),
    }
}

fn limits(max_states: Option<u64>) -> SearchLimits {
    max_states.map(SearchLimits::with_max_states).unwrap_or_default()
}

#[allow(clippy::too_many_arguments)]
fn solve(
    g1: &Path,
    g2: &Path,
    cost: Option<&Path>,
    method: &str,
    heuristic: &str,
    model: Option<&Path>,
    beam_width: usize,
    max_states: Option<u64>,
) -> CliResult<()> {
    let kind: HeuristicKind = heuristic.parse().map_err(unknown)?;
    if !matches!(method, "astar" | "beam" | "hungarian" | "vj") {
        return Err(Failure { code: 3, message: format!("unknown method {method:?}") });
    }
    let (g1, g2) = (Graph::load(g1)?, Graph::load(g2)?);
    let cost = load_cost(cost, CostModel::uniform_label())?;
    let (ged, path, states, time_s, optimal) = match method {
        "astar" | "beam" => {
            let model = load_model(model)?;
            let h = make_heuristic(kind, model.as_ref())?;
            let mut search = Search::new(&g1, &g2, &cost, h.as_ref()).limits(limits(max_states));
            if method == "beam" {
                search = search.beam_width(beam_width);
            }
            let out = search.run()?;
            (out.ged, out.path, Some(out.stats.states_enqueued), out.stats.wall_time, out.stats.optimal_found)
        }
        _ => {
            let timer = Instant::now();
            let r = if method == "hungarian" { hungarian_ged(&g1, &g2, &cost)? } else { vj_ged(&g1, &g2, &cost)? };
            (r.ged_upper, r.path, None, timer.elapsed().as_secs_f64(), false)
        }
    };
    let ops: Vec<String> = path.ops.iter().map(ToString::to_string).collect();
    let report = json!({
        "ged": ged,
        "path": ops,
        "states_enqueued": states,
        "time_s": time_s,
        "optimal": optimal,
    });
    println!("{report}");
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn train(
    manifest: &Path,
    out: &Path,
    stage: Stage,
    model: Option<&Path>,
    config_path: Option<&Path>,
    seed: Option<u64>,
    epochs: Option<usize>,
    batch_size: Option<usize>,
    finetune_pairs: Option<usize>,
    curve: Option<&Path>,
) -> CliResult<()> {
    let data = Dataset::load(manifest)?;
    let mut config: TrainConfig = match config_path {
        Some(p) => serde_json::from_str(&fs::read_to_string(p).map_err(GedError::from)?).map_err(GedError::from)?,
        None => TrainConfig::default(),
    };
    if let Some(s) = seed {
        config.seed = s;
    }
    if let Some(e) = epochs {
        match stage {
            Stage::Regression => config.max_epochs = e,
            Stage::Finetune => config.finetune_epochs = e,
        }
    }
    if let Some(b) = batch_size {
        config.batch_size = b;
    }
    if let Some(f) = finetune_pairs {
        config.finetune_pair_count = f;
    }
    let report = match stage {
        Stage::Regression => {
            let features = if data.is_labeled() { FeatureConfig::labeled(data.label_vocabulary()) } else { FeatureConfig::unlabeled() };
            train_regression(&GennModel::new(features, config.seed), &data, &config)?
        }
        Stage::Finetune => {
            let start = load_model(model)?.ok_or_else(|| Failure {
                code: 4,
                message: "finetuning needs the stage-1 checkpoint (--model)".into(),
            })?;
            let set = build_finetune_set(&data, &config)?;
            info!("finetuning on {} pairs ({} skipped)", set.pairs.len(), set.skipped);
            finetune_with_paths(&start, &data, &set, &config)?
        }
    };
    report.model.save(out)?;
    if let Some(c) = curve {
        write_curve_csv(&report.curve, c)?;
    }
    let last = report.curve.last();
    println!(
        "{}",
        json!({
            "checkpoint": out,
            "epochs": report.curve.iter().filter(|r| r.epoch > 0).count(),
            "train_mse": last.map(|r| r.train_mse),
            "validation_mse": last.and_then(|r| r.validation_mse),
        })
    );
    Ok(())
}

fn labeled(pairs: &[GedPair]) -> Vec<GedPair> {
    pairs.iter().filter(|p| p.ged.is_some()).cloned().collect()
}

#[allow(clippy::too_many_arguments)]
fn eval(
    manifest: &Path,
    model: Option<&Path>,
    methods: Option<&str>,
    split: EvalSplit,
    k: usize,
    max_states: Option<u64>,
    out: Option<&Path>,
) -> CliResult<()> {
    let data = Dataset::load(manifest)?;
    let model = load_model(model)?;
    let default = if model.is_some() {
        "astar-hungarian,astar-genn,beam-hungarian-10,hungarian,vj,genn-regression"
    } else {
        "astar-hungarian,beam-hungarian-10,hungarian,vj"
    };
    let methods = parse_methods(methods.unwrap_or(default)).map_err(unknown)?;
    let model = require_model(model, &methods)?;
    let pairs = labeled(match split {
        EvalSplit::Validation => &data.validation_pairs,
        EvalSplit::Test => &data.test_pairs,
    });
    let report = evaluate(&data, &pairs, &methods, model.as_ref(), &limits(max_states), k)?;
    let text = serde_json::to_string_pretty(&report).map_err(GedError::from)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir).map_err(GedError::from)?;
        report.write_csv(dir.join("eval.csv"))?;
        fs::write(dir.join("eval.json"), &text).map_err(GedError::from)?;
    }
    println!("{text}");
    Ok(())
}

fn bench(
    manifest: &Path,
    methods: &str,
    out: &Path,
    model: Option<&Path>,
    limit: Option<usize>,
    max_states: Option<u64>,
) -> CliResult<()> {
    let methods = parse_methods(methods).map_err(unknown)?;
    let data = Dataset::load(manifest)?;
    let model = require_model(load_model(model)?, &methods)?;
    let mut pairs = data.test_pairs.clone();
    if let Some(n) = limit {
        pairs.truncate(n);
    }
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = std::env::var("GEDFORGE_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(|e| Failure { code: 1, message: e.to_string() })?;
    let rows = pool.install(|| bench_rows(&data.graphs, &pairs, &data.cost, &methods, model.as_ref(), &limits(max_states)))?;
    fs::create_dir_all(out).map_err(GedError::from)?;
    let path = out.join("bench.csv");
    write_csv(&rows, &path)?;
    println!("{}", json!({ "rows": rows.len(), "csv": path }));
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn gen(
    n: usize,
    min_nodes: usize,
    max_nodes: usize,
    edge_prob: f64,
    labels: usize,
    seed: u64,
    cost: Option<&Path>,
    out: &Path,
    label: bool,
) -> CliResult<()> {
    let config = SyntheticConfig { n_graphs: n, min_nodes, max_nodes, edge_prob, label_count: labels, seed };
    let default = if labels > 0 { CostModel::uniform_label() } else { CostModel::unlabeled() };
    let cost = load_cost(cost, default)?;
    let mut data = split_dataset(generate_synthetic(&config)?, cost, seed)?;
    if label {
        data.label_all(1_000_000)?;
    }
    let manifest = data.save(out)?;
    println!(
        "{}",
        json!({
            "manifest": manifest,
            "graphs": data.graphs.len(),
            "train_pairs": data.train_pairs.len(),
            "validation_pairs": data.validation_pairs.len(),
            "test_pairs": data.test_pairs.len(),
        })
    );
    Ok(())
}

fn label(manifest: &Path, max_states: u64, edge_norm: Option<f64>) -> CliResult<()> {
    let mut data = Dataset::load(manifest)?;
    if let Some(norm) = edge_norm {
        data.normalize_edges(norm)?;
    }
    data.label_all(max_states)?;
    let dir = manifest.parent().unwrap_or(Path::new("."));
    data.save(dir)?;
    let all = data.train_pairs.iter().chain(&data.validation_pairs).chain(&data.test_pairs);
    let (total, unlabeled) = all.fold((0, 0), |(t, u), p| (t + 1, u + usize::from(p.ged.is_none())));
    println!("{}", json!({ "pairs": total, "unlabeled": unlabeled }));
    Ok(())
}

fn run(cli: Cli) -> CliResult<()> {
    match cli.command {
        Command::Solve { g1, g2, cost, method, heuristic, model, beam_width, max_states } => solve(
            &g1,
            &g2,
            cost.as_deref(),
            &method,
            &heuristic,
            model.as_deref(),
            beam_width,
            max_states,
        ),
        Command::Train { manifest, out, stage, model, config, seed, epochs, batch_size, finetune_pairs, curve } => train(
            &manifest,
            &out,
            stage,
            model.as_deref(),
            config.as_deref(),
            seed,
            epochs,
            batch_size,
            finetune_pairs,
            curve.as_deref(),
        ),
        Command::Eval { manifest, model, methods, split, k, max_states, out } => {
            eval(&manifest, model.as_deref(), methods.as_deref(), split, k, max_states, out.as_deref())
        }
        Command::Bench { manifest, methods, out, model, limit, max_states } => {
            bench(&manifest, &methods, &out, model.as_deref(), limit, max_states)
        }
        Command::Gen { n, min_nodes, max_nodes, edge_prob, labels, seed, cost, out, label } => {
            gen(n, min_nodes, max_nodes, edge_prob, labels, seed, cost.as_deref(), &out, label)
        }
        Command::Label { manifest, max_states, edge_norm } => label(&manifest, max_states, edge_norm),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(f.code)
        }
    }
}
