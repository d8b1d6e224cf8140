//! Retrieval metrics and the solver evaluation harness.

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bipartite::{hungarian_ged, vj_ged};
use crate::cost::CostModel;
use crate::data::{Dataset, GedPair};
use crate::error::{GedError, Result};
use crate::genn::network::ged_to_similarity;
use crate::genn::{predict_similarity, EmbeddingStrategy, GennHeuristic, GennModel};
use crate::edit::{EditOp, PartialMapping};
use crate::graph::Graph;
use crate::heuristics::{HungarianHeuristic, ZeroHeuristic};
use crate::search::{Heuristic, Search, SearchLimits};

pub fn metric_mse(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(preds, labels)?;
    if preds.is_empty() {
        return Err(GedError::InvalidArgument("mse of an empty set".into()));
    }
    Ok(preds.iter().zip(labels).map(|(p, l)| (p - l).powi(2)).sum::<f64>() / preds.len() as f64)
}

fn check_lengths(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(GedError::InvalidArgument(format!("length mismatch: {} vs {}", a.len(), b.len())));
    }
    Ok(())
}

/// 1-based ranks, tied values sharing the average of their positions.
pub fn average_ranks(values: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..values.len()).collect();
    order.sort_by(|&a, &b| values[a].total_cmp(&values[b]));
    let mut ranks = vec![0.0; values.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && values[order[j + 1]] == values[order[i]] {
            j += 1;
        }
        let rank = (i + j) as f64 / 2.0 + 1.0;
        for &k in &order[i..=j] {
            ranks[k] = rank;
        }
        i = j + 1;
    }
    ranks
}

/// Spearman correlation of one query: Pearson correlation of average ranks.
///
/// A constant vector carries no ordering and yields 0.
pub fn metric_spearman(preds: &[f64], labels: &[f64]) -> Result<f64> {
    check_lengths(preds, labels)?;
    if preds.len() < 2 {
        return Err(GedError::InvalidArgument("spearman needs at least two items".into()));
    }
    let (rp, rl) = (average_ranks(preds), average_ranks(labels));
    let mean = (preds.len() as f64 + 1.0) / 2.0;
    let (mut cov, mut vp, mut vl) = (0.0, 0.0, 0.0);
    for (a, b) in rp.iter().zip(&rl) {
        cov += (a - mean) * (b - mean);
        vp += (a - mean).powi(2);
        vl += (b - mean).powi(2);
    }
    if vp == 0.0 || vl == 0.0 {
        return Ok(0.0);
    }
    Ok((cov / (vp * vl).sqrt()).clamp(-1.0, 1.0))
}

/// Indices of the `k` most similar items; ties broken by ascending id.
fn top_k(scores: &[f64], ids: &[String], k: usize) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then_with(|| ids[a].cmp(&ids[b])));
    order.truncate(k);
    order
}

/// `|top_k(pred) ∩ top_k(label)| / k` for one query over a corpus of similarities.
pub fn metric_p_at_k(preds: &[f64], labels: &[f64], ids: &[String], k: usize) -> Result<f64> {
    check_lengths(preds, labels)?;
    if ids.len() != preds.len() {
        return Err(GedError::InvalidArgument("one id per corpus item required".into()));
    }
    if k == 0 || k > preds.len() {
        return Err(GedError::InvalidArgument(format!("k = {k} with a corpus of {}", preds.len())));
    }
    let truth = top_k(labels, ids, k);
    let hits = top_k(preds, ids, k).iter().filter(|i| truth.contains(i)).count();
    Ok(hits as f64 / k as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HeuristicKind {
    Zero,
    Hungarian,
    Genn,
}

impl FromStr for HeuristicKind {
    type Err = GedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "zero" => Ok(Self::Zero),
            "hungarian" => Ok(Self::Hungarian),
            "genn" => Ok(Self::Genn),
            other => Err(GedError::InvalidArgument(format!("unknown heuristic {other:?}"))),
        }
    }
}

impl fmt::Display for HeuristicKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::Zero => "zero",
            Self::Hungarian => "hungarian",
            Self::Genn => "genn",
        })
    }
}

/// A GED solver or similarity predictor, named `astar-<h>`, `beam-<h>-<width>`,
/// `hungarian`, `vj` or `genn-regression`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum Method {
    AStar(HeuristicKind),
    Beam(HeuristicKind, usize),
    Hungarian,
    Vj,
    GennRegression,
}

impl Method {
    pub fn needs_model(self) -> bool {
        matches!(self, Self::AStar(HeuristicKind::Genn) | Self::Beam(HeuristicKind::Genn, _) | Self::GennRegression)
    }

    pub fn is_search(self) -> bool {
        matches!(self, Self::AStar(_) | Self::Beam(..))
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AStar(h) => write!(f, "astar-{h}"),
            Self::Beam(h, w) => write!(f, "beam-{h}-{w}"),
            Self::Hungarian => f.write_str("hungarian"),
            Self::Vj => f.write_str("vj"),
            Self::GennRegression => f.write_str("genn-regression"),
        }
    }
}

impl FromStr for Method {
    type Err = GedError;

    fn from_str(s: &str) -> Result<Self> {
        let bad = || GedError::InvalidArgument(format!("unknown method {s:?}"));
        match s {
            "hungarian" => return Ok(Self::Hungarian),
            "vj" => return Ok(Self::Vj),
            "genn-regression" => return Ok(Self::GennRegression),
            _ => {}
        }
        if let Some(h) = s.strip_prefix("astar-") {
            return Ok(Self::AStar(h.parse().map_err(|_| bad())?));
        }
        if let Some(rest) = s.strip_prefix("beam-") {
            let (h, w) = rest.rsplit_once('-').ok_or_else(bad)?;
            let width: usize = w.parse().map_err(|_| bad())?;
            if width == 0 {
                return Err(bad());
            }
            return Ok(Self::Beam(h.parse().map_err(|_| bad())?, width));
        }
        Err(bad())
    }
}

pub fn parse_methods(list: &str) -> Result<Vec<Method>> {
    list.split(',').map(str::trim).filter(|s| !s.is_empty()).map(str::parse).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MethodResult {
    /// GED value reached by a solver; `None` for pure regression.
    pub ged: Option<f64>,
    pub similarity: f64,
    pub states_enqueued: Option<u64>,
    /// Seconds spent solving or predicting.
    pub time_s: f64,
}

pub fn make_heuristic(kind: HeuristicKind, model: Option<&Arc<GennModel>>) -> Result<Box<dyn Heuristic>> {
    Ok(match kind {
        HeuristicKind::Zero => Box::new(ZeroHeuristic),
        HeuristicKind::Hungarian => Box::new(HungarianHeuristic),
        HeuristicKind::Genn => {
            let model = model.ok_or_else(|| GedError::Checkpoint("the genn heuristic needs a model checkpoint".into()))?;
            Box::new(GennHeuristic::with_strategy(Arc::clone(model), EmbeddingStrategy::Genn))
        }
    })
}

pub fn run_method(
    method: Method,
    g1: &Graph,
    g2: &Graph,
    cost: &CostModel,
    model: Option<&Arc<GennModel>>,
    limits: &SearchLimits,
) -> Result<MethodResult> {
    let (n1, n2) = (g1.node_count(), g2.node_count());
    let solved = |ged: f64, states: Option<u64>, time_s: f64| -> Result<MethodResult> {
        Ok(MethodResult { ged: Some(ged), similarity: ged_to_similarity(ged, n1, n2)?, states_enqueued: states, time_s })
    };
    match method {
        Method::AStar(kind) | Method::Beam(kind, _) => {
            let h = make_heuristic(kind, model)?;
            let mut search = Search::new(g1, g2, cost, h.as_ref()).limits(limits.clone());
            if let Method::Beam(_, w) = method {
                search = search.beam_width(w);
            }
            let out = search.run()?;
            solved(out.ged, Some(out.stats.states_enqueued), out.stats.wall_time)
        }
        Method::Hungarian | Method::Vj => {
            let timer = Instant::now();
            let r = if method == Method::Hungarian { hungarian_ged(g1, g2, cost)? } else { vj_ged(g1, g2, cost)? };
            solved(r.ged_upper, None, timer.elapsed().as_secs_f64())
        }
        Method::GennRegression => {
            let model = model.ok_or_else(|| GedError::Checkpoint("genn-regression needs a model checkpoint".into()))?;
            let timer = Instant::now();
            let s = predict_similarity(model, g1, g2, EmbeddingStrategy::Genn)?;
            Ok(MethodResult { ged: None, similarity: s, states_enqueued: None, time_s: timer.elapsed().as_secs_f64() })
        }
    }
}

/// One row of the per-instance benchmark CSV.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BenchRow {
    pub pair_id: usize,
    pub n1: usize,
    pub n2: usize,
    pub method: String,
    pub ged: Option<f64>,
    pub optimal_ged: Option<f64>,
    pub states_enqueued: Option<u64>,
    pub time_ms: f64,
}

/// Every method on every pair, in parallel on the current rayon pool.
/// Entry `p * methods.len() + m` holds pair `p` under method `m`.
fn run_grid(
    graphs: &[Graph],
    pairs: &[GedPair],
    cost: &CostModel,
    methods: &[Method],
    model: Option<&Arc<GennModel>>,
    limits: &SearchLimits,
) -> Result<Vec<MethodResult>> {
    let jobs: Vec<(usize, usize)> = (0..pairs.len()).flat_map(|p| (0..methods.len()).map(move |m| (p, m))).collect();
    jobs.par_iter()
        .map(|&(p, m)| run_method(methods[m], &graphs[pairs[p].g1], &graphs[pairs[p].g2], cost, model, limits))
        .collect()
}

/// Per-instance rows ordered by pair, then by method as listed.
pub fn bench_rows(
    graphs: &[Graph],
    pairs: &[GedPair],
    cost: &CostModel,
    methods: &[Method],
    model: Option<&Arc<GennModel>>,
    limits: &SearchLimits,
) -> Result<Vec<BenchRow>> {
    let grid = run_grid(graphs, pairs, cost, methods, model, limits)?;
    Ok(grid
        .into_iter()
        .enumerate()
        .map(|(i, r)| {
            let (p, m) = (i / methods.len(), i % methods.len());
            let pair = &pairs[p];
            BenchRow {
                pair_id: p,
                n1: graphs[pair.g1].node_count(),
                n2: graphs[pair.g2].node_count(),
                method: methods[m].to_string(),
                ged: r.ged,
                optimal_ged: pair.ged,
                states_enqueued: r.states_enqueued,
                time_ms: r.time_s * 1e3,
            }
        })
        .collect())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalRow {
    pub method: String,
    /// Mean squared error of similarities, in units of 1e-3.
    pub mse: f64,
    pub rho: f64,
    pub p_at_10: f64,
    pub mean_tree_size: Option<f64>,
    pub mean_time_s: f64,
    /// Fraction of pairs whose GED equals the label; `None` for regression.
    pub optimal_fraction: Option<f64>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub rows: Vec<EvalRow>,
}

impl EvalReport {
    pub fn write_csv(&self, path: impl AsRef<std::path::Path>) -> Result<()> {
        write_csv(&self.rows, path)
    }
}

pub fn write_csv<T: Serialize>(rows: &[T], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| GedError::Io(e.into()))?;
    for r in rows {
        w.serialize(r).map_err(|e| GedError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}

/// Metrics of each method over query × corpus pairs.
///
/// Pairs are grouped by their first graph (the query); every pair must be labeled.
pub fn evaluate(
    dataset: &Dataset,
    pairs: &[GedPair],
    methods: &[Method],
    model: Option<&Arc<GennModel>>,
    limits: &SearchLimits,
    k: usize,
) -> Result<EvalReport> {
    if pairs.iter().any(|p| p.ged.is_none()) {
        return Err(GedError::InvalidArgument("evaluation pairs must all carry a ged label".into()));
    }
    let grid = run_grid(&dataset.graphs, pairs, &dataset.cost, methods, model, limits)?;
    let mut queries: Vec<usize> = pairs.iter().map(|p| p.g1).collect();
    queries.sort_unstable();
    queries.dedup();
    let labels: Vec<f64> = pairs
        .iter()
        .map(|p| {
            let (n1, n2) = (dataset.graphs[p.g1].node_count(), dataset.graphs[p.g2].node_count());
            ged_to_similarity(p.ged.unwrap_or_default(), n1, n2)
        })
        .collect::<Result<_>>()?;

    let mut report = EvalReport::default();
    for (m, method) in methods.iter().enumerate() {
        let results: Vec<&MethodResult> = grid.iter().skip(m).step_by(methods.len()).collect();
        let preds: Vec<f64> = results.iter().map(|r| r.similarity).collect();
        let mse = metric_mse(&preds, &labels)?;

        let (mut rho_sum, mut p_sum, mut counted) = (0.0, 0.0, 0usize);
        for &q in &queries {
            let idx: Vec<usize> = (0..pairs.len()).filter(|&i| pairs[i].g1 == q).collect();
            if idx.len() < 2 {
                continue;
            }
            let qp: Vec<f64> = idx.iter().map(|&i| preds[i]).collect();
            let ql: Vec<f64> = idx.iter().map(|&i| labels[i]).collect();
            let ids: Vec<String> = idx.iter().map(|&i| dataset.graphs[pairs[i].g2].id().to_string()).collect();
            rho_sum += metric_spearman(&qp, &ql)?;
            p_sum += metric_p_at_k(&qp, &ql, &ids, k.min(idx.len()))?;
            counted += 1;
        }
        let per_query = |x: f64| if counted == 0 { 0.0 } else { x / counted as f64 };
        let n = results.len() as f64;
        let tree: Vec<f64> = results.iter().filter_map(|r| r.states_enqueued.map(|s| s as f64)).collect();
        let optimal = results
            .iter()
            .zip(pairs)
            .filter_map(|(r, p)| r.ged.map(|g| (g - p.ged.unwrap_or_default()).abs() <= 1e-9))
            .collect::<Vec<bool>>();
        report.rows.push(EvalRow {
            method: method.to_string(),
            mse: mse * 1e3,
            rho: per_query(rho_sum),
            p_at_10: per_query(p_sum),
            mean_tree_size: (!tree.is_empty()).then(|| tree.iter().sum::<f64>() / tree.len() as f64),
            mean_time_s: results.iter().map(|r| r.time_s).sum::<f64>() / n,
            optimal_fraction: (!optimal.is_empty())
                .then(|| optimal.iter().filter(|&&b| b).count() as f64 / optimal.len() as f64),
        });
    }
    Ok(report)
}

/// Random states with at least one open node on each side, as the search would query them.
pub fn random_partial_mappings(g1: &Graph, g2: &Graph, count: usize, rng: &mut impl rand::Rng) -> Vec<PartialMapping> {
    let (n1, n2) = (g1.node_count(), g2.node_count());
    let mut out = Vec::with_capacity(count);
    while out.len() < count {
        let mut m = PartialMapping::new(n1, n2);
        let depth = rng.gen_range(0..n1.max(1));
        for _ in 0..depth {
            let Some(u) = m.next_open_source() else { break };
            let open: Vec<usize> = m.open_targets().collect();
            let op = if !open.is_empty() && rng.gen_bool(0.8) {
                EditOp::Sub { source: u, target: open[rng.gen_range(0..open.len())] }
            } else {
                EditOp::Del { source: u }
            };
            m.apply(op).expect("generated op is valid");
        }
        if m.open_source_count() > 0 && m.open_target_count() > 0 {
            out.push(m);
        }
    }
    out
}

/// The first `count` states popped by a Hungarian-guided A* run, keeping only
/// those with an open node on each side, in the order they were visited.
pub fn search_states(g1: &Graph, g2: &Graph, cost: &CostModel, count: usize) -> Vec<PartialMapping> {
    let mut states = Vec::new();
    let _ = Search::new(g1, g2, cost, &HungarianHeuristic)
        .limits(SearchLimits::with_max_states(1_000_000))
        .observe(|m, _| {
            if states.len() < count && m.open_source_count() > 0 && m.open_target_count() > 0 {
                states.push(m.clone());
            }
        })
        .run();
    states
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LatencyRow {
    pub strategy: String,
    pub predictions: usize,
    /// Mean seconds per masked prediction, including per-solve cache construction.
    pub mean_latency_s: f64,
}

/// Times the learned heuristic under each embedding strategy on the same states.
///
/// Each pair gets one heuristic session (its caches live for the whole batch of
/// states, as within one solve).
pub fn masked_prediction_latency(
    model: &Arc<GennModel>,
    instances: &[(Graph, Graph, Vec<PartialMapping>)],
    cost: &CostModel,
) -> Result<Vec<LatencyRow>> {
    let mut rows = Vec::new();
    for strategy in EmbeddingStrategy::ALL {
        let h = GennHeuristic::with_strategy(Arc::clone(model), strategy);
        let mut predictions = 0;
        let mut checksum = 0.0;
        let timer = Instant::now();
        for (g1, g2, states) in instances {
            let mut session = h.prepare(g1, g2, cost)?;
            for m in states {
                checksum += session.estimate(m);
                predictions += 1;
            }
        }
        let elapsed = timer.elapsed().as_secs_f64();
        std::hint::black_box(checksum);
        rows.push(LatencyRow {
            strategy: strategy.name().to_string(),
            predictions,
            mean_latency_s: elapsed / predictions.max(1) as f64,
        });
    }
    Ok(rows)
}
