//! Embedding caches for repeated predictions on shrinking graphs.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use super::model::GennModel;
use super::network::{gcn_forward, init_features, loop_degrees, score_embeddings, write_feature_row};
use crate::error::{GedError, Result};
use crate::graph::Graph;

/// How node embeddings of an unmatched subgraph are obtained.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EmbeddingStrategy {
    /// Extract the subgraph and run the full network on it.
    Vanilla,
    /// Keep every layer and recompute only rows near deleted nodes.
    ExactDynamic,
    /// Drop rows from the full-graph final embeddings.
    Genn,
}

impl EmbeddingStrategy {
    pub const ALL: [EmbeddingStrategy; 3] = [Self::Vanilla, Self::ExactDynamic, Self::Genn];

    pub fn name(self) -> &'static str {
        match self {
            Self::Vanilla => "vanilla",
            Self::ExactDynamic => "exact_dynamic",
            Self::Genn => "genn",
        }
    }
}

impl std::str::FromStr for EmbeddingStrategy {
    type Err = GedError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "vanilla" => Ok(Self::Vanilla),
            "exact_dynamic" | "exact-dynamic" => Ok(Self::ExactDynamic),
            "genn" => Ok(Self::Genn),
            other => Err(GedError::InvalidArgument(format!("unknown embedding strategy {other:?}"))),
        }
    }
}

/// Final-layer embeddings of a full graph.
#[derive(Clone, Debug, PartialEq)]
pub struct EmbeddingCache {
    pub graph_id: String,
    pub final_embeddings: Array2<f64>,
    pub strategy: EmbeddingStrategy,
}

pub fn build_cache(model: &GennModel, g: &Graph) -> EmbeddingCache {
    let x0 = init_features(g, &model.feature_config);
    EmbeddingCache {
        graph_id: g.id().to_string(),
        final_embeddings: gcn_forward(model, g, &x0),
        strategy: EmbeddingStrategy::Genn,
    }
}

/// Rows of `x` whose index is not in `masked`, in index order.
pub fn unmasked_rows(x: ArrayView2<f64>, masked: &[usize]) -> Array2<f64> {
    let mut drop = vec![false; x.nrows()];
    for &m in masked {
        drop[m] = true;
    }
    let keep: Vec<usize> = (0..x.nrows()).filter(|&i| !drop[i]).collect();
    x.select(Axis(0), &keep)
}

/// Similarity of the graphs left after removing the masked nodes, scored from
/// the cached full-graph embeddings.
pub fn masked_similarity(
    model: &GennModel,
    cache1: &EmbeddingCache,
    cache2: &EmbeddingCache,
    masked1: &[usize],
    masked2: &[usize],
) -> Result<f64> {
    let x1 = unmasked_rows(cache1.final_embeddings.view(), masked1);
    let x2 = unmasked_rows(cache2.final_embeddings.view(), masked2);
    score_embeddings(model, x1.view(), x2.view())
}

/// Similarity of two whole graphs, with the embeddings produced by `strategy`.
pub fn predict_similarity(model: &GennModel, g1: &Graph, g2: &Graph, strategy: EmbeddingStrategy) -> Result<f64> {
    if g1.is_empty() || g2.is_empty() {
        return Err(GedError::EmptyGraph);
    }
    match strategy {
        EmbeddingStrategy::Vanilla => {
            let x1 = gcn_forward(model, g1, &init_features(g1, &model.feature_config));
            let x2 = gcn_forward(model, g2, &init_features(g2, &model.feature_config));
            score_embeddings(model, x1.view(), x2.view())
        }
        EmbeddingStrategy::ExactDynamic => {
            let c1 = LayerCache::build(model, g1);
            let c2 = LayerCache::build(model, g2);
            score_embeddings(model, c1.embeddings().view(), c2.embeddings().view())
        }
        EmbeddingStrategy::Genn => {
            masked_similarity(model, &build_cache(model, g1), &build_cache(model, g2), &[], &[])
        }
    }
}

/// Every activation of a forward pass, kept so that deletions can be applied
/// by touching only the rows whose receptive field changed.
#[derive(Clone, Debug)]
pub struct LayerCache {
    graph: Graph,
    /// Index of each current node in the graph the cache was first built on.
    original: Vec<usize>,
    /// Weighted degree plus self-loop, per node.
    degrees: Vec<f64>,
    features: Array2<f64>,
    /// Post-activation outputs of layers 1 and 2, then the raw layer-3 output.
    layers: [Array2<f64>; 3],
}

impl LayerCache {
    pub fn build(model: &GennModel, g: &Graph) -> Self {
        let features = init_features(g, &model.feature_config);
        let degrees = loop_degrees(g);
        let mut layers: [Array2<f64>; 3] = Default::default();
        let mut input = features.clone();
        for (l, w) in model.conv.iter().enumerate() {
            let mut out = aggregate_all(g, &degrees, &input).dot(w);
            if l < 2 {
                out.mapv_inplace(|v| v.max(0.0));
            }
            layers[l] = out.clone();
            input = out;
        }
        Self { graph: g.clone(), original: (0..g.node_count()).collect(), degrees, features, layers }
    }

    pub fn graph(&self) -> &Graph {
        &self.graph
    }

    pub fn original(&self) -> &[usize] {
        &self.original
    }

    pub fn features(&self) -> &Array2<f64> {
        &self.features
    }

    pub fn layer(&self, l: usize) -> &Array2<f64> {
        &self.layers[l]
    }

    pub fn embeddings(&self) -> &Array2<f64> {
        &self.layers[2]
    }

    /// Cache for the graph with `node` (current index) removed.
    ///
    /// Layer `l` (1-based) recomputes the rows within `l + 1` hops of the
    /// deleted node; every other row is copied.
    pub fn delete_node(&self, model: &GennModel, node: usize) -> LayerCache {
        let n = self.graph.node_count();
        assert!(node < n, "node {node} not in cached graph of {n} nodes");
        let keep: Vec<usize> = (0..n).filter(|&i| i != node).collect();
        let shift = |old: usize| if old > node { old - 1 } else { old };
        let graph = self.graph.induced_subgraph(&keep);
        let original = keep.iter().map(|&i| self.original[i]).collect();

        let changed: Vec<usize> = self.graph.neighbors(node).iter().map(|&j| shift(j)).collect();
        let mut degrees: Vec<f64> = keep.iter().map(|&i| self.degrees[i]).collect();
        for &c in &changed {
            degrees[c] = loop_degrees_of(&graph, c);
        }

        let mut features = self.features.select(Axis(0), &keep);
        for &c in &changed {
            write_feature_row(features.row_mut(c), graph.degree(c), graph.label(c), &model.feature_config);
        }

        let mut dirty = vec![false; graph.node_count()];
        for &c in &changed {
            dirty[c] = true;
        }
        let mut layers: [Array2<f64>; 3] = Default::default();
        for l in 0..3 {
            dirty = closed_neighborhood(&graph, &dirty);
            let input = if l == 0 { &features } else { &layers[l - 1] };
            let mut out = self.layers[l].select(Axis(0), &keep);
            for j in (0..graph.node_count()).filter(|&j| dirty[j]) {
                let agg = aggregate_row(&graph, &degrees, input, j);
                let mut row = agg.dot(&model.conv[l]);
                if l < 2 {
                    row.mapv_inplace(|v| v.max(0.0));
                }
                out.row_mut(j).assign(&row);
            }
            layers[l] = out;
        }
        LayerCache { graph, original, degrees, features, layers }
    }

    /// Removes the node whose index in the original graph is `original_node`.
    pub fn delete_original(&self, model: &GennModel, original_node: usize) -> Option<LayerCache> {
        let pos = self.original.iter().position(|&o| o == original_node)?;
        Some(self.delete_node(model, pos))
    }
}

/// Functional form of [`LayerCache::delete_node`].
pub fn exact_dynamic_update(model: &GennModel, cache: &LayerCache, deleted_node: usize) -> LayerCache {
    cache.delete_node(model, deleted_node)
}

fn loop_degrees_of(g: &Graph, i: usize) -> f64 {
    1.0 + g.neighbors(i).iter().map(|&j| g.weight(i, j).unwrap_or_default()).sum::<f64>()
}

fn closed_neighborhood(g: &Graph, set: &[bool]) -> Vec<bool> {
    let mut out = set.to_vec();
    for i in (0..set.len()).filter(|&i| set[i]) {
        for &j in g.neighbors(i) {
            out[j] = true;
        }
    }
    out
}

fn aggregate_row(g: &Graph, degrees: &[f64], x: &Array2<f64>, j: usize) -> ndarray::Array1<f64> {
    let mut acc = x.row(j).to_owned() * (1.0 / degrees[j]);
    for &k in g.neighbors(j) {
        let a = g.weight(j, k).unwrap_or_default() / (degrees[j] * degrees[k]).sqrt();
        acc.scaled_add(a, &x.row(k));
    }
    acc
}

fn aggregate_all(g: &Graph, degrees: &[f64], x: &Array2<f64>) -> Array2<f64> {
    let mut out = Array2::zeros(x.dim());
    for j in 0..g.node_count() {
        out.row_mut(j).assign(&aggregate_row(g, degrees, x, j));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::genn::model::FeatureConfig;
    use crate::genn::network::attention_pool;
    use rand::{seq::SliceRandom, Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_graph(rng: &mut ChaCha8Rng, n: usize, p: f64, labeled: bool) -> Graph {
        let mut edges = Vec::new();
        for u in 0..n {
            for v in u + 1..n {
                if rng.gen_bool(p) {
                    edges.push((u, v, rng.gen_range(0.2..1.5)));
                }
            }
        }
        let labels = (0..n)
            .map(|_| labeled.then(|| ["A", "B", "C"][rng.gen_range(0..3)].to_string()))
            .collect();
        Graph::new("r", labels, edges).unwrap()
    }

    fn labeled_model(seed: u64) -> GennModel {
        GennModel::new(FeatureConfig::labeled(vec!["A".into(), "B".into()]), seed)
    }

    fn max_abs_diff(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
        assert_eq!(a.dim(), b.dim());
        a.iter().zip(b.iter()).map(|(x, y)| (x - y).abs()).fold(0.0, f64::max)
    }

    #[test]
    fn cache_matches_fresh_forward() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let g = random_graph(&mut rng, 7, 0.4, true);
        let model = labeled_model(1);
        let cache = build_cache(&model, &g);
        assert_eq!(cache.final_embeddings.nrows(), 7);
        let fresh = gcn_forward(&model, &g, &init_features(&g, &model.feature_config));
        assert_eq!(cache.final_embeddings, fresh);
        assert_eq!(build_cache(&model, &g), cache);
    }

    #[test]
    fn strategies_agree_on_full_graphs() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let model = labeled_model(2);
        for _ in 0..100 {
            let n1 = rng.gen_range(1..10);
            let n2 = rng.gen_range(1..10);
            let g1 = random_graph(&mut rng, n1, 0.35, true);
            let g2 = random_graph(&mut rng, n2, 0.35, true);
            let s: Vec<f64> = EmbeddingStrategy::ALL
                .iter()
                .map(|&st| predict_similarity(&model, &g1, &g2, st).unwrap())
                .collect();
            assert!((s[0] - s[1]).abs() <= 1e-6 && (s[0] - s[2]).abs() <= 1e-6, "{s:?}");
            assert_eq!(predict_similarity(&model, &g1, &g2, EmbeddingStrategy::Genn).unwrap(), s[2]);
        }
    }

    #[test]
    fn empty_graph_rejected() {
        let model = GennModel::new(FeatureConfig::unlabeled(), 0);
        let g = Graph::unlabeled("g", 2, &[(0, 1)]).unwrap();
        let e = Graph::unlabeled("e", 0, &[]).unwrap();
        assert!(matches!(predict_similarity(&model, &g, &e, EmbeddingStrategy::Genn), Err(GedError::EmptyGraph)));
        let c = build_cache(&model, &g);
        assert!(matches!(masked_similarity(&model, &c, &c, &[0, 1], &[]), Err(GedError::EmptyGraph)));
    }

    #[test]
    fn masked_similarity_is_row_subset() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let model = labeled_model(3);
        let g1 = random_graph(&mut rng, 8, 0.4, true);
        let g2 = random_graph(&mut rng, 6, 0.4, true);
        let (c1, c2) = (build_cache(&model, &g1), build_cache(&model, &g2));
        let (m1, m2) = (vec![1, 4, 6], vec![0]);
        let s = masked_similarity(&model, &c1, &c2, &m1, &m2).unwrap();

        let rows1: Vec<usize> = [0, 2, 3, 5, 7].into();
        let rows2: Vec<usize> = (1..6).collect();
        let p1 = attention_pool(&model, c1.final_embeddings.select(Axis(0), &rows1).view()).unwrap();
        let p2 = attention_pool(&model, c2.final_embeddings.select(Axis(0), &rows2).view()).unwrap();
        assert_eq!(s, super::super::network::ntn_score(&model, p1.view(), p2.view()));

        let empty_masks = masked_similarity(&model, &c1, &c2, &[], &[]).unwrap();
        let vanilla = predict_similarity(&model, &g1, &g2, EmbeddingStrategy::Vanilla).unwrap();
        assert!((empty_masks - vanilla).abs() <= 1e-6);
    }

    #[test]
    fn isolated_deletion_only_drops_row() {
        let g = Graph::labeled("g", &["A", "B", "A", "B"], &[(0, 1), (1, 3)]).unwrap();
        let model = labeled_model(4);
        let cache = LayerCache::build(&model, &g);
        let after = cache.delete_node(&model, 2);
        assert_eq!(after.original(), &[0, 1, 3]);
        for l in 0..3 {
            assert_eq!(after.layer(l), &cache.layer(l).select(Axis(0), &[0, 1, 3]));
        }
    }

    #[test]
    fn path_deletion_matches_recompute() {
        let g = Graph::unlabeled("p", 6, &[(0, 1), (1, 2), (2, 3), (3, 4), (4, 5)]).unwrap();
        let model = GennModel::new(FeatureConfig::unlabeled(), 5);
        let after = LayerCache::build(&model, &g).delete_node(&model, 2);
        let fresh = LayerCache::build(&model, after.graph());
        for l in 0..3 {
            assert!(max_abs_diff(after.layer(l), fresh.layer(l)) <= 1e-6);
        }
        assert_eq!(after.features(), fresh.features());
    }

    #[test]
    fn sequential_deletions_match_recompute() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let model = labeled_model(6);
        for _ in 0..30 {
            let g = random_graph(&mut rng, 9, 0.35, true);
            let mut order: Vec<usize> = (0..9).collect();
            order.shuffle(&mut rng);
            let mut cache = LayerCache::build(&model, &g);
            for &victim in &order[..3] {
                cache = cache.delete_original(&model, victim).unwrap();
                let keep = cache.original().to_vec();
                let sub = g.induced_subgraph(&keep);
                let fresh = gcn_forward(&model, &sub, &init_features(&sub, &model.feature_config));
                assert!(max_abs_diff(cache.embeddings(), &fresh) <= 1e-6);
            }
        }
    }

    #[test]
    fn strategy_names_parse() {
        for st in EmbeddingStrategy::ALL {
            assert_eq!(st.name().parse::<EmbeddingStrategy>().unwrap(), st);
        }
        assert!("fast".parse::<EmbeddingStrategy>().is_err());
    }
}
