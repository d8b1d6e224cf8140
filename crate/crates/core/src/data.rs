//! Synthetic corpora, exact GED labels, dataset splits and the manifest format.

use std::collections::HashMap;
use std::path::{Path, PathBuf};

use rand::seq::{index, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cost::CostModel;
use crate::error::{GedError, Result};
use crate::graph::Graph;
use crate::heuristics::HungarianHeuristic;
use crate::search::{astar_solve, SearchLimits};

pub const DEFAULT_EDGE_NORMALIZER: f64 = 300.0;
pub const MAX_TRAIN_PAIRS: usize = 10_000;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SyntheticConfig {
    pub n_graphs: usize,
    pub min_nodes: usize,
    pub max_nodes: usize,
    pub edge_prob: f64,
    /// Size of the label alphabet `L0, L1, ...`; 0 produces unlabeled graphs.
    pub label_count: usize,
    pub seed: u64,
}

/// Connected random graphs: each is `G(n, p)` resampled until connected.
pub fn generate_synthetic(config: &SyntheticConfig) -> Result<Vec<Graph>> {
    let SyntheticConfig { n_graphs, min_nodes, max_nodes, edge_prob, label_count, seed } = *config;
    if !(0.0..=1.0).contains(&edge_prob) {
        return Err(GedError::InvalidArgument(format!("edge probability {edge_prob} outside [0, 1]")));
    }
    if min_nodes == 0 || min_nodes > max_nodes {
        return Err(GedError::InvalidArgument(format!("invalid node range [{min_nodes}, {max_nodes}]")));
    }
    if edge_prob == 0.0 && max_nodes > 1 && min_nodes > 1 {
        return Err(GedError::InvalidArgument("edge probability 0 cannot produce connected graphs".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut graphs = Vec::with_capacity(n_graphs);
    for idx in 0..n_graphs {
        let n = rng.gen_range(min_nodes..=max_nodes);
        let labels: Vec<Option<String>> = (0..n)
            .map(|_| (label_count > 0).then(|| format!("L{}", rng.gen_range(0..label_count))))
            .collect();
        loop {
            let mut edges = Vec::new();
            for u in 0..n {
                for v in u + 1..n {
                    if rng.gen_bool(edge_prob) {
                        edges.push((u, v, 1.0));
                    }
                }
            }
            let g = Graph::new(format!("g{idx}"), labels.clone(), edges)?;
            if g.is_connected() {
                graphs.push(g);
                break;
            }
        }
    }
    Ok(graphs)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Split {
    Train,
    Validation,
    Test,
}

/// A pair of graph indices with its GED when known.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GedPair {
    pub g1: usize,
    pub g2: usize,
    pub ged: Option<f64>,
}

/// Exact GED by Hungarian-guided A*, pairs in parallel; pairs over budget stay unlabeled.
pub fn build_ged_labels(graphs: &[Graph], pairs: &[(usize, usize)], cost: &CostModel, max_states: u64) -> Result<Vec<GedPair>> {
    let limits = SearchLimits::with_max_states(max_states);
    pairs
        .par_iter()
        .map(|&(i, j)| {
            match astar_solve(&graphs[i], &graphs[j], cost, &HungarianHeuristic, &limits) {
                Ok(out) => Ok(GedPair { g1: i, g2: j, ged: Some(out.ged) }),
                Err(GedError::BudgetExhausted { .. }) => {
                    log::warn!("pair ({i}, {j}) exceeded {max_states} states; left unlabeled");
                    Ok(GedPair { g1: i, g2: j, ged: None })
                }
                Err(e) => Err(e),
            }
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    pub graphs: Vec<Graph>,
    pub splits: Vec<Split>,
    pub cost: CostModel,
    /// Unordered pairs within the training split.
    pub train_pairs: Vec<GedPair>,
    /// Validation query against each training graph.
    pub validation_pairs: Vec<GedPair>,
    /// Test query against each training graph.
    pub test_pairs: Vec<GedPair>,
    pub edge_normalized: bool,
}

/// Shuffled 60/20/20 split by graph. Pairs are created unlabeled.
pub fn split_dataset(graphs: Vec<Graph>, cost: CostModel, seed: u64) -> Result<Dataset> {
    let n = graphs.len();
    if n < 5 {
        return Err(GedError::InvalidArgument(format!("need at least 5 graphs to split, got {n}")));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng);
    let n_train = (n as f64 * 0.6).round() as usize;
    let n_val = (n as f64 * 0.2).round() as usize;
    let mut splits = vec![Split::Test; n];
    for (rank, &g) in order.iter().enumerate() {
        splits[g] = if rank < n_train {
            Split::Train
        } else if rank < n_train + n_val {
            Split::Validation
        } else {
            Split::Test
        };
    }
    let members = |s: Split| -> Vec<usize> { (0..n).filter(|&i| splits[i] == s).collect() };
    let (train, val, test) = (members(Split::Train), members(Split::Validation), members(Split::Test));

    let mut within = Vec::new();
    for (a, &i) in train.iter().enumerate() {
        for &j in &train[a + 1..] {
            within.push((i, j));
        }
    }
    if within.len() > MAX_TRAIN_PAIRS {
        let mut picked = index::sample(&mut rng, within.len(), MAX_TRAIN_PAIRS).into_vec();
        picked.sort_unstable();
        within = picked.into_iter().map(|k| within[k]).collect();
    }
    let unlabeled = |(g1, g2): (usize, usize)| GedPair { g1, g2, ged: None };
    let cross = |queries: &[usize]| -> Vec<GedPair> {
        queries.iter().flat_map(|&q| train.iter().map(move |&t| unlabeled((q, t)))).collect()
    };
    Ok(Dataset {
        validation_pairs: cross(&val),
        test_pairs: cross(&test),
        train_pairs: within.into_iter().map(unlabeled).collect(),
        graphs,
        splits,
        cost,
        edge_normalized: false,
    })
}

impl Dataset {
    pub fn members(&self, split: Split) -> Vec<usize> {
        (0..self.graphs.len()).filter(|&i| self.splits[i] == split).collect()
    }

    /// Solves every unlabeled pair exactly.
    pub fn label_all(&mut self, max_states: u64) -> Result<()> {
        for pairs in [&mut self.train_pairs, &mut self.validation_pairs, &mut self.test_pairs] {
            let todo: Vec<(usize, usize)> = pairs.iter().filter(|p| p.ged.is_none()).map(|p| (p.g1, p.g2)).collect();
            let solved = build_ged_labels(&self.graphs, &todo, &self.cost, max_states)?;
            let mut it = solved.into_iter();
            for p in pairs.iter_mut().filter(|p| p.ged.is_none()) {
                p.ged = it.next().expect("one label per pair").ged;
            }
        }
        Ok(())
    }

    /// Divides every edge weight by `normalizer`, at most once per dataset.
    pub fn normalize_edges(&mut self, normalizer: f64) -> Result<()> {
        if self.edge_normalized {
            return Err(GedError::InvalidArgument("edge weights are already normalized".into()));
        }
        if !(normalizer.is_finite() && normalizer > 0.0) {
            return Err(GedError::InvalidArgument(format!("invalid edge normalizer {normalizer}")));
        }
        for g in &mut self.graphs {
            *g = g.scale_weights(normalizer);
        }
        self.edge_normalized = true;
        Ok(())
    }

    /// Label vocabulary in first-seen order over the training graphs, then the rest.
    pub fn label_vocabulary(&self) -> Vec<String> {
        let mut order: Vec<usize> = self.members(Split::Train);
        order.extend((0..self.graphs.len()).filter(|&i| self.splits[i] != Split::Train));
        let mut vocab: Vec<String> = Vec::new();
        for i in order {
            for l in self.graphs[i].labels().iter().flatten() {
                if !vocab.contains(l) {
                    vocab.push(l.clone());
                }
            }
        }
        vocab
    }

    pub fn is_labeled(&self) -> bool {
        self.graphs.iter().any(|g| g.labels().iter().any(Option::is_some))
    }

    /// Writes `graphs/<id>.json` for every graph and `manifest.json` under `dir`.
    pub fn save(&self, dir: impl AsRef<Path>) -> Result<PathBuf> {
        let dir = dir.as_ref();
        std::fs::create_dir_all(dir.join("graphs"))?;
        let rel: Vec<String> = self.graphs.iter().map(|g| format!("graphs/{}.json", g.id())).collect();
        for (g, r) in self.graphs.iter().zip(&rel) {
            std::fs::write(dir.join(r), g.to_json_string())?;
        }
        let pair = |p: &GedPair, split: Split| PairEntry {
            g1: rel[p.g1].clone(),
            g2: rel[p.g2].clone(),
            ged: p.ged,
            split: Some(split),
        };
        let manifest = Manifest {
            format_version: 1,
            cost_model: self.cost.clone(),
            edge_normalized: self.edge_normalized,
            graphs: rel.iter().zip(&self.splits).map(|(p, &s)| GraphEntry { path: p.clone(), split: s }).collect(),
            pairs: self
                .train_pairs
                .iter()
                .map(|p| pair(p, Split::Train))
                .chain(self.validation_pairs.iter().map(|p| pair(p, Split::Validation)))
                .chain(self.test_pairs.iter().map(|p| pair(p, Split::Test)))
                .collect(),
        };
        let path = dir.join("manifest.json");
        std::fs::write(&path, serde_json::to_string_pretty(&manifest)?)?;
        Ok(path)
    }

    /// Reads a manifest; graph paths are relative to its directory.
    pub fn load(manifest_path: impl AsRef<Path>) -> Result<Self> {
        let manifest_path = manifest_path.as_ref();
        let base = manifest_path.parent().unwrap_or(Path::new("."));
        let manifest: Manifest = serde_json::from_str(&std::fs::read_to_string(manifest_path)?)?;
        manifest.cost_model.validate()?;

        let mut index: HashMap<String, usize> = HashMap::new();
        let mut graphs = Vec::new();
        let mut splits = Vec::new();
        let mut intern = |path: &str, split: Split, graphs: &mut Vec<Graph>, splits: &mut Vec<Split>| -> Result<usize> {
            if let Some(&i) = index.get(path) {
                return Ok(i);
            }
            graphs.push(Graph::load(base.join(path))?);
            splits.push(split);
            index.insert(path.to_string(), graphs.len() - 1);
            Ok(graphs.len() - 1)
        };
        for g in &manifest.graphs {
            intern(&g.path, g.split, &mut graphs, &mut splits)?;
        }
        let mut dataset = Dataset {
            graphs: Vec::new(),
            splits: Vec::new(),
            cost: manifest.cost_model.clone(),
            train_pairs: Vec::new(),
            validation_pairs: Vec::new(),
            test_pairs: Vec::new(),
            edge_normalized: manifest.edge_normalized,
        };
        for p in &manifest.pairs {
            if p.ged.is_some_and(|g| !(g >= 0.0)) {
                return Err(GedError::InvalidArgument(format!("negative ged label for ({}, {})", p.g1, p.g2)));
            }
            let split = p.split.unwrap_or(Split::Train);
            let g1 = intern(&p.g1, split, &mut graphs, &mut splits)?;
            let g2 = intern(&p.g2, split, &mut graphs, &mut splits)?;
            let entry = GedPair { g1, g2, ged: p.ged };
            match split {
                Split::Train => dataset.train_pairs.push(entry),
                Split::Validation => dataset.validation_pairs.push(entry),
                Split::Test => dataset.test_pairs.push(entry),
            }
        }
        dataset.graphs = graphs;
        dataset.splits = splits;
        Ok(dataset)
    }
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct GraphEntry {
    path: String,
    split: Split,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct PairEntry {
    g1: String,
    g2: String,
    ged: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    split: Option<Split>,
}

#[derive(Clone, Debug, Serialize, Deserialize)]
struct Manifest {
    #[serde(default = "one")]
    format_version: u32,
    cost_model: CostModel,
    #[serde(default)]
    edge_normalized: bool,
    #[serde(default)]
    graphs: Vec<GraphEntry>,
    pairs: Vec<PairEntry>,
}

fn one() -> u32 {
    1
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::validate_graph;

    fn config(seed: u64) -> SyntheticConfig {
        SyntheticConfig { n_graphs: 20, min_nodes: 3, max_nodes: 7, edge_prob: 0.4, label_count: 3, seed }
    }

    #[test]
    fn generator_is_seeded_and_valid() {
        let a = generate_synthetic(&config(1)).unwrap();
        assert_eq!(a, generate_synthetic(&config(1)).unwrap());
        assert_ne!(a, generate_synthetic(&config(2)).unwrap());
        for g in &a {
            assert!((3..=7).contains(&g.node_count()));
            assert!(g.is_connected());
            assert!(validate_graph(&g.to_json()).is_ok());
            assert!(g.labels().iter().all(|l| l.as_deref().is_some_and(|s| s.starts_with('L'))));
        }
    }

    #[test]
    fn generator_rejects_bad_probability() {
        for p in [-0.1, 1.5, f64::NAN] {
            assert!(generate_synthetic(&SyntheticConfig { edge_prob: p, ..config(0) }).is_err());
        }
    }

    #[test]
    fn split_counts_and_disjointness() {
        let graphs = generate_synthetic(&SyntheticConfig { n_graphs: 100, ..config(3) }).unwrap();
        let d = split_dataset(graphs.clone(), CostModel::uniform_label(), 9).unwrap();
        assert_eq!(d.members(Split::Train).len(), 60);
        assert_eq!(d.members(Split::Validation).len(), 20);
        assert_eq!(d.members(Split::Test).len(), 20);
        assert_eq!(d.train_pairs.len(), 60 * 59 / 2);
        assert_eq!(d.test_pairs.len(), 20 * 60);
        for p in &d.train_pairs {
            assert_eq!((d.splits[p.g1], d.splits[p.g2]), (Split::Train, Split::Train));
        }
        for p in &d.test_pairs {
            assert_eq!((d.splits[p.g1], d.splits[p.g2]), (Split::Test, Split::Train));
        }
        assert_eq!(d, split_dataset(graphs, CostModel::uniform_label(), 9).unwrap());
        assert!(split_dataset(generate_synthetic(&SyntheticConfig { n_graphs: 4, ..config(3) }).unwrap(), CostModel::unlabeled(), 0).is_err());
    }

    #[test]
    fn self_labels_are_zero_and_symmetric() {
        let graphs = generate_synthetic(&SyntheticConfig { n_graphs: 6, min_nodes: 2, max_nodes: 5, ..config(4) }).unwrap();
        let pairs: Vec<(usize, usize)> = (0..6).flat_map(|i| (0..6).map(move |j| (i, j))).collect();
        let labels = build_ged_labels(&graphs, &pairs, &CostModel::uniform_label(), 1_000_000).unwrap();
        for l in &labels {
            let back = labels.iter().find(|x| x.g1 == l.g2 && x.g2 == l.g1).unwrap();
            assert_eq!(l.ged, back.ged);
            if l.g1 == l.g2 {
                assert_eq!(l.ged, Some(0.0));
            }
        }
    }

    #[test]
    fn manifest_round_trip_and_normalization_guard() {
        let graphs = generate_synthetic(&SyntheticConfig { n_graphs: 8, min_nodes: 2, max_nodes: 4, ..config(5) }).unwrap();
        let mut d = split_dataset(graphs, CostModel::uniform_label(), 1).unwrap();
        d.label_all(100_000).unwrap();
        assert!(d.train_pairs.iter().all(|p| p.ged.is_some()));
        let dir = tempfile::tempdir().unwrap();
        let path = d.save(dir.path()).unwrap();
        let back = Dataset::load(&path).unwrap();
        assert_eq!(back, d);
        let again = Dataset::load(back.save(dir.path().join("copy")).unwrap()).unwrap();
        assert_eq!(again, d);

        let mut n = d.clone();
        n.normalize_edges(DEFAULT_EDGE_NORMALIZER).unwrap();
        assert_eq!(n.graphs[0].edges()[0].weight, 1.0 / 300.0);
        assert!(n.normalize_edges(DEFAULT_EDGE_NORMALIZER).is_err());
    }
}
