//! Fixtures shared by the benchmarks.

use gedforge_core::assignment::CostMatrix;
use gedforge_core::data::{generate_synthetic, SyntheticConfig};
use gedforge_core::eval::search_states;
use gedforge_core::genn::{FeatureConfig, GennModel};
use gedforge_core::{CostModel, Graph, PartialMapping};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Dense `n x n` matrix of uniform costs in `[0, 100)`.
pub fn random_matrix(n: usize, seed: u64) -> CostMatrix {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    CostMatrix::from_fn(n, |_, _| rng.gen_range(0.0..100.0)).expect("finite entries")
}

/// `count` pairs of connected labeled graphs with exactly `nodes` nodes.
pub fn graph_pairs(nodes: usize, count: usize, seed: u64) -> Vec<(Graph, Graph)> {
    let graphs = generate_synthetic(&SyntheticConfig {
        n_graphs: 2 * count,
        min_nodes: nodes,
        max_nodes: nodes,
        edge_prob: 0.35,
        label_count: 3,
        seed,
    })
    .expect("valid generator settings");
    graphs.chunks(2).map(|p| (p[0].clone(), p[1].clone())).collect()
}

/// An untrained model over the generator's label vocabulary.
pub fn model(seed: u64) -> GennModel {
    GennModel::new(FeatureConfig::labeled((0..3).map(|k| format!("L{k}")).collect()), seed)
}

/// Pairs with up to `per_pair` states popped by Hungarian A*, in search order.
pub fn prediction_workload(nodes: usize, pairs: usize, per_pair: usize) -> Vec<(Graph, Graph, Vec<PartialMapping>)> {
    let cost = CostModel::uniform_label();
    graph_pairs(nodes, pairs, 3)
        .into_iter()
        .map(|(a, b)| {
            let states = search_states(&a, &b, &cost, per_pair);
            (a, b, states)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_have_requested_shapes() {
        assert_eq!(random_matrix(5, 1).size(), 5);
        let pairs = graph_pairs(6, 3, 1);
        assert_eq!(pairs.len(), 3);
        assert!(pairs.iter().all(|(a, b)| a.node_count() == 6 && b.node_count() == 6));
        let work = prediction_workload(6, 2, 10);
        assert!(work.iter().all(|(_, _, s)| !s.is_empty() && s.len() <= 10));
    }
}
