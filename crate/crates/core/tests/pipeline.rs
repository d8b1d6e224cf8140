//! End-to-end checks of data generation, labeling, training and evaluation.

mod common;

use gedforge_core::data::{generate_synthetic, split_dataset, Dataset, SyntheticConfig};
use gedforge_core::eval::{evaluate, parse_methods};
use gedforge_core::genn::{FeatureConfig, GennModel};
use gedforge_core::training::{build_finetune_set, finetune_with_paths, pair_mse, train_regression, TrainConfig};
use gedforge_core::{CostModel, SearchLimits};

fn dataset(n_graphs: usize, max_nodes: usize, seed: u64) -> Dataset {
    let graphs = generate_synthetic(&SyntheticConfig {
        n_graphs,
        min_nodes: 3,
        max_nodes,
        edge_prob: 0.3,
        label_count: 3,
        seed,
    })
    .unwrap();
    let mut data = split_dataset(graphs, CostModel::uniform_label(), seed).unwrap();
    data.label_all(1_000_000).unwrap();
    data
}

#[test]
fn labels_match_brute_force_and_are_symmetric() {
    let data = dataset(20, 5, 3);
    let cost = &data.cost;
    for pair in data.train_pairs.iter().chain(&data.test_pairs).take(50) {
        let (g1, g2) = (&data.graphs[pair.g1], &data.graphs[pair.g2]);
        let ged = pair.ged.unwrap();
        assert_eq!(ged, common::brute_force_ged(g1, g2, cost));
        assert_eq!(ged, common::brute_force_ged(g2, g1, cost));
    }
}

#[test]
fn training_reduces_error_and_finetuning_stays_close() {
    let data = dataset(40, 7, 5);
    assert!(data.train_pairs.len() >= 250);
    let config = TrainConfig { batch_size: 32, max_epochs: 40, finetune_pair_count: 40, seed: 2, ..TrainConfig::default() };
    let model = GennModel::new(FeatureConfig::labeled(data.label_vocabulary()), 2);
    let report = train_regression(&model, &data, &config).unwrap();
    let initial = report.curve[0].train_mse;
    let trained = pair_mse(&report.model, &data, &data.train_pairs).unwrap();
    assert!(trained <= 0.5 * initial, "train mse {initial} -> {trained}");

    let set = build_finetune_set(&data, &config).unwrap();
    assert!(!set.pairs.is_empty());
    let tuned = finetune_with_paths(&report.model, &data, &set, &config).unwrap().model;
    let before = pair_mse(&report.model, &data, &data.validation_pairs).unwrap();
    let after = pair_mse(&tuned, &data, &data.validation_pairs).unwrap();
    assert!(after <= 1.2 * before, "validation mse {before} -> {after}");
}

#[test]
fn saved_dataset_evaluates_identically() {
    let data = dataset(12, 5, 9);
    let dir = tempfile::tempdir().unwrap();
    let manifest = data.save(dir.path()).unwrap();
    let loaded = Dataset::load(&manifest).unwrap();
    let methods = parse_methods("astar-hungarian,hungarian,vj,beam-hungarian-5").unwrap();
    let limits = SearchLimits::default();
    let a = evaluate(&data, &data.test_pairs, &methods, None, &limits, 10).unwrap();
    let b = evaluate(&loaded, &loaded.test_pairs, &methods, None, &limits, 10).unwrap();
    for (x, y) in a.rows.iter().zip(&b.rows) {
        assert_eq!((x.mse, x.rho, x.p_at_10, x.optimal_fraction), (y.mse, y.rho, y.p_at_10, y.optimal_fraction));
    }
    assert_eq!(a.rows[0].optimal_fraction, Some(1.0));
    assert_eq!(a.rows[0].mse, 0.0);
}
