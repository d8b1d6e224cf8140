//! Two-stage training: regression on whole-pair similarities, then
//! finetuning on partial edit paths of exactly solved pairs.

pub mod grad;
pub mod labels;

use log::{info, warn};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, GedPair};
use crate::error::{GedError, Result};
use crate::genn::network::ged_to_similarity;
use crate::genn::GennModel;
use crate::heuristics::HungarianHeuristic;
use crate::search::{astar_solve, SearchLimits};
use grad::{accumulate_gradients, predict, PreparedGraph};
pub use labels::{generate_partial_labels, PartialPathLabel};

/// Mean squared error over a batch.
pub fn mse_loss(pred: &[f64], target: &[f64]) -> f64 {
    assert_eq!(pred.len(), target.len());
    if pred.is_empty() {
        return 0.0;
    }
    pred.iter().zip(target).map(|(p, t)| (p - t).powi(2)).sum::<f64>() / pred.len() as f64
}

/// `d mse / d pred`.
pub fn mse_gradient(pred: &[f64], target: &[f64]) -> Vec<f64> {
    let n = pred.len() as f64;
    pred.iter().zip(target).map(|(p, t)| 2.0 * (p - t) / n).collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
    pub max_epochs: usize,
    /// Stop after this many epochs without a validation improvement.
    pub patience: usize,
    pub finetune_pair_count: usize,
    pub finetune_learning_rate: f64,
    pub finetune_epochs: usize,
    /// Partial labels drawn per finetuning pair and epoch.
    pub finetune_labels_per_pair: usize,
    /// Also replay the whole-pair regression examples in every finetuning epoch.
    pub finetune_with_regression: bool,
    /// Strength of the pull toward the stage-1 parameters during finetuning.
    pub finetune_anchor: f64,
    /// Enumerate all sub-editions when the optimal path has at most this many edits.
    pub subset_limit: usize,
    /// State budget of each exact solve during finetuning.
    pub exact_max_states: u64,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            weight_decay: 5e-5,
            batch_size: 128,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
            max_epochs: 200,
            patience: 10,
            finetune_pair_count: 200,
            finetune_learning_rate: 0.001,
            finetune_epochs: 10,
            finetune_labels_per_pair: 16,
            finetune_with_regression: true,
            finetune_anchor: 1.0,
            subset_limit: 12,
            exact_max_states: 1_000_000,
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.learning_rate, self.finetune_learning_rate, self.epsilon, self.beta1, self.beta2];
        if positive.iter().any(|x| !(x.is_finite() && *x > 0.0))
            || !(self.weight_decay >= 0.0)
            || !(self.finetune_anchor >= 0.0)
            || self.beta1 >= 1.0
            || self.beta2 >= 1.0
            || self.batch_size == 0
        {
            return Err(GedError::InvalidArgument(format!("invalid training configuration {self:?}")));
        }
        Ok(())
    }
}

/// Adam with L2 regularization folded into the gradient (`g + lambda theta`).
#[derive(Clone, Debug)]
pub struct Adam {
    first: GennModel,
    second: GennModel,
    steps: i32,
}

impl Adam {
    pub fn new(model: &GennModel) -> Self {
        Self { first: model.zeros_like(), second: model.zeros_like(), steps: 0 }
    }

    pub fn steps(&self) -> i32 {
        self.steps
    }

    pub fn step(&mut self, params: &mut GennModel, grads: &GennModel, config: &TrainConfig) {
        self.steps += 1;
        let (b1, b2) = (config.beta1, config.beta2);
        let c1 = 1.0 - b1.powi(self.steps);
        let c2 = 1.0 - b2.powi(self.steps);
        let lambda = config.weight_decay;
        for (((p, g), m), v) in params
            .tensors_mut()
            .into_iter()
            .zip(grads.tensors())
            .zip(self.first.tensors_mut())
            .zip(self.second.tensors_mut())
        {
            for i in 0..p.len() {
                let gi = g[i] + lambda * p[i];
                m[i] = b1 * m[i] + (1.0 - b1) * gi;
                v[i] = b2 * v[i] + (1.0 - b2) * gi * gi;
                let m_hat = m[i] / c1;
                let v_hat = v[i] / c2;
                p[i] -= config.learning_rate * m_hat / (v_hat.sqrt() + config.epsilon);
            }
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub stage: String,
    pub epoch: usize,
    pub train_mse: f64,
    pub validation_mse: Option<f64>,
}

#[derive(Clone, Debug)]
pub struct TrainReport {
    pub model: GennModel,
    pub curve: Vec<EpochRecord>,
}

/// One supervised example: a pair of graphs, nodes removed from each, and the similarity target.
#[derive(Clone, Debug, PartialEq)]
pub struct Example {
    pub g1: usize,
    pub g2: usize,
    pub masked1: Vec<usize>,
    pub masked2: Vec<usize>,
    pub target: f64,
}

fn pair_examples(data: &Dataset, pairs: &[GedPair]) -> Result<Vec<Example>> {
    pairs
        .iter()
        .filter_map(|p| p.ged.map(|ged| (p, ged)))
        .map(|(p, ged)| {
            let (n1, n2) = (data.graphs[p.g1].node_count(), data.graphs[p.g2].node_count());
            Ok(Example { g1: p.g1, g2: p.g2, masked1: vec![], masked2: vec![], target: ged_to_similarity(ged, n1, n2)? })
        })
        .collect()
}

struct Trainer<'a> {
    prepared: Vec<PreparedGraph>,
    config: &'a TrainConfig,
    rng: ChaCha8Rng,
    optimizer: Adam,
    /// Parameters to pull toward, with strength `lambda` on `lambda |theta - anchor|^2`.
    anchor: Option<(GennModel, f64)>,
}

impl<'a> Trainer<'a> {
    fn new(model: &GennModel, data: &Dataset, config: &'a TrainConfig, seed_offset: u64) -> Self {
        Self {
            prepared: data.graphs.iter().map(|g| PreparedGraph::new(model, g)).collect(),
            config,
            rng: ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(seed_offset)),
            optimizer: Adam::new(model),
            anchor: None,
        }
    }

    fn mse(&self, model: &GennModel, examples: &[Example]) -> Result<f64> {
        let mut total = 0.0;
        for e in examples {
            let s = predict(model, &self.prepared[e.g1], &self.prepared[e.g2], &e.masked1, &e.masked2)?;
            total += (s - e.target).powi(2);
        }
        Ok(if examples.is_empty() { 0.0 } else { total / examples.len() as f64 })
    }

    fn epoch(&mut self, model: &mut GennModel, examples: &mut [Example]) -> Result<()> {
        examples.shuffle(&mut self.rng);
        for batch in examples.chunks(self.config.batch_size) {
            let mut grads = model.zeros_like();
            let weight = 1.0 / batch.len() as f64;
            for e in batch {
                accumulate_gradients(
                    model,
                    &self.prepared[e.g1],
                    &self.prepared[e.g2],
                    &e.masked1,
                    &e.masked2,
                    e.target,
                    weight,
                    &mut grads,
                )?;
            }
            if let Some((anchor, lambda)) = &self.anchor {
                for ((g, p), a) in grads.tensors_mut().into_iter().zip(model.tensors()).zip(anchor.tensors()) {
                    for ((g, p), a) in g.iter_mut().zip(p.iter()).zip(a.iter()) {
                        *g += 2.0 * lambda * (p - a);
                    }
                }
            }
            self.optimizer.step(model, &grads, self.config);
        }
        Ok(())
    }
}

/// Stage 1: minibatch regression onto `exp(-2 ged / (n1 + n2))`.
///
/// Returns the parameters with the lowest validation mse (training mse when
/// there are no validation pairs). Epoch 0 of the curve is the untrained model.
pub fn train_regression(model: &GennModel, data: &Dataset, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let mut train = pair_examples(data, &data.train_pairs)?;
    if train.is_empty() {
        return Err(GedError::InvalidArgument("no labeled training pairs".into()));
    }
    let validation = pair_examples(data, &data.validation_pairs)?;
    let mut model = model.clone();
    let mut trainer = Trainer::new(&model, data, config, 0);

    // evaluation order must not depend on the shuffle state
    let train_eval = train.clone();
    let score = |t: &Trainer, m: &GennModel| -> Result<(f64, Option<f64>)> {
        let tr = t.mse(m, &train_eval)?;
        let va = if validation.is_empty() { None } else { Some(t.mse(m, &validation)?) };
        Ok((tr, va))
    };
    let (tr, va) = score(&trainer, &model)?;
    let mut curve = vec![EpochRecord { stage: "regression".into(), epoch: 0, train_mse: tr, validation_mse: va }];
    let mut best = (va.unwrap_or(tr), model.clone());
    let mut stale = 0;
    for epoch in 1..=config.max_epochs {
        trainer.epoch(&mut model, &mut train)?;
        let (tr, va) = score(&trainer, &model)?;
        curve.push(EpochRecord { stage: "regression".into(), epoch, train_mse: tr, validation_mse: va });
        info!("regression epoch {epoch}: train mse {tr:.6}, validation mse {va:?}");
        let monitored = va.unwrap_or(tr);
        if monitored < best.0 {
            best = (monitored, model.clone());
            stale = 0;
        } else {
            stale += 1;
            if stale >= config.patience {
                break;
            }
        }
    }
    Ok(TrainReport { model: best.1, curve })
}

/// Partial labels of exactly solved pairs, ready for finetuning.
#[derive(Clone, Debug)]
pub struct FinetuneSet {
    pub pairs: Vec<(GedPair, Vec<PartialPathLabel>)>,
    pub skipped: usize,
}

/// Samples up to `finetune_pair_count` labeled training pairs, solves each
/// exactly and expands the optimal path into partial labels.
pub fn build_finetune_set(data: &Dataset, config: &TrainConfig) -> Result<FinetuneSet> {
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(1));
    let mut candidates: Vec<&GedPair> = data.train_pairs.iter().filter(|p| p.ged.is_some()).collect();
    candidates.shuffle(&mut rng);
    candidates.truncate(config.finetune_pair_count);

    let mut pairs = Vec::new();
    let mut skipped = 0;
    for (pair_id, p) in candidates.into_iter().enumerate() {
        let (g1, g2) = (&data.graphs[p.g1], &data.graphs[p.g2]);
        let limits = SearchLimits::with_max_states(config.exact_max_states);
        match astar_solve(g1, g2, &data.cost, &HungarianHeuristic, &limits) {
            Ok(out) => {
                let labels = generate_partial_labels(pair_id, g1, g2, &data.cost, &out.path, out.ged, config.subset_limit)?;
                pairs.push((p.clone(), labels));
            }
            Err(GedError::BudgetExhausted { .. }) => {
                warn!("finetune pair ({}, {}) exceeded the exact-solve budget; skipped", p.g1, p.g2);
                skipped += 1;
            }
            Err(e) => return Err(e),
        }
    }
    Ok(FinetuneSet { pairs, skipped })
}

/// Stage 2: regression of masked predictions onto the partial-path labels.
///
/// Labels with a fully edited side carry no network input and are skipped.
pub fn finetune_with_paths(model: &GennModel, data: &Dataset, set: &FinetuneSet, config: &TrainConfig) -> Result<TrainReport> {
    config.validate()?;
    let config = &TrainConfig { learning_rate: config.finetune_learning_rate, ..config.clone() };
    let mut model = model.clone();
    let mut trainer = Trainer::new(&model, data, config, 2);
    if config.finetune_anchor > 0.0 {
        trainer.anchor = Some((model.clone(), config.finetune_anchor));
    }
    let usable: Vec<Vec<Example>> = set
        .pairs
        .iter()
        .map(|(p, labels)| {
            labels
                .iter()
                .filter(|l| l.open1 > 0 && l.open2 > 0)
                .map(|l| Example {
                    g1: p.g1,
                    g2: p.g2,
                    masked1: l.masked1.clone(),
                    masked2: l.masked2.clone(),
                    target: l.s_opt,
                })
                .collect()
        })
        .collect();
    let validation = pair_examples(data, &data.validation_pairs)?;
    let regression = if config.finetune_with_regression { pair_examples(data, &data.train_pairs)? } else { Vec::new() };

    let mut curve = Vec::new();
    for epoch in 1..=config.finetune_epochs {
        let mut examples = regression.clone();
        for pool in &usable {
            let mut pool = pool.clone();
            pool.shuffle(&mut trainer.rng);
            pool.truncate(config.finetune_labels_per_pair);
            examples.extend(pool);
        }
        if examples.is_empty() {
            break;
        }
        trainer.epoch(&mut model, &mut examples)?;
        let tr = trainer.mse(&model, &examples)?;
        let va = if validation.is_empty() { None } else { Some(trainer.mse(&model, &validation)?) };
        info!("finetune epoch {epoch}: partial-label mse {tr:.6}, validation mse {va:?}");
        curve.push(EpochRecord { stage: "finetune".into(), epoch, train_mse: tr, validation_mse: va });
    }
    Ok(TrainReport { model, curve })
}

/// Regression mse of `model` on labeled pairs (similarity space).
pub fn pair_mse(model: &GennModel, data: &Dataset, pairs: &[GedPair]) -> Result<f64> {
    let config = TrainConfig::default();
    let trainer = Trainer::new(model, data, &config, 0);
    trainer.mse(model, &pair_examples(data, pairs)?)
}

/// Writes the loss curve as CSV.
pub fn write_curve_csv(curve: &[EpochRecord], path: impl AsRef<std::path::Path>) -> Result<()> {
    let mut w = csv::Writer::from_path(path).map_err(|e| GedError::Io(e.into()))?;
    for r in curve {
        w.serialize(r).map_err(|e| GedError::Io(e.into()))?;
    }
    w.flush()?;
    Ok(())
}
