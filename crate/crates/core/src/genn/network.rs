//! Forward pass of the similarity network: features, graph convolutions,
//! attention pooling and the tensor-network scoring head.
//!
//! The `*_traced` variants keep the intermediate activations needed by the
//! backward pass in `training::grad`.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};

use super::model::{FeatureConfig, GennModel, ATTENTION_SCALE, NTN_SLICES};
use crate::error::{GedError, Result};
use crate::graph::Graph;

#[inline]
pub(crate) fn sigmoid(x: f64) -> f64 {
    if x >= 0.0 {
        1.0 / (1.0 + (-x).exp())
    } else {
        let e = x.exp();
        e / (1.0 + e)
    }
}

/// Feature row of one node: one-hot clipped degree, then one-hot label.
pub(crate) fn write_feature_row(
    mut row: ndarray::ArrayViewMut1<f64>,
    degree: usize,
    label: Option<&str>,
    config: &FeatureConfig,
) {
    row.fill(0.0);
    row[degree.min(config.max_degree)] = 1.0;
    if config.labeled {
        let base = config.max_degree + 1;
        let slot = label
            .and_then(|l| config.vocab.iter().position(|v| v == l))
            .unwrap_or(config.vocab.len());
        row[base + slot] = 1.0;
    }
}

/// `n x F0` input features.
pub fn init_features(g: &Graph, config: &FeatureConfig) -> Array2<f64> {
    let mut x = Array2::zeros((g.node_count(), config.width()));
    for (i, row) in x.axis_iter_mut(Axis(0)).enumerate() {
        write_feature_row(row, g.degree(i), g.label(i), config);
    }
    x
}

/// Weighted degree plus the unit self-loop.
pub(crate) fn loop_degrees(g: &Graph) -> Vec<f64> {
    (0..g.node_count())
        .map(|i| 1.0 + g.neighbors(i).iter().map(|&j| g.weight(i, j).unwrap_or_default()).sum::<f64>())
        .collect()
}

/// `D^-1/2 (A + I) D^-1/2` with `A` the weighted adjacency.
pub fn normalized_adjacency(g: &Graph) -> Array2<f64> {
    let n = g.node_count();
    let degree = loop_degrees(g);
    let mut a = Array2::zeros((n, n));
    for i in 0..n {
        a[[i, i]] = 1.0 / degree[i];
        for &j in g.neighbors(i) {
            a[[i, j]] = g.weight(i, j).unwrap_or_default() / (degree[i] * degree[j]).sqrt();
        }
    }
    a
}

/// Activations of one convolution pass.
#[derive(Clone, Debug)]
pub struct GcnTrace {
    pub adjacency: Array2<f64>,
    pub features: Array2<f64>,
    /// `A X_l` for each layer input.
    pub aggregated: [Array2<f64>; 3],
    /// `A X_l W_l` before the activation.
    pub pre_activation: [Array2<f64>; 3],
}

impl GcnTrace {
    /// Output of the last layer (no activation).
    pub fn embeddings(&self) -> &Array2<f64> {
        &self.pre_activation[2]
    }
}

pub fn gcn_forward_traced(model: &GennModel, g: &Graph, features: &Array2<f64>) -> GcnTrace {
    let adjacency = normalized_adjacency(g);
    let agg0 = adjacency.dot(features);
    let pre0 = agg0.dot(&model.conv[0]);
    let agg1 = adjacency.dot(&pre0.mapv(|v| v.max(0.0)));
    let pre1 = agg1.dot(&model.conv[1]);
    let agg2 = adjacency.dot(&pre1.mapv(|v| v.max(0.0)));
    let pre2 = agg2.dot(&model.conv[2]);
    GcnTrace {
        adjacency,
        features: features.clone(),
        aggregated: [agg0, agg1, agg2],
        pre_activation: [pre0, pre1, pre2],
    }
}

/// Three GCN layers, ReLU after the first two; returns `n x 16` node embeddings.
pub fn gcn_forward(model: &GennModel, g: &Graph, features: &Array2<f64>) -> Array2<f64> {
    let adjacency = normalized_adjacency(g);
    let mut x = features.clone();
    for (l, w) in model.conv.iter().enumerate() {
        x = adjacency.dot(&x).dot(w);
        if l < 2 {
            x.mapv_inplace(|v| v.max(0.0));
        }
    }
    x
}

/// Intermediates of attention pooling over `n` rows.
#[derive(Clone, Debug)]
pub struct PoolTrace {
    pub mean: Array1<f64>,
    pub key: Array1<f64>,
    pub coefficients: Array1<f64>,
    pub pooled: Array1<f64>,
}

pub fn attention_pool_traced(model: &GennModel, x: ArrayView2<f64>) -> Result<PoolTrace> {
    if x.nrows() == 0 {
        return Err(GedError::EmptyGraph);
    }
    let mean = x.mean_axis(Axis(0)).expect("nonempty");
    let key = mean.dot(&model.attention).mapv(f64::tanh);
    let coefficients = x.dot(&key).mapv(|a| sigmoid(a * ATTENTION_SCALE));
    let pooled = coefficients.dot(&x);
    Ok(PoolTrace { mean, key, coefficients, pooled })
}

/// Graph-level embedding: attention-weighted sum of node embeddings.
pub fn attention_pool(model: &GennModel, x: ArrayView2<f64>) -> Result<Array1<f64>> {
    attention_pool_traced(model, x).map(|t| t.pooled)
}

#[derive(Clone, Debug)]
pub struct NtnTrace {
    /// Pre-output activations `g1 W[i] g2^T + W3 cat(g1, g2) + b`.
    pub hidden: Array1<f64>,
    pub score: f64,
}

pub fn ntn_score_traced(model: &GennModel, g1: ArrayView1<f64>, g2: ArrayView1<f64>) -> NtnTrace {
    let f = g1.len();
    let mut hidden = model.ntn_bias.clone();
    for i in 0..NTN_SLICES {
        let slice = model.ntn_bilinear.slice(s![i, .., ..]);
        hidden[i] += g1.dot(&slice.dot(&g2));
        hidden[i] += model.ntn_linear.slice(s![i, ..f]).dot(&g1) + model.ntn_linear.slice(s![i, f..]).dot(&g2);
    }
    let score = sigmoid(hidden.dot(&model.out_weight) + model.out_bias);
    NtnTrace { hidden, score }
}

/// Similarity in `(0, 1)` of two graph-level embeddings. Not symmetric in general.
pub fn ntn_score(model: &GennModel, g1: ArrayView1<f64>, g2: ArrayView1<f64>) -> f64 {
    ntn_score_traced(model, g1, g2).score
}

/// Pool both embedding matrices and score them.
pub fn score_embeddings(model: &GennModel, x1: ArrayView2<f64>, x2: ArrayView2<f64>) -> Result<f64> {
    let p1 = attention_pool(model, x1)?;
    let p2 = attention_pool(model, x2)?;
    Ok(ntn_score(model, p1.view(), p2.view()))
}

/// Normalized similarity `exp(-2 ged / (n1 + n2))`.
pub fn ged_to_similarity(ged: f64, n1: usize, n2: usize) -> Result<f64> {
    if n1 + n2 == 0 {
        return Err(GedError::Domain("similarity undefined for two empty graphs".into()));
    }
    if !(ged >= 0.0) {
        return Err(GedError::Domain(format!("negative or NaN ged {ged}")));
    }
    Ok((-ged * 2.0 / (n1 + n2) as f64).exp())
}

/// Inverse of [`ged_to_similarity`]: `-0.5 (n1 + n2) ln s`.
pub fn similarity_to_h(s: f64, n1: usize, n2: usize) -> Result<f64> {
    if !(s > 0.0 && s <= 1.0) {
        return Err(GedError::Domain(format!("similarity {s} outside (0, 1]")));
    }
    Ok(-0.5 * (n1 + n2) as f64 * s.ln())
}

pub const SIMILARITY_FLOOR: f64 = 1e-7;

/// Keeps the logarithm in the heuristic finite and the result strictly positive.
pub fn clamp_similarity(s: f64) -> f64 {
    s.clamp(SIMILARITY_FLOOR, 1.0 - SIMILARITY_FLOOR)
}
