//! Reverse-mode gradients of the squared similarity error, derived by hand.

use ndarray::{s, Array1, Array2, ArrayView1, Axis};

use crate::genn::model::{GennModel, ATTENTION_SCALE, NTN_SLICES};
use crate::genn::network::{attention_pool_traced, init_features, normalized_adjacency, ntn_score_traced, PoolTrace};
use crate::error::Result;
use crate::graph::Graph;

/// Input-side tensors of one graph that do not depend on the parameters.
#[derive(Clone, Debug)]
pub struct PreparedGraph {
    pub adjacency: Array2<f64>,
    pub features: Array2<f64>,
}

impl PreparedGraph {
    pub fn new(model: &GennModel, g: &Graph) -> Self {
        Self { adjacency: normalized_adjacency(g), features: init_features(g, &model.feature_config) }
    }

    pub fn node_count(&self) -> usize {
        self.features.nrows()
    }
}

struct Tower {
    agg: [Array2<f64>; 3],
    pre: [Array2<f64>; 2],
    keep: Vec<usize>,
    rows: Array2<f64>,
    pool: PoolTrace,
}

fn tower_forward(model: &GennModel, g: &PreparedGraph, masked: &[usize]) -> Result<Tower> {
    let a = &g.adjacency;
    let agg0 = a.dot(&g.features);
    let pre0 = agg0.dot(&model.conv[0]);
    let agg1 = a.dot(&pre0.mapv(|v| v.max(0.0)));
    let pre1 = agg1.dot(&model.conv[1]);
    let agg2 = a.dot(&pre1.mapv(|v| v.max(0.0)));
    let out = agg2.dot(&model.conv[2]);

    let mut drop = vec![false; g.node_count()];
    for &m in masked {
        drop[m] = true;
    }
    let keep: Vec<usize> = (0..g.node_count()).filter(|&i| !drop[i]).collect();
    let rows = out.select(Axis(0), &keep);
    let pool = attention_pool_traced(model, rows.view())?;
    Ok(Tower { agg: [agg0, agg1, agg2], pre: [pre0, pre1], keep, rows, pool })
}

/// Predicted similarity with the masked rows removed after the last convolution.
pub fn predict(model: &GennModel, g1: &PreparedGraph, g2: &PreparedGraph, masked1: &[usize], masked2: &[usize]) -> Result<f64> {
    let t1 = tower_forward(model, g1, masked1)?;
    let t2 = tower_forward(model, g2, masked2)?;
    Ok(ntn_score_traced(model, t1.pool.pooled.view(), t2.pool.pooled.view()).score)
}

/// Adds `d loss / d theta` for `loss = weight * (s - target)^2` into `grads`
/// and returns the prediction `s`.
#[allow(clippy::too_many_arguments)]
pub fn accumulate_gradients(
    model: &GennModel,
    g1: &PreparedGraph,
    g2: &PreparedGraph,
    masked1: &[usize],
    masked2: &[usize],
    target: f64,
    weight: f64,
    grads: &mut GennModel,
) -> Result<f64> {
    let t1 = tower_forward(model, g1, masked1)?;
    let t2 = tower_forward(model, g2, masked2)?;
    let (p1, p2) = (&t1.pool.pooled, &t2.pool.pooled);
    let ntn = ntn_score_traced(model, p1.view(), p2.view());
    let s_pred = ntn.score;

    let ds = weight * 2.0 * (s_pred - target);
    let dz = ds * s_pred * (1.0 - s_pred);
    grads.out_bias += dz;
    grads.out_weight.scaled_add(dz, &ntn.hidden);
    let dhidden = &model.out_weight * dz;

    let f = p1.len();
    let mut dp1 = Array1::zeros(f);
    let mut dp2 = Array1::zeros(f);
    for i in 0..NTN_SLICES {
        let dh = dhidden[i];
        let slice = model.ntn_bilinear.slice(s![i, .., ..]);
        let outer = outer(p1.view(), p2.view());
        grads.ntn_bilinear.slice_mut(s![i, .., ..]).scaled_add(dh, &outer);
        grads.ntn_linear.slice_mut(s![i, ..f]).scaled_add(dh, p1);
        grads.ntn_linear.slice_mut(s![i, f..]).scaled_add(dh, p2);
        dp1.scaled_add(dh, &slice.dot(p2));
        dp1.scaled_add(dh, &model.ntn_linear.slice(s![i, ..f]));
        dp2.scaled_add(dh, &slice.t().dot(p1));
        dp2.scaled_add(dh, &model.ntn_linear.slice(s![i, f..]));
    }
    grads.ntn_bias += &dhidden;

    tower_backward(model, g1, &t1, &dp1, grads);
    tower_backward(model, g2, &t2, &dp2, grads);
    Ok(s_pred)
}

fn outer(a: ArrayView1<f64>, b: ArrayView1<f64>) -> Array2<f64> {
    Array2::from_shape_fn((a.len(), b.len()), |(i, j)| a[i] * b[j])
}

fn tower_backward(model: &GennModel, g: &PreparedGraph, t: &Tower, dpooled: &Array1<f64>, grads: &mut GennModel) {
    let PoolTrace { mean, key, coefficients, .. } = &t.pool;
    let n = t.rows.nrows();

    // pooled = sum_j c_j r_j with c_j = sigmoid(alpha r_j . key), key = tanh(mean W)
    let dc = t.rows.dot(dpooled);
    let da = Array1::from_shape_fn(n, |j| dc[j] * coefficients[j] * (1.0 - coefficients[j]) * ATTENTION_SCALE);
    let dkey = t.rows.t().dot(&da);
    let dpre = &dkey * &key.mapv(|k| 1.0 - k * k);
    grads.attention += &outer(mean.view(), dpre.view());
    let dmean = model.attention.dot(&dpre) / n as f64;

    let mut drows = Array2::zeros(t.rows.dim());
    for j in 0..n {
        let mut r = drows.row_mut(j);
        r.scaled_add(coefficients[j], dpooled);
        r.scaled_add(da[j], key);
        r += &dmean;
    }

    let mut dout = Array2::zeros((g.node_count(), drows.ncols()));
    for (j, &i) in t.keep.iter().enumerate() {
        dout.row_mut(i).assign(&drows.row(j));
    }

    // Adjacency is symmetric, so A^T = A.
    let a = &g.adjacency;
    grads.conv[2] += &t.agg[2].t().dot(&dout);
    let mut dz = a.dot(&dout.dot(&model.conv[2].t()));
    dz.zip_mut_with(&t.pre[1], |d, &z| {
        if z <= 0.0 {
            *d = 0.0
        }
    });
    grads.conv[1] += &t.agg[1].t().dot(&dz);
    let mut dz0 = a.dot(&dz.dot(&model.conv[1].t()));
    dz0.zip_mut_with(&t.pre[0], |d, &z| {
        if z <= 0.0 {
            *d = 0.0
        }
    });
    grads.conv[0] += &t.agg[0].t().dot(&dz0);
}

/// `lambda * sum(theta^2)`.
pub fn l2_penalty(model: &GennModel, lambda: f64) -> f64 {
    lambda * model.tensors().iter().flat_map(|t| t.iter()).map(|x| x * x).sum::<f64>()
}

/// Adds `2 lambda theta`, the gradient of [`l2_penalty`].
pub fn add_l2_gradient(model: &GennModel, lambda: f64, grads: &mut GennModel) {
    for (g, p) in grads.tensors_mut().into_iter().zip(model.tensors()) {
        for (gi, pi) in g.iter_mut().zip(p) {
            *gi += 2.0 * lambda * pi;
        }
    }
}
