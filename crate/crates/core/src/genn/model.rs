use std::path::Path;

use ndarray::{Array1, Array2, Array3};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{GedError, Result};

/// Channel widths of the three convolution layers.
pub const CONV_CHANNELS: [usize; 3] = [64, 32, 16];
/// Width of the final node embeddings.
pub const EMBED_DIM: usize = 16;
/// Number of bilinear slices in the tensor network.
pub const NTN_SLICES: usize = 16;
/// Sharpness of the attention coefficients.
pub const ATTENTION_SCALE: f64 = 10.0;

const FORMAT_VERSION: u32 = 1;

/// How node features are built: clipped one-hot degree, optionally followed
/// by a one-hot label block with a trailing "unknown" slot.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeatureConfig {
    pub max_degree: usize,
    pub labeled: bool,
    pub vocab: Vec<String>,
}

impl FeatureConfig {
    pub fn unlabeled() -> Self {
        Self { max_degree: 10, labeled: false, vocab: Vec::new() }
    }

    pub fn labeled(vocab: Vec<String>) -> Self {
        Self { max_degree: 10, labeled: true, vocab }
    }

    pub fn width(&self) -> usize {
        let degree = self.max_degree + 1;
        if self.labeled {
            degree + self.vocab.len() + 1
        } else {
            degree
        }
    }
}

/// Every learnable parameter of the similarity network.
///
/// The same struct doubles as a gradient container (see [`GennModel::zeros_like`]).
#[derive(Clone, Debug, PartialEq)]
pub struct GennModel {
    pub feature_config: FeatureConfig,
    /// `F0 x 64`, `64 x 32`, `32 x 16`.
    pub conv: [Array2<f64>; 3],
    /// Attention key transform, `16 x 16`, shared by both graphs.
    pub attention: Array2<f64>,
    /// Bilinear slices, `t x 16 x 16`; slice `i` scores `g1 W[i] g2^T`.
    pub ntn_bilinear: Array3<f64>,
    /// `t x 32`, applied to `cat(g1, g2)`.
    pub ntn_linear: Array2<f64>,
    pub ntn_bias: Array1<f64>,
    /// Output layer `t -> 1`.
    pub out_weight: Array1<f64>,
    pub out_bias: f64,
}

#[derive(Serialize, Deserialize)]
struct TensorJson {
    shape: [usize; 2],
    data: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct CheckpointJson {
    format_version: u32,
    feature_config: FeatureConfig,
    layers: Vec<TensorJson>,
}

fn glorot(rng: &mut ChaCha8Rng, rows: usize, cols: usize, fan_in: usize, fan_out: usize) -> Array2<f64> {
    let limit = (6.0 / (fan_in + fan_out) as f64).sqrt();
    Array2::from_shape_fn((rows, cols), |_| rng.gen_range(-limit..limit))
}

impl GennModel {
    /// Glorot-uniform initialization, deterministic under `seed`.
    pub fn new(feature_config: FeatureConfig, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let f0 = feature_config.width();
        let [c1, c2, c3] = CONV_CHANNELS;
        let conv = [
            glorot(&mut rng, f0, c1, f0, c1),
            glorot(&mut rng, c1, c2, c1, c2),
            glorot(&mut rng, c2, c3, c2, c3),
        ];
        let attention = glorot(&mut rng, EMBED_DIM, EMBED_DIM, EMBED_DIM, EMBED_DIM);
        let bilinear = glorot(&mut rng, NTN_SLICES * EMBED_DIM, EMBED_DIM, EMBED_DIM * EMBED_DIM, NTN_SLICES);
        let ntn_bilinear = bilinear
            .into_shape_with_order((NTN_SLICES, EMBED_DIM, EMBED_DIM))
            .expect("bilinear tensor shape");
        let ntn_linear = glorot(&mut rng, NTN_SLICES, 2 * EMBED_DIM, 2 * EMBED_DIM, NTN_SLICES);
        let out_weight = glorot(&mut rng, NTN_SLICES, 1, NTN_SLICES, 1).column(0).to_owned();
        Self {
            feature_config,
            conv,
            attention,
            ntn_bilinear,
            ntn_linear,
            ntn_bias: Array1::zeros(NTN_SLICES),
            out_weight,
            out_bias: 0.0,
        }
    }

    /// Same shapes, every parameter zero.
    pub fn zeros_like(&self) -> Self {
        let mut z = self.clone();
        for t in z.tensors_mut() {
            t.fill(0.0);
        }
        z
    }

    /// Parameter tensors as flat slices, in checkpoint order: conv 0..3,
    /// attention, bilinear (`t*16 x 16`), linear, bias (`1 x t`),
    /// output weight (`t x 1`), output bias (`1 x 1`).
    pub fn tensors(&self) -> Vec<&[f64]> {
        vec![
            self.conv[0].as_slice().expect("standard layout"),
            self.conv[1].as_slice().expect("standard layout"),
            self.conv[2].as_slice().expect("standard layout"),
            self.attention.as_slice().expect("standard layout"),
            self.ntn_bilinear.as_slice().expect("standard layout"),
            self.ntn_linear.as_slice().expect("standard layout"),
            self.ntn_bias.as_slice().expect("standard layout"),
            self.out_weight.as_slice().expect("standard layout"),
            std::slice::from_ref(&self.out_bias),
        ]
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut [f64]> {
        let [c0, c1, c2] = &mut self.conv;
        vec![
            c0.as_slice_mut().expect("standard layout"),
            c1.as_slice_mut().expect("standard layout"),
            c2.as_slice_mut().expect("standard layout"),
            self.attention.as_slice_mut().expect("standard layout"),
            self.ntn_bilinear.as_slice_mut().expect("standard layout"),
            self.ntn_linear.as_slice_mut().expect("standard layout"),
            self.ntn_bias.as_slice_mut().expect("standard layout"),
            self.out_weight.as_slice_mut().expect("standard layout"),
            std::slice::from_mut(&mut self.out_bias),
        ]
    }

    pub fn tensor_names() -> [&'static str; 9] {
        [
            "conv0",
            "conv1",
            "conv2",
            "attention",
            "ntn_bilinear",
            "ntn_linear",
            "ntn_bias",
            "out_weight",
            "out_bias",
        ]
    }

    fn tensor_shapes(&self) -> [[usize; 2]; 9] {
        let f0 = self.feature_config.width();
        [
            [f0, CONV_CHANNELS[0]],
            [CONV_CHANNELS[0], CONV_CHANNELS[1]],
            [CONV_CHANNELS[1], CONV_CHANNELS[2]],
            [EMBED_DIM, EMBED_DIM],
            [NTN_SLICES * EMBED_DIM, EMBED_DIM],
            [NTN_SLICES, 2 * EMBED_DIM],
            [1, NTN_SLICES],
            [NTN_SLICES, 1],
            [1, 1],
        ]
    }

    pub fn parameter_count(&self) -> usize {
        self.tensors().iter().map(|t| t.len()).sum()
    }

    pub fn is_finite(&self) -> bool {
        self.tensors().iter().all(|t| t.iter().all(|x| x.is_finite()))
    }

    pub fn to_checkpoint_json(&self) -> String {
        let layers = self
            .tensors()
            .into_iter()
            .zip(self.tensor_shapes())
            .map(|(data, shape)| TensorJson { shape, data: data.to_vec() })
            .collect();
        let ckpt = CheckpointJson {
            format_version: FORMAT_VERSION,
            feature_config: self.feature_config.clone(),
            layers,
        };
        serde_json::to_string(&ckpt).expect("checkpoint serialization cannot fail")
    }

    pub fn from_checkpoint_json(text: &str) -> Result<Self> {
        let ckpt: CheckpointJson = serde_json::from_str(text)?;
        if ckpt.format_version != FORMAT_VERSION {
            return Err(GedError::Checkpoint(format!(
                "unsupported format_version {} (expected {FORMAT_VERSION})",
                ckpt.format_version
            )));
        }
        let mut model = Self::new(ckpt.feature_config, 0);
        let shapes = model.tensor_shapes();
        if ckpt.layers.len() != shapes.len() {
            return Err(GedError::Checkpoint(format!(
                "expected {} layers, found {}",
                shapes.len(),
                ckpt.layers.len()
            )));
        }
        for (((slot, layer), shape), name) in model
            .tensors_mut()
            .into_iter()
            .zip(&ckpt.layers)
            .zip(shapes)
            .zip(Self::tensor_names())
        {
            if layer.shape != shape || layer.data.len() != shape[0] * shape[1] {
                return Err(GedError::Checkpoint(format!(
                    "layer {name}: expected shape {shape:?}, found {:?} with {} values",
                    layer.shape,
                    layer.data.len()
                )));
            }
            slot.copy_from_slice(&layer.data);
        }
        if !model.is_finite() {
            return Err(GedError::Checkpoint("non-finite parameter".into()));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        std::fs::write(path, self.to_checkpoint_json())?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_checkpoint_json(&std::fs::read_to_string(path)?)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn architecture_shapes() {
        let m = GennModel::new(FeatureConfig::labeled(vec!["C".into(), "N".into(), "O".into()]), 1);
        assert_eq!(m.feature_config.width(), 11 + 3 + 1);
        assert_eq!(m.conv[0].dim(), (15, 64));
        assert_eq!(m.conv[1].dim(), (64, 32));
        assert_eq!(m.conv[2].dim(), (32, 16));
        assert_eq!(m.attention.dim(), (16, 16));
        assert_eq!(m.ntn_bilinear.dim(), (16, 16, 16));
        assert_eq!(m.ntn_linear.dim(), (16, 32));
        assert_eq!(m.ntn_bias.len(), 16);
        assert_eq!(m.out_weight.len(), 16);
        assert!(m.is_finite());
    }

    #[test]
    fn seeded_init_is_deterministic() {
        let a = GennModel::new(FeatureConfig::unlabeled(), 5);
        let b = GennModel::new(FeatureConfig::unlabeled(), 5);
        let c = GennModel::new(FeatureConfig::unlabeled(), 6);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }

    #[test]
    fn checkpoint_round_trip() {
        let mut m = GennModel::new(FeatureConfig::labeled(vec!["A".into()]), 3);
        m.out_bias = 0.25;
        let text = m.to_checkpoint_json();
        let back = GennModel::from_checkpoint_json(&text).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_checkpoint_json(), text);
    }

    #[test]
    fn checkpoint_rejects_bad_input() {
        let m = GennModel::new(FeatureConfig::unlabeled(), 3);
        let text = m.to_checkpoint_json().replace("\"format_version\":1", "\"format_version\":2");
        assert!(matches!(GennModel::from_checkpoint_json(&text), Err(GedError::Checkpoint(_))));
        let mut v: serde_json::Value = serde_json::from_str(&m.to_checkpoint_json()).unwrap();
        v["layers"][3]["shape"] = serde_json::json!([8, 32]);
        assert!(GennModel::from_checkpoint_json(&v.to_string()).is_err());
        assert!(GennModel::from_checkpoint_json("{").is_err());
    }

    #[test]
    fn zeros_like_keeps_shapes() {
        let m = GennModel::new(FeatureConfig::unlabeled(), 3);
        let z = m.zeros_like();
        assert_eq!(z.parameter_count(), m.parameter_count());
        assert!(z.tensors().iter().all(|t| t.iter().all(|&x| x == 0.0)));
    }
}
