//! The M5-style 1D-convolutional regressor: one scalar per node straight
//! from its waveform.
//!
//! Architecture: conv(first_kernel, first_stride) -> batchnorm -> relu ->
//! maxpool(pool), then three conv(later_kernel) stages of the same form,
//! global average pooling, and a single linear output. The classifier
//! head of the original sound-recognition network is replaced by that
//! linear layer, so the model maps `R^l -> R` for any number of nodes.
//!
//! Parameters are stored as 32-bit floats; all arithmetic runs in 64-bit
//! internally. Waveform inputs are down-converted to 32-bit at the model
//! boundary.

mod io;
pub mod loss;
mod net;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::auralize::WaveformMatrix;
use crate::centrality::CentralityVector;
use crate::error::{Error, Result};

pub use net::BatchStats;

/// Network shape. `first_kernel = 80` is the architecture's defining
/// setting (wide enough to cover common audible wavelengths); stage
/// widths are configurable for scaled-down runs.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct M5Config {
    pub input_length: usize,
    pub first_kernel: usize,
    pub first_stride: usize,
    pub stage_channels: [usize; 4],
    pub later_kernel: usize,
    pub pool: usize,
    pub output_dim: usize,
}

impl M5Config {
    /// The full-size layout: channels 128/128/256/512.
    pub fn full(input_length: usize) -> M5Config {
        M5Config {
            input_length,
            first_kernel: 80,
            first_stride: 4,
            stage_channels: [128, 128, 256, 512],
            later_kernel: 3,
            pool: 4,
            output_dim: 1,
        }
    }

    /// Reduced widths for desk-scale training runs.
    pub fn small(input_length: usize) -> M5Config {
        M5Config {
            stage_channels: [16, 16, 32, 32],
            ..M5Config::full(input_length)
        }
    }

    /// Minimal widths, used by gradient checks and smoke tests.
    pub fn tiny(input_length: usize) -> M5Config {
        M5Config {
            stage_channels: [4, 4, 8, 8],
            ..M5Config::full(input_length)
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.input_length == 0
            || self.first_kernel == 0
            || self.first_stride == 0
            || self.later_kernel == 0
            || self.pool == 0
            || self.stage_channels.iter().any(|&c| c == 0)
        {
            return Err(Error::InvalidParameter(
                "model config fields must all be positive".into(),
            ));
        }
        if self.output_dim != 1 {
            return Err(Error::InvalidParameter(
                "regression head has exactly one output".into(),
            ));
        }
        Ok(())
    }

    fn stage_kernel(&self, stage: usize) -> usize {
        if stage == 0 {
            self.first_kernel
        } else {
            self.later_kernel
        }
    }

    fn stage_stride(&self, stage: usize) -> usize {
        if stage == 0 {
            self.first_stride
        } else {
            1
        }
    }

    fn stage_in_channels(&self, stage: usize) -> usize {
        if stage == 0 {
            1
        } else {
            self.stage_channels[stage - 1]
        }
    }

    /// Tensor names and shapes, in serialization order.
    pub fn tensor_layout(&self) -> Vec<(String, Vec<usize>)> {
        let mut layout = Vec::new();
        for i in 0..4 {
            let out = self.stage_channels[i];
            layout.push((
                format!("conv{i}.weight"),
                vec![out, self.stage_in_channels(i), self.stage_kernel(i)],
            ));
            layout.push((format!("conv{i}.bias"), vec![out]));
            for stat in ["gamma", "beta", "running_mean", "running_var"] {
                layout.push((format!("bn{i}.{stat}"), vec![out]));
            }
        }
        layout.push(("fc.weight".into(), vec![1, self.stage_channels[3]]));
        layout.push(("fc.bias".into(), vec![1]));
        layout
    }
}

impl Default for M5Config {
    fn default() -> Self {
        M5Config::full(10_000)
    }
}

/// A named parameter tensor with 32-bit float payload.
#[derive(Debug, Clone, PartialEq)]
pub struct Tensor {
    pub name: String,
    pub shape: Vec<usize>,
    pub data: Vec<f32>,
}

impl Tensor {
    fn zeros(name: &str, shape: Vec<usize>) -> Tensor {
        let len = shape.iter().product();
        Tensor { name: name.into(), shape, data: vec![0.0; len] }
    }

    fn filled(name: &str, shape: Vec<usize>, value: f32) -> Tensor {
        let len = shape.iter().product();
        Tensor { name: name.into(), shape, data: vec![value; len] }
    }

    /// Running statistics are state, not trainable parameters.
    pub fn is_trainable(&self) -> bool {
        !self.name.contains("running_")
    }
}

/// Training provenance carried inside a checkpoint.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckpointMeta {
    pub measure: Option<String>,
    pub seed: u64,
    pub epochs_completed: usize,
    /// auralization momentum the model was trained with
    pub momentum: f64,
}

impl Default for CheckpointMeta {
    fn default() -> Self {
        CheckpointMeta {
            measure: None,
            seed: 0,
            epochs_completed: 0,
            momentum: crate::auralize::DEFAULT_MOMENTUM,
        }
    }
}

/// Model parameters plus architecture config and training metadata.
/// Round-trips through [`ModelCheckpoint::to_bytes`] bit-exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelCheckpoint {
    pub config: M5Config,
    pub meta: CheckpointMeta,
    tensors: Vec<Tensor>,
}

impl ModelCheckpoint {
    pub fn tensors(&self) -> &[Tensor] {
        &self.tensors
    }

    pub fn tensor(&self, name: &str) -> Option<&Tensor> {
        self.tensors.iter().find(|t| t.name == name)
    }

    /// Mutable access to the parameter tensors, e.g. for optimizers or
    /// finite-difference probes. Values may change; names and shapes must
    /// stay fixed.
    pub fn tensors_mut(&mut self) -> &mut [Tensor] {
        &mut self.tensors
    }

    fn from_parts(config: M5Config, meta: CheckpointMeta, tensors: Vec<Tensor>) -> Result<Self> {
        config.validate()?;
        let expected = config.tensor_layout();
        if tensors.len() != expected.len() {
            return Err(Error::InvalidParameter(format!(
                "expected {} tensors, got {}",
                expected.len(),
                tensors.len()
            )));
        }
        for (t, (name, shape)) in tensors.iter().zip(&expected) {
            if &t.name != name || &t.shape != shape {
                return Err(Error::ShapeMismatch {
                    name: t.name.clone(),
                    expected: shape.clone(),
                    found: t.shape.clone(),
                });
            }
            if t.data.len() != shape.iter().product::<usize>() {
                return Err(Error::ShapeMismatch {
                    name: t.name.clone(),
                    expected: shape.clone(),
                    found: vec![t.data.len()],
                });
            }
        }
        Ok(ModelCheckpoint { config, meta, tensors })
    }
}

/// Deterministic initialization: fan-in scaled uniform weights, zero
/// biases, identity normalization statistics.
pub fn m5_init(config: M5Config, seed: u64) -> Result<ModelCheckpoint> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut tensors = Vec::new();
    for i in 0..4 {
        let out = config.stage_channels[i];
        let fan_in = config.stage_in_channels(i) * config.stage_kernel(i);
        let bound = 1.0 / (fan_in as f64).sqrt();
        let shape = vec![out, config.stage_in_channels(i), config.stage_kernel(i)];
        let data: Vec<f32> = (0..shape.iter().product::<usize>())
            .map(|_| rng.gen_range(-bound..bound) as f32)
            .collect();
        tensors.push(Tensor { name: format!("conv{i}.weight"), shape, data });
        tensors.push(Tensor::zeros(&format!("conv{i}.bias"), vec![out]));
        tensors.push(Tensor::filled(&format!("bn{i}.gamma"), vec![out], 1.0));
        tensors.push(Tensor::zeros(&format!("bn{i}.beta"), vec![out]));
        tensors.push(Tensor::zeros(&format!("bn{i}.running_mean"), vec![out]));
        tensors.push(Tensor::filled(&format!("bn{i}.running_var"), vec![out], 1.0));
    }
    let c_last = config.stage_channels[3];
    let bound = 1.0 / (c_last as f64).sqrt();
    let data: Vec<f32> = (0..c_last).map(|_| rng.gen_range(-bound..bound) as f32).collect();
    tensors.push(Tensor { name: "fc.weight".into(), shape: vec![1, c_last], data });
    tensors.push(Tensor::zeros("fc.bias", vec![1]));
    ModelCheckpoint::from_parts(config, CheckpointMeta { seed, ..Default::default() }, tensors)
}

/// Per-tensor gradients, aligned with [`ModelCheckpoint::tensors`];
/// non-trainable entries are empty.
#[derive(Debug, Clone)]
pub struct Gradients(pub Vec<Vec<f64>>);

/// Forward + loss + full backward pass in training mode (batch statistics
/// over the graph's node set).
pub struct BackwardResult {
    pub loss: f64,
    pub outputs: Vec<f64>,
    pub gradients: Gradients,
    /// batch statistics of each normalization layer, for running-stat
    /// updates
    pub batch_stats: Vec<BatchStats>,
}

/// Evaluation-mode prediction: every node's column is processed
/// independently using running normalization statistics. The node count
/// is arbitrary, so a checkpoint trained on small graphs applies to much
/// larger ones unchanged.
pub fn m5_forward(ckpt: &ModelCheckpoint, waves: &WaveformMatrix) -> Result<CentralityVector> {
    net::forward_eval(ckpt, waves).map(CentralityVector::predicted)
}

/// Training-mode forward returning per-node outputs (batch statistics are
/// computed over all columns of `waves`, without touching the checkpoint).
pub fn m5_forward_train(ckpt: &ModelCheckpoint, waves: &WaveformMatrix) -> Result<Vec<f64>> {
    let (outputs, _, _) = net::forward_train(ckpt, waves)?;
    Ok(outputs)
}

/// Gradient of `1 - pearson(target, M5(waves))` with respect to every
/// trainable parameter, by backpropagation through the training-mode
/// forward pass.
pub fn backward(
    ckpt: &ModelCheckpoint,
    waves: &WaveformMatrix,
    target: &[f64],
) -> Result<BackwardResult> {
    net::backward(ckpt, waves, target)
}

/// Folds freshly observed batch statistics into the checkpoint's running
/// statistics (momentum 0.1, the conventional update).
pub fn commit_batch_stats(ckpt: &mut ModelCheckpoint, stats: &[BatchStats]) {
    net::commit_batch_stats(ckpt, stats);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::auralize::auralize;
    use crate::graph::gen_er;

    #[test]
    fn init_is_deterministic() {
        let cfg = M5Config::tiny(400);
        let a = m5_init(cfg, 7).unwrap();
        let b = m5_init(cfg, 7).unwrap();
        assert_eq!(a, b);
        let c = m5_init(cfg, 8).unwrap();
        assert_ne!(a, c);
    }

    #[test]
    fn init_first_conv_shape_matches_paper_default() {
        let ckpt = m5_init(M5Config::default(), 0).unwrap();
        let w = ckpt.tensor("conv0.weight").unwrap();
        assert_eq!(w.shape, vec![128, 1, 80]);
    }

    #[test]
    fn config_rejects_bad_values() {
        let mut cfg = M5Config::tiny(400);
        cfg.output_dim = 10;
        assert!(cfg.validate().is_err());
        let mut cfg = M5Config::tiny(400);
        cfg.pool = 0;
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn forward_rejects_wrong_input_length() {
        let ckpt = m5_init(M5Config::tiny(400), 0).unwrap();
        let g = gen_er(6, 0.5, 1).unwrap();
        let w = auralize(&g, 0.9, 200).unwrap();
        assert!(m5_forward(&ckpt, &w).is_err());
    }

    #[test]
    fn zero_input_outputs_final_bias() {
        let ckpt = m5_init(M5Config::tiny(400), 3).unwrap();
        let zeros = WaveformMatrix::from_rows(400, 5, vec![0.0; 400 * 5]).unwrap();
        let bias = ckpt.tensor("fc.bias").unwrap().data[0] as f64;
        let eval = m5_forward(&ckpt, &zeros).unwrap();
        assert!(eval.values.iter().all(|&y| (y - bias).abs() < 1e-12));
        let train = m5_forward_train(&ckpt, &zeros).unwrap();
        assert!(train.iter().all(|&y| (y - bias).abs() < 1e-12));
    }

    #[test]
    fn duplicate_columns_give_duplicate_outputs() {
        let ckpt = m5_init(M5Config::tiny(400), 5).unwrap();
        let g = gen_er(4, 0.6, 2).unwrap();
        let w = auralize(&g, 0.9, 400).unwrap();
        // duplicate node 0's column as an extra node
        let mut data = Vec::new();
        for t in 0..400 {
            let mut row = w.row(t).to_vec();
            row.push(w.get(t, 0));
            data.extend(row);
        }
        let w2 = WaveformMatrix::from_rows(400, 5, data).unwrap();
        let out = m5_forward(&ckpt, &w2).unwrap().values;
        assert_eq!(out[0], out[4]);
    }

    #[test]
    fn forward_is_node_count_agnostic() {
        let ckpt = m5_init(M5Config::tiny(400), 5).unwrap();
        for n in [4, 40] {
            let g = gen_er(n, 0.3, 2).unwrap();
            let w = auralize(&g, 0.9, 400).unwrap();
            let out = m5_forward(&ckpt, &w).unwrap();
            assert_eq!(out.values.len(), n);
            assert!(out.values.iter().all(|y| y.is_finite()));
        }
    }

    #[test]
    fn forward_is_column_permutation_equivariant() {
        let ckpt = m5_init(M5Config::tiny(400), 9).unwrap();
        let g = gen_er(6, 0.5, 4).unwrap();
        let w = auralize(&g, 0.9, 400).unwrap();
        let perm = [3usize, 0, 4, 1, 5, 2];
        let mut data = Vec::new();
        for t in 0..400 {
            for &src in &perm {
                data.push(w.get(t, src));
            }
        }
        let wp = WaveformMatrix::from_rows(400, 6, data).unwrap();
        let base = m5_forward(&ckpt, &w).unwrap().values;
        let permuted = m5_forward(&ckpt, &wp).unwrap().values;
        for (i, &src) in perm.iter().enumerate() {
            assert_eq!(permuted[i], base[src]);
        }
        // train mode shares batch statistics across the whole set, which
        // are permutation invariant
        let base_t = m5_forward_train(&ckpt, &w).unwrap();
        let perm_t = m5_forward_train(&ckpt, &wp).unwrap();
        for (i, &src) in perm.iter().enumerate() {
            assert!((perm_t[i] - base_t[src]).abs() < 1e-12);
        }
    }
}
