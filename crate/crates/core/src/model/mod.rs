//! Toy transformer classifier over raw waveforms.
//!
//! Shape mirrors the SSL-plus-head detectors under study: a strided 1-D
//! conv frontend, a pre-LN multi-head self-attention encoder, and a
//! mean-pool two-class head. Forward and backward are written by hand so
//! the per-layer post-softmax attention maps and their gradients are
//! first-class outputs.

mod backward;
mod checkpoint;
mod fdcheck;
mod forward;
pub(crate) mod linalg;
mod train;

pub use backward::{backward_from_class, backward_seeded, GradTrace, ScoreTarget};
pub use checkpoint::{load_checkpoint, save_checkpoint};
pub use fdcheck::{finite_diff_check, FdReport};
pub use forward::{forward, BlockTrace, ForwardTrace};
pub use train::{init_params, score_dataset, train, EpochLog, ScoreRow, TrainHyper, TrainLog};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// One strided 1-D convolution layer. Input channels follow from the chain
/// (the first layer sees the single-channel waveform).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConvSpec {
    pub out_channels: usize,
    pub kernel: usize,
    pub stride: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ModelConfig {
    pub conv: Vec<ConvSpec>,
    /// Token dimension; must equal the last conv layer's channels.
    pub d_model: usize,
    /// Number of transformer layers.
    pub layers: usize,
    pub heads: usize,
    pub ffn_dim: usize,
    pub ln_eps: f64,
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            conv: vec![
                ConvSpec { out_channels: 32, kernel: 10, stride: 8 },
                ConvSpec { out_channels: 32, kernel: 8, stride: 5 },
                ConvSpec { out_channels: 32, kernel: 4, stride: 1 },
            ],
            d_model: 32,
            layers: 2,
            heads: 2,
            ffn_dim: 64,
            ln_eps: 1e-5,
        }
    }
}

impl ModelConfig {
    /// Micro configuration for gradient verification (token length 8 with a
    /// 64-sample input).
    pub fn micro() -> Self {
        ModelConfig {
            conv: vec![ConvSpec { out_channels: 8, kernel: 8, stride: 8 }],
            d_model: 8,
            layers: 1,
            heads: 2,
            ffn_dim: 16,
            ln_eps: 1e-5,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.conv.is_empty() {
            return Err(Error::Config("model needs at least one conv layer".into()));
        }
        if self.conv.iter().any(|c| c.out_channels == 0 || c.kernel == 0 || c.stride == 0) {
            return Err(Error::Config("conv layers need nonzero channels/kernel/stride".into()));
        }
        if self.conv.last().unwrap().out_channels != self.d_model {
            return Err(Error::Config(format!(
                "last conv channels {} must equal d_model {}",
                self.conv.last().unwrap().out_channels,
                self.d_model
            )));
        }
        if self.layers == 0 || self.heads == 0 || self.ffn_dim == 0 {
            return Err(Error::Config("layers, heads, ffn_dim must be nonzero".into()));
        }
        if !self.d_model.is_multiple_of(self.heads) {
            return Err(Error::Config(format!(
                "d_model {} not divisible by heads {}",
                self.d_model, self.heads
            )));
        }
        Ok(())
    }

    /// Product of conv strides: samples per token.
    pub fn total_stride(&self) -> usize {
        self.conv.iter().map(|c| c.stride).product()
    }

    /// Token count for an input of length `t`; errors unless the strides
    /// divide `t` exactly.
    pub fn tokens_for(&self, t: usize) -> Result<usize> {
        let stride = self.total_stride();
        if t == 0 || !t.is_multiple_of(stride) {
            return Err(Error::Shape(format!(
                "input length {t} not divisible by total stride {stride}"
            )));
        }
        Ok(t / stride)
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.heads
    }

    fn conv_in_channels(&self, layer: usize) -> usize {
        if layer == 0 {
            1
        } else {
            self.conv[layer - 1].out_channels
        }
    }
}

/// Weights of one conv layer: `weight[out][in][tap]` flattened row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvLayer {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

/// Attention projections, each `d x d` row-major (input dim x output dim).
#[derive(Debug, Clone, PartialEq)]
pub struct AttnParams {
    pub wq: Vec<f64>,
    pub wk: Vec<f64>,
    pub wv: Vec<f64>,
    pub wo: Vec<f64>,
    pub bq: Vec<f64>,
    pub bk: Vec<f64>,
    pub bv: Vec<f64>,
    pub bo: Vec<f64>,
}

/// One pre-LN transformer block.
#[derive(Debug, Clone, PartialEq)]
pub struct BlockParams {
    pub ln1_gain: Vec<f64>,
    pub ln1_bias: Vec<f64>,
    pub attn: AttnParams,
    pub ln2_gain: Vec<f64>,
    pub ln2_bias: Vec<f64>,
    /// FFN expansion, `d x ffn_dim`.
    pub w1: Vec<f64>,
    pub b1: Vec<f64>,
    /// FFN contraction, `ffn_dim x d`.
    pub w2: Vec<f64>,
    pub b2: Vec<f64>,
}

/// Full parameter set. Also reused as the container for gradients and Adam
/// moments, which share the exact same shapes.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelParams {
    pub config: ModelConfig,
    pub conv: Vec<ConvLayer>,
    pub blocks: Vec<BlockParams>,
    /// Classifier, `d x 2`.
    pub head_w: Vec<f64>,
    pub head_b: Vec<f64>,
}

impl ModelParams {
    /// All-zero parameters with the shapes implied by `config`.
    pub fn zeros(config: &ModelConfig) -> Self {
        let conv = (0..config.conv.len())
            .map(|i| {
                let c = &config.conv[i];
                ConvLayer {
                    weight: vec![0.0; c.out_channels * config.conv_in_channels(i) * c.kernel],
                    bias: vec![0.0; c.out_channels],
                }
            })
            .collect();
        let d = config.d_model;
        let f = config.ffn_dim;
        let blocks = (0..config.layers)
            .map(|_| BlockParams {
                ln1_gain: vec![0.0; d],
                ln1_bias: vec![0.0; d],
                attn: AttnParams {
                    wq: vec![0.0; d * d],
                    wk: vec![0.0; d * d],
                    wv: vec![0.0; d * d],
                    wo: vec![0.0; d * d],
                    bq: vec![0.0; d],
                    bk: vec![0.0; d],
                    bv: vec![0.0; d],
                    bo: vec![0.0; d],
                },
                ln2_gain: vec![0.0; d],
                ln2_bias: vec![0.0; d],
                w1: vec![0.0; d * f],
                b1: vec![0.0; f],
                w2: vec![0.0; f * d],
                b2: vec![0.0; d],
            })
            .collect();
        ModelParams {
            config: config.clone(),
            conv,
            blocks,
            head_w: vec![0.0; d * 2],
            head_b: vec![0.0; 2],
        }
    }

    /// Canonically ordered named tensors; drives checkpointing, Adam, and
    /// finite-difference sweeps.
    pub fn tensors(&self) -> Vec<(String, &Vec<f64>)> {
        let mut out = Vec::new();
        for (i, c) in self.conv.iter().enumerate() {
            out.push((format!("conv{i}.weight"), &c.weight));
            out.push((format!("conv{i}.bias"), &c.bias));
        }
        for (i, b) in self.blocks.iter().enumerate() {
            out.push((format!("block{i}.ln1_gain"), &b.ln1_gain));
            out.push((format!("block{i}.ln1_bias"), &b.ln1_bias));
            out.push((format!("block{i}.wq"), &b.attn.wq));
            out.push((format!("block{i}.wk"), &b.attn.wk));
            out.push((format!("block{i}.wv"), &b.attn.wv));
            out.push((format!("block{i}.wo"), &b.attn.wo));
            out.push((format!("block{i}.bq"), &b.attn.bq));
            out.push((format!("block{i}.bk"), &b.attn.bk));
            out.push((format!("block{i}.bv"), &b.attn.bv));
            out.push((format!("block{i}.bo"), &b.attn.bo));
            out.push((format!("block{i}.ln2_gain"), &b.ln2_gain));
            out.push((format!("block{i}.ln2_bias"), &b.ln2_bias));
            out.push((format!("block{i}.w1"), &b.w1));
            out.push((format!("block{i}.b1"), &b.b1));
            out.push((format!("block{i}.w2"), &b.w2));
            out.push((format!("block{i}.b2"), &b.b2));
        }
        out.push(("head.weight".into(), &self.head_w));
        out.push(("head.bias".into(), &self.head_b));
        out
    }

    pub fn tensors_mut(&mut self) -> Vec<&mut Vec<f64>> {
        let mut out: Vec<&mut Vec<f64>> = Vec::new();
        for c in self.conv.iter_mut() {
            out.push(&mut c.weight);
            out.push(&mut c.bias);
        }
        for b in self.blocks.iter_mut() {
            out.push(&mut b.ln1_gain);
            out.push(&mut b.ln1_bias);
            out.push(&mut b.attn.wq);
            out.push(&mut b.attn.wk);
            out.push(&mut b.attn.wv);
            out.push(&mut b.attn.wo);
            out.push(&mut b.attn.bq);
            out.push(&mut b.attn.bk);
            out.push(&mut b.attn.bv);
            out.push(&mut b.attn.bo);
            out.push(&mut b.ln2_gain);
            out.push(&mut b.ln2_bias);
            out.push(&mut b.w1);
            out.push(&mut b.b1);
            out.push(&mut b.w2);
            out.push(&mut b.b2);
        }
        out.push(&mut self.head_w);
        out.push(&mut self.head_b);
        out
    }

    pub fn num_parameters(&self) -> usize {
        self.tensors().iter().map(|(_, t)| t.len()).sum()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_config_is_valid_and_strides_cover_default_t() {
        let c = ModelConfig::default();
        c.validate().unwrap();
        assert_eq!(c.total_stride(), 40);
        assert_eq!(c.tokens_for(4000).unwrap(), 100);
        assert!(c.tokens_for(4001).is_err());
    }

    #[test]
    fn micro_config_is_valid() {
        let c = ModelConfig::micro();
        c.validate().unwrap();
        assert_eq!(c.tokens_for(64).unwrap(), 8);
    }

    #[test]
    fn invalid_head_split_is_rejected() {
        let mut c = ModelConfig::default();
        c.heads = 3;
        assert!(c.validate().is_err());
    }

    #[test]
    fn tensor_enumeration_is_stable() {
        let p = ModelParams::zeros(&ModelConfig::micro());
        let names: Vec<String> = p.tensors().into_iter().map(|(n, _)| n).collect();
        assert_eq!(names[0], "conv0.weight");
        assert_eq!(names.last().unwrap(), "head.bias");
        let mut p2 = p.clone();
        assert_eq!(p.tensors().len(), p2.tensors_mut().len());
    }
}
