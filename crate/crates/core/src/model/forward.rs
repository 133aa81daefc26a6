//! Manual forward pass retaining everything backward needs, including the
//! per-layer post-softmax attention maps.

use super::linalg::{add_bias_rows, matmul, matmul_bt, softmax_rows};
use super::{BlockParams, ModelParams};
use crate::error::Result;
use crate::signal::Waveform;

/// Intermediates of one transformer block, all row-major.
#[derive(Debug, Clone)]
pub struct BlockTrace {
    /// Block input, `s x d`.
    pub x_in: Vec<f64>,
    pub ln1_mean: Vec<f64>,
    pub ln1_inv_std: Vec<f64>,
    pub ln1_out: Vec<f64>,
    pub q: Vec<f64>,
    pub k: Vec<f64>,
    pub v: Vec<f64>,
    /// Post-softmax attention, `h x s x s`.
    pub attn: Vec<f64>,
    /// Concatenated head outputs, `s x d`.
    pub ctx: Vec<f64>,
    pub attn_out: Vec<f64>,
    pub x_mid: Vec<f64>,
    pub ln2_mean: Vec<f64>,
    pub ln2_inv_std: Vec<f64>,
    pub ln2_out: Vec<f64>,
    /// FFN hidden pre-activation, `s x ffn_dim`.
    pub ffn_pre: Vec<f64>,
    pub ffn_act: Vec<f64>,
    pub x_out: Vec<f64>,
}

/// Everything recorded during a forward pass.
#[derive(Debug, Clone)]
pub struct ForwardTrace {
    /// The input actually consumed (length T).
    pub input: Vec<f64>,
    /// Per conv layer: input feature map (`ch x len` flattened).
    pub conv_inputs: Vec<Vec<f64>>,
    /// Per conv layer: pre-ReLU output.
    pub conv_pre: Vec<Vec<f64>>,
    /// Per conv layer: post-ReLU output. The last entry is the feature map
    /// used by conv-gradient attribution.
    pub conv_out: Vec<Vec<f64>>,
    /// Per conv layer: output length in frames.
    pub conv_len: Vec<usize>,
    /// Token count `s`.
    pub tokens: usize,
    pub blocks: Vec<BlockTrace>,
    /// Mean-pooled token, length `d`.
    pub pooled: Vec<f64>,
    pub logits: [f64; 2],
    pub probs: [f64; 2],
}

impl ForwardTrace {
    /// Post-softmax attention of layer `i` (`h x s x s`).
    pub fn attention(&self, layer: usize) -> &[f64] {
        &self.blocks[layer].attn
    }

    pub fn spoof_score(&self) -> f64 {
        self.probs[1]
    }
}

pub(super) fn layer_norm_rows(
    x: &[f64],
    s: usize,
    d: usize,
    gain: &[f64],
    bias: &[f64],
    eps: f64,
) -> (Vec<f64>, Vec<f64>, Vec<f64>) {
    let mut out = vec![0.0; s * d];
    let mut means = vec![0.0; s];
    let mut inv_stds = vec![0.0; s];
    for t in 0..s {
        let row = &x[t * d..(t + 1) * d];
        let mean = row.iter().sum::<f64>() / d as f64;
        let var = row.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / d as f64;
        let inv = 1.0 / (var + eps).sqrt();
        means[t] = mean;
        inv_stds[t] = inv;
        for j in 0..d {
            out[t * d + j] = gain[j] * (row[j] - mean) * inv + bias[j];
        }
    }
    (out, means, inv_stds)
}

/// Forward one conv layer; returns (pre-ReLU, post-ReLU, out_len).
pub(super) fn conv_forward(
    x: &[f64],
    in_channels: usize,
    in_len: usize,
    weight: &[f64],
    bias: &[f64],
    out_channels: usize,
    kernel: usize,
    stride: usize,
) -> (Vec<f64>, Vec<f64>, usize) {
    let out_len = in_len / stride;
    let mut pre = vec![0.0; out_channels * out_len];
    for co in 0..out_channels {
        for t in 0..out_len {
            let base = t * stride;
            let mut acc = bias[co];
            for ci in 0..in_channels {
                let w = &weight[(co * in_channels + ci) * kernel..(co * in_channels + ci + 1) * kernel];
                let xrow = &x[ci * in_len..(ci + 1) * in_len];
                // Kernel taps beyond the end read zero padding.
                let reach = kernel.min(in_len - base);
                for j in 0..reach {
                    acc += w[j] * xrow[base + j];
                }
            }
            pre[co * out_len + t] = acc;
        }
    }
    let post = pre.iter().map(|&v| v.max(0.0)).collect();
    (pre, post, out_len)
}

/// Forward one transformer block on input `x (s x d)`.
pub(super) fn block_forward(
    block: &BlockParams,
    x: &[f64],
    s: usize,
    d: usize,
    heads: usize,
    eps: f64,
) -> BlockTrace {
    let dh = d / heads;
    let (ln1_out, ln1_mean, ln1_inv_std) =
        layer_norm_rows(x, s, d, &block.ln1_gain, &block.ln1_bias, eps);

    let mut q = matmul(&ln1_out, s, d, &block.attn.wq, d);
    add_bias_rows(&mut q, s, d, &block.attn.bq);
    let mut k = matmul(&ln1_out, s, d, &block.attn.wk, d);
    add_bias_rows(&mut k, s, d, &block.attn.bk);
    let mut v = matmul(&ln1_out, s, d, &block.attn.wv, d);
    add_bias_rows(&mut v, s, d, &block.attn.bv);

    let scale = 1.0 / (dh as f64).sqrt();
    let mut attn = vec![0.0; heads * s * s];
    let mut ctx = vec![0.0; s * d];
    for h in 0..heads {
        let col = h * dh;
        let mut qh = vec![0.0; s * dh];
        let mut kh = vec![0.0; s * dh];
        let mut vh = vec![0.0; s * dh];
        for t in 0..s {
            qh[t * dh..(t + 1) * dh].copy_from_slice(&q[t * d + col..t * d + col + dh]);
            kh[t * dh..(t + 1) * dh].copy_from_slice(&k[t * d + col..t * d + col + dh]);
            vh[t * dh..(t + 1) * dh].copy_from_slice(&v[t * d + col..t * d + col + dh]);
        }
        let mut scores = matmul_bt(&qh, s, dh, &kh, s);
        for v in scores.iter_mut() {
            *v *= scale;
        }
        softmax_rows(&mut scores, s, s);
        let ctx_h = matmul(&scores, s, s, &vh, dh);
        attn[h * s * s..(h + 1) * s * s].copy_from_slice(&scores);
        for t in 0..s {
            ctx[t * d + col..t * d + col + dh].copy_from_slice(&ctx_h[t * dh..(t + 1) * dh]);
        }
    }

    let mut attn_out = matmul(&ctx, s, d, &block.attn.wo, d);
    add_bias_rows(&mut attn_out, s, d, &block.attn.bo);
    let x_mid: Vec<f64> = x.iter().zip(&attn_out).map(|(&a, &b)| a + b).collect();

    let (ln2_out, ln2_mean, ln2_inv_std) =
        layer_norm_rows(&x_mid, s, d, &block.ln2_gain, &block.ln2_bias, eps);
    let f = block.b1.len();
    let mut ffn_pre = matmul(&ln2_out, s, d, &block.w1, f);
    add_bias_rows(&mut ffn_pre, s, f, &block.b1);
    let ffn_act: Vec<f64> = ffn_pre.iter().map(|&v| v.max(0.0)).collect();
    let mut ffn_out = matmul(&ffn_act, s, f, &block.w2, d);
    add_bias_rows(&mut ffn_out, s, d, &block.b2);
    let x_out: Vec<f64> = x_mid.iter().zip(&ffn_out).map(|(&a, &b)| a + b).collect();

    BlockTrace {
        x_in: x.to_vec(),
        ln1_mean,
        ln1_inv_std,
        ln1_out,
        q,
        k,
        v,
        attn,
        ctx,
        attn_out,
        x_mid,
        ln2_mean,
        ln2_inv_std,
        ln2_out,
        ffn_pre,
        ffn_act,
        x_out,
    }
}

/// Mean-pool plus classifier head on the final token sequence.
pub(super) fn head_forward(params: &ModelParams, x: &[f64], s: usize) -> (Vec<f64>, [f64; 2], [f64; 2]) {
    let d = params.config.d_model;
    let mut pooled = vec![0.0; d];
    for t in 0..s {
        for j in 0..d {
            pooled[j] += x[t * d + j];
        }
    }
    for v in pooled.iter_mut() {
        *v /= s as f64;
    }
    let mut logits = [params.head_b[0], params.head_b[1]];
    for (i, &p) in pooled.iter().enumerate() {
        logits[0] += p * params.head_w[i * 2];
        logits[1] += p * params.head_w[i * 2 + 1];
    }
    let m = logits[0].max(logits[1]);
    let e0 = (logits[0] - m).exp();
    let e1 = (logits[1] - m).exp();
    let z = e0 + e1;
    (pooled, logits, [e0 / z, e1 / z])
}

/// Run the full model on a (peak-normalized) waveform. Returns the trace and
/// the spoof-class probability.
pub fn forward(params: &ModelParams, w: &Waveform) -> Result<(ForwardTrace, f64)> {
    let config = &params.config;
    config.validate()?;
    let t = w.len();
    let s = config.tokens_for(t)?;
    let d = config.d_model;

    let mut conv_inputs = Vec::with_capacity(config.conv.len());
    let mut conv_pre = Vec::with_capacity(config.conv.len());
    let mut conv_out = Vec::with_capacity(config.conv.len());
    let mut conv_len = Vec::with_capacity(config.conv.len());

    let mut x = w.samples.clone();
    let mut in_channels = 1usize;
    let mut in_len = t;
    for (i, spec) in config.conv.iter().enumerate() {
        let layer = &params.conv[i];
        conv_inputs.push(x.clone());
        let (pre, post, out_len) = conv_forward(
            &x,
            in_channels,
            in_len,
            &layer.weight,
            &layer.bias,
            spec.out_channels,
            spec.kernel,
            spec.stride,
        );
        conv_pre.push(pre);
        conv_out.push(post.clone());
        conv_len.push(out_len);
        x = post;
        in_channels = spec.out_channels;
        in_len = out_len;
    }
    debug_assert_eq!(in_len, s);

    // Transpose channels x frames into tokens (s x d).
    let feat = conv_out.last().unwrap();
    let mut tokens = vec![0.0; s * d];
    for c in 0..d {
        for t_i in 0..s {
            tokens[t_i * d + c] = feat[c * s + t_i];
        }
    }

    let mut blocks = Vec::with_capacity(config.layers);
    let mut cur = tokens;
    for block in &params.blocks {
        let bt = block_forward(block, &cur, s, d, config.heads, config.ln_eps);
        cur = bt.x_out.clone();
        blocks.push(bt);
    }

    let (pooled, logits, probs) = head_forward(params, &cur, s);

    // Attention rows are probability vectors; guard the invariant cheaply.
    if cfg!(debug_assertions) {
        for bt in &blocks {
            for row in bt.attn.chunks_exact(s) {
                let sum: f64 = row.iter().sum();
                debug_assert!((sum - 1.0).abs() < 1e-6, "attention row sum {sum}");
            }
        }
    }

    let spoof = probs[1];
    Ok((
        ForwardTrace {
            input: w.samples.clone(),
            conv_inputs,
            conv_pre,
            conv_out,
            conv_len,
            tokens: s,
            blocks,
            pooled,
            logits,
            probs,
        },
        spoof,
    ))
}
