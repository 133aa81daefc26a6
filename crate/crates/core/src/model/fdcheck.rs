//! Central finite-difference verification of every analytic gradient
//! surface: parameters, input samples, last-conv features, and per-layer
//! attention probabilities.
//!
//! Relative error is `|analytic - fd| / max(|analytic|, |fd|, 1e-3)`; the
//! floor keeps near-zero gradients from inflating the ratio with finite-
//! difference noise.

use rand::Rng;

use super::backward::{backward_from_class, ScoreTarget};
use super::forward::{block_forward, forward, head_forward, BlockTrace, ForwardTrace};
use super::linalg::{add_bias_rows, matmul};
use super::{ModelConfig, ModelParams};
use crate::error::Result;
use crate::seeding;
use crate::signal::Waveform;

#[derive(Debug, Clone)]
pub struct FdReport {
    pub max_rel_error: f64,
    /// Worst relative error per surface, for diagnostics.
    pub surfaces: Vec<(String, f64)>,
}

const REL_FLOOR: f64 = 1e-3;

fn rel_err(analytic: f64, fd: f64) -> f64 {
    (analytic - fd).abs() / analytic.abs().max(fd.abs()).max(REL_FLOOR)
}

/// Recompute logits from an overridden last-conv feature map.
fn logits_from_features(params: &ModelParams, feat: &[f64], frames: usize) -> [f64; 2] {
    let d = params.config.d_model;
    let mut x = vec![0.0; frames * d];
    for c in 0..d {
        for t in 0..frames {
            x[t * d + c] = feat[c * frames + t];
        }
    }
    for block in &params.blocks {
        let bt = block_forward(block, &x, frames, d, params.config.heads, params.config.ln_eps);
        x = bt.x_out;
    }
    head_forward(params, &x, frames).1
}

/// Recompute one block with the attention map replaced, reusing the stored
/// block input. Returns the block output.
fn block_out_with_attn(
    params: &ModelParams,
    block_idx: usize,
    x_in: &[f64],
    attn: &[f64],
    s: usize,
) -> Vec<f64> {
    let config = &params.config;
    let d = config.d_model;
    let heads = config.heads;
    let dh = d / heads;
    let bp = &params.blocks[block_idx];

    let (ln1_out, _, _) = super::forward::layer_norm_rows(
        x_in,
        s,
        d,
        &bp.ln1_gain,
        &bp.ln1_bias,
        config.ln_eps,
    );
    let mut v = matmul(&ln1_out, s, d, &bp.attn.wv, d);
    add_bias_rows(&mut v, s, d, &bp.attn.bv);

    let mut ctx = vec![0.0; s * d];
    for h in 0..heads {
        let col = h * dh;
        let mut vh = vec![0.0; s * dh];
        for t in 0..s {
            vh[t * dh..(t + 1) * dh].copy_from_slice(&v[t * d + col..t * d + col + dh]);
        }
        let a_h = &attn[h * s * s..(h + 1) * s * s];
        let ctx_h = matmul(a_h, s, s, &vh, dh);
        for t in 0..s {
            ctx[t * d + col..t * d + col + dh].copy_from_slice(&ctx_h[t * dh..(t + 1) * dh]);
        }
    }

    let mut attn_out = matmul(&ctx, s, d, &bp.attn.wo, d);
    add_bias_rows(&mut attn_out, s, d, &bp.attn.bo);
    let x_mid: Vec<f64> = x_in.iter().zip(&attn_out).map(|(&a, &b)| a + b).collect();

    let (ln2_out, _, _) = super::forward::layer_norm_rows(
        &x_mid,
        s,
        d,
        &bp.ln2_gain,
        &bp.ln2_bias,
        config.ln_eps,
    );
    let f = bp.b1.len();
    let mut ffn_pre = matmul(&ln2_out, s, d, &bp.w1, f);
    add_bias_rows(&mut ffn_pre, s, f, &bp.b1);
    let ffn_act: Vec<f64> = ffn_pre.iter().map(|&v| v.max(0.0)).collect();
    let mut ffn_out = matmul(&ffn_act, s, f, &bp.w2, d);
    add_bias_rows(&mut ffn_out, s, d, &bp.b2);
    x_mid.iter().zip(&ffn_out).map(|(&a, &b)| a + b).collect()
}

/// Logit pair after perturbing one attention entry of one layer and running
/// the remainder of the network.
fn logits_with_attn_perturbation(
    params: &ModelParams,
    trace: &ForwardTrace,
    layer: usize,
    entry: usize,
    delta: f64,
) -> [f64; 2] {
    let s = trace.tokens;
    let d = params.config.d_model;
    let mut attn = trace.blocks[layer].attn.clone();
    attn[entry] += delta;
    let mut x = block_out_with_attn(params, layer, &trace.blocks[layer].x_in, &attn, s);
    for b in layer + 1..params.config.layers {
        let bt: BlockTrace =
            block_forward(&params.blocks[b], &x, s, d, params.config.heads, params.config.ln_eps);
        x = bt.x_out;
    }
    head_forward(params, &x, s).1
}

/// Compare every analytic gradient surface against central differences on a
/// seeded random model/input pair. Returns the worst relative error found.
pub fn finite_diff_check(config: &ModelConfig, seed: u64, eps: f64) -> Result<FdReport> {
    config.validate()?;
    let params = super::train::init_params(config, seed);
    // Eight tokens are enough to exercise every surface.
    let t = config.total_stride() * 8;
    let mut rng = seeding::substream(seed, &["fd-input"]);
    let samples: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
    let w = Waveform::new(samples, 4000);

    let class = 1usize;
    let (trace, _) = forward(&params, &w)?;
    let (gt, grads) = backward_from_class(&params, &trace, class, ScoreTarget::Logit)?;

    let mut surfaces: Vec<(String, f64)> = Vec::new();

    // Parameters.
    let analytic = grads.tensors();
    for (tensor_idx, (name, g)) in analytic.iter().enumerate() {
        let mut worst = 0.0f64;
        for j in 0..g.len() {
            let mut pp = params.clone();
            pp.tensors_mut()[tensor_idx][j] += eps;
            let (tp, _) = forward(&pp, &w)?;
            let mut pm = params.clone();
            pm.tensors_mut()[tensor_idx][j] -= eps;
            let (tm, _) = forward(&pm, &w)?;
            let fd = (tp.logits[class] - tm.logits[class]) / (2.0 * eps);
            worst = worst.max(rel_err(g[j], fd));
        }
        surfaces.push((name.clone(), worst));
    }

    // Input waveform.
    let mut worst = 0.0f64;
    for i in 0..t {
        let mut wp = w.clone();
        wp.samples[i] += eps;
        let (tp, _) = forward(&params, &wp)?;
        let mut wm = w.clone();
        wm.samples[i] -= eps;
        let (tm, _) = forward(&params, &wm)?;
        let fd = (tp.logits[class] - tm.logits[class]) / (2.0 * eps);
        worst = worst.max(rel_err(gt.d_input[i], fd));
    }
    surfaces.push(("input".into(), worst));

    // Last conv feature map.
    let feat = trace.conv_out.last().unwrap();
    let frames = *trace.conv_len.last().unwrap();
    let mut worst = 0.0f64;
    for i in 0..feat.len() {
        let mut fp = feat.clone();
        fp[i] += eps;
        let lp = logits_from_features(&params, &fp, frames);
        let mut fm = feat.clone();
        fm[i] -= eps;
        let lm = logits_from_features(&params, &fm, frames);
        let fd = (lp[class] - lm[class]) / (2.0 * eps);
        worst = worst.max(rel_err(gt.d_conv_feat[i], fd));
    }
    surfaces.push(("conv_features".into(), worst));

    // Attention probabilities, every layer.
    for layer in 0..config.layers {
        let mut worst = 0.0f64;
        for entry in 0..trace.blocks[layer].attn.len() {
            let lp = logits_with_attn_perturbation(&params, &trace, layer, entry, eps);
            let lm = logits_with_attn_perturbation(&params, &trace, layer, entry, -eps);
            let fd = (lp[class] - lm[class]) / (2.0 * eps);
            worst = worst.max(rel_err(gt.d_attn[layer][entry], fd));
        }
        surfaces.push((format!("attention[{layer}]"), worst));
    }

    let max_rel_error = surfaces.iter().map(|&(_, e)| e).fold(0.0, f64::max);
    Ok(FdReport {
        max_rel_error,
        surfaces,
    })
}
