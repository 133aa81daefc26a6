//! Manual reverse-mode pass.
//!
//! Seeds the two logits with an arbitrary cotangent and propagates back to
//! every parameter, the input waveform, the last conv feature map, and — the
//! part attribution needs — the post-softmax attention probabilities of each
//! layer.

use super::forward::ForwardTrace;
use super::linalg::{matmul, matmul_at, matmul_bt, softmax_rows_backward};
use super::ModelParams;
use crate::error::{Error, Result};

/// Which scalar the class gradient is taken against.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreTarget {
    /// Pre-softmax logit of the class of interest (default; does not
    /// saturate).
    #[default]
    Logit,
    /// Softmax probability of the class of interest.
    Probability,
}

/// Gradients surfaced for attribution.
#[derive(Debug, Clone)]
pub struct GradTrace {
    /// Per layer, gradient w.r.t. the post-softmax attention map
    /// (`h x s x s`, same layout as the trace).
    pub d_attn: Vec<Vec<f64>>,
    /// Gradient w.r.t. the last conv layer's post-ReLU feature map
    /// (`channels x frames`).
    pub d_conv_feat: Vec<f64>,
    /// Gradient w.r.t. the input waveform (length T).
    pub d_input: Vec<f64>,
}

fn layer_norm_backward(
    x: &[f64],
    mean: &[f64],
    inv_std: &[f64],
    gain: &[f64],
    d_out: &[f64],
    s: usize,
    d: usize,
    d_gain: &mut [f64],
    d_bias: &mut [f64],
) -> Vec<f64> {
    let mut d_x = vec![0.0; s * d];
    for t in 0..s {
        let row = &x[t * d..(t + 1) * d];
        let dr = &d_out[t * d..(t + 1) * d];
        let inv = inv_std[t];
        let mu = mean[t];
        let mut sum_dxhat = 0.0;
        let mut sum_dxhat_xhat = 0.0;
        for j in 0..d {
            let xhat = (row[j] - mu) * inv;
            let dxhat = dr[j] * gain[j];
            d_gain[j] += dr[j] * xhat;
            d_bias[j] += dr[j];
            sum_dxhat += dxhat;
            sum_dxhat_xhat += dxhat * xhat;
        }
        let dn = d as f64;
        for j in 0..d {
            let xhat = (row[j] - mu) * inv;
            let dxhat = dr[j] * gain[j];
            d_x[t * d + j] = inv * (dxhat - sum_dxhat / dn - xhat * sum_dxhat_xhat / dn);
        }
    }
    d_x
}

fn column_sums(x: &[f64], rows: usize, cols: usize, out: &mut [f64]) {
    for r in 0..rows {
        for (o, &v) in out.iter_mut().zip(&x[r * cols..(r + 1) * cols]) {
            *o += v;
        }
    }
}

/// Backward from an arbitrary logit cotangent. Returns the attribution
/// gradients and a parameter-shaped gradient container.
pub fn backward_seeded(
    params: &ModelParams,
    trace: &ForwardTrace,
    d_logits: [f64; 2],
) -> (GradTrace, ModelParams) {
    let config = &params.config;
    let s = trace.tokens;
    let d = config.d_model;
    let heads = config.heads;
    let dh = d / heads;
    let mut grads = ModelParams::zeros(config);

    // Head.
    grads.head_b[0] += d_logits[0];
    grads.head_b[1] += d_logits[1];
    let mut d_pooled = vec![0.0; d];
    for i in 0..d {
        grads.head_w[i * 2] += trace.pooled[i] * d_logits[0];
        grads.head_w[i * 2 + 1] += trace.pooled[i] * d_logits[1];
        d_pooled[i] =
            params.head_w[i * 2] * d_logits[0] + params.head_w[i * 2 + 1] * d_logits[1];
    }

    // Mean pool.
    let mut d_x = vec![0.0; s * d];
    for t in 0..s {
        for j in 0..d {
            d_x[t * d + j] = d_pooled[j] / s as f64;
        }
    }

    let mut d_attn_layers: Vec<Vec<f64>> = vec![Vec::new(); config.layers];

    for layer in (0..config.layers).rev() {
        let bt = &trace.blocks[layer];
        let bp = &params.blocks[layer];
        let bg = &mut grads.blocks[layer];
        let f = config.ffn_dim;

        // FFN sub-block: x_out = x_mid + W2(relu(W1 ln2(x_mid) + b1)) + b2.
        let d_ffn_out = &d_x;
        column_sums(d_ffn_out, s, d, &mut bg.b2);
        let d_w2 = matmul_at(&bt.ffn_act, s, f, d_ffn_out, d);
        for (g, v) in bg.w2.iter_mut().zip(&d_w2) {
            *g += v;
        }
        let mut d_ffn_act = matmul_bt(d_ffn_out, s, d, &bp.w2, f);
        for (g, &pre) in d_ffn_act.iter_mut().zip(&bt.ffn_pre) {
            if pre <= 0.0 {
                *g = 0.0;
            }
        }
        column_sums(&d_ffn_act, s, f, &mut bg.b1);
        let d_w1 = matmul_at(&bt.ln2_out, s, d, &d_ffn_act, f);
        for (g, v) in bg.w1.iter_mut().zip(&d_w1) {
            *g += v;
        }
        let d_ln2_out = matmul_bt(&d_ffn_act, s, f, &bp.w1, d);
        let d_mid_ln = layer_norm_backward(
            &bt.x_mid,
            &bt.ln2_mean,
            &bt.ln2_inv_std,
            &bp.ln2_gain,
            &d_ln2_out,
            s,
            d,
            &mut bg.ln2_gain,
            &mut bg.ln2_bias,
        );
        let d_x_mid: Vec<f64> = d_x.iter().zip(&d_mid_ln).map(|(&a, &b)| a + b).collect();

        // Attention sub-block: x_mid = x_in + Wo(ctx) + bo.
        column_sums(&d_x_mid, s, d, &mut bg.attn.bo);
        let d_wo = matmul_at(&bt.ctx, s, d, &d_x_mid, d);
        for (g, v) in bg.attn.wo.iter_mut().zip(&d_wo) {
            *g += v;
        }
        let d_ctx = matmul_bt(&d_x_mid, s, d, &bp.attn.wo, d);

        let mut d_q = vec![0.0; s * d];
        let mut d_k = vec![0.0; s * d];
        let mut d_v = vec![0.0; s * d];
        let mut d_attn_layer = vec![0.0; heads * s * s];
        let scale = 1.0 / (dh as f64).sqrt();
        for h in 0..heads {
            let col = h * dh;
            let mut d_ctx_h = vec![0.0; s * dh];
            let mut qh = vec![0.0; s * dh];
            let mut kh = vec![0.0; s * dh];
            let mut vh = vec![0.0; s * dh];
            for t in 0..s {
                d_ctx_h[t * dh..(t + 1) * dh]
                    .copy_from_slice(&d_ctx[t * d + col..t * d + col + dh]);
                qh[t * dh..(t + 1) * dh].copy_from_slice(&bt.q[t * d + col..t * d + col + dh]);
                kh[t * dh..(t + 1) * dh].copy_from_slice(&bt.k[t * d + col..t * d + col + dh]);
                vh[t * dh..(t + 1) * dh].copy_from_slice(&bt.v[t * d + col..t * d + col + dh]);
            }
            let a_h = &bt.attn[h * s * s..(h + 1) * s * s];

            // Gradient w.r.t. the attention probabilities: the quantity the
            // relevancy rules consume.
            let d_a = matmul_bt(&d_ctx_h, s, dh, &vh, s);
            d_attn_layer[h * s * s..(h + 1) * s * s].copy_from_slice(&d_a);

            let d_vh = matmul_at(a_h, s, s, &d_ctx_h, dh);
            let mut d_scores = softmax_rows_backward(a_h, &d_a, s, s);
            for v in d_scores.iter_mut() {
                *v *= scale;
            }
            let d_qh = matmul(&d_scores, s, s, &kh, dh);
            let d_kh = matmul_at(&d_scores, s, s, &qh, dh);
            for t in 0..s {
                d_q[t * d + col..t * d + col + dh]
                    .copy_from_slice(&d_qh[t * dh..(t + 1) * dh]);
                d_k[t * d + col..t * d + col + dh]
                    .copy_from_slice(&d_kh[t * dh..(t + 1) * dh]);
                d_v[t * d + col..t * d + col + dh]
                    .copy_from_slice(&d_vh[t * dh..(t + 1) * dh]);
            }
        }
        d_attn_layers[layer] = d_attn_layer;

        column_sums(&d_q, s, d, &mut bg.attn.bq);
        column_sums(&d_k, s, d, &mut bg.attn.bk);
        column_sums(&d_v, s, d, &mut bg.attn.bv);
        let d_wq = matmul_at(&bt.ln1_out, s, d, &d_q, d);
        let d_wk = matmul_at(&bt.ln1_out, s, d, &d_k, d);
        let d_wv = matmul_at(&bt.ln1_out, s, d, &d_v, d);
        for (g, v) in bg.attn.wq.iter_mut().zip(&d_wq) {
            *g += v;
        }
        for (g, v) in bg.attn.wk.iter_mut().zip(&d_wk) {
            *g += v;
        }
        for (g, v) in bg.attn.wv.iter_mut().zip(&d_wv) {
            *g += v;
        }
        let mut d_ln1_out = matmul_bt(&d_q, s, d, &bp.attn.wq, d);
        let t1 = matmul_bt(&d_k, s, d, &bp.attn.wk, d);
        let t2 = matmul_bt(&d_v, s, d, &bp.attn.wv, d);
        for ((a, &b), &c) in d_ln1_out.iter_mut().zip(&t1).zip(&t2) {
            *a += b + c;
        }
        let d_in_ln = layer_norm_backward(
            &bt.x_in,
            &bt.ln1_mean,
            &bt.ln1_inv_std,
            &bp.ln1_gain,
            &d_ln1_out,
            s,
            d,
            &mut bg.ln1_gain,
            &mut bg.ln1_bias,
        );
        d_x = d_x_mid.iter().zip(&d_in_ln).map(|(&a, &b)| a + b).collect();
    }

    // Tokens back to channel-major features of the last conv layer.
    let frames = *trace.conv_len.last().unwrap();
    let mut d_feat = vec![0.0; d * frames];
    for c in 0..d {
        for t in 0..frames {
            d_feat[c * frames + t] = d_x[t * d + c];
        }
    }
    let d_conv_feat = d_feat.clone();

    // Conv stack.
    let mut d_post = d_feat;
    for layer in (0..config.conv.len()).rev() {
        let spec = &config.conv[layer];
        let lp = &params.conv[layer];
        let in_channels = config.conv_in_channels(layer);
        let out_len = trace.conv_len[layer];
        let in_len = if layer == 0 {
            trace.input.len()
        } else {
            trace.conv_len[layer - 1]
        };
        let x_in = &trace.conv_inputs[layer];
        let pre = &trace.conv_pre[layer];
        let lg = &mut grads.conv[layer];

        let mut d_pre = d_post;
        for (g, &p) in d_pre.iter_mut().zip(pre) {
            if p <= 0.0 {
                *g = 0.0;
            }
        }
        let mut d_x_in = vec![0.0; in_channels * in_len];
        for co in 0..spec.out_channels {
            for t in 0..out_len {
                let g = d_pre[co * out_len + t];
                if g == 0.0 {
                    continue;
                }
                lg.bias[co] += g;
                let base = t * spec.stride;
                let reach = spec.kernel.min(in_len - base);
                for ci in 0..in_channels {
                    let wrow = &lp.weight
                        [(co * in_channels + ci) * spec.kernel..(co * in_channels + ci + 1) * spec.kernel];
                    let xrow = &x_in[ci * in_len..(ci + 1) * in_len];
                    let grow = &mut lg.weight
                        [(co * in_channels + ci) * spec.kernel..(co * in_channels + ci + 1) * spec.kernel];
                    let drow = &mut d_x_in[ci * in_len..(ci + 1) * in_len];
                    for j in 0..reach {
                        grow[j] += g * xrow[base + j];
                        drow[base + j] += g * wrow[j];
                    }
                }
            }
        }
        d_post = d_x_in;
    }

    (
        GradTrace {
            d_attn: d_attn_layers,
            d_conv_feat,
            d_input: d_post,
        },
        grads,
    )
}

/// Gradient of the selected class's score (logit by default) w.r.t.
/// attention probabilities, conv features, inputs, and parameters.
pub fn backward_from_class(
    params: &ModelParams,
    trace: &ForwardTrace,
    class: usize,
    target: ScoreTarget,
) -> Result<(GradTrace, ModelParams)> {
    if class > 1 {
        return Err(Error::Data(format!("class {class} outside {{0, 1}}")));
    }
    let seed = match target {
        ScoreTarget::Logit => {
            let mut s = [0.0; 2];
            s[class] = 1.0;
            s
        }
        ScoreTarget::Probability => {
            let p = trace.probs;
            let pc = p[class];
            let mut s = [0.0; 2];
            for (j, slot) in s.iter_mut().enumerate() {
                let delta = if j == class { 1.0 } else { 0.0 };
                *slot = pc * (delta - p[j]);
            }
            s
        }
    };
    Ok(backward_seeded(params, trace, seed))
}
