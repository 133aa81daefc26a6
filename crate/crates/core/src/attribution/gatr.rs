//! Gradient-averaged transformer relevancy.
//!
//! A relevancy matrix `R` starts at the identity and accumulates
//! `R + mean_heads((dA (.) A)^+) . R` across the encoder layers. After
//! subtracting the identity, rows are averaged with weights given by the
//! Euclidean norms of the head-averaged final-layer attention gradient rows,
//! and the token-resolution vector is linearly interpolated back to sample
//! resolution.

use super::{ExplainOptions, Heatmap, HeatmapFlags, Method};
use crate::error::{Error, Result};
use crate::model::{backward_from_class, forward, ModelParams};
use crate::signal::Waveform;
use serde::{Deserialize, Serialize};

/// Direction the per-layer updates are applied in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LayerOrder {
    /// Network order, first encoder layer to last (default).
    #[default]
    FirstToLast,
    LastToFirst,
}

/// Head-averaged positive part of `dA (.) A` for one layer (`s x s`).
pub fn head_mean_positive(attn: &[f64], d_attn: &[f64], heads: usize, s: usize) -> Result<Vec<f64>> {
    let expect = heads * s * s;
    if attn.len() != expect || d_attn.len() != expect {
        return Err(Error::Shape(format!(
            "attention buffers must be heads*s*s = {expect}, got {} and {}",
            attn.len(),
            d_attn.len()
        )));
    }
    let mut out = vec![0.0; s * s];
    for h in 0..heads {
        let a = &attn[h * s * s..(h + 1) * s * s];
        let g = &d_attn[h * s * s..(h + 1) * s * s];
        for (o, (&av, &gv)) in out.iter_mut().zip(a.iter().zip(g)) {
            *o += (gv * av).max(0.0);
        }
    }
    for o in out.iter_mut() {
        *o /= heads as f64;
    }
    Ok(out)
}

/// One relevancy update: `R + mean_heads((dA (.) A)^+) . R`.
pub fn relevancy_update(r: &[f64], attn: &[f64], d_attn: &[f64], heads: usize, s: usize) -> Result<Vec<f64>> {
    if r.len() != s * s {
        return Err(Error::Shape(format!(
            "relevancy matrix must be s*s = {}, got {}",
            s * s,
            r.len()
        )));
    }
    let abar = head_mean_positive(attn, d_attn, heads, s)?;
    let mut out = r.to_vec();
    for i in 0..s {
        for j in 0..s {
            let mut acc = 0.0;
            for t in 0..s {
                acc += abar[i * s + t] * r[t * s + j];
            }
            out[i * s + j] += acc;
        }
    }
    Ok(out)
}

/// Row weights from the final layer's attention gradient: head mean without
/// rectification, then the L2 norm of each row.
pub fn gradient_row_weights(d_attn: &[f64], heads: usize, s: usize) -> Result<Vec<f64>> {
    if d_attn.len() != heads * s * s {
        return Err(Error::Shape(format!(
            "attention gradient must be heads*s*s = {}, got {}",
            heads * s * s,
            d_attn.len()
        )));
    }
    let mut mean = vec![0.0; s * s];
    for h in 0..heads {
        let g = &d_attn[h * s * s..(h + 1) * s * s];
        for (m, &gv) in mean.iter_mut().zip(g) {
            *m += gv;
        }
    }
    for m in mean.iter_mut() {
        *m /= heads as f64;
    }
    Ok((0..s)
        .map(|t| mean[t * s..(t + 1) * s].iter().map(|&v| v * v).sum::<f64>().sqrt())
        .collect())
}

/// Weighted average of the rows of `r` (identity already subtracted). A zero
/// weight vector falls back to the unweighted row mean and reports it.
pub fn weighted_row_average(r: &[f64], weights: &[f64], s: usize) -> Result<(Vec<f64>, bool)> {
    if r.len() != s * s || weights.len() != s {
        return Err(Error::Shape(format!(
            "expected {}x{} matrix and {s} weights, got {} and {}",
            s,
            s,
            r.len(),
            weights.len()
        )));
    }
    if weights.iter().any(|&w| w < 0.0) {
        return Err(Error::Data("row weights must be non-negative".into()));
    }
    let total: f64 = weights.iter().sum();
    let mut out = vec![0.0; s];
    let fallback = total == 0.0;
    for t in 0..s {
        let w = if fallback { 1.0 } else { weights[t] };
        for j in 0..s {
            out[j] += w * r[t * s + j];
        }
    }
    let denom = if fallback { s as f64 } else { total };
    for v in out.iter_mut() {
        *v /= denom;
    }
    Ok((out, fallback))
}

/// Linearly interpolate token scores to sample resolution. Token `t` is
/// centered on sample `(t + 0.5) * stride - 0.5`; samples beyond the first
/// and last centers take the nearest token's value.
pub fn interpolate_to_waveform(scores: &[f64], t: usize, stride: usize) -> Vec<f64> {
    let s = scores.len();
    if s == 0 {
        return vec![0.0; t];
    }
    if s == 1 {
        return vec![scores[0]; t];
    }
    let center = |tok: usize| (tok as f64 + 0.5) * stride as f64 - 0.5;
    let mut out = Vec::with_capacity(t);
    let mut tok = 0usize;
    for i in 0..t {
        let pos = i as f64;
        if pos <= center(0) {
            out.push(scores[0]);
            continue;
        }
        if pos >= center(s - 1) {
            out.push(scores[s - 1]);
            continue;
        }
        while center(tok + 1) < pos {
            tok += 1;
        }
        let c0 = center(tok);
        let c1 = center(tok + 1);
        let alpha = (pos - c0) / (c1 - c0);
        out.push((1.0 - alpha) * scores[tok] + alpha * scores[tok + 1]);
    }
    out
}

/// Full relevancy pipeline for one utterance and class of interest.
pub fn gatr(
    params: &ModelParams,
    w: &Waveform,
    class: usize,
    opts: &ExplainOptions,
) -> Result<Heatmap> {
    gatr_with_relevancy(params, w, class, opts).map(|(h, _)| h)
}

/// As [`gatr`], also returning the relevancy matrix after every layer update
/// (in application order) for diagnostics.
pub fn gatr_with_relevancy(
    params: &ModelParams,
    w: &Waveform,
    class: usize,
    opts: &ExplainOptions,
) -> Result<(Heatmap, Vec<Vec<f64>>)> {
    let (trace, _) = forward(params, w)?;
    let (grad, _) = backward_from_class(params, &trace, class, opts.target)?;
    let s = trace.tokens;
    let heads = params.config.heads;
    let layers = params.config.layers;

    let mut r = vec![0.0; s * s];
    for i in 0..s {
        r[i * s + i] = 1.0;
    }

    let order: Vec<usize> = match opts.layer_order {
        LayerOrder::FirstToLast => (0..layers).collect(),
        LayerOrder::LastToFirst => (0..layers).rev().collect(),
    };
    let mut states = Vec::with_capacity(layers);
    for &layer in &order {
        r = relevancy_update(&r, trace.attention(layer), &grad.d_attn[layer], heads, s)?;
        states.push(r.clone());
    }

    // Diagonal dominance from the identity initialization; remove it before
    // averaging.
    for i in 0..s {
        r[i * s + i] -= 1.0;
    }

    let weights = gradient_row_weights(&grad.d_attn[layers - 1], heads, s)?;
    let (token_scores, fallback) = weighted_row_average(&r, &weights, s)?;
    let scores = interpolate_to_waveform(&token_scores, w.len(), params.config.total_stride());

    assert!(
        scores.iter().all(|&v| v >= 0.0 && v.is_finite()),
        "relevancy heatmap must be non-negative and finite"
    );
    let degenerate = scores.iter().all(|&v| v == 0.0);
    Ok((
        Heatmap {
            scores,
            method: Method::Gatr,
            class,
            flags: HeatmapFlags {
                degenerate,
                weight_fallback: fallback,
            },
        },
        states,
    ))
}
