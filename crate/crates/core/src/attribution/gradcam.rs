//! Conv-gradient class activation maps over the last conv layer.

use super::{ExplainOptions, Heatmap, HeatmapFlags, Method};
use crate::attribution::gatr::interpolate_to_waveform;
use crate::error::Result;
use crate::model::{backward_from_class, forward, ModelParams};
use crate::signal::Waveform;

/// Rectified channel-weighted activation map. `weights_c` is the frame
/// average of the feature-map gradient for channel `c`; the map is
/// `relu(sum_c weight_c * F_c)` per frame.
pub fn cam_from_features(
    features: &[f64],
    d_features: &[f64],
    channels: usize,
    frames: usize,
) -> Vec<f64> {
    debug_assert_eq!(features.len(), channels * frames);
    debug_assert_eq!(d_features.len(), channels * frames);
    let weights: Vec<f64> = (0..channels)
        .map(|c| d_features[c * frames..(c + 1) * frames].iter().sum::<f64>() / frames as f64)
        .collect();
    (0..frames)
        .map(|t| {
            let v: f64 = (0..channels)
                .map(|c| weights[c] * features[c * frames + t])
                .sum();
            v.max(0.0)
        })
        .collect()
}

pub fn grad_cam(
    params: &ModelParams,
    w: &Waveform,
    class: usize,
    opts: &ExplainOptions,
) -> Result<Heatmap> {
    let (trace, _) = forward(params, w)?;
    let (grad, _) = backward_from_class(params, &trace, class, opts.target)?;
    let frames = *trace.conv_len.last().unwrap();
    let channels = params.config.conv.last().unwrap().out_channels;
    let map = cam_from_features(trace.conv_out.last().unwrap(), &grad.d_conv_feat, channels, frames);
    let scores = interpolate_to_waveform(&map, w.len(), params.config.total_stride());
    assert!(
        scores.iter().all(|&v| v >= 0.0 && v.is_finite()),
        "activation map must be non-negative and finite"
    );
    let degenerate = scores.iter().all(|&v| v == 0.0);
    Ok(Heatmap {
        scores,
        method: Method::GradCam,
        class,
        flags: HeatmapFlags {
            degenerate,
            weight_fallback: false,
        },
    })
}
