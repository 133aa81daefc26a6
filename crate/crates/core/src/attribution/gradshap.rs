//! Expected input gradients against a zero baseline, negatives clipped.
//!
//! Each draw scales the input by alpha ~ U(0,1), evaluates the class-score
//! gradient there, and multiplies by the input (the input-minus-baseline
//! difference). Scores are averaged over draws and rectified.

use rand::Rng;

use super::{ExplainOptions, Heatmap, HeatmapFlags, Method};
use crate::error::{Error, Result};
use crate::model::{backward_from_class, forward, ModelParams};
use crate::seeding;
use crate::signal::Waveform;

/// Generic core over any gradient oracle, used both by the model-bound
/// entry point and by linear-model exactness tests.
pub fn gradient_shap_with<F>(
    grad_fn: F,
    input: &[f64],
    samples: usize,
    seed: u64,
) -> Result<Vec<f64>>
where
    F: Fn(&[f64]) -> Result<Vec<f64>>,
{
    if samples == 0 {
        return Err(Error::Config("gradient_shap needs samples >= 1".into()));
    }
    let mut rng = seeding::substream(seed, &["gradshap"]);
    let mut acc = vec![0.0; input.len()];
    for _ in 0..samples {
        let alpha: f64 = rng.random_range(0.0..1.0);
        let scaled: Vec<f64> = input.iter().map(|&v| alpha * v).collect();
        let grad = grad_fn(&scaled)?;
        if grad.len() != input.len() {
            return Err(Error::Shape(format!(
                "gradient length {} vs input length {}",
                grad.len(),
                input.len()
            )));
        }
        for ((a, &g), &x) in acc.iter_mut().zip(&grad).zip(input) {
            *a += x * g;
        }
    }
    let inv = 1.0 / samples as f64;
    Ok(acc.iter().map(|&v| (v * inv).max(0.0)).collect())
}

/// Expected-gradients heatmap for one utterance; deterministic per seed.
pub fn gradient_shap(
    params: &ModelParams,
    w: &Waveform,
    class: usize,
    opts: &ExplainOptions,
    seed: u64,
) -> Result<Heatmap> {
    let sr = w.sample_rate;
    let scores = gradient_shap_with(
        |x| {
            let (trace, _) = forward(params, &Waveform::new(x.to_vec(), sr))?;
            let (grad, _) = backward_from_class(params, &trace, class, opts.target)?;
            Ok(grad.d_input)
        },
        &w.samples,
        opts.shap_samples,
        seed,
    )?;
    assert!(
        scores.iter().all(|&v| v >= 0.0 && v.is_finite()),
        "expected-gradients heatmap must be non-negative and finite"
    );
    let degenerate = scores.iter().all(|&v| v == 0.0);
    Ok(Heatmap {
        scores,
        method: Method::GradShap,
        class,
        flags: HeatmapFlags {
            degenerate,
            weight_fallback: false,
        },
    })
}
