//! Positive/negative perturbation tests: noise-mask the highest- or
//! lowest-scored fraction of timesteps and track the EER over the fraction
//! grid.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{eer, ScoreSet};
use crate::attribution::Heatmap;
use crate::error::{Error, Result};
use crate::metrics::Scorer;
use crate::seeding;
use crate::signal::{noise_mask, Utterance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Polarity {
    /// Mask the highest-scored timesteps.
    Positive,
    /// Mask the lowest-scored timesteps.
    Negative,
}

impl Polarity {
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Positive => "positive",
            Polarity::Negative => "negative",
        }
    }
}

/// How the error rate at each fraction is computed.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
#[derive(Default)]
pub enum ThresholdMode {
    /// Recompute the EER (its own operating point) on the masked scores.
    #[default]
    FreshPerFraction,
    /// Hold the unperturbed threshold fixed and report the mean of the two
    /// error rates at that operating point.
    FixedFromUnperturbed(f64),
}


/// Exactly `floor(n * len)` indices with the highest (positive) or lowest
/// (negative) scores; ties break toward the smaller sample index. The
/// returned set is sorted ascending.
pub fn select_fraction(scores: &[f64], n: f64, polarity: Polarity) -> Vec<usize> {
    assert!(n > 0.0 && n < 1.0, "fraction must be in (0, 1)");
    let k = (n * scores.len() as f64).floor() as usize;
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    match polarity {
        Polarity::Positive => idx.sort_unstable_by(|&a, &b| {
            scores[b]
                .partial_cmp(&scores[a])
                .unwrap()
                .then(a.cmp(&b))
        }),
        Polarity::Negative => idx.sort_unstable_by(|&a, &b| {
            scores[a]
                .partial_cmp(&scores[b])
                .unwrap()
                .then(a.cmp(&b))
        }),
    }
    let mut out: Vec<usize> = idx.into_iter().take(k).collect();
    out.sort_unstable();
    out
}

#[derive(Debug, Clone)]
pub struct PerturbationCurve {
    pub polarity: Polarity,
    pub n_grid: Vec<f64>,
    /// EER (percent) at each fraction.
    pub eer_percent: Vec<f64>,
    /// Trapezoidal integral of the curve divided by the grid span, in EER
    /// percent units.
    pub auc: f64,
}

/// The fraction grid used throughout: 10% to 90% in steps of 10%.
pub fn default_n_grid() -> Vec<f64> {
    (1..=9).map(|i| i as f64 / 10.0).collect()
}

/// Run one polarity of the perturbation test. Masking noise is seeded per
/// (utterance, polarity, fraction), so results are independent of thread
/// count and evaluation order.
pub fn perturbation_test<S: Scorer>(
    scorer: &S,
    utterances: &[Utterance],
    heatmaps: &[Heatmap],
    polarity: Polarity,
    n_grid: &[f64],
    seed: u64,
    mode: ThresholdMode,
) -> Result<PerturbationCurve> {
    if utterances.len() != heatmaps.len() {
        return Err(Error::Shape(format!(
            "{} utterances vs {} heatmaps",
            utterances.len(),
            heatmaps.len()
        )));
    }
    if n_grid.len() < 2 {
        return Err(Error::Config("n_grid needs at least two fractions".into()));
    }

    let mut eers = Vec::with_capacity(n_grid.len());
    for (gi, &n) in n_grid.iter().enumerate() {
        if !(n > 0.0 && n < 1.0) {
            return Err(Error::Config(format!("fraction {n} outside (0, 1)")));
        }
        let scores: Vec<f64> = utterances
            .par_iter()
            .zip(heatmaps)
            .map(|(u, h)| -> Result<f64> {
                if h.scores.len() != u.waveform.len() {
                    return Err(Error::Shape(format!(
                        "utterance {}: heatmap length {} vs waveform {}",
                        u.id,
                        h.scores.len(),
                        u.waveform.len()
                    )));
                }
                let picked = select_fraction(&h.scores, n, polarity);
                let mask_seed = seeding::derive_u64(
                    seed,
                    &["perturb", &u.id, polarity.as_str(), &gi.to_string()],
                );
                let masked = noise_mask(&u.waveform, &picked, mask_seed);
                scorer.class_probs(&masked).map(|p| p[1])
            })
            .collect::<Result<Vec<_>>>()?;

        let set = ScoreSet {
            scores,
            is_spoof: utterances.iter().map(|u| u.label.is_spoof()).collect(),
        };
        let rate = match mode {
            ThresholdMode::FreshPerFraction => eer(&set)?.eer_percent,
            ThresholdMode::FixedFromUnperturbed(threshold) => {
                let mut fp = 0usize;
                let mut fnr = 0usize;
                let mut bona = 0usize;
                let mut spoof = 0usize;
                for (&s, &is_spoof) in set.scores.iter().zip(&set.is_spoof) {
                    if is_spoof {
                        spoof += 1;
                        if s < threshold {
                            fnr += 1;
                        }
                    } else {
                        bona += 1;
                        if s >= threshold {
                            fp += 1;
                        }
                    }
                }
                if bona == 0 || spoof == 0 {
                    return Err(Error::Data("both classes required".into()));
                }
                50.0 * (fp as f64 / bona as f64 + fnr as f64 / spoof as f64)
            }
        };
        eers.push(rate);
    }

    let span = n_grid[n_grid.len() - 1] - n_grid[0];
    let mut integral = 0.0;
    for i in 1..n_grid.len() {
        integral += 0.5 * (eers[i] + eers[i - 1]) * (n_grid[i] - n_grid[i - 1]);
    }
    Ok(PerturbationCurve {
        polarity,
        n_grid: n_grid.to_vec(),
        eer_percent: eers,
        auc: integral / span,
    })
}
