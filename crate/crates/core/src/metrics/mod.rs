//! Detection metrics: equal error rate, faithfulness of heatmap-modulated
//! inputs, and noise-mask perturbation curves.

mod faithfulness;
mod perturbation;

pub use faithfulness::{faithfulness, FaithfulnessReport, Scorer, UtteranceFaithfulness};
pub use perturbation::{
    default_n_grid, perturbation_test, select_fraction, PerturbationCurve, Polarity,
    ThresholdMode,
};

use crate::error::{Error, Result};

/// Per-utterance spoof scores with binary ground truth.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    pub scores: Vec<f64>,
    pub is_spoof: Vec<bool>,
}

impl ScoreSet {
    pub fn validate(&self) -> Result<()> {
        if self.scores.len() != self.is_spoof.len() {
            return Err(Error::Shape(format!(
                "{} scores vs {} labels",
                self.scores.len(),
                self.is_spoof.len()
            )));
        }
        let spoof = self.is_spoof.iter().filter(|&&s| s).count();
        if spoof == 0 || spoof == self.is_spoof.len() {
            return Err(Error::Data(
                "EER needs both classes present in the score set".into(),
            ));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EerResult {
    pub eer_percent: f64,
    pub threshold: f64,
    /// Set when the computed EER exceeds 50%, signalling inverted scores.
    pub inverted: bool,
}

/// Equal error rate with linear interpolation between adjacent operating
/// points. Scores are spoof probabilities; the false-positive rate counts
/// bona fide utterances at or above the threshold, the false-negative rate
/// counts spoof utterances below it.
pub fn eer(set: &ScoreSet) -> Result<EerResult> {
    set.validate()?;
    let mut spoof: Vec<f64> = Vec::new();
    let mut bona: Vec<f64> = Vec::new();
    for (&s, &is_spoof) in set.scores.iter().zip(&set.is_spoof) {
        if is_spoof {
            spoof.push(s);
        } else {
            bona.push(s);
        }
    }
    spoof.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    bona.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());

    let mut candidates: Vec<f64> = set.scores.clone();
    candidates.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    candidates.dedup();

    let fpr = |theta: f64| -> f64 {
        // bona fide with score >= theta
        let idx = bona.partition_point(|&v| v < theta);
        (bona.len() - idx) as f64 / bona.len() as f64
    };
    let fnr = |theta: f64| -> f64 {
        // spoof with score < theta
        spoof.partition_point(|&v| v < theta) as f64 / spoof.len() as f64
    };

    // D = FNR - FPR is nondecreasing in theta, from -1 up to +1. Walk the
    // operating points until D crosses zero and interpolate linearly.
    let mut prev_theta = candidates[0] - 1.0;
    let mut prev_d = -1.0f64;
    let mut prev_f = 1.0f64;
    let mut result = None;
    for &theta in candidates.iter().chain(std::iter::once(
        &(candidates[candidates.len() - 1] + 1.0),
    )) {
        let f = fpr(theta);
        let d = fnr(theta) - f;
        if d >= 0.0 {
            // prev_d < 0 strictly, so the divisor is positive.
            let (rate, threshold) = if d == 0.0 {
                (f, theta)
            } else {
                let alpha = -prev_d / (d - prev_d);
                (
                    prev_f + alpha * (f - prev_f),
                    prev_theta + alpha * (theta - prev_theta),
                )
            };
            result = Some((rate, threshold));
            break;
        }
        prev_theta = theta;
        prev_d = d;
        prev_f = f;
    }
    let (rate, threshold) = result.unwrap_or((0.5, candidates[0]));
    let eer_percent = rate * 100.0;
    Ok(EerResult {
        eer_percent,
        threshold,
        inverted: eer_percent > 50.0,
    })
}
