//! Faithfulness of heatmap-modulated inputs: confidence increase (AI),
//! drop (AD), gain (AG), and prediction fidelity at the EER operating point
//! (Fid-In).

use rayon::prelude::*;

use crate::attribution::{peak_normalize_heatmap, Heatmap};
use crate::error::{Error, Result};
use crate::model::{forward, ModelParams};
use crate::signal::{apply_heatmap, Utterance, Waveform};

/// Anything that can produce two-class probabilities for a waveform.
pub trait Scorer: Sync {
    fn class_probs(&self, w: &Waveform) -> Result<[f64; 2]>;
}

impl Scorer for ModelParams {
    fn class_probs(&self, w: &Waveform) -> Result<[f64; 2]> {
        forward(self, w).map(|(trace, _)| trace.probs)
    }
}

#[derive(Debug, Clone)]
pub struct UtteranceFaithfulness {
    pub id: String,
    /// Confidence in the class of interest on the original input.
    pub f_orig: f64,
    /// Confidence on the heatmap-modulated input.
    pub f_mod: f64,
    pub ai_term: bool,
    /// `max(0, f - f~) / f`, absent when `f = 0`.
    pub ad_term: Option<f64>,
    /// `max(0, f~ - f) / (1 - f)`, absent when `f = 1`.
    pub ag_term: Option<f64>,
    pub fid_match: bool,
}

#[derive(Debug, Clone)]
pub struct FaithfulnessReport {
    /// Average increase, percent of utterances.
    pub ai: f64,
    /// Average drop, percent.
    pub ad: f64,
    /// Average gain, percent.
    pub ag: f64,
    /// Fraction of utterances whose EER-threshold prediction is unchanged.
    pub fid_in: f64,
    pub ad_skipped: usize,
    pub ag_skipped: usize,
    pub per_utterance: Vec<UtteranceFaithfulness>,
}

/// Evaluate faithfulness for one method's heatmaps (aligned with the
/// utterances). `threshold` is the EER operating point of the unmodified
/// dataset, reused for the modified waveforms.
pub fn faithfulness<S: Scorer>(
    scorer: &S,
    utterances: &[Utterance],
    heatmaps: &[Heatmap],
    threshold: f64,
) -> Result<FaithfulnessReport> {
    if utterances.len() != heatmaps.len() {
        return Err(Error::Shape(format!(
            "{} utterances vs {} heatmaps",
            utterances.len(),
            heatmaps.len()
        )));
    }

    let per_utterance: Vec<UtteranceFaithfulness> = utterances
        .par_iter()
        .zip(heatmaps)
        .map(|(u, h)| -> Result<UtteranceFaithfulness> {
            let class = u.label.class_index();
            let normalized = peak_normalize_heatmap(h);
            let modified = apply_heatmap(&u.waveform, &normalized.scores)?;
            let p_orig = scorer.class_probs(&u.waveform)?;
            let p_mod = scorer.class_probs(&modified)?;
            let f = p_orig[class];
            let f_mod = p_mod[class];

            let ad_term = if f > 0.0 {
                Some((f - f_mod).max(0.0) / f)
            } else {
                None
            };
            let ag_term = if f < 1.0 {
                Some((f_mod - f).max(0.0) / (1.0 - f))
            } else {
                None
            };
            let pred = |p: [f64; 2]| p[1] >= threshold;
            Ok(UtteranceFaithfulness {
                id: u.id.clone(),
                f_orig: f,
                f_mod,
                ai_term: f_mod > f,
                ad_term,
                ag_term,
                fid_match: pred(p_orig) == pred(p_mod),
            })
        })
        .collect::<Result<Vec<_>>>()?;

    let n = per_utterance.len() as f64;
    let ai = 100.0 * per_utterance.iter().filter(|r| r.ai_term).count() as f64 / n;
    let ad_values: Vec<f64> = per_utterance.iter().filter_map(|r| r.ad_term).collect();
    let ag_values: Vec<f64> = per_utterance.iter().filter_map(|r| r.ag_term).collect();
    let mean = |v: &[f64]| {
        if v.is_empty() {
            0.0
        } else {
            v.iter().sum::<f64>() / v.len() as f64
        }
    };
    Ok(FaithfulnessReport {
        ai,
        ad: 100.0 * mean(&ad_values),
        ag: 100.0 * mean(&ag_values),
        fid_in: per_utterance.iter().filter(|r| r.fid_match).count() as f64 / n,
        ad_skipped: per_utterance.len() - ad_values.len(),
        ag_skipped: per_utterance.len() - ag_values.len(),
        per_utterance,
    })
}
