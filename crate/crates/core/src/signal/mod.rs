//! Waveform representation, normalization, masking, and the synthetic
//! artifact-planting dataset generator.

mod dataset;
mod synth;

pub use dataset::{
    load_dataset, read_audio, read_regions, save_dataset, write_audio, write_regions, write_wav,
    DatasetManifest, ManifestEntry, MANIFEST_VERSION,
};
pub use synth::{
    partial_layout, render_partial, synth_partial, synth_utterance, synth_utterance_with_meta,
    GeneratorSpec, PartialSpec, PartialStart, SynthMeta,
};

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::seeding;

/// A 1-D waveform: amplitude samples (nominally in `[-1, 1]`) at a fixed rate.
#[derive(Debug, Clone, PartialEq)]
pub struct Waveform {
    pub samples: Vec<f64>,
    pub sample_rate: u32,
}

impl Waveform {
    pub fn new(samples: Vec<f64>, sample_rate: u32) -> Self {
        Waveform {
            samples,
            sample_rate,
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }
}

/// Classifier-level ground truth for an utterance.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    Bonafide,
    Spoof,
    Partial,
}

impl Label {
    /// Class index used by the two-class model head. Partially spoofed
    /// utterances count as spoof.
    pub fn class_index(self) -> usize {
        match self {
            Label::Bonafide => 0,
            Label::Spoof | Label::Partial => 1,
        }
    }

    pub fn is_spoof(self) -> bool {
        self.class_index() == 1
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::Bonafide => "bonafide",
            Label::Spoof => "spoof",
            Label::Partial => "partial",
        }
    }
}

/// Per-sample region label for partially spoofed utterances.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RegionLabel {
    /// Bona fide region.
    Br,
    /// Spoof region.
    Sr,
}

impl RegionLabel {
    pub fn as_byte(self) -> u8 {
        match self {
            RegionLabel::Br => 0,
            RegionLabel::Sr => 1,
        }
    }

    pub fn from_byte(b: u8) -> Result<Self> {
        match b {
            0 => Ok(RegionLabel::Br),
            1 => Ok(RegionLabel::Sr),
            other => Err(Error::Data(format!("invalid region byte {other}"))),
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            RegionLabel::Br => "BR",
            RegionLabel::Sr => "SR",
        }
    }
}

/// A labelled utterance; `regions` is present exactly when `label` is
/// [`Label::Partial`] and then has one entry per sample.
#[derive(Debug, Clone)]
pub struct Utterance {
    pub id: String,
    pub waveform: Waveform,
    pub label: Label,
    pub regions: Option<Vec<RegionLabel>>,
}

impl Utterance {
    pub fn validate(&self) -> Result<()> {
        match (&self.regions, self.label) {
            (Some(r), Label::Partial) => {
                if r.len() != self.waveform.len() {
                    return Err(Error::Data(format!(
                        "utterance {}: {} region labels for {} samples",
                        self.id,
                        r.len(),
                        self.waveform.len()
                    )));
                }
            }
            (None, Label::Partial) => {
                return Err(Error::Data(format!(
                    "utterance {}: partial label without region labels",
                    self.id
                )))
            }
            (Some(_), _) => {
                return Err(Error::Data(format!(
                    "utterance {}: region labels on non-partial utterance",
                    self.id
                )))
            }
            (None, _) => {}
        }
        Ok(())
    }
}

/// Scale a waveform so its largest absolute sample is 1. An all-zero input
/// is returned unchanged with the degenerate flag set.
pub fn peak_normalize(w: &Waveform) -> (Waveform, bool) {
    let peak = w.samples.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
    if peak == 0.0 {
        return (w.clone(), true);
    }
    let samples = w.samples.iter().map(|&v| v / peak).collect();
    (Waveform::new(samples, w.sample_rate), false)
}

/// Elementwise product of a waveform and per-sample heatmap scores.
pub fn apply_heatmap(w: &Waveform, scores: &[f64]) -> Result<Waveform> {
    if scores.len() != w.len() {
        return Err(Error::Shape(format!(
            "heatmap length {} vs waveform length {}",
            scores.len(),
            w.len()
        )));
    }
    let samples = w
        .samples
        .iter()
        .zip(scores)
        .map(|(&x, &h)| x * h)
        .collect();
    Ok(Waveform::new(samples, w.sample_rate))
}

/// Replace the samples at `indices` with Gaussian noise of zero mean and the
/// same variance as the input waveform. All other samples are untouched.
/// Deterministic per seed; an empty index set is the identity.
///
/// Indices must lie in `[0, len)`; duplicates are collapsed.
pub fn noise_mask(w: &Waveform, indices: &[usize], seed: u64) -> Waveform {
    if indices.is_empty() {
        return w.clone();
    }
    let n = w.len();
    let mut idx: Vec<usize> = indices.to_vec();
    idx.sort_unstable();
    idx.dedup();
    assert!(
        idx.last().is_none_or(|&i| i < n),
        "noise_mask index out of range"
    );

    let mean = w.samples.iter().sum::<f64>() / n as f64;
    let var = if n > 1 {
        w.samples.iter().map(|&v| (v - mean).powi(2)).sum::<f64>() / (n as f64 - 1.0)
    } else {
        0.0
    };
    let sd = var.sqrt();

    let mut rng = seeding::substream(seed, &["noise-mask"]);
    let mut out = w.clone();
    for &i in &idx {
        let z: f64 = rng.sample(StandardNormal);
        out.samples[i] = sd * z;
    }
    out
}
