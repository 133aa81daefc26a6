//! Frame-energy category builders and the external category-file loader.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CategoryMap;
use crate::error::{Error, Result};
use crate::signal::Waveform;

/// Energy VAD settings. A frame is speech when its RMS exceeds
/// `min(theta * median_frame_rms, abs_cap)`; the absolute cap keeps signals
/// that are loud everywhere (median equals the speech level) from being
/// classified as all-silence. Speech decisions extend `hangover` frames.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct VadConfig {
    pub frame_ms: f64,
    pub theta: f64,
    pub abs_cap: f64,
    pub hangover: usize,
}

impl Default for VadConfig {
    fn default() -> Self {
        VadConfig {
            frame_ms: 10.0,
            theta: 2.0,
            abs_cap: 0.1,
            hangover: 2,
        }
    }
}

/// RMS per frame of `frame_len` samples (the final partial frame counts).
pub fn frame_rms(w: &Waveform, frame_len: usize) -> Vec<f64> {
    assert!(frame_len > 0);
    w.samples
        .chunks(frame_len)
        .map(|c| (c.iter().map(|&v| v * v).sum::<f64>() / c.len() as f64).sqrt())
        .collect()
}

fn frame_len(w: &Waveform, frame_ms: f64) -> usize {
    ((frame_ms / 1000.0 * w.sample_rate as f64).round() as usize).max(1)
}

/// Speech / non-speech categories from frame energy.
pub fn energy_vad(w: &Waveform, config: &VadConfig) -> CategoryMap {
    let flen = frame_len(w, config.frame_ms);
    let rms = frame_rms(w, flen);

    let mut sorted = rms.clone();
    sorted.sort_unstable_by(|a, b| a.partial_cmp(b).unwrap());
    let median = if sorted.is_empty() {
        0.0
    } else if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        0.5 * (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2])
    };
    let threshold = (config.theta * median).min(config.abs_cap);

    let mut speech: Vec<bool> = rms.iter().map(|&r| r > threshold).collect();
    // Hang-over: keep the decision open for a couple of frames after speech.
    if config.hangover > 0 {
        let raw = speech.clone();
        for (i, &is_speech) in raw.iter().enumerate() {
            if is_speech {
                let end = (i + 1 + config.hangover).min(raw.len());
                speech[i + 1..end].fill(true);
            }
        }
    }

    let labels: Vec<u8> = (0..w.len())
        .map(|i| if speech[i / flen] { 0 } else { 1 })
        .collect();
    CategoryMap {
        labels,
        vocab: vec!["S".to_string(), "NS".to_string()],
    }
}

/// Log-scale amplitude split for the speech tertiles.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct TertileConfig {
    /// Floor keeping the log finite; boundaries sit at `floor^(2/3)` and
    /// `floor^(1/3)`.
    pub amp_floor: f64,
}

impl Default for TertileConfig {
    fn default() -> Self {
        TertileConfig { amp_floor: 1e-3 }
    }
}

impl TertileConfig {
    /// (low/mid, mid/high) frame-RMS boundaries.
    pub fn boundaries(&self) -> (f64, f64) {
        let log_min = self.amp_floor.ln();
        let b1 = (log_min + (0.0 - log_min) / 3.0).exp();
        let b2 = (log_min + 2.0 * (0.0 - log_min) / 3.0).exp();
        (b1, b2)
    }
}

/// Refine a speech/non-speech map into `{NS, LS, MS, HS}` by frame RMS.
/// Non-speech samples keep NS; below-floor speech counts as LS.
pub fn energy_tertiles(
    w: &Waveform,
    vad: &CategoryMap,
    vad_config: &VadConfig,
    config: &TertileConfig,
) -> Result<CategoryMap> {
    if vad.len() != w.len() {
        return Err(Error::Shape(format!(
            "vad map length {} vs waveform {}",
            vad.len(),
            w.len()
        )));
    }
    let speech_idx = vad
        .vocab
        .iter()
        .position(|n| n == "S")
        .ok_or_else(|| Error::Data("vad map lacks an S category".into()))? as u8;

    let flen = frame_len(w, vad_config.frame_ms);
    let rms = frame_rms(w, flen);
    let (b1, b2) = config.boundaries();

    let labels: Vec<u8> = (0..w.len())
        .map(|i| {
            if vad.labels[i] != speech_idx {
                0 // NS
            } else {
                let a = rms[i / flen];
                if a < b1 {
                    1 // LS (below-floor speech included)
                } else if a < b2 {
                    2 // MS
                } else {
                    3 // HS
                }
            }
        })
        .collect();
    CategoryMap::new(
        labels,
        vec![
            "NS".to_string(),
            "LS".to_string(),
            "MS".to_string(),
            "HS".to_string(),
        ],
    )
}

/// Load per-sample categories from a CSV of `start_sample,end_sample,name`
/// rows (end exclusive, no header). Rows must tile `[0, T)` exactly.
pub fn load_category_file(path: &Path, t: usize) -> Result<CategoryMap> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let mut rows: Vec<(usize, usize, String)> = Vec::new();
    for (lineno, line) in text.lines().enumerate() {
        let line = line.trim();
        if line.is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(Error::Data(format!(
                "{}:{}: expected start,end,category",
                path.display(),
                lineno + 1
            )));
        }
        let start: usize = parts[0]
            .parse()
            .map_err(|_| Error::Data(format!("{}:{}: bad start", path.display(), lineno + 1)))?;
        let end: usize = parts[1]
            .parse()
            .map_err(|_| Error::Data(format!("{}:{}: bad end", path.display(), lineno + 1)))?;
        if start >= end {
            return Err(Error::Data(format!(
                "{}:{}: empty or negative span",
                path.display(),
                lineno + 1
            )));
        }
        if end > t {
            return Err(Error::Data(format!(
                "{}:{}: end {} beyond length {}",
                path.display(),
                lineno + 1,
                end,
                t
            )));
        }
        rows.push((start, end, parts[2].to_string()));
    }
    rows.sort_by_key(|r| r.0);

    let mut vocab: Vec<String> = Vec::new();
    let mut labels = vec![0u8; t];
    let mut cursor = 0usize;
    for (start, end, name) in rows {
        if start > cursor {
            return Err(Error::Data(format!(
                "{}: gap in coverage at samples [{}, {})",
                path.display(),
                cursor,
                start
            )));
        }
        if start < cursor {
            return Err(Error::Data(format!(
                "{}: overlap at sample {}",
                path.display(),
                start
            )));
        }
        let idx = match vocab.iter().position(|v| v == &name) {
            Some(i) => i,
            None => {
                vocab.push(name);
                vocab.len() - 1
            }
        } as u8;
        labels[start..end].iter_mut().for_each(|l| *l = idx);
        cursor = end;
    }
    if cursor != t {
        return Err(Error::Data(format!(
            "{}: coverage stops at {} of {}",
            path.display(),
            cursor,
            t
        )));
    }
    CategoryMap::new(labels, vocab)
}
