//! JSON run configurations with full defaults, so every flag file is
//! optional.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use rlens_core::error::{Error, Result};
use rlens_core::model::{ModelConfig, TrainHyper};
use rlens_core::signal::{GeneratorSpec, PartialSpec, PartialStart};

/// Partial-spoof layout settings (the waveform parameters come from the
/// shared generator spec).
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct PartialShape {
    pub segments: (usize, usize),
    pub spoof_fraction: f64,
    pub crossfade_ms: f64,
    pub start: PartialStart,
}

impl Default for PartialShape {
    fn default() -> Self {
        let d = PartialSpec::default();
        PartialShape {
            segments: d.segments,
            spoof_fraction: d.spoof_fraction,
            crossfade_ms: d.crossfade_ms,
            start: d.start,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct SplitCounts {
    pub train_bonafide: usize,
    pub train_spoof: usize,
    pub eval_bonafide: usize,
    pub eval_spoof: usize,
    /// Fully bona fide utterances mixed into the partial split so its EER
    /// threshold is defined.
    pub partial_bonafide: usize,
    pub partial_mixed: usize,
}

impl Default for SplitCounts {
    fn default() -> Self {
        SplitCounts {
            train_bonafide: 150,
            train_spoof: 150,
            eval_bonafide: 100,
            eval_spoof: 100,
            partial_bonafide: 60,
            partial_mixed: 140,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct GenConfig {
    pub generator: GeneratorSpec,
    pub partial: PartialShape,
    pub counts: SplitCounts,
}

impl GenConfig {
    pub fn partial_spec(&self) -> PartialSpec {
        PartialSpec {
            base: self.generator.clone(),
            segments: self.partial.segments,
            spoof_fraction: self.partial.spoof_fraction,
            crossfade_ms: self.partial.crossfade_ms,
            start: self.partial.start,
        }
    }

    pub fn counts(&self) -> SplitCounts {
        self.counts.clone()
    }
}

#[derive(Debug, Clone, Serialize, Deserialize, Default)]
#[serde(default)]
pub struct TrainConfig {
    pub model: ModelConfig,
    pub hyper: TrainHyper,
}

pub fn load_json_config<T: serde::de::DeserializeOwned + Default>(
    path: Option<&Path>,
) -> Result<T> {
    match path {
        None => Ok(T::default()),
        Some(p) => {
            let text = fs::read_to_string(p).map_err(|e| Error::io(p, e))?;
            serde_json::from_str(&text)
                .map_err(|e| Error::Config(format!("{}: {e}", p.display())))
        }
    }
}
