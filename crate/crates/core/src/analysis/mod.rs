//! Category construction (energy VAD, energy tertiles, external alignment
//! files) and dataset-scale hypothesis metrics: relative contribution
//! quantification plus relevance mass/rank accuracy.

mod categories;
mod localization;
mod rcq;

pub use categories::{
    energy_tertiles, energy_vad, frame_rms, load_category_file, TertileConfig, VadConfig,
};
pub use localization::{rma, rra};
pub use rcq::{normalize_rcq, rcq, RcqEntry, RcqReport};

use crate::error::{Error, Result};

/// Per-sample category ids over a small named vocabulary.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CategoryMap {
    /// Index into `vocab` for every sample.
    pub labels: Vec<u8>,
    pub vocab: Vec<String>,
}

impl CategoryMap {
    pub fn new(labels: Vec<u8>, vocab: Vec<String>) -> Result<Self> {
        if vocab.is_empty() || vocab.len() > u8::MAX as usize {
            return Err(Error::Data(format!(
                "category vocabulary size {} unsupported",
                vocab.len()
            )));
        }
        if labels.iter().any(|&l| l as usize >= vocab.len()) {
            return Err(Error::Data("category label outside vocabulary".into()));
        }
        Ok(CategoryMap { labels, vocab })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn name(&self, sample: usize) -> &str {
        &self.vocab[self.labels[sample] as usize]
    }

    /// Build from BR/SR region labels.
    pub fn from_regions(regions: &[crate::signal::RegionLabel]) -> Self {
        CategoryMap {
            labels: regions.iter().map(|r| r.as_byte()).collect(),
            vocab: vec!["BR".to_string(), "SR".to_string()],
        }
    }
}
