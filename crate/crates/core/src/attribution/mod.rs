//! Class-specific heatmap attribution: gradient-weighted transformer
//! relevancy, conv-gradient activation maps, and expected input gradients
//! with zero baselines. All methods emit non-negative length-T scores.

mod gatr;
mod gradcam;
mod gradshap;
mod io;

pub use gatr::{
    gatr, gatr_with_relevancy, gradient_row_weights, head_mean_positive,
    interpolate_to_waveform, relevancy_update, weighted_row_average, LayerOrder,
};
pub use gradcam::{cam_from_features, grad_cam};
pub use gradshap::{gradient_shap, gradient_shap_with};
pub use io::{load_heatmap, save_heatmap, HeatmapSidecar};

use serde::{Deserialize, Serialize};

use crate::model::ScoreTarget;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Gatr,
    GradCam,
    GradShap,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Gatr => "gatr",
            Method::GradCam => "gradcam",
            Method::GradShap => "gradshap",
        }
    }
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct HeatmapFlags {
    /// Every score is zero.
    pub degenerate: bool,
    /// Gradient row weights vanished; the row average fell back to uniform
    /// weighting.
    pub weight_fallback: bool,
}

impl HeatmapFlags {
    pub fn names(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.degenerate {
            out.push("degenerate".to_string());
        }
        if self.weight_fallback {
            out.push("weight_fallback".to_string());
        }
        out
    }

    pub fn from_names(names: &[String]) -> Self {
        HeatmapFlags {
            degenerate: names.iter().any(|n| n == "degenerate"),
            weight_fallback: names.iter().any(|n| n == "weight_fallback"),
        }
    }
}

/// Non-negative per-sample relevance scores for one utterance.
#[derive(Debug, Clone)]
pub struct Heatmap {
    pub scores: Vec<f64>,
    pub method: Method,
    /// Class of interest the gradients were taken for.
    pub class: usize,
    pub flags: HeatmapFlags,
}

impl Heatmap {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

/// Scale scores so the maximum is 1; an all-zero heatmap is returned
/// unchanged with the degenerate flag set. Idempotent.
pub fn peak_normalize_heatmap(h: &Heatmap) -> Heatmap {
    let max = h.scores.iter().fold(0.0f64, |m, &v| m.max(v));
    let mut out = h.clone();
    if max == 0.0 {
        out.flags.degenerate = true;
        return out;
    }
    for v in out.scores.iter_mut() {
        *v /= max;
    }
    out
}

/// Options shared by the attribution methods.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(default)]
pub struct ExplainOptions {
    pub target: ScoreTarget,
    pub layer_order: gatr::LayerOrder,
    /// Interpolation draws for the expected-gradients method.
    pub shap_samples: usize,
}

impl Default for ExplainOptions {
    fn default() -> Self {
        ExplainOptions {
            target: ScoreTarget::Logit,
            layer_order: gatr::LayerOrder::FirstToLast,
            shap_samples: 20,
        }
    }
}
