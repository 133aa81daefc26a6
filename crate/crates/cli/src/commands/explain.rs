//! `rlens explain`: one heatmap per utterance for the chosen method, using
//! the ground-truth class.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use rayon::prelude::*;

use rlens_core::attribution::{
    gatr, grad_cam, gradient_shap, save_heatmap, ExplainOptions, LayerOrder,
};
use rlens_core::error::Result;
use rlens_core::model::{load_checkpoint, ScoreTarget};
use rlens_core::seeding;

use crate::commands::load_sorted;
use crate::provenance::{config_hash, write_provenance, Provenance};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Gatr,
    Gradcam,
    Gradshap,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum LayerOrderArg {
    FirstToLast,
    LastToFirst,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ScoreTargetArg {
    Logit,
    Probability,
}

#[derive(Debug, Args)]
pub struct ExplainArgs {
    #[arg(long)]
    pub checkpoint: PathBuf,

    #[arg(long)]
    pub manifest: PathBuf,

    #[arg(long, env = "RLENS_METHOD", value_enum)]
    pub method: MethodArg,

    /// Output directory for <id>.f32 score files and <id>.json sidecars.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, env = "RLENS_SEED", default_value_t = 7)]
    pub seed: u64,

    /// Interpolation draws for gradshap.
    #[arg(long, default_value_t = 20)]
    pub shap_samples: usize,

    /// Direction of the per-layer relevancy updates.
    #[arg(long, value_enum, default_value_t = LayerOrderArg::FirstToLast)]
    pub layer_order: LayerOrderArg,

    /// Score the class gradient against the logit or the probability.
    #[arg(long, value_enum, default_value_t = ScoreTargetArg::Logit)]
    pub score_target: ScoreTargetArg,
}

pub fn run(args: &ExplainArgs) -> Result<()> {
    let params = load_checkpoint(&args.checkpoint)?;
    let utterances = load_sorted(&args.manifest)?;
    let opts = ExplainOptions {
        target: match args.score_target {
            ScoreTargetArg::Logit => ScoreTarget::Logit,
            ScoreTargetArg::Probability => ScoreTarget::Probability,
        },
        layer_order: match args.layer_order {
            LayerOrderArg::FirstToLast => LayerOrder::FirstToLast,
            LayerOrderArg::LastToFirst => LayerOrder::LastToFirst,
        },
        shap_samples: args.shap_samples,
    };

    utterances
        .par_iter()
        .map(|u| {
            let class = u.label.class_index();
            let heatmap = match args.method {
                MethodArg::Gatr => gatr(&params, &u.waveform, class, &opts)?,
                MethodArg::Gradcam => grad_cam(&params, &u.waveform, class, &opts)?,
                MethodArg::Gradshap => {
                    let seed = seeding::derive_u64(args.seed, &["gradshap", &u.id]);
                    gradient_shap(&params, &u.waveform, class, &opts, seed)?
                }
            };
            save_heatmap(&args.out, &u.id, &heatmap)
        })
        .collect::<Result<Vec<_>>>()?;

    write_provenance(
        &args.out,
        &Provenance {
            command: "explain",
            version: 1,
            seed: Some(args.seed),
            config_sha256: Some(config_hash(&(
                format!("{:?}", args.method),
                args.shap_samples,
                format!("{:?}", args.layer_order),
                format!("{:?}", args.score_target),
            ))?),
        },
    )?;

    println!(
        "explain: wrote {} heatmaps to {}",
        utterances.len(),
        args.out.display()
    );
    Ok(())
}
