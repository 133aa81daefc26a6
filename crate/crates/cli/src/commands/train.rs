//! `rlens train`: fit the classifier and report the held-out EER.

use std::fs;
use std::path::PathBuf;

use clap::Args;

use rlens_core::error::{Error, Result};
use rlens_core::model::{save_checkpoint, train};
use rlens_core::reports::scores_csv;

use crate::commands::load_sorted;
use crate::config::{load_json_config, TrainConfig};
use crate::provenance::{config_hash, write_provenance, Provenance};

#[derive(Debug, Args)]
pub struct TrainArgs {
    /// Training manifest.
    #[arg(long)]
    pub manifest: PathBuf,

    /// Held-out manifest for the reported EER.
    #[arg(long)]
    pub heldout: PathBuf,

    /// Output directory: model.ckpt, train_log.json, heldout_scores.csv.
    #[arg(long)]
    pub out: PathBuf,

    /// JSON model + optimizer configuration (all fields optional).
    #[arg(long)]
    pub config: Option<PathBuf>,

    #[arg(long, env = "RLENS_SEED", default_value_t = 7)]
    pub seed: u64,
}

pub fn run(args: &TrainArgs) -> Result<()> {
    let config: TrainConfig = load_json_config(args.config.as_deref())?;
    let train_set = load_sorted(&args.manifest)?;
    let heldout = load_sorted(&args.heldout)?;

    let (params, log, score_rows) =
        train(&train_set, &heldout, &config.model, &config.hyper, args.seed)?;

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    save_checkpoint(&args.out.join("model.ckpt"), &params)?;

    let log_path = args.out.join("train_log.json");
    let log_json = serde_json::to_string_pretty(&log)
        .map_err(|e| Error::Data(format!("log serialization: {e}")))?;
    fs::write(&log_path, log_json).map_err(|e| Error::io(&log_path, e))?;

    let scores_path = args.out.join("heldout_scores.csv");
    fs::write(&scores_path, scores_csv(&score_rows)).map_err(|e| Error::io(&scores_path, e))?;

    write_provenance(
        &args.out,
        &Provenance {
            command: "train",
            version: 1,
            seed: Some(args.seed),
            config_sha256: Some(config_hash(&config)?),
        },
    )?;

    println!(
        "train: {} epochs, heldout EER {:.6}% at threshold {:.6}",
        log.epochs.len(),
        log.heldout_eer_percent,
        log.heldout_threshold
    );
    Ok(())
}
