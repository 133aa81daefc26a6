//! `rlens gen`: synthesize the train/eval/partial splits.

use std::fs;
use std::path::PathBuf;

use clap::Args;
use rayon::prelude::*;

use rlens_core::error::{Error, Result};
use rlens_core::seeding;
use rlens_core::signal::{save_dataset, synth_partial, synth_utterance, Label, Utterance};

use crate::config::{load_json_config, GenConfig};
use crate::provenance::{config_hash, write_provenance, Provenance};

#[derive(Debug, Args)]
pub struct GenArgs {
    /// Output directory; receives train/, eval/, partial/ subdirectories.
    #[arg(long)]
    pub out: PathBuf,

    #[arg(long, env = "RLENS_SEED", default_value_t = 7)]
    pub seed: u64,

    /// JSON generator configuration (all fields optional).
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Also write 16-bit PCM WAV copies for listening.
    #[arg(long)]
    pub wav: bool,
}

pub fn run(args: &GenArgs) -> Result<()> {
    let config: GenConfig = load_json_config(args.config.as_deref())?;
    config.generator.validate()?;
    config.partial_spec().validate()?;
    let counts = config.counts();

    // Disjoint per-split seeds derived from the global one.
    let split_seed = |name: &str| seeding::derive_u64(args.seed, &["split", name]);

    let full = |tag: &str, label: Label, count: usize, seed: u64| -> Result<Vec<Utterance>> {
        (0..count)
            .into_par_iter()
            .map(|i| {
                let id = format!("{tag}-{}-{i:04}", label.as_str());
                let mut u =
                    synth_utterance(&config.generator, label, seeding::derive_u64(seed, &[&id]))?;
                u.id = id;
                Ok(u)
            })
            .collect()
    };

    let train_seed = split_seed("train");
    let mut train = full("train", Label::Bonafide, counts.train_bonafide, train_seed)?;
    train.extend(full("train", Label::Spoof, counts.train_spoof, train_seed)?);
    train.sort_by(|a, b| a.id.cmp(&b.id));

    let eval_seed = split_seed("eval");
    let mut eval = full("eval", Label::Bonafide, counts.eval_bonafide, eval_seed)?;
    eval.extend(full("eval", Label::Spoof, counts.eval_spoof, eval_seed)?);
    eval.sort_by(|a, b| a.id.cmp(&b.id));

    let partial_seed = split_seed("partial");
    let pspec = config.partial_spec();
    let mut partial = full("partial", Label::Bonafide, counts.partial_bonafide, partial_seed)?;
    let mixed: Vec<Utterance> = (0..counts.partial_mixed)
        .into_par_iter()
        .map(|i| {
            let id = format!("partial-mixed-{i:04}");
            let mut u = synth_partial(&pspec, seeding::derive_u64(partial_seed, &[&id]))?;
            u.id = id;
            Ok::<_, Error>(u)
        })
        .collect::<Result<Vec<_>>>()?;
    partial.extend(mixed);
    partial.sort_by(|a, b| a.id.cmp(&b.id));

    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    save_dataset(&args.out.join("train"), &train, train_seed)?;
    save_dataset(&args.out.join("eval"), &eval, eval_seed)?;
    save_dataset(&args.out.join("partial"), &partial, partial_seed)?;
    if args.wav {
        for (split, utts) in [("train", &train), ("eval", &eval), ("partial", &partial)] {
            for u in utts.iter() {
                let path = args.out.join(split).join(format!("{}.wav", u.id));
                rlens_core::signal::write_wav(&path, &u.waveform)?;
            }
        }
    }

    // Keep the resolved generator settings next to the splits.
    let config_json = serde_json::to_string_pretty(&config)
        .map_err(|e| Error::Data(format!("config serialization: {e}")))?;
    let config_path = args.out.join("gen_config.json");
    fs::write(&config_path, &config_json).map_err(|e| Error::io(&config_path, e))?;

    write_provenance(
        &args.out,
        &Provenance {
            command: "gen",
            version: 1,
            seed: Some(args.seed),
            config_sha256: Some(config_hash(&config)?),
        },
    )?;

    println!(
        "gen: wrote {} train, {} eval, {} partial utterances to {}",
        train.len(),
        eval.len(),
        partial.len(),
        args.out.display()
    );
    Ok(())
}
