//! Adam trainer for the toy classifier, deterministic per seed.

use rand::seq::SliceRandom;
use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use super::{backward_seeded, forward, ModelConfig, ModelParams};
use crate::error::{Error, Result};
use crate::metrics::{eer, ScoreSet};
use crate::seeding;
use crate::signal::Utterance;

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainHyper {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub adam_eps: f64,
    pub batch_size: usize,
    pub epochs: usize,
    /// Stop once the epoch mean loss falls below this (0 disables).
    pub early_stop_loss: f64,
}

impl Default for TrainHyper {
    fn default() -> Self {
        TrainHyper {
            learning_rate: 1e-3,
            beta1: 0.9,
            beta2: 0.999,
            adam_eps: 1e-8,
            batch_size: 16,
            epochs: 20,
            early_stop_loss: 0.01,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpochLog {
    pub epoch: usize,
    pub mean_loss: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrainLog {
    pub epochs: Vec<EpochLog>,
    pub heldout_eer_percent: f64,
    pub heldout_threshold: f64,
    pub stopped_early: bool,
}

/// Seeded parameter initialization: scaled-normal weights, zero biases,
/// unit layer-norm gains, and a small classifier so the initial loss sits at
/// chance level.
pub fn init_params(config: &ModelConfig, seed: u64) -> ModelParams {
    let mut params = ModelParams::zeros(config);
    let mut rng = seeding::substream(seed, &["init"]);
    let d = config.d_model;

    for (i, layer) in params.conv.iter_mut().enumerate() {
        let fan_in = (config.conv_in_channels(i) * config.conv[i].kernel) as f64;
        let scale = (2.0 / fan_in).sqrt();
        for w in layer.weight.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *w = z * scale;
        }
    }
    let proj_scale = 1.0 / (d as f64).sqrt();
    let ffn_in_scale = (2.0 / d as f64).sqrt();
    let ffn_out_scale = 1.0 / (config.ffn_dim as f64).sqrt();
    for block in params.blocks.iter_mut() {
        block.ln1_gain.iter_mut().for_each(|g| *g = 1.0);
        block.ln2_gain.iter_mut().for_each(|g| *g = 1.0);
        for w in block
            .attn
            .wq
            .iter_mut()
            .chain(block.attn.wk.iter_mut())
            .chain(block.attn.wv.iter_mut())
            .chain(block.attn.wo.iter_mut())
        {
            let z: f64 = rng.sample(StandardNormal);
            *w = z * proj_scale;
        }
        for w in block.w1.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *w = z * ffn_in_scale;
        }
        for w in block.w2.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *w = z * ffn_out_scale;
        }
    }
    for w in params.head_w.iter_mut() {
        let z: f64 = rng.sample(StandardNormal);
        *w = z * 0.01;
    }
    params
}

/// Spoof-probability scores for a dataset, in input order.
pub fn score_dataset(params: &ModelParams, utterances: &[Utterance]) -> Result<Vec<f64>> {
    use rayon::prelude::*;
    utterances
        .par_iter()
        .map(|u| forward(params, &u.waveform).map(|(_, s)| s))
        .collect()
}

/// One held-out score row: (utterance id, is_spoof, spoof probability).
pub type ScoreRow = (String, bool, f64);

/// Train with Adam on cross-entropy. Deterministic given the seed and the
/// dataset order. Returns the trained parameters, the log, and the held-out
/// score rows used for the reported EER.
pub fn train(
    train_set: &[Utterance],
    heldout: &[Utterance],
    config: &ModelConfig,
    hyper: &TrainHyper,
    seed: u64,
) -> Result<(ModelParams, TrainLog, Vec<ScoreRow>)> {
    config.validate()?;
    if hyper.batch_size == 0 || hyper.epochs == 0 {
        return Err(Error::Config("batch_size and epochs must be nonzero".into()));
    }
    let n_spoof = train_set.iter().filter(|u| u.label.is_spoof()).count();
    if n_spoof == 0 || n_spoof == train_set.len() {
        return Err(Error::Data(
            "training set must contain both classes".into(),
        ));
    }
    if heldout.is_empty() {
        return Err(Error::Data("held-out set is empty".into()));
    }

    let mut params = init_params(config, seed);
    let mut m = ModelParams::zeros(config);
    let mut v = ModelParams::zeros(config);
    let mut step = 0u64;

    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut log = TrainLog {
        epochs: Vec::new(),
        heldout_eer_percent: 0.0,
        heldout_threshold: 0.0,
        stopped_early: false,
    };

    for epoch in 0..hyper.epochs {
        let mut shuffle_rng = seeding::substream(seed, &["epoch", &epoch.to_string()]);
        order.shuffle(&mut shuffle_rng);
        let mut loss_sum = 0.0;

        for batch in order.chunks(hyper.batch_size) {
            let mut grad_acc = ModelParams::zeros(config);
            for &idx in batch {
                let u = &train_set[idx];
                let (trace, _) = forward(&params, &u.waveform)?;
                let class = u.label.class_index();
                loss_sum += -trace.probs[class].max(1e-300).ln();
                // d(loss)/d(logits) = probs - one_hot
                let mut seed_vec = [trace.probs[0], trace.probs[1]];
                seed_vec[class] -= 1.0;
                let (_, g) = backward_seeded(&params, &trace, seed_vec);
                for (acc, src) in grad_acc.tensors_mut().into_iter().zip(g.tensors()) {
                    for (a, &b) in acc.iter_mut().zip(src.1) {
                        *a += b;
                    }
                }
            }
            let inv_batch = 1.0 / batch.len() as f64;
            step += 1;
            let bc1 = 1.0 - hyper.beta1.powi(step as i32);
            let bc2 = 1.0 - hyper.beta2.powi(step as i32);
            let mut pt = params.tensors_mut();
            let mut mt = m.tensors_mut();
            let mut vt = v.tensors_mut();
            let gt = grad_acc.tensors_mut();
            for i in 0..pt.len() {
                let (p, mm, vv, g) = (&mut pt[i], &mut mt[i], &mut vt[i], &gt[i]);
                for j in 0..p.len() {
                    let grad = g[j] * inv_batch;
                    mm[j] = hyper.beta1 * mm[j] + (1.0 - hyper.beta1) * grad;
                    vv[j] = hyper.beta2 * vv[j] + (1.0 - hyper.beta2) * grad * grad;
                    let mhat = mm[j] / bc1;
                    let vhat = vv[j] / bc2;
                    p[j] -= hyper.learning_rate * mhat / (vhat.sqrt() + hyper.adam_eps);
                }
            }
        }

        let mean_loss = loss_sum / train_set.len() as f64;
        log.epochs.push(EpochLog { epoch, mean_loss });
        if hyper.early_stop_loss > 0.0 && mean_loss < hyper.early_stop_loss {
            log.stopped_early = true;
            break;
        }
    }

    let scores = score_dataset(&params, heldout)?;
    let rows: Vec<ScoreRow> = heldout
        .iter()
        .zip(&scores)
        .map(|(u, &s)| (u.id.clone(), u.label.is_spoof(), s))
        .collect();
    let set = ScoreSet {
        scores: rows.iter().map(|r| r.2).collect(),
        is_spoof: rows.iter().map(|r| r.1).collect(),
    };
    let e = eer(&set)?;
    log.heldout_eer_percent = e.eer_percent;
    log.heldout_threshold = e.threshold;

    Ok((params, log, rows))
}
