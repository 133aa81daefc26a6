//! Cross-cutting model invariants: head-permutation covariance, trace
//! purity, checkpoint/forward interplay.

use rand::Rng;
use rlens_core::model::{forward, init_params, ModelConfig, ModelParams};
use rlens_core::seeding;
use rlens_core::signal::Waveform;

fn random_input(t: usize, seed: u64) -> Waveform {
    let mut rng = seeding::substream(seed, &["inv-input"]);
    let samples: Vec<f64> = (0..t).map(|_| rng.random_range(-1.0..1.0)).collect();
    Waveform::new(samples, 4000)
}

/// Swap the two attention heads of every layer: exchange the column blocks
/// of Wq/Wk/Wv (and bias blocks) and the matching row blocks of Wo.
fn swap_heads(params: &ModelParams) -> ModelParams {
    let mut out = params.clone();
    let d = params.config.d_model;
    let h = params.config.heads;
    assert_eq!(h, 2, "test permutes exactly two heads");
    let dh = d / h;
    for block in out.blocks.iter_mut() {
        for w in [&mut block.attn.wq, &mut block.attn.wk, &mut block.attn.wv] {
            for row in 0..d {
                for j in 0..dh {
                    w.swap(row * d + j, row * d + dh + j);
                }
            }
        }
        for b in [&mut block.attn.bq, &mut block.attn.bk, &mut block.attn.bv] {
            for j in 0..dh {
                b.swap(j, dh + j);
            }
        }
        // Wo rows are indexed by the concatenated head outputs.
        for j in 0..dh {
            for col in 0..d {
                block.attn.wo.swap(j * d + col, (dh + j) * d + col);
            }
        }
    }
    out
}

#[test]
fn logits_are_invariant_under_head_permutation() {
    let config = ModelConfig::micro();
    let params = init_params(&config, 31);
    let permuted = swap_heads(&params);
    for seed in 0..5u64 {
        let w = random_input(64, seed);
        let (a, _) = forward(&params, &w).unwrap();
        let (b, _) = forward(&permuted, &w).unwrap();
        for j in 0..2 {
            assert!(
                (a.logits[j] - b.logits[j]).abs() < 1e-6,
                "seed {seed}: logits {:?} vs {:?}",
                a.logits,
                b.logits
            );
        }
    }
}

#[test]
fn attention_rows_are_stochastic_on_random_models() {
    for seed in 0..10u64 {
        let config = ModelConfig::micro();
        let params = init_params(&config, seed);
        let w = random_input(64, seed + 100);
        let (trace, _) = forward(&params, &w).unwrap();
        let s = trace.tokens;
        for bt in &trace.blocks {
            for row in bt.attn.chunks_exact(s) {
                let sum: f64 = row.iter().sum();
                assert!((sum - 1.0).abs() < 1e-6);
                assert!(row.iter().all(|&v| v >= 0.0));
            }
        }
    }
}

#[test]
fn checkpoint_round_trip_preserves_forward_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("m.ckpt");
    let params = init_params(&ModelConfig::micro(), 77);
    rlens_core::model::save_checkpoint(&path, &params).unwrap();
    let loaded = rlens_core::model::load_checkpoint(&path).unwrap();

    // f32 storage rounds the weights; outputs must agree to f32 precision.
    let w = random_input(64, 1);
    let (a, _) = forward(&params, &w).unwrap();
    let (b, _) = forward(&loaded, &w).unwrap();
    for j in 0..2 {
        assert!((a.logits[j] - b.logits[j]).abs() < 1e-4);
    }

    // A second load is bit-identical to the first.
    let again = rlens_core::model::load_checkpoint(&path).unwrap();
    assert_eq!(loaded, again);
}
