//! Dataset-scale aggregation must not depend on evaluation order: the RCQ
//! sums are associative, so a parallel reduction agrees with the serial one.

use rand::Rng;
use rayon::prelude::*;
use rlens_core::analysis::{rcq, CategoryMap};
use rlens_core::attribution::{Heatmap, HeatmapFlags, Method};
use rlens_core::seeding;

fn random_pair(seed: u64, t: usize) -> (Heatmap, CategoryMap) {
    let mut rng = seeding::substream(seed, &["agg"]);
    let scores: Vec<f64> = (0..t).map(|_| rng.random_range(0.0..1.0)).collect();
    let labels: Vec<u8> = (0..t).map(|_| rng.random_range(0..3u8)).collect();
    (
        Heatmap {
            scores,
            method: Method::Gatr,
            class: 1,
            flags: HeatmapFlags::default(),
        },
        CategoryMap::new(labels, vec!["A".into(), "B".into(), "C".into()]).unwrap(),
    )
}

#[test]
fn parallel_and_serial_category_sums_agree() {
    let data: Vec<(Heatmap, CategoryMap)> = (0..64).map(|i| random_pair(i, 500)).collect();
    let pairs: Vec<(&Heatmap, &CategoryMap)> = data.iter().map(|(h, c)| (h, c)).collect();
    let report = rcq(&pairs, "all").unwrap();

    // Independent parallel reduction of the same sums (heatmaps here are
    // already in [0,1], so peak-normalization inside rcq only rescales).
    for entry in &report.entries {
        let want_idx = ["A", "B", "C"]
            .iter()
            .position(|&n| n == entry.category)
            .unwrap() as u8;
        let (sum, count) = data
            .par_iter()
            .map(|(h, c)| {
                let max = h.scores.iter().cloned().fold(0.0f64, f64::max);
                let mut s = 0.0;
                let mut n = 0u64;
                for (i, &v) in h.scores.iter().enumerate() {
                    if c.labels[i] == want_idx {
                        s += v / max;
                        n += 1;
                    }
                }
                (s, n)
            })
            .reduce(|| (0.0, 0), |a, b| (a.0 + b.0, a.1 + b.1));
        assert_eq!(count, entry.count);
        let parallel_mean = sum / count as f64;
        assert!(
            (parallel_mean - entry.s_c).abs() < 1e-9,
            "category {}: parallel {parallel_mean} vs serial {}",
            entry.category,
            entry.s_c
        );
    }
}
