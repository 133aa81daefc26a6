//! Relative contribution quantification over a subset of utterances.
//!
//! Heatmaps are peak-normalized to [0, 1] first so every utterance
//! contributes equally. `S_c` is the mean normalized score over all samples
//! of category `c` across the subset; the RCQ of `c` is the percent
//! deviation of `S_c` from the all-category mean.

use std::collections::HashMap;

use super::CategoryMap;
use crate::attribution::{peak_normalize_heatmap, Heatmap};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct RcqEntry {
    pub category: String,
    /// Number of samples of this category across the subset.
    pub count: u64,
    pub s_c: f64,
    pub rcq: f64,
    /// Filled by [`normalize_rcq`].
    pub normalized: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct RcqReport {
    /// Which utterances went in (bonafide / spoof / partial / all).
    pub subset: String,
    pub s_all: f64,
    /// Set when `S_All` is zero and the RCQs are meaningless.
    pub degenerate: bool,
    pub entries: Vec<RcqEntry>,
}

/// Aggregate RCQ over `(heatmap, categories)` pairs. Categories that never
/// occur are absent from the report rather than reported as zero.
pub fn rcq(pairs: &[(&Heatmap, &CategoryMap)], subset: &str) -> Result<RcqReport> {
    if pairs.is_empty() {
        return Err(Error::Data("rcq needs at least one utterance".into()));
    }

    // Vocabulary in first-seen order across the subset.
    let mut order: Vec<String> = Vec::new();
    let mut sums: HashMap<String, (u64, f64)> = HashMap::new();
    let mut total_sum = 0.0f64;
    let mut total_count = 0u64;

    for (heatmap, categories) in pairs {
        if heatmap.scores.len() != categories.len() {
            return Err(Error::Shape(format!(
                "heatmap length {} vs category map length {}",
                heatmap.scores.len(),
                categories.len()
            )));
        }
        let normalized = peak_normalize_heatmap(heatmap);
        for name in &categories.vocab {
            if !sums.contains_key(name) {
                order.push(name.clone());
                sums.insert(name.clone(), (0, 0.0));
            }
        }
        for (i, &score) in normalized.scores.iter().enumerate() {
            let slot = sums.get_mut(categories.name(i)).unwrap();
            slot.0 += 1;
            slot.1 += score;
            total_count += 1;
            total_sum += score;
        }
    }

    let s_all = total_sum / total_count as f64;
    let degenerate = s_all == 0.0;
    let entries = order
        .into_iter()
        .filter_map(|name| {
            let &(count, sum) = sums.get(&name).unwrap();
            if count == 0 {
                return None; // category never occurred: absent, not zero
            }
            let s_c = sum / count as f64;
            let rcq = if degenerate {
                0.0
            } else {
                100.0 * (s_c - s_all) / s_all
            };
            Some(RcqEntry {
                category: name,
                count,
                s_c,
                rcq,
                normalized: None,
            })
        })
        .collect();

    Ok(RcqReport {
        subset: subset.to_string(),
        s_all,
        degenerate,
        entries,
    })
}

/// Divide every RCQ by the maximum magnitude across the report's categories;
/// an all-zero report stays zero. Sign and argmax are preserved.
pub fn normalize_rcq(report: &mut RcqReport) {
    let max_mag = report
        .entries
        .iter()
        .map(|e| e.rcq.abs())
        .fold(0.0f64, f64::max);
    for e in report.entries.iter_mut() {
        e.normalized = Some(if max_mag == 0.0 { 0.0 } else { e.rcq / max_mag });
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::attribution::{HeatmapFlags, Method};

    fn hm(scores: &[f64]) -> Heatmap {
        Heatmap {
            scores: scores.to_vec(),
            method: Method::Gatr,
            class: 1,
            flags: HeatmapFlags::default(),
        }
    }

    fn cats(labels: &[u8], vocab: &[&str]) -> CategoryMap {
        CategoryMap::new(labels.to_vec(), vocab.iter().map(|s| s.to_string()).collect())
            .unwrap()
    }

    #[test]
    fn worked_example_from_direct_formula() {
        // scores [1,1,0,0] over categories [A,A,B,B]:
        // S_A = 1, S_B = 0, S_All = 0.5 -> RCQ_A = 100, RCQ_B = -100.
        let h = hm(&[1.0, 1.0, 0.0, 0.0]);
        let c = cats(&[0, 0, 1, 1], &["A", "B"]);
        let report = rcq(&[(&h, &c)], "all").unwrap();
        assert_eq!(report.entries[0].category, "A");
        assert!((report.entries[0].rcq - 100.0).abs() < 1e-12);
        assert!((report.entries[1].rcq + 100.0).abs() < 1e-12);
        assert!((report.s_all - 0.5).abs() < 1e-12);
    }

    #[test]
    fn uniform_scores_have_zero_rcq() {
        let h = hm(&[0.7, 0.7, 0.7, 0.7]);
        let c = cats(&[0, 1, 0, 1], &["A", "B"]);
        let report = rcq(&[(&h, &c)], "all").unwrap();
        for e in &report.entries {
            assert!(e.rcq.abs() < 1e-9, "rcq {} for {}", e.rcq, e.category);
        }
    }

    #[test]
    fn single_category_has_zero_rcq() {
        let h = hm(&[0.9, 0.1, 0.5, 0.2]);
        let c = cats(&[0, 0, 0, 0], &["A"]);
        let report = rcq(&[(&h, &c)], "all").unwrap();
        assert_eq!(report.entries.len(), 1);
        assert!(report.entries[0].rcq.abs() < 1e-12);
    }

    #[test]
    fn unused_vocabulary_entries_are_absent() {
        let h = hm(&[1.0, 0.5]);
        let c = cats(&[0, 0], &["A", "B"]);
        let report = rcq(&[(&h, &c)], "all").unwrap();
        assert_eq!(report.entries.len(), 1);
        assert_eq!(report.entries[0].category, "A");
    }

    #[test]
    fn degenerate_all_zero_heatmaps_are_flagged() {
        let h = hm(&[0.0, 0.0]);
        let c = cats(&[0, 1], &["A", "B"]);
        let report = rcq(&[(&h, &c)], "all").unwrap();
        assert!(report.degenerate);
    }

    #[test]
    fn count_weighted_rcq_mean_is_zero() {
        let h1 = hm(&[0.9, 0.2, 0.4, 0.1, 0.6]);
        let c1 = cats(&[0, 1, 1, 2, 0], &["A", "B", "C"]);
        let h2 = hm(&[0.3, 0.8, 0.05, 0.9]);
        let c2 = cats(&[1, 1, 0, 2], &["A", "B", "C"]);
        let report = rcq(&[(&h1, &c1), (&h2, &c2)], "all").unwrap();
        let total: u64 = report.entries.iter().map(|e| e.count).sum();
        let weighted: f64 = report
            .entries
            .iter()
            .map(|e| e.count as f64 * e.rcq)
            .sum::<f64>()
            / total as f64;
        assert!(weighted.abs() < 1e-9, "weighted mean {weighted}");
    }

    #[test]
    fn duplicating_every_utterance_leaves_rcq_unchanged() {
        let h = hm(&[0.9, 0.2, 0.4, 0.1]);
        let c = cats(&[0, 1, 1, 0], &["A", "B"]);
        let once = rcq(&[(&h, &c)], "all").unwrap();
        let twice = rcq(&[(&h, &c), (&h, &c)], "all").unwrap();
        for (a, b) in once.entries.iter().zip(&twice.entries) {
            assert!((a.rcq - b.rcq).abs() < 1e-12);
        }
    }

    #[test]
    fn normalization_preserves_sign_and_argmax() {
        let h = hm(&[1.0, 1.0, 0.25, 0.0]);
        let c = cats(&[0, 0, 1, 2], &["A", "B", "C"]);
        let mut report = rcq(&[(&h, &c)], "all").unwrap();
        normalize_rcq(&mut report);
        let max_before = report
            .entries
            .iter()
            .max_by(|a, b| a.rcq.partial_cmp(&b.rcq).unwrap())
            .unwrap()
            .category
            .clone();
        let max_after = report
            .entries
            .iter()
            .max_by(|a, b| a.normalized.partial_cmp(&b.normalized).unwrap())
            .unwrap()
            .category
            .clone();
        assert_eq!(max_before, max_after);
        for e in &report.entries {
            assert_eq!(e.rcq.signum(), e.normalized.unwrap().signum());
            assert!(e.normalized.unwrap().abs() <= 1.0 + 1e-12);
        }
        assert!(report
            .entries
            .iter()
            .any(|e| (e.normalized.unwrap().abs() - 1.0).abs() < 1e-12));
    }

    #[test]
    fn normalized_values_follow_the_magnitude_division() {
        // RCQs {100, -50} -> {1.0, -0.5}.
        let mut report = RcqReport {
            subset: "all".into(),
            s_all: 1.0,
            degenerate: false,
            entries: vec![
                RcqEntry { category: "A".into(), count: 1, s_c: 2.0, rcq: 100.0, normalized: None },
                RcqEntry { category: "B".into(), count: 1, s_c: 0.5, rcq: -50.0, normalized: None },
            ],
        };
        normalize_rcq(&mut report);
        assert_eq!(report.entries[0].normalized, Some(1.0));
        assert_eq!(report.entries[1].normalized, Some(-0.5));

        // All-zero report stays zero.
        let mut zero = RcqReport {
            subset: "all".into(),
            s_all: 1.0,
            degenerate: false,
            entries: vec![
                RcqEntry { category: "A".into(), count: 1, s_c: 1.0, rcq: 0.0, normalized: None },
                RcqEntry { category: "B".into(), count: 1, s_c: 1.0, rcq: 0.0, normalized: None },
            ],
        };
        normalize_rcq(&mut zero);
        assert_eq!(zero.entries[0].normalized, Some(0.0));
        assert_eq!(zero.entries[1].normalized, Some(0.0));
    }
}
