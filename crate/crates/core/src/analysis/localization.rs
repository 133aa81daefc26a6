//! Relevance mass and rank accuracy against a ground-truth region.

/// Fraction of total heatmap mass falling inside the ground-truth region.
/// Returns `None` for an all-zero heatmap (undefined) or an empty mask.
pub fn rma(scores: &[f64], ground_truth: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), ground_truth.len());
    let total: f64 = scores.iter().sum();
    if total == 0.0 || !ground_truth.iter().any(|&g| g) {
        return None;
    }
    let inside: f64 = scores
        .iter()
        .zip(ground_truth)
        .filter(|&(_, &g)| g)
        .map(|(&s, _)| s)
        .sum();
    Some(inside / total)
}

/// Fraction of the top-K scored samples (K = ground-truth size, ties broken
/// by ascending index) that fall inside the ground truth.
pub fn rra(scores: &[f64], ground_truth: &[bool]) -> Option<f64> {
    assert_eq!(scores.len(), ground_truth.len());
    let k = ground_truth.iter().filter(|&&g| g).count();
    if k == 0 {
        return None;
    }
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_unstable_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));
    let hits = idx[..k].iter().filter(|&&i| ground_truth[i]).count();
    Some(hits as f64 / k as f64)
}
