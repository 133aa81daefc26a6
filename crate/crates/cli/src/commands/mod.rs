pub mod eval;
pub mod explain;
pub mod gen;
pub mod report;
pub mod train;

use rlens_core::error::Result;
use rlens_core::signal::Utterance;

/// Canonical processing order: sorted by utterance id regardless of
/// manifest order or completion order.
pub fn load_sorted(manifest: &std::path::Path) -> Result<Vec<Utterance>> {
    let (_, mut utterances) = rlens_core::signal::load_dataset(manifest)?;
    utterances.sort_by(|a, b| a.id.cmp(&b.id));
    Ok(utterances)
}
