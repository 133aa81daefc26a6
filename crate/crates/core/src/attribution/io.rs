//! Heatmap persistence: raw little-endian f32 scores plus a JSON sidecar
//! carrying the utterance id, method, class, and flags.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Heatmap, HeatmapFlags, Method};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HeatmapSidecar {
    pub utterance_id: String,
    pub method: Method,
    pub class: usize,
    pub flags: Vec<String>,
}

pub fn save_heatmap(dir: &Path, utterance_id: &str, heatmap: &Heatmap) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let data_path = dir.join(format!("{utterance_id}.f32"));
    let mut bytes = Vec::with_capacity(heatmap.scores.len() * 4);
    for &v in &heatmap.scores {
        bytes.extend_from_slice(&(v as f32).to_le_bytes());
    }
    fs::write(&data_path, bytes).map_err(|e| Error::io(&data_path, e))?;

    let sidecar = HeatmapSidecar {
        utterance_id: utterance_id.to_string(),
        method: heatmap.method,
        class: heatmap.class,
        flags: heatmap.flags.names(),
    };
    let json_path = dir.join(format!("{utterance_id}.json"));
    let json = serde_json::to_string_pretty(&sidecar)
        .map_err(|e| Error::Data(format!("sidecar serialization: {e}")))?;
    fs::write(&json_path, json).map_err(|e| Error::io(&json_path, e))
}

pub fn load_heatmap(dir: &Path, utterance_id: &str) -> Result<Heatmap> {
    let json_path = dir.join(format!("{utterance_id}.json"));
    let text = fs::read_to_string(&json_path).map_err(|e| Error::io(&json_path, e))?;
    let sidecar: HeatmapSidecar = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("malformed sidecar {}: {e}", json_path.display())))?;
    if sidecar.utterance_id != utterance_id {
        return Err(Error::Data(format!(
            "sidecar id {} does not match file {utterance_id}",
            sidecar.utterance_id
        )));
    }

    let data_path = dir.join(format!("{utterance_id}.f32"));
    let bytes = fs::read(&data_path).map_err(|e| Error::io(&data_path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Data(format!(
            "heatmap file {} has size {} not divisible by 4",
            data_path.display(),
            bytes.len()
        )));
    }
    let scores = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Heatmap {
        scores,
        method: sidecar.method,
        class: sidecar.class,
        flags: HeatmapFlags::from_names(&sidecar.flags),
    })
}
