//! Dataset persistence: raw f32 audio, raw u8 region labels, JSON manifest.
//!
//! Audio files are headerless 32-bit little-endian IEEE floats; length comes
//! from the file size. Region files are one byte per sample (0 = BR,
//! 1 = SR). Round-trips are bit-exact.

use std::collections::HashSet;
use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{Label, RegionLabel, Utterance, Waveform};
use crate::error::{Error, Result};

pub const MANIFEST_VERSION: u32 = 1;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ManifestEntry {
    pub id: String,
    /// Audio path, relative to the manifest location.
    pub audio: String,
    pub label: Label,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub regions: Option<String>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub version: u32,
    pub sample_rate: u32,
    pub seed: u64,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    pub fn validate(&self) -> Result<()> {
        if self.version != MANIFEST_VERSION {
            return Err(Error::Data(format!(
                "unsupported manifest version {} (expected {MANIFEST_VERSION})",
                self.version
            )));
        }
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !seen.insert(&e.id) {
                return Err(Error::Data(format!("duplicate utterance id {}", e.id)));
            }
            let has_regions = e.regions.is_some();
            if has_regions != (e.label == Label::Partial) {
                return Err(Error::Data(format!(
                    "utterance {}: regions present iff label is partial",
                    e.id
                )));
            }
        }
        Ok(())
    }
}

pub fn write_audio(path: &Path, samples: &[f64]) -> Result<()> {
    let mut bytes = Vec::with_capacity(samples.len() * 4);
    for &s in samples {
        bytes.extend_from_slice(&(s as f32).to_le_bytes());
    }
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_audio(path: &Path, sample_rate: u32) -> Result<Waveform> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    if bytes.len() % 4 != 0 {
        return Err(Error::Data(format!(
            "audio file {} has size {} not divisible by 4",
            path.display(),
            bytes.len()
        )));
    }
    let samples = bytes
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()) as f64)
        .collect();
    Ok(Waveform::new(samples, sample_rate))
}

pub fn write_regions(path: &Path, regions: &[RegionLabel]) -> Result<()> {
    let bytes: Vec<u8> = regions.iter().map(|r| r.as_byte()).collect();
    fs::write(path, bytes).map_err(|e| Error::io(path, e))
}

pub fn read_regions(path: &Path) -> Result<Vec<RegionLabel>> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    bytes.iter().map(|&b| RegionLabel::from_byte(b)).collect()
}

/// Write utterances plus a `manifest.json` into `dir`. Returns the manifest
/// path. Files are named `<id>.f32` / `<id>.regions`.
pub fn save_dataset(dir: &Path, utterances: &[Utterance], seed: u64) -> Result<PathBuf> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut entries = Vec::with_capacity(utterances.len());
    let mut sample_rate = None;
    for u in utterances {
        u.validate()?;
        if u.id.is_empty() {
            return Err(Error::Data("cannot save an utterance without an id".into()));
        }
        match sample_rate {
            None => sample_rate = Some(u.waveform.sample_rate),
            Some(sr) if sr != u.waveform.sample_rate => {
                return Err(Error::Data(format!(
                    "mixed sample rates in dataset ({sr} vs {})",
                    u.waveform.sample_rate
                )))
            }
            _ => {}
        }
        let audio = format!("{}.f32", u.id);
        write_audio(&dir.join(&audio), &u.waveform.samples)?;
        let regions = match &u.regions {
            Some(r) => {
                let name = format!("{}.regions", u.id);
                write_regions(&dir.join(&name), r)?;
                Some(name)
            }
            None => None,
        };
        entries.push(ManifestEntry {
            id: u.id.clone(),
            audio,
            label: u.label,
            regions,
        });
    }
    let manifest = DatasetManifest {
        version: MANIFEST_VERSION,
        sample_rate: sample_rate.unwrap_or(0),
        seed,
        entries,
    };
    manifest.validate()?;
    let path = dir.join("manifest.json");
    let json = serde_json::to_string_pretty(&manifest)
        .map_err(|e| Error::Data(format!("manifest serialization: {e}")))?;
    fs::write(&path, json).map_err(|e| Error::io(&path, e))?;
    Ok(path)
}

/// Load a manifest and every utterance it references.
pub fn load_dataset(manifest_path: &Path) -> Result<(DatasetManifest, Vec<Utterance>)> {
    let text = fs::read_to_string(manifest_path).map_err(|e| Error::io(manifest_path, e))?;
    let manifest: DatasetManifest = serde_json::from_str(&text)
        .map_err(|e| Error::Data(format!("malformed manifest {}: {e}", manifest_path.display())))?;
    manifest.validate()?;
    let base = manifest_path.parent().unwrap_or_else(|| Path::new("."));
    let mut utterances = Vec::with_capacity(manifest.entries.len());
    for e in &manifest.entries {
        let waveform = read_audio(&base.join(&e.audio), manifest.sample_rate)?;
        let regions = match &e.regions {
            Some(r) => {
                let regions = read_regions(&base.join(r))?;
                if regions.len() != waveform.len() {
                    return Err(Error::Data(format!(
                        "utterance {}: region file length {} vs audio length {}",
                        e.id,
                        regions.len(),
                        waveform.len()
                    )));
                }
                Some(regions)
            }
            None => None,
        };
        let u = Utterance {
            id: e.id.clone(),
            waveform,
            label: e.label,
            regions,
        };
        u.validate()?;
        utterances.push(u);
    }
    Ok((manifest, utterances))
}

/// 16-bit PCM mono WAV export for listening. Import is not supported.
pub fn write_wav(path: &Path, w: &Waveform) -> Result<()> {
    let n = w.len() as u32;
    let data_len = n * 2;
    let mut out = Vec::with_capacity(44 + data_len as usize);
    out.extend_from_slice(b"RIFF");
    out.extend_from_slice(&(36 + data_len).to_le_bytes());
    out.extend_from_slice(b"WAVEfmt ");
    out.extend_from_slice(&16u32.to_le_bytes());
    out.extend_from_slice(&1u16.to_le_bytes()); // PCM
    out.extend_from_slice(&1u16.to_le_bytes()); // mono
    out.extend_from_slice(&w.sample_rate.to_le_bytes());
    out.extend_from_slice(&(w.sample_rate * 2).to_le_bytes()); // byte rate
    out.extend_from_slice(&2u16.to_le_bytes()); // block align
    out.extend_from_slice(&16u16.to_le_bytes()); // bits per sample
    out.extend_from_slice(b"data");
    out.extend_from_slice(&data_len.to_le_bytes());
    for &s in &w.samples {
        let v = (s.clamp(-1.0, 1.0) * i16::MAX as f64).round() as i16;
        out.extend_from_slice(&v.to_le_bytes());
    }
    let mut f = fs::File::create(path).map_err(|e| Error::io(path, e))?;
    f.write_all(&out).map_err(|e| Error::io(path, e))
}
