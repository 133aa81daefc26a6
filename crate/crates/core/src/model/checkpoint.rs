//! Versioned binary checkpoint: JSON config header plus named little-endian
//! f32 tensors. Save -> load -> save reproduces the file byte for byte.

use std::fs;
use std::path::Path;

use super::{ModelConfig, ModelParams};
use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"RLNSCKPT";
const VERSION: u32 = 1;

pub fn save_checkpoint(path: &Path, params: &ModelParams) -> Result<()> {
    let config_json = serde_json::to_vec(&params.config)
        .map_err(|e| Error::Data(format!("config serialization: {e}")))?;
    let tensors = params.tensors();

    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(config_json.len() as u32).to_le_bytes());
    out.extend_from_slice(&config_json);
    out.extend_from_slice(&(tensors.len() as u32).to_le_bytes());
    for (name, data) in tensors {
        let name_bytes = name.as_bytes();
        out.extend_from_slice(&(name_bytes.len() as u16).to_le_bytes());
        out.extend_from_slice(name_bytes);
        out.extend_from_slice(&(data.len() as u32).to_le_bytes());
        for &v in data {
            out.extend_from_slice(&(v as f32).to_le_bytes());
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Data("checkpoint truncated".into()));
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

pub fn load_checkpoint(path: &Path) -> Result<ModelParams> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    let mut r = Reader { bytes: &bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Data(format!("{}: not a checkpoint", path.display())));
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(Error::Data(format!(
            "unsupported checkpoint version {version} (expected {VERSION})"
        )));
    }
    let config_len = r.u32()? as usize;
    let config: ModelConfig = serde_json::from_slice(r.take(config_len)?)
        .map_err(|e| Error::Data(format!("checkpoint config: {e}")))?;
    config.validate()?;

    let mut params = ModelParams::zeros(&config);
    let expected: Vec<(String, usize)> = params
        .tensors()
        .into_iter()
        .map(|(n, t)| (n, t.len()))
        .collect();
    let n_tensors = r.u32()? as usize;
    if n_tensors != expected.len() {
        return Err(Error::Data(format!(
            "checkpoint has {n_tensors} tensors, config implies {}",
            expected.len()
        )));
    }
    let mut slots = params.tensors_mut();
    for (i, (want_name, want_len)) in expected.iter().enumerate() {
        let name_len = r.u16()? as usize;
        let name = std::str::from_utf8(r.take(name_len)?)
            .map_err(|_| Error::Data("checkpoint tensor name not utf8".into()))?;
        if name != want_name {
            return Err(Error::Data(format!(
                "checkpoint tensor {i} named {name}, expected {want_name}"
            )));
        }
        let len = r.u32()? as usize;
        if len != *want_len {
            return Err(Error::Data(format!(
                "tensor {name}: {len} values, expected {want_len}"
            )));
        }
        let data = r.take(len * 4)?;
        for (j, chunk) in data.chunks_exact(4).enumerate() {
            slots[i][j] = f32::from_le_bytes(chunk.try_into().unwrap()) as f64;
        }
    }
    if r.pos != bytes.len() {
        return Err(Error::Data("trailing bytes after checkpoint payload".into()));
    }
    drop(slots);
    Ok(params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{init_params, ModelConfig};

    #[test]
    fn save_load_save_is_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let p1 = dir.path().join("a.ckpt");
        let p2 = dir.path().join("b.ckpt");
        let params = init_params(&ModelConfig::micro(), 21);
        save_checkpoint(&p1, &params).unwrap();
        let loaded = load_checkpoint(&p1).unwrap();
        assert_eq!(loaded.config, params.config);
        save_checkpoint(&p2, &loaded).unwrap();
        assert_eq!(fs::read(&p1).unwrap(), fs::read(&p2).unwrap());
    }

    #[test]
    fn corrupted_magic_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("bad.ckpt");
        fs::write(&p, b"NOTACKPTxxxxxxx").unwrap();
        assert!(load_checkpoint(&p).is_err());
    }

    #[test]
    fn truncated_file_is_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("t.ckpt");
        let params = init_params(&ModelConfig::micro(), 3);
        save_checkpoint(&p, &params).unwrap();
        let bytes = fs::read(&p).unwrap();
        fs::write(&p, &bytes[..bytes.len() - 10]).unwrap();
        assert!(load_checkpoint(&p).is_err());
    }
}
