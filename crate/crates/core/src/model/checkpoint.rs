//! Binary checkpoints.
//!
//! Layout, all integers little-endian:
//!
//! ```text
//! magic "LMTCCKPT" | version u32 | config_len u32 | config text (key=value lines)
//! record_count u32 | records...
//! record: group_len u16 | group | name_len u16 | name | ndim u32 | dims u64* | f32 data
//! ```
//!
//! Records appear in group order (`EMB`, `LAYER_1..`, `MLM_HEAD`, `CLS_HEAD`) and in field
//! order within a group, so equal models serialise to equal bytes.

use std::fs;
use std::io::Write;
use std::path::Path;

use super::{EncoderModel, GroupId, ModelConfig, ModelError, Result};

pub const CHECKPOINT_MAGIC: &[u8; 8] = b"LMTCCKPT";
pub const CHECKPOINT_VERSION: u32 = 1;

impl EncoderModel<f32> {
    pub fn to_checkpoint_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        let cfg = self.config.to_text();
        out.extend_from_slice(&(cfg.len() as u32).to_le_bytes());
        out.extend_from_slice(cfg.as_bytes());
        let groups = self.group_ids();
        let count: usize = groups.iter().map(|&g| self.group_tensors(g).len()).sum();
        out.extend_from_slice(&(count as u32).to_le_bytes());
        for g in groups {
            let gname = g.to_string();
            for (name, t) in self.group_tensors(g) {
                out.extend_from_slice(&(gname.len() as u16).to_le_bytes());
                out.extend_from_slice(gname.as_bytes());
                out.extend_from_slice(&(name.len() as u16).to_le_bytes());
                out.extend_from_slice(name.as_bytes());
                out.extend_from_slice(&(t.shape.len() as u32).to_le_bytes());
                for &d in &t.shape {
                    out.extend_from_slice(&(d as u64).to_le_bytes());
                }
                for &v in &t.data {
                    out.extend_from_slice(&v.to_le_bytes());
                }
            }
        }
        out
    }

    /// Parses a checkpoint. When `expected` is given, the stored configuration must match it
    /// tensor for tensor.
    pub fn from_checkpoint_bytes(bytes: &[u8], expected: Option<&ModelConfig>) -> Result<Self> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(8)? != CHECKPOINT_MAGIC {
            return Err(ModelError::Checkpoint("bad magic".into()));
        }
        let version = r.u32()?;
        if version != CHECKPOINT_VERSION {
            return Err(ModelError::Checkpoint(format!(
                "unsupported version {version} (expected {CHECKPOINT_VERSION})"
            )));
        }
        let cfg_len = r.u32()? as usize;
        let cfg_text = std::str::from_utf8(r.take(cfg_len)?)
            .map_err(|_| ModelError::Checkpoint("config is not UTF-8".into()))?;
        let stored = ModelConfig::from_text(cfg_text)?;
        let config = expected.cloned().unwrap_or_else(|| stored.clone());
        // Zero-initialised skeleton; every tensor is overwritten below.
        let mut model = EncoderModel::<f32>::init(&config, 0)?;
        let count = r.u32()? as usize;
        let expected_count: usize = model
            .group_ids()
            .iter()
            .map(|&g| model.group_tensors(g).len())
            .sum();
        let mut seen = 0usize;
        for _ in 0..count {
            let glen = r.u16()? as usize;
            let gname = r.string(glen)?;
            let nlen = r.u16()? as usize;
            let tname = r.string(nlen)?;
            let ndim = r.u32()? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.u64()? as usize);
            }
            let group: GroupId = gname
                .parse()
                .map_err(|e: String| ModelError::Checkpoint(e))?;
            if !model.has_group(group) {
                return Err(ModelError::ShapeMismatch {
                    group: gname,
                    message: format!("model with {} layers has no such group", config.layers),
                });
            }
            let mut tensors = model.group_tensors_mut(group);
            let Some((_, target)) = tensors.iter_mut().find(|(n, _)| *n == tname) else {
                return Err(ModelError::ShapeMismatch {
                    group: gname,
                    message: format!("unknown tensor `{tname}`"),
                });
            };
            if target.shape != shape {
                return Err(ModelError::ShapeMismatch {
                    group: gname,
                    message: format!(
                        "tensor `{tname}` has shape {shape:?}, expected {:?}",
                        target.shape
                    ),
                });
            }
            for v in target.data.iter_mut() {
                *v = f32::from_le_bytes(r.take(4)?.try_into().unwrap());
            }
            seen += 1;
        }
        if seen != expected_count {
            return Err(ModelError::Checkpoint(format!(
                "{seen} tensors stored, {expected_count} expected"
            )));
        }
        if r.pos != bytes.len() {
            return Err(ModelError::Checkpoint("trailing bytes".into()));
        }
        if stored != config {
            // Shapes all matched, so only non-shape fields (such as `heads`) differ.
            return Err(ModelError::ShapeMismatch {
                group: "CONFIG".into(),
                message: format!("stored config differs:\n{}", stored.to_text()),
            });
        }
        Ok(model)
    }
}

/// Writes atomically: a sibling temporary file is renamed over `path`.
pub fn save_checkpoint(model: &EncoderModel<f32>, path: &Path) -> Result<()> {
    let io = |source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    };
    let tmp = path.with_extension("tmp");
    let mut f = fs::File::create(&tmp).map_err(io)?;
    f.write_all(&model.to_checkpoint_bytes()).map_err(io)?;
    f.sync_all().map_err(io)?;
    fs::rename(&tmp, path).map_err(io)
}

pub fn load_checkpoint(path: &Path) -> Result<EncoderModel<f32>> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EncoderModel::from_checkpoint_bytes(&bytes, None)
}

pub fn load_checkpoint_expecting(path: &Path, expected: &ModelConfig) -> Result<EncoderModel<f32>> {
    let bytes = fs::read(path).map_err(|source| ModelError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    EncoderModel::from_checkpoint_bytes(&bytes, Some(expected))
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self
            .pos
            .checked_add(n)
            .filter(|&e| e <= self.bytes.len())
            .ok_or_else(|| ModelError::Checkpoint(format!("truncated at byte {}", self.pos)))?;
        let s = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8)?.try_into().unwrap()))
    }

    fn string(&mut self, n: usize) -> Result<String> {
        String::from_utf8(self.take(n)?.to_vec())
            .map_err(|_| ModelError::Checkpoint("name is not UTF-8".into()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cfg() -> ModelConfig {
        ModelConfig {
            layers: 2,
            hidden: 8,
            heads: 2,
            ff_dim: 12,
            vocab_size: 30,
            max_seq_len: 8,
            label_count: 4,
        }
    }

    #[test]
    fn round_trip_is_exact() {
        let m = EncoderModel::<f32>::init(&cfg(), 5).unwrap();
        let bytes = m.to_checkpoint_bytes();
        let back = EncoderModel::from_checkpoint_bytes(&bytes, None).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.to_checkpoint_bytes(), bytes);
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("m.ckpt");
        save_checkpoint(&m, &p).unwrap();
        assert_eq!(load_checkpoint(&p).unwrap(), m);
    }

    #[test]
    fn corrupt_inputs_are_rejected() {
        let m = EncoderModel::<f32>::init(&cfg(), 5).unwrap();
        let bytes = m.to_checkpoint_bytes();
        let mut bad = bytes.clone();
        bad[0] = b'X';
        assert!(matches!(
            EncoderModel::from_checkpoint_bytes(&bad, None),
            Err(ModelError::Checkpoint(m)) if m.contains("magic")
        ));
        let mut bad = bytes.clone();
        bad[8] = 9;
        assert!(matches!(
            EncoderModel::from_checkpoint_bytes(&bad, None),
            Err(ModelError::Checkpoint(m)) if m.contains("version")
        ));
        assert!(matches!(
            EncoderModel::from_checkpoint_bytes(&bytes[..bytes.len() - 3], None),
            Err(ModelError::Checkpoint(m)) if m.contains("truncated")
        ));
    }

    #[test]
    fn shape_mismatch_names_group() {
        let m = EncoderModel::<f32>::init(&cfg(), 5).unwrap();
        let mut other = cfg();
        other.label_count = 7;
        let err = EncoderModel::from_checkpoint_bytes(&m.to_checkpoint_bytes(), Some(&other)).unwrap_err();
        match err {
            ModelError::ShapeMismatch { group, .. } => assert_eq!(group, "CLS_HEAD"),
            e => panic!("{e}"),
        }
    }
}
