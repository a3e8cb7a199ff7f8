//! Checkpoint container: versioned header with JSON config/metadata
//! followed by named tensors with little-endian 32-bit float payloads.

use serde::{Deserialize, Serialize};

use super::{CheckpointMeta, M5Config, ModelCheckpoint, Tensor};
use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"M5CP";
const VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct Header {
    config: M5Config,
    meta: CheckpointMeta,
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        if self.pos + n > self.bytes.len() {
            return Err(Error::Truncated {
                needed: self.pos + n,
                had: self.bytes.len(),
            });
        }
        let out = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(out)
    }

    fn u8(&mut self) -> Result<u8> {
        Ok(self.take(1)?[0])
    }

    fn u16(&mut self) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2)?.try_into().unwrap()))
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4)?.try_into().unwrap()))
    }
}

impl ModelCheckpoint {
    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&Header {
            config: self.config,
            meta: self.meta.clone(),
        })
        .expect("checkpoint header serializes");
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        out.extend_from_slice(&(self.tensors().len() as u32).to_le_bytes());
        for t in self.tensors() {
            out.extend_from_slice(&(t.name.len() as u16).to_le_bytes());
            out.extend_from_slice(t.name.as_bytes());
            out.push(t.shape.len() as u8);
            for &d in &t.shape {
                out.extend_from_slice(&(d as u32).to_le_bytes());
            }
            for &x in &t.data {
                out.extend_from_slice(&x.to_le_bytes());
            }
        }
        out
    }

    /// Parses and validates a checkpoint: magic, version, and every tensor
    /// name/shape against the layout implied by the embedded config.
    pub fn from_bytes(bytes: &[u8]) -> Result<ModelCheckpoint> {
        let mut r = Reader { bytes, pos: 0 };
        if r.take(4)? != MAGIC {
            return Err(Error::BadMagic { expected: "M5CP" });
        }
        let version = r.u32()?;
        if version != VERSION {
            return Err(Error::Version { found: version, supported: VERSION });
        }
        let header_len = r.u32()? as usize;
        let header: Header = serde_json::from_slice(r.take(header_len)?)?;
        let count = r.u32()? as usize;
        let mut tensors = Vec::with_capacity(count);
        for _ in 0..count {
            let name_len = r.u16()? as usize;
            let name = String::from_utf8(r.take(name_len)?.to_vec())
                .map_err(|_| Error::InvalidParameter("tensor name is not UTF-8".into()))?;
            let ndim = r.u8()? as usize;
            let mut shape = Vec::with_capacity(ndim);
            for _ in 0..ndim {
                shape.push(r.u32()? as usize);
            }
            let len: usize = shape.iter().product();
            let data = r
                .take(len * 4)?
                .chunks_exact(4)
                .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
                .collect();
            tensors.push(Tensor { name, shape, data });
        }
        ModelCheckpoint::from_parts(header.config, header.meta, tensors)
    }
}

#[cfg(test)]
mod tests {
    use super::super::m5_init;
    use super::*;

    #[test]
    fn round_trip_is_bitwise() {
        let mut ckpt = m5_init(M5Config::tiny(400), 42).unwrap();
        ckpt.meta.measure = Some("degree".into());
        ckpt.meta.epochs_completed = 3;
        let back = ModelCheckpoint::from_bytes(&ckpt.to_bytes()).unwrap();
        assert_eq!(back, ckpt);
    }

    #[test]
    fn rejects_bad_magic() {
        let ckpt = m5_init(M5Config::tiny(400), 0).unwrap();
        let mut bytes = ckpt.to_bytes();
        bytes[0] = b'X';
        assert!(matches!(
            ModelCheckpoint::from_bytes(&bytes),
            Err(Error::BadMagic { .. })
        ));
    }

    #[test]
    fn rejects_version_mismatch() {
        let ckpt = m5_init(M5Config::tiny(400), 0).unwrap();
        let mut bytes = ckpt.to_bytes();
        bytes[4] = 99;
        assert!(matches!(
            ModelCheckpoint::from_bytes(&bytes),
            Err(Error::Version { found: 99, .. })
        ));
    }

    #[test]
    fn rejects_truncation() {
        let ckpt = m5_init(M5Config::tiny(400), 0).unwrap();
        let bytes = ckpt.to_bytes();
        assert!(matches!(
            ModelCheckpoint::from_bytes(&bytes[..bytes.len() - 3]),
            Err(Error::Truncated { .. })
        ));
    }

    #[test]
    fn rejects_shape_mismatch_against_config() {
        // serialize a tiny model, then claim a different width in the
        // embedded config so tensor shapes no longer line up
        let ckpt = m5_init(M5Config::tiny(400), 0).unwrap();
        let bytes = ckpt.to_bytes();
        let header_len =
            u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
        let header = std::str::from_utf8(&bytes[12..12 + header_len]).unwrap();
        let changed = header.replace("[4,4,8,8]", "[128,128,256,512]");
        assert_ne!(header, changed);
        let mut out = bytes[..8].to_vec();
        out.extend_from_slice(&(changed.len() as u32).to_le_bytes());
        out.extend_from_slice(changed.as_bytes());
        out.extend_from_slice(&bytes[12 + header_len..]);
        assert!(matches!(
            ModelCheckpoint::from_bytes(&out),
            Err(Error::ShapeMismatch { .. })
        ));
    }
}
