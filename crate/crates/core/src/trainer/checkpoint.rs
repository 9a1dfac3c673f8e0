//! Binary checkpoint format, all integers little-endian:
//!
//! ```text
//! "GSCK" | version: u16 | header_len: u32 | header: UTF-8 JSON
//! per tensor: name_len: u32 | name | ndim: u32 | dims: u64 × ndim | count: u64 | f64 × count
//! crc32 of every preceding byte: u32
//! ```

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::MetricsRecord;
use crate::error::{Error, Result};
use crate::model::{Model, ModelConfig, ModelParameters};
use crate::tensor::Tensor;

pub const CHECKPOINT_MAGIC: [u8; 4] = *b"GSCK";
pub const CHECKPOINT_VERSION: u16 = 1;

#[derive(Debug, Clone, PartialEq)]
pub struct Checkpoint {
    pub model_config: ModelConfig,
    pub params: ModelParameters,
    /// Metrics of the epoch these parameters come from; `None` before training.
    pub metrics: Option<MetricsRecord>,
    /// Seed of the run that produced the checkpoint.
    pub seed: u64,
}

#[derive(Serialize, Deserialize)]
struct Header {
    model: ModelConfig,
    seed: u64,
    metrics: Option<MetricsRecord>,
    tensors: usize,
}

impl Checkpoint {
    pub fn from_model(model: &Model, metrics: Option<MetricsRecord>, seed: u64) -> Self {
        Self {
            model_config: model.config().clone(),
            params: model.params().clone(),
            metrics,
            seed,
        }
    }

    pub fn to_model(&self) -> Result<Model> {
        Model::from_parts(self.model_config.clone(), self.params.clone())
    }

    pub fn to_bytes(&self) -> Vec<u8> {
        let header = serde_json::to_vec(&Header {
            model: self.model_config.clone(),
            seed: self.seed,
            metrics: self.metrics.clone(),
            tensors: self.params.len(),
        })
        .expect("checkpoint header serializes");

        let mut out = Vec::with_capacity(64 + header.len() + 8 * self.params.parameter_count());
        out.extend_from_slice(&CHECKPOINT_MAGIC);
        out.extend_from_slice(&CHECKPOINT_VERSION.to_le_bytes());
        out.extend_from_slice(&(header.len() as u32).to_le_bytes());
        out.extend_from_slice(&header);
        for (name, tensor) in self.params.iter() {
            out.extend_from_slice(&(name.len() as u32).to_le_bytes());
            out.extend_from_slice(name.as_bytes());
            out.extend_from_slice(&(tensor.ndim() as u32).to_le_bytes());
            for &d in tensor.shape() {
                out.extend_from_slice(&(d as u64).to_le_bytes());
            }
            out.extend_from_slice(&(tensor.len() as u64).to_le_bytes());
            for v in tensor.data() {
                out.extend_from_slice(&v.to_le_bytes());
            }
        }
        let crc = crc32fast::hash(&out);
        out.extend_from_slice(&crc.to_le_bytes());
        out
    }

    /// Checks magic, then version, then checksum, before parsing anything else.
    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 6 {
            return Err(Error::Integrity(format!(
                "file is truncated ({} bytes)",
                bytes.len()
            )));
        }
        if bytes[..4] != CHECKPOINT_MAGIC {
            return Err(Error::Integrity("missing GSCK magic bytes".into()));
        }
        let version = u16::from_le_bytes([bytes[4], bytes[5]]);
        if version != CHECKPOINT_VERSION {
            return Err(Error::Version {
                found: version,
                expected: CHECKPOINT_VERSION,
            });
        }
        if bytes.len() < 14 {
            return Err(Error::Integrity("file is truncated".into()));
        }
        let (body, tail) = bytes.split_at(bytes.len() - 4);
        let stored = u32::from_le_bytes(tail.try_into().expect("4-byte tail"));
        let actual = crc32fast::hash(body);
        if stored != actual {
            return Err(Error::Integrity(format!(
                "checksum mismatch (stored {stored:08x}, computed {actual:08x})"
            )));
        }

        let mut r = Reader { buf: body, pos: 6 };
        let header_len = r.u32()? as usize;
        let header: Header = serde_json::from_slice(r.take(header_len)?)
            .map_err(|e| Error::Integrity(format!("bad header: {e}")))?;
        let mut params = ModelParameters::new();
        for _ in 0..header.tensors {
            let name_len = r.u32()? as usize;
            let name = std::str::from_utf8(r.take(name_len)?)
                .map_err(|_| Error::Integrity("tensor name is not UTF-8".into()))?
                .to_owned();
            let ndim = r.u32()? as usize;
            let shape = (0..ndim)
                .map(|_| r.u64().map(|d| d as usize))
                .collect::<Result<Vec<_>>>()?;
            let count = r.u64()? as usize;
            let raw = r.take(count.checked_mul(8).ok_or_else(overflow)?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
                .collect();
            let tensor = Tensor::new(&shape, data)
                .map_err(|e| Error::Integrity(format!("tensor {name}: {e}")))?;
            params.insert(name, tensor);
        }
        if r.pos != body.len() {
            return Err(Error::Integrity("trailing bytes after tensors".into()));
        }
        let checkpoint = Self {
            model_config: header.model,
            params,
            metrics: header.metrics,
            seed: header.seed,
        };
        checkpoint.to_model()?;
        Ok(checkpoint)
    }
}

fn overflow() -> Error {
    Error::Integrity("length field overflows".into())
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8]> {
        let end = self.pos.checked_add(n).ok_or_else(overflow)?;
        if end > self.buf.len() {
            return Err(Error::Integrity("unexpected end of data".into()));
        }
        let out = &self.buf[self.pos..end];
        self.pos = end;
        Ok(out)
    }

    fn u32(&mut self) -> Result<u32> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }
}

pub fn save_checkpoint(checkpoint: &Checkpoint, path: &Path) -> Result<()> {
    fs::write(path, checkpoint.to_bytes()).map_err(|e| Error::io(path, e))
}

pub fn load_checkpoint(path: &Path) -> Result<Checkpoint> {
    let bytes = fs::read(path).map_err(|e| Error::io(path, e))?;
    Checkpoint::from_bytes(&bytes)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn sample() -> Checkpoint {
        let model = Model::build(ModelConfig {
            filters: [2, 3, 4],
            dense_width: 5,
            ..ModelConfig::with_size(16)
        })
        .unwrap();
        let record = MetricsRecord {
            epoch: 3,
            train_loss: 0.25,
            train_accuracy: 0.875,
            val_loss: 0.3,
            val_accuracy: 0.8,
        };
        Checkpoint::from_model(&model, Some(record), 42)
    }

    #[test]
    fn round_trip_is_exact() {
        let ck = sample();
        let back = Checkpoint::from_bytes(&ck.to_bytes()).unwrap();
        assert_eq!(back, ck);
        for ((_, a), (_, b)) in back.params.iter().zip(ck.params.iter()) {
            let bits = |t: &Tensor| t.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>();
            assert_eq!(bits(a), bits(b));
        }
    }

    #[test]
    fn truncation_is_integrity_error() {
        let bytes = sample().to_bytes();
        for cut in [3, 10, bytes.len() / 2, bytes.len() - 1] {
            assert!(
                matches!(
                    Checkpoint::from_bytes(&bytes[..cut]),
                    Err(Error::Integrity(_))
                ),
                "cut at {cut}"
            );
        }
    }

    #[test]
    fn flipped_byte_is_integrity_error() {
        let mut bytes = sample().to_bytes();
        let mid = bytes.len() / 2;
        bytes[mid] ^= 0x40;
        assert!(matches!(
            Checkpoint::from_bytes(&bytes),
            Err(Error::Integrity(_))
        ));
    }

    #[test]
    fn bumped_version_is_version_error() {
        let mut bytes = sample().to_bytes();
        bytes[4] += 1;
        match Checkpoint::from_bytes(&bytes) {
            Err(
                e @ Error::Version {
                    found: 2,
                    expected: 1,
                },
            ) => {
                let msg = e.to_string();
                assert!(msg.contains('2') && msg.contains('1'), "{msg}");
            }
            other => panic!("expected version error, got {other:?}"),
        }
    }

    #[test]
    fn layout_starts_with_magic_and_version() {
        let bytes = sample().to_bytes();
        assert_eq!(&bytes[..4], b"GSCK");
        assert_eq!(u16::from_le_bytes([bytes[4], bytes[5]]), 1);
        let crc = u32::from_le_bytes(bytes[bytes.len() - 4..].try_into().unwrap());
        assert_eq!(crc, crc32fast::hash(&bytes[..bytes.len() - 4]));
    }
}
