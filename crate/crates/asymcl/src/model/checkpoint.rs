//! Flat binary model checkpoints.
//!
//! Layout: an 8-byte magic, a version word, the training flags and seed,
//! the encoder spec, then a key → tensor map with shapes and raw little-
//! endian `f64` bits. Round-trips are bit-exact.

use super::{DenseLayer, EncoderSpec, ModelError, ModelState};
use crate::autodiff::Tensor;
use std::fs;
use std::path::Path;

const MAGIC: &[u8; 8] = b"ASYMCKPT";
const VERSION: u32 = 1;

/// Serializes the full model state to `path`.
pub fn save_checkpoint<P: AsRef<Path>>(state: &ModelState, path: P) -> Result<(), ModelError> {
    let mut out = Vec::new();
    out.extend_from_slice(MAGIC);
    out.extend(VERSION.to_le_bytes());
    out.extend(state.rng_seed.to_le_bytes());
    out.push(u8::from(state.frozen));
    out.push(u8::from(state.stage1_trained));
    out.push(u8::from(state.classifier_trained));

    let spec = state.spec();
    out.extend((spec.input_dim as u32).to_le_bytes());
    out.extend((spec.feature_dim as u32).to_le_bytes());
    out.extend((spec.projection_dim as u32).to_le_bytes());
    out.extend((spec.hidden_dims.len() as u32).to_le_bytes());
    for &h in &spec.hidden_dims {
        out.extend((h as u32).to_le_bytes());
    }

    let params = state.named_params();
    out.extend((params.len() as u32).to_le_bytes());
    for (name, tensor) in params {
        out.extend((name.len() as u32).to_le_bytes());
        out.extend(name.as_bytes());
        out.extend((tensor.rank() as u32).to_le_bytes());
        for &dim in tensor.shape() {
            out.extend((dim as u32).to_le_bytes());
        }
        for &v in tensor.data() {
            out.extend(v.to_bits().to_le_bytes());
        }
    }
    fs::write(path, out)?;
    Ok(())
}

struct Reader {
    bytes: Vec<u8>,
    offset: usize,
}

impl Reader {
    fn take(&mut self, count: usize) -> Result<&[u8], ModelError> {
        let end = self.offset + count;
        if end > self.bytes.len() {
            return Err(ModelError::Checkpoint {
                offset: self.offset,
                message: format!(
                    "truncated checkpoint: {count} bytes expected, {} available",
                    self.bytes.len() - self.offset
                ),
            });
        }
        let slice = &self.bytes[self.offset..end];
        self.offset = end;
        Ok(slice)
    }

    fn u32(&mut self) -> Result<u32, ModelError> {
        Ok(u32::from_le_bytes(
            self.take(4)?.try_into().expect("4 bytes"),
        ))
    }

    fn u64(&mut self) -> Result<u64, ModelError> {
        Ok(u64::from_le_bytes(
            self.take(8)?.try_into().expect("8 bytes"),
        ))
    }

    fn flag(&mut self) -> Result<bool, ModelError> {
        Ok(self.take(1)?[0] != 0)
    }
}

/// Restores a model saved by [`save_checkpoint`].
pub fn load_checkpoint<P: AsRef<Path>>(path: P) -> Result<ModelState, ModelError> {
    let mut r = Reader {
        bytes: fs::read(path)?,
        offset: 0,
    };
    if r.take(8)? != MAGIC {
        return Err(ModelError::Checkpoint {
            offset: 0,
            message: "bad magic, not an asymcl checkpoint".into(),
        });
    }
    let version = r.u32()?;
    if version != VERSION {
        return Err(ModelError::Checkpoint {
            offset: 8,
            message: format!("unsupported checkpoint version {version}"),
        });
    }
    let rng_seed = r.u64()?;
    let frozen = r.flag()?;
    let stage1_trained = r.flag()?;
    let classifier_trained = r.flag()?;

    let input_dim = r.u32()? as usize;
    let feature_dim = r.u32()? as usize;
    let projection_dim = r.u32()? as usize;
    let hidden_count = r.u32()? as usize;
    let mut hidden_dims = Vec::with_capacity(hidden_count);
    for _ in 0..hidden_count {
        hidden_dims.push(r.u32()? as usize);
    }
    let spec = EncoderSpec {
        input_dim,
        hidden_dims,
        feature_dim,
        projection_dim,
    };

    let param_count = r.u32()? as usize;
    let mut tensors: Vec<(String, Tensor)> = Vec::with_capacity(param_count);
    for _ in 0..param_count {
        let name_len = r.u32()? as usize;
        let at = r.offset;
        let name =
            String::from_utf8(r.take(name_len)?.to_vec()).map_err(|e| ModelError::Checkpoint {
                offset: at,
                message: e.to_string(),
            })?;
        let rank = r.u32()? as usize;
        let mut shape = Vec::with_capacity(rank);
        for _ in 0..rank {
            shape.push(r.u32()? as usize);
        }
        let len: usize = shape.iter().product();
        let mut data = Vec::with_capacity(len);
        for _ in 0..len {
            data.push(f64::from_bits(r.u64()?));
        }
        tensors.push((name, Tensor::from_parts(shape, data)));
    }

    let take = |name: &str| -> Result<Tensor, ModelError> {
        tensors
            .iter()
            .find(|(n, _)| n == name)
            .map(|(_, t)| t.clone())
            .ok_or_else(|| ModelError::Checkpoint {
                offset: 0,
                message: format!("missing parameter {name:?}"),
            })
    };

    let encoder_layers = spec.hidden_dims.len() + 1;
    let mut encoder = Vec::with_capacity(encoder_layers);
    for i in 0..encoder_layers {
        encoder.push(DenseLayer {
            weight: take(&format!("encoder.{i}.weight"))?,
            bias: take(&format!("encoder.{i}.bias"))?,
        });
    }
    let mut projection = Vec::with_capacity(2);
    for i in 0..2 {
        projection.push(DenseLayer {
            weight: take(&format!("projection.{i}.weight"))?,
            bias: take(&format!("projection.{i}.bias"))?,
        });
    }
    let classifier = DenseLayer {
        weight: take("classifier.weight")?,
        bias: take("classifier.bias")?,
    };

    Ok(ModelState {
        spec,
        encoder,
        projection,
        classifier,
        frozen,
        stage1_trained,
        classifier_trained,
        rng_seed,
    })
}
