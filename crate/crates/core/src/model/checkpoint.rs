//! Binary checkpoint: an 8-byte magic, a little-endian `u64` header length,
//! a JSON header, then every tensor's `f64` values little-endian in header
//! order (model parameters first, then optimizer buffers).

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{EncoderConfig, HeadConfig, ModelBundle};
use crate::error::{Error, Result};
use crate::optim::{OptimizerConfig, OptimizerState};
use crate::tensor::{ParamSet, Tensor};

const MAGIC: &[u8; 8] = b"ADRPCKP1";

#[derive(Serialize, Deserialize)]
struct TensorMeta {
    name: String,
    shape: Vec<usize>,
}

#[derive(Serialize, Deserialize)]
struct OptimizerMeta {
    config: OptimizerConfig,
    t: u64,
    has_first: bool,
    has_second: bool,
}

#[derive(Serialize, Deserialize)]
struct Header {
    encoder: EncoderConfig,
    head: HeadConfig,
    vocab_size: usize,
    n_tags: usize,
    vocab_fingerprint: String,
    tensors: Vec<TensorMeta>,
    optimizer: Option<OptimizerMeta>,
}

/// A model and, optionally, the optimizer state that was training it.
#[derive(Clone, Debug, PartialEq)]
pub struct Checkpoint {
    pub model: ModelBundle,
    pub optimizer: Option<OptimizerState>,
}

fn push_values(out: &mut Vec<u8>, set: &ParamSet) {
    for t in &set.tensors {
        for v in &t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
}

pub fn save_checkpoint(model: &ModelBundle, optimizer: Option<&OptimizerState>) -> Vec<u8> {
    let header = Header {
        encoder: model.encoder.clone(),
        head: model.head.clone(),
        vocab_size: model.vocab_size,
        n_tags: model.n_tags,
        vocab_fingerprint: model.vocab_fingerprint.clone(),
        tensors: model
            .params
            .tensors
            .iter()
            .map(|t| TensorMeta {
                name: t.name.clone(),
                shape: t.shape.clone(),
            })
            .collect(),
        optimizer: optimizer.map(|o| OptimizerMeta {
            config: o.config.clone(),
            t: o.t,
            has_first: o.first.is_some(),
            has_second: o.second.is_some(),
        }),
    };
    let json = serde_json::to_vec(&header).expect("header serializes");
    let mut out = Vec::with_capacity(16 + json.len() + model.params.scalar_count() * 8);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&(json.len() as u64).to_le_bytes());
    out.extend_from_slice(&json);
    push_values(&mut out, &model.params);
    if let Some(o) = optimizer {
        for buf in [&o.first, &o.second].into_iter().flatten() {
            push_values(&mut out, buf);
        }
    }
    out
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
            .ok_or_else(|| Error::Checkpoint("truncated".into()))?;
        let slice = &self.bytes[self.pos..end];
        self.pos = end;
        Ok(slice)
    }

    fn params(&mut self, metas: &[TensorMeta]) -> Result<ParamSet> {
        let mut tensors = Vec::with_capacity(metas.len());
        for meta in metas {
            let n: usize = meta.shape.iter().product();
            let raw = self.take(n.checked_mul(8).ok_or_else(|| Error::Checkpoint("tensor too large".into()))?)?;
            let data = raw
                .chunks_exact(8)
                .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
                .collect();
            tensors.push(Tensor {
                name: meta.name.clone(),
                shape: meta.shape.clone(),
                data,
            });
        }
        Ok(ParamSet { tensors })
    }
}

pub fn load_checkpoint(bytes: &[u8]) -> Result<Checkpoint> {
    let mut r = Reader { bytes, pos: 0 };
    if r.take(8)? != MAGIC {
        return Err(Error::Checkpoint("bad magic".into()));
    }
    let len = u64::from_le_bytes(r.take(8)?.try_into().expect("8 bytes")) as usize;
    let header: Header =
        serde_json::from_slice(r.take(len)?).map_err(|e| Error::Checkpoint(format!("header: {e}")))?;
    let params = r.params(&header.tensors)?;
    let optimizer = match header.optimizer {
        None => None,
        Some(meta) => {
            let first = meta.has_first.then(|| r.params(&header.tensors)).transpose()?;
            let second = meta.has_second.then(|| r.params(&header.tensors)).transpose()?;
            Some(OptimizerState {
                config: meta.config,
                t: meta.t,
                first,
                second,
            })
        }
    };
    if r.pos != bytes.len() {
        return Err(Error::Checkpoint("trailing bytes".into()));
    }
    let model = ModelBundle {
        encoder: header.encoder,
        head: header.head,
        vocab_size: header.vocab_size,
        n_tags: header.n_tags,
        vocab_fingerprint: header.vocab_fingerprint,
        params,
    };
    let expected = super::parameter_count(&model.encoder, &model.head, model.vocab_size, model.n_tags);
    if model.parameter_count() != expected {
        return Err(Error::Checkpoint(format!(
            "{} parameters stored, configuration implies {expected}",
            model.parameter_count()
        )));
    }
    Ok(Checkpoint { model, optimizer })
}

impl ModelBundle {
    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        if let Some(dir) = path.as_ref().parent() {
            std::fs::create_dir_all(dir)?;
        }
        std::fs::write(path, save_checkpoint(self, None))?;
        Ok(())
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        Ok(load_checkpoint(&std::fs::read(path)?)?.model)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::{default_schema, generate_dataset};
    use crate::encoding::{build_vocab, encode_batch};
    use crate::model::{init_model, loss_and_grads, HeadConfig, Mode};
    use crate::optim::OptimizerKind;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn round_trip_with_optimizer_state() {
        let schema = default_schema();
        let data = generate_dataset(1, 8, &schema).unwrap();
        let vocab = build_vocab(&data, 1).unwrap();
        let enc = EncoderConfig::new("t", 8, 1, 2, 8);
        let mut m = init_model(&enc, &HeadConfig::mlp(), &schema, &vocab, 4).unwrap();
        let batch = encode_batch(&data, &vocab, &schema).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        for kind in OptimizerKind::ALL {
            let mut state = OptimizerState::new(OptimizerConfig::new(kind, 0.01), &m.params);
            let (_, g) = loss_and_grads(&m, &batch, Mode::Train, &mut rng).unwrap();
            state.step(&mut m.params, &g, 1e-3).unwrap();
            let bytes = save_checkpoint(&m, Some(&state));
            let back = load_checkpoint(&bytes).unwrap();
            assert_eq!(back.model, m);
            assert_eq!(back.optimizer.as_ref(), Some(&state));
            assert_eq!(save_checkpoint(&back.model, back.optimizer.as_ref()), bytes);
        }
        let plain = load_checkpoint(&save_checkpoint(&m, None)).unwrap();
        assert_eq!(plain.model, m);
        assert!(plain.optimizer.is_none());
    }

    #[test]
    fn corrupt_input_is_rejected() {
        let schema = default_schema();
        let data = generate_dataset(1, 8, &schema).unwrap();
        let vocab = build_vocab(&data, 1).unwrap();
        let m = init_model(&EncoderConfig::new("t", 8, 1, 2, 8), &HeadConfig::linear(), &schema, &vocab, 4).unwrap();
        let bytes = save_checkpoint(&m, None);
        assert!(load_checkpoint(&bytes[..bytes.len() - 1]).is_err());
        assert!(load_checkpoint(b"nope").is_err());
        let mut extra = bytes.clone();
        extra.push(0);
        assert!(load_checkpoint(&extra).is_err());
    }
}
