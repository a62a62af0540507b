//! From-scratch transformer encoder with a linear or MLP token-classification
//! head, trained by analytic backpropagation in double precision.

mod checkpoint;
mod config;
pub(crate) mod network;
mod ops;

use rand::distributions::{Distribution, Uniform};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint};
pub use config::{
    head_parameter_count, parameter_count, variant, EncoderConfig, HeadConfig, HeadKind,
    MLP_DROPOUT, VARIANTS,
};
pub use ops::dropout;

use crate::data::{AddressSample, TagId, TagSchema};
use crate::encoding::{encode_batch, Batch, Vocabulary, IGNORE_INDEX};
use crate::error::{Error, Result};
use crate::tensor::{ParamSet, Tensor};
use network::RowCache;

/// Whether dropout is active.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

/// Configuration plus every learned parameter of one model.
#[derive(Clone, Debug, PartialEq)]
pub struct ModelBundle {
    pub encoder: EncoderConfig,
    pub head: HeadConfig,
    pub vocab_size: usize,
    pub n_tags: usize,
    /// Fingerprint of the vocabulary the embedding rows refer to.
    pub vocab_fingerprint: String,
    pub params: ParamSet,
}

impl ModelBundle {
    pub fn parameter_count(&self) -> usize {
        self.params.scalar_count()
    }

    /// Tensors belonging to the classification head.
    pub fn head_tensors(&self) -> &[Tensor] {
        &self.params.tensors[network::head_base(self.encoder.n_layers)..]
    }

    pub fn check_vocab(&self, vocab: &Vocabulary) -> Result<()> {
        if vocab.len() != self.vocab_size || vocab.fingerprint() != self.vocab_fingerprint {
            return Err(Error::Config(
                "vocabulary does not match the one the model was built with".into(),
            ));
        }
        Ok(())
    }
}

fn uniform_tensor(name: String, shape: &[usize], bound: f64, rng: &mut ChaCha8Rng) -> Tensor {
    let dist = Uniform::new_inclusive(-bound, bound);
    let mut t = Tensor::zeros(name, shape);
    for v in &mut t.data {
        *v = dist.sample(rng);
    }
    t
}

/// Weight `[n_in × n_out]` with bound `1/√n_in`, plus a zero bias.
fn linear(name: &str, n_in: usize, n_out: usize, rng: &mut ChaCha8Rng) -> [Tensor; 2] {
    [
        uniform_tensor(format!("{name}.weight"), &[n_in, n_out], 1.0 / (n_in as f64).sqrt(), rng),
        Tensor::zeros(format!("{name}.bias"), &[n_out]),
    ]
}

fn norm(name: &str, d: usize) -> [Tensor; 2] {
    [
        Tensor::filled(format!("{name}.gain"), &[d], 1.0),
        Tensor::zeros(format!("{name}.bias"), &[d]),
    ]
}

/// Deterministically initialize a model for `schema` and `vocab`.
pub fn init_model(
    encoder: &EncoderConfig,
    head: &HeadConfig,
    schema: &TagSchema,
    vocab: &Vocabulary,
    seed: u64,
) -> Result<ModelBundle> {
    encoder.validate()?;
    head.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let d = encoder.d_model;
    let n_tags = schema.tag_count();

    let mut tensors = vec![
        uniform_tensor("embed".into(), &[vocab.len(), d], 1.0, &mut rng),
        uniform_tensor("pos".into(), &[encoder.max_len, d], 1.0, &mut rng),
    ];
    for l in 0..encoder.n_layers {
        let name = |s: &str| format!("layer{l}.{s}");
        tensors.extend(norm(&name("ln1"), d));
        for proj in ["q", "k", "v", "o"] {
            tensors.extend(linear(&name(proj), d, d, &mut rng));
        }
        tensors.extend(norm(&name("ln2"), d));
        tensors.extend(linear(&name("ff1"), d, encoder.d_ff, &mut rng));
        tensors.extend(linear(&name("ff2"), encoder.d_ff, d, &mut rng));
    }
    tensors.extend(norm("final_ln", d));
    match head.kind {
        HeadKind::Linear => tensors.extend(linear("head.out", d, n_tags, &mut rng)),
        HeadKind::Mlp => {
            let h = head.hidden(d);
            tensors.extend(linear("head.hidden1", d, h, &mut rng));
            tensors.extend(linear("head.hidden2", h, h, &mut rng));
            tensors.extend(linear("head.out", h, n_tags, &mut rng));
        }
    }

    let bundle = ModelBundle {
        encoder: encoder.clone(),
        head: head.clone(),
        vocab_size: vocab.len(),
        n_tags,
        vocab_fingerprint: vocab.fingerprint(),
        params: ParamSet { tensors },
    };
    debug_assert_eq!(
        bundle.parameter_count(),
        parameter_count(encoder, head, vocab.len(), n_tags)
    );
    Ok(bundle)
}

/// Logits for a batch plus whatever the backward pass needs.
pub struct ForwardOutput {
    pub batch_size: usize,
    pub seq_len: usize,
    pub n_tags: usize,
    /// `[batch × seq_len × n_tags]`, row-major.
    pub logits: Vec<f64>,
    rows: Vec<RowCache>,
}

impl ForwardOutput {
    pub fn logits_at(&self, row: usize, pos: usize) -> &[f64] {
        let start = (row * self.seq_len + pos) * self.n_tags;
        &self.logits[start..start + self.n_tags]
    }

    /// `[seq_len × seq_len]` attention probabilities of one head.
    pub fn attention(&self, row: usize, layer: usize, head: usize) -> &[f64] {
        let l = self.seq_len;
        &self.rows[row].layers[layer].probs[head * l * l..(head + 1) * l * l]
    }

    /// Final encoder output `[seq_len × d_model]` of one row.
    pub fn representations(&self, row: usize) -> &[f64] {
        &self.rows[row].rep
    }
}

fn check_batch(m: &ModelBundle, batch: &Batch) -> Result<()> {
    let cells = batch.batch_size * batch.seq_len;
    if batch.token_ids.len() != cells || batch.tag_ids.len() != cells || batch.mask.len() != cells {
        return Err(Error::Shape("batch matrices disagree in shape".into()));
    }
    if batch.seq_len > m.encoder.max_len {
        return Err(Error::Shape(format!(
            "sequence length {} exceeds {}",
            batch.seq_len, m.encoder.max_len
        )));
    }
    if let Some(t) = batch.token_ids.iter().find(|&&t| t as usize >= m.vocab_size) {
        return Err(Error::Shape(format!("token id {t} outside vocabulary of {}", m.vocab_size)));
    }
    if let Some(t) = batch
        .tag_ids
        .iter()
        .find(|&&t| t != IGNORE_INDEX && (t < 0 || t as usize >= m.n_tags))
    {
        return Err(Error::Shape(format!("tag id {t} outside {} tags", m.n_tags)));
    }
    Ok(())
}

/// Run the encoder and head over a padded batch.
///
/// In [`Mode::Eval`] the output is a pure function of the model and batch;
/// in [`Mode::Train`] the MLP head's dropout draws from `rng`.
pub fn forward<R: Rng + ?Sized>(m: &ModelBundle, batch: &Batch, mode: Mode, rng: &mut R) -> Result<ForwardOutput> {
    check_batch(m, batch)?;
    let l = batch.seq_len;
    let mut logits = Vec::with_capacity(batch.batch_size * l * m.n_tags);
    let mut rows = Vec::with_capacity(batch.batch_size);
    for b in 0..batch.batch_size {
        let tokens: Vec<usize> = batch.token_ids[b * l..(b + 1) * l].iter().map(|&t| t as usize).collect();
        let keep: Vec<bool> = batch.mask[b * l..(b + 1) * l].iter().map(|&v| v == 1).collect();
        let (row_logits, cache) = network::forward_row(m, &tokens, &keep, mode == Mode::Train, rng);
        logits.extend_from_slice(&row_logits);
        rows.push(cache);
    }
    Ok(ForwardOutput {
        batch_size: batch.batch_size,
        seq_len: l,
        n_tags: m.n_tags,
        logits,
        rows,
    })
}

/// Positions that contribute to the loss.
fn scored(batch: &Batch, cell: usize) -> Option<usize> {
    (batch.mask[cell] == 1 && batch.tag_ids[cell] != IGNORE_INDEX).then(|| batch.tag_ids[cell] as usize)
}

/// Summed token cross-entropy and the number of scored positions.
pub(crate) fn loss_sum(out: &ForwardOutput, batch: &Batch) -> (f64, usize) {
    let mut total = 0.0;
    let mut count = 0;
    for cell in 0..batch.batch_size * batch.seq_len {
        if let Some(gold) = scored(batch, cell) {
            let z = &out.logits[cell * out.n_tags..(cell + 1) * out.n_tags];
            total += ops::log_sum_exp(z) - z[gold];
            count += 1;
        }
    }
    (total, count)
}

/// Mean token cross-entropy over the batch, without gradients.
pub fn loss<R: Rng + ?Sized>(m: &ModelBundle, batch: &Batch, mode: Mode, rng: &mut R) -> Result<f64> {
    let out = forward(m, batch, mode, rng)?;
    match loss_sum(&out, batch) {
        (_, 0) => Err(Error::EmptyLoss),
        (total, count) => Ok(total / count as f64),
    }
}

/// Mean token cross-entropy and its gradient with respect to every
/// parameter, in the same layout as `m.params`.
pub fn loss_and_grads<R: Rng + ?Sized>(
    m: &ModelBundle,
    batch: &Batch,
    mode: Mode,
    rng: &mut R,
) -> Result<(f64, ParamSet)> {
    let out = forward(m, batch, mode, rng)?;
    let (total, count) = loss_sum(&out, batch);
    if count == 0 {
        return Err(Error::EmptyLoss);
    }
    let inv = 1.0 / count as f64;
    let t = m.n_tags;
    let l = batch.seq_len;
    let mut grads = m.params.zeros_like();
    for (b, cache) in out.rows.iter().enumerate() {
        let mut dlogits = vec![0.0; l * t];
        for pos in 0..l {
            let cell = b * l + pos;
            let Some(gold) = scored(batch, cell) else { continue };
            let z = &out.logits[cell * t..(cell + 1) * t];
            let lse = ops::log_sum_exp(z);
            let dz = &mut dlogits[pos * t..(pos + 1) * t];
            for (g, &zv) in dz.iter_mut().zip(z) {
                *g = (zv - lse).exp() * inv;
            }
            dz[gold] -= inv;
        }
        network::backward_row(m, cache, &dlogits, &mut grads);
    }
    Ok((total * inv, grads))
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(values: &[f64]) -> usize {
    let mut best = 0;
    for (i, &v) in values.iter().enumerate().skip(1) {
        if v > values[best] {
            best = i;
        }
    }
    best
}

const PREDICT_CHUNK: usize = 32;

/// Per-token argmax tags in eval mode, one sequence per sample.
pub fn predict_tags(
    m: &ModelBundle,
    samples: &[AddressSample],
    vocab: &Vocabulary,
    schema: &TagSchema,
) -> Result<Vec<Vec<TagId>>> {
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut out = Vec::with_capacity(samples.len());
    for chunk in samples.chunks(PREDICT_CHUNK) {
        let batch = encode_batch(chunk, vocab, schema)?;
        let fwd = forward(m, &batch, Mode::Eval, &mut rng)?;
        for (b, sample) in chunk.iter().enumerate() {
            out.push(
                (0..sample.len())
                    .map(|pos| TagId(argmax(fwd.logits_at(b, pos)) as u16))
                    .collect(),
            );
        }
    }
    Ok(out)
}

/// Final-layer vectors of every real token, with the gold tag of each row.
#[derive(Clone, Debug, PartialEq)]
pub struct Representations {
    pub d_model: usize,
    /// `[rows × d_model]`, samples in order, positions in order.
    pub values: Vec<f64>,
    pub tags: Vec<TagId>,
}

impl Representations {
    pub fn rows(&self) -> usize {
        self.tags.len()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.d_model..(i + 1) * self.d_model]
    }

    /// CSV with `dim_0..dim_{d-1}` columns and a trailing `tag` column.
    pub fn to_csv(&self, schema: &TagSchema) -> String {
        let mut out = String::new();
        for c in 0..self.d_model {
            out.push_str(&format!("dim_{c},"));
        }
        out.push_str("tag\n");
        for (i, tag) in self.tags.iter().enumerate() {
            for v in self.row(i) {
                out.push_str(&format!("{v},"));
            }
            out.push_str(schema.tag_name(*tag));
            out.push('\n');
        }
        out
    }

    pub fn parse_csv(text: &str, schema: &TagSchema) -> Result<Self> {
        let mut lines = text.lines().enumerate();
        let (_, header) = lines.next().ok_or(Error::EmptyInput)?;
        let d_model = header.split(',').count().saturating_sub(1);
        if d_model == 0 || !header.ends_with(",tag") && header != "tag" {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "expected dim_* columns followed by `tag`".into(),
            });
        }
        let mut values = Vec::new();
        let mut tags = Vec::new();
        for (i, line) in lines {
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: i + 1,
                column: 1,
                message,
            };
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != d_model + 1 {
                return Err(bad(format!("expected {} fields, found {}", d_model + 1, fields.len())));
            }
            for f in &fields[..d_model] {
                values.push(f.parse::<f64>().map_err(|_| bad(format!("bad number `{f}`")))?);
            }
            let tag = fields[d_model];
            tags.push(schema.tag_id(tag).ok_or_else(|| bad(format!("unknown tag `{tag}`")))?);
        }
        Ok(Self { d_model, values, tags })
    }
}

pub fn export_representations(
    m: &ModelBundle,
    samples: &[AddressSample],
    vocab: &Vocabulary,
    schema: &TagSchema,
) -> Result<Representations> {
    let d = m.encoder.d_model;
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let mut values = Vec::new();
    let mut tags = Vec::new();
    for chunk in samples.chunks(PREDICT_CHUNK) {
        let batch = encode_batch(chunk, vocab, schema)?;
        let fwd = forward(m, &batch, Mode::Eval, &mut rng)?;
        for (b, sample) in chunk.iter().enumerate() {
            values.extend_from_slice(&fwd.representations(b)[..sample.len() * d]);
            tags.extend_from_slice(sample.tags());
        }
    }
    Ok(Representations {
        d_model: d,
        values,
        tags,
    })
}
