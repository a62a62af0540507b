//! Word-level vocabulary, numericalization and dynamic padding.

use std::collections::HashMap;

use sha2::{Digest, Sha256};

use crate::data::{AddressSample, TagId, TagSchema, MAX_SEQ_LEN};
use crate::error::{Error, Result};

pub const PAD_ID: u32 = 0;
pub const UNK_ID: u32 = 1;
pub const PAD_TOKEN: &str = "<pad>";
pub const UNK_TOKEN: &str = "<unk>";

/// Tag value at padded positions of a [`Batch`].
pub const IGNORE_INDEX: i32 = -100;

/// Token → id map built from the training split.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Vocabulary {
    tokens: Vec<String>,
    index: HashMap<String, u32>,
}

impl Vocabulary {
    fn from_tokens(tokens: Vec<String>) -> Self {
        let index = tokens
            .iter()
            .enumerate()
            .map(|(i, t)| (t.clone(), i as u32))
            .collect();
        Self { tokens, index }
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }

    pub fn id(&self, token: &str) -> u32 {
        self.index.get(token).copied().unwrap_or(UNK_ID)
    }

    pub fn token(&self, id: u32) -> Option<&str> {
        self.tokens.get(id as usize).map(String::as_str)
    }

    pub fn contains(&self, token: &str) -> bool {
        self.index.contains_key(token)
    }

    /// `token<TAB>id` lines in id order.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (i, t) in self.tokens.iter().enumerate() {
            out.push_str(t);
            out.push('\t');
            out.push_str(&i.to_string());
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut tokens = Vec::new();
        for (i, line) in text.lines().enumerate() {
            if line.is_empty() {
                continue;
            }
            let bad = |message: String| Error::Parse {
                line: i + 1,
                column: 1,
                message,
            };
            let (token, id) = line
                .split_once('\t')
                .ok_or_else(|| bad("expected `token<TAB>id`".into()))?;
            let id: usize = id.trim().parse().map_err(|_| bad(format!("bad id `{id}`")))?;
            if id != tokens.len() {
                return Err(bad(format!("expected id {}, found {id}", tokens.len())));
            }
            tokens.push(token.to_string());
        }
        if tokens.len() < 2 || tokens[0] != PAD_TOKEN || tokens[1] != UNK_TOKEN {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "vocabulary must start with <pad> and <unk>".into(),
            });
        }
        let vocab = Self::from_tokens(tokens);
        if vocab.index.len() != vocab.tokens.len() {
            return Err(Error::Parse {
                line: 1,
                column: 1,
                message: "duplicate tokens".into(),
            });
        }
        Ok(vocab)
    }

    /// SHA-256 of the serialized vocabulary, hex encoded.
    pub fn fingerprint(&self) -> String {
        let digest = Sha256::digest(self.to_text().as_bytes());
        digest.iter().map(|b| format!("{b:02x}")).collect()
    }
}

/// Tokens seen at least `min_count` times in `train` get ids, most frequent
/// first with ties broken lexicographically.
pub fn build_vocab(train: &[AddressSample], min_count: usize) -> Result<Vocabulary> {
    if train.is_empty() {
        return Err(Error::EmptyTrain);
    }
    if min_count < 1 {
        return Err(Error::Config("min_count must be at least 1".into()));
    }
    let mut counts: HashMap<&str, usize> = HashMap::new();
    for token in train.iter().flat_map(|s| s.tokens()) {
        *counts.entry(token.as_str()).or_insert(0) += 1;
    }
    let mut kept: Vec<(&str, usize)> = counts
        .into_iter()
        .filter(|&(t, c)| c >= min_count && t != PAD_TOKEN && t != UNK_TOKEN)
        .collect();
    kept.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(b.0)));

    let mut tokens = vec![PAD_TOKEN.to_string(), UNK_TOKEN.to_string()];
    tokens.extend(kept.into_iter().map(|(t, _)| t.to_string()));
    Ok(Vocabulary::from_tokens(tokens))
}

/// Padded `[batch × seq_len]` id, tag and mask matrices, row-major.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Batch {
    pub batch_size: usize,
    pub seq_len: usize,
    pub token_ids: Vec<u32>,
    pub tag_ids: Vec<i32>,
    pub mask: Vec<u8>,
}

impl Batch {
    pub fn row_len(&self, row: usize) -> usize {
        self.mask[row * self.seq_len..(row + 1) * self.seq_len]
            .iter()
            .map(|&m| m as usize)
            .sum()
    }

    pub fn real_tokens(&self) -> usize {
        self.mask.iter().map(|&m| m as usize).sum()
    }

    /// Token ids and tags at unmasked positions, one entry per row.
    pub fn decode(&self) -> Vec<(Vec<u32>, Vec<TagId>)> {
        (0..self.batch_size)
            .map(|b| {
                let range = b * self.seq_len..(b + 1) * self.seq_len;
                let mut ids = Vec::new();
                let mut tags = Vec::new();
                for i in range {
                    if self.mask[i] == 1 {
                        ids.push(self.token_ids[i]);
                        tags.push(TagId(self.tag_ids[i] as u16));
                    }
                }
                (ids, tags)
            })
            .collect()
    }
}

/// Pad to the longest sample in the batch (at most 256 positions).
pub fn encode_batch(samples: &[AddressSample], vocab: &Vocabulary, schema: &TagSchema) -> Result<Batch> {
    let seq_len = samples.iter().map(AddressSample::len).max().unwrap_or(0);
    if let Some(s) = samples.iter().find(|s| s.len() > MAX_SEQ_LEN) {
        return Err(Error::TooLong {
            len: s.len(),
            max: MAX_SEQ_LEN,
        });
    }
    let cells = samples.len() * seq_len;
    let mut token_ids = vec![PAD_ID; cells];
    let mut tag_ids = vec![IGNORE_INDEX; cells];
    let mut mask = vec![0u8; cells];
    for (b, sample) in samples.iter().enumerate() {
        for (j, (token, tag)) in sample.tokens().iter().zip(sample.tags()).enumerate() {
            if !schema.contains(*tag) {
                return Err(Error::UnknownTag(tag.to_string()));
            }
            let cell = b * seq_len + j;
            token_ids[cell] = vocab.id(token);
            tag_ids[cell] = tag.0 as i32;
            mask[cell] = 1;
        }
    }
    Ok(Batch {
        batch_size: samples.len(),
        seq_len,
        token_ids,
        tag_ids,
        mask,
    })
}
