//! Turkish-aware lowercasing.
//!
//! Default Unicode lowercasing maps `I` to `i` and `İ` to `i` followed by a
//! combining dot above, both of which are wrong for Turkish and the second of
//! which leaves a stray combining mark that tokenizers choke on. The two
//! Turkish overrides are hard-coded so the output never depends on the host
//! locale.

use std::fmt;
use std::ops::Deref;

use serde::{Deserialize, Serialize};
use unicode_normalization::UnicodeNormalization;

use crate::error::{Error, Result};

/// A string that is NFC-normalized and lowercased under Turkish casing rules.
///
/// The only way to obtain one is through [`turkish_lowercase`], so holding a
/// `NormalizedText` is proof that normalization ran.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct NormalizedText(String);

impl NormalizedText {
    pub fn as_str(&self) -> &str {
        &self.0
    }

    pub fn into_string(self) -> String {
        self.0
    }
}

impl Deref for NormalizedText {
    type Target = str;

    fn deref(&self) -> &str {
        &self.0
    }
}

impl AsRef<str> for NormalizedText {
    fn as_ref(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for NormalizedText {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl From<&str> for NormalizedText {
    fn from(raw: &str) -> Self {
        turkish_lowercase(raw)
    }
}

/// Lowercase one character with the Turkish overrides applied.
fn push_lower(c: char, out: &mut String) {
    match c {
        'I' => out.push('ı'),
        'İ' => out.push('i'),
        _ => out.extend(c.to_lowercase()),
    }
}

/// NFC-normalize `raw`, then lowercase it with `I → ı` and `İ → i`.
///
/// Everything else follows the default Unicode lowercase mapping; digits and
/// punctuation pass through. A second NFC pass keeps the result a fixed point
/// of NFC even when lowercasing exposes a composable pair.
pub fn turkish_lowercase(raw: &str) -> NormalizedText {
    let mut lowered = String::with_capacity(raw.len());
    for c in raw.nfc() {
        push_lower(c, &mut lowered);
    }
    NormalizedText(lowered.nfc().collect())
}

/// Element-wise [`turkish_lowercase`] over one sample's tokens.
pub fn normalize_sample<S: AsRef<str>>(tokens: &[S]) -> Result<Vec<NormalizedText>> {
    if tokens.is_empty() {
        return Err(Error::EmptySample);
    }
    Ok(tokens.iter().map(|t| turkish_lowercase(t.as_ref())).collect())
}

/// Uppercase under Turkish rules (`i → İ`, `ı → I`).
///
/// Only used to synthesize cased surface forms; the pipeline itself never
/// uppercases.
pub fn turkish_uppercase(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            'i' => out.push('İ'),
            'ı' => out.push('I'),
            _ => out.extend(c.to_uppercase()),
        }
    }
    out
}
