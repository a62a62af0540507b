use serde::{Deserialize, Serialize};

use crate::data::MAX_SEQ_LEN;
use crate::error::{Error, Result};

/// Shape of the from-scratch encoder.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EncoderConfig {
    pub variant_name: String,
    pub d_model: usize,
    pub n_layers: usize,
    pub n_heads: usize,
    pub d_ff: usize,
    pub max_len: usize,
}

impl EncoderConfig {
    pub fn new(variant_name: &str, d_model: usize, n_layers: usize, n_heads: usize, d_ff: usize) -> Self {
        Self {
            variant_name: variant_name.to_string(),
            d_model,
            n_layers,
            n_heads,
            d_ff,
            max_len: MAX_SEQ_LEN,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::Config(format!("encoder `{}`: {m}", self.variant_name)));
        if self.d_model == 0 || self.n_layers == 0 || self.n_heads == 0 || self.d_ff == 0 {
            return bad("dimensions must be positive");
        }
        if self.d_model % self.n_heads != 0 {
            return bad("n_heads must divide d_model");
        }
        if self.max_len != MAX_SEQ_LEN {
            return bad("max_len must be 256");
        }
        Ok(())
    }

    pub fn head_dim(&self) -> usize {
        self.d_model / self.n_heads
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum HeadKind {
    Linear,
    Mlp,
}

impl HeadKind {
    pub fn as_str(self) -> &'static str {
        match self {
            HeadKind::Linear => "linear",
            HeadKind::Mlp => "mlp",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s.to_ascii_lowercase().as_str() {
            "linear" => Some(HeadKind::Linear),
            "mlp" => Some(HeadKind::Mlp),
            _ => None,
        }
    }
}

impl std::fmt::Display for HeadKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Classification head on top of the per-token encoder output.
///
/// `Mlp` is `Linear(d→h) → ReLU → Dropout(p) → Linear(h→h) → ReLU →
/// Linear(h→tags)`; `hidden_dim` and `dropout_p` are ignored for `Linear`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeadConfig {
    pub kind: HeadKind,
    /// Defaults to `d_model` when unset.
    pub hidden_dim: Option<usize>,
    pub dropout_p: f64,
}

pub const MLP_DROPOUT: f64 = 0.4;

impl HeadConfig {
    pub fn linear() -> Self {
        Self {
            kind: HeadKind::Linear,
            hidden_dim: None,
            dropout_p: 0.0,
        }
    }

    pub fn mlp() -> Self {
        Self {
            kind: HeadKind::Mlp,
            hidden_dim: None,
            dropout_p: MLP_DROPOUT,
        }
    }

    pub fn of_kind(kind: HeadKind) -> Self {
        match kind {
            HeadKind::Linear => Self::linear(),
            HeadKind::Mlp => Self::mlp(),
        }
    }

    pub fn with_hidden(mut self, hidden: usize) -> Self {
        self.hidden_dim = Some(hidden);
        self
    }

    pub fn with_dropout(mut self, p: f64) -> Self {
        self.dropout_p = p;
        self
    }

    pub fn hidden(&self, d_model: usize) -> usize {
        self.hidden_dim.unwrap_or(d_model)
    }

    pub fn validate(&self) -> Result<()> {
        if self.kind == HeadKind::Mlp {
            if !(0.0..1.0).contains(&self.dropout_p) {
                return Err(Error::Config(format!(
                    "dropout probability {} outside [0, 1)",
                    self.dropout_p
                )));
            }
            if self.hidden_dim == Some(0) {
                return Err(Error::Config("MLP hidden dimension must be positive".into()));
            }
        }
        Ok(())
    }
}

/// Names of the built-in encoder sizes, largest first.
pub const VARIANTS: [&str; 3] = ["base", "distil", "small"];

/// Built-in encoder sizes: same width, 4, 2 or 1 layers.
pub fn variant(name: &str) -> Option<EncoderConfig> {
    let layers = match name {
        "base" => 4,
        "distil" => 2,
        "small" => 1,
        _ => return None,
    };
    Some(EncoderConfig::new(name, 64, layers, 4, 128))
}

/// Parameters in the classification head alone.
pub fn head_parameter_count(d_model: usize, head: &HeadConfig, n_tags: usize) -> usize {
    match head.kind {
        HeadKind::Linear => d_model * n_tags + n_tags,
        HeadKind::Mlp => {
            let h = head.hidden(d_model);
            (d_model * h + h) + (h * h + h) + (h * n_tags + n_tags)
        }
    }
}

/// Total trainable scalars for a model with the given configuration.
pub fn parameter_count(enc: &EncoderConfig, head: &HeadConfig, vocab_size: usize, n_tags: usize) -> usize {
    let d = enc.d_model;
    let per_layer = 2 * d + 4 * (d * d + d) + 2 * d + (d * enc.d_ff + enc.d_ff) + (enc.d_ff * d + d);
    vocab_size * d + enc.max_len * d + enc.n_layers * per_layer + 2 * d + head_parameter_count(d, head, n_tags)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn head_counts() {
        assert_eq!(head_parameter_count(64, &HeadConfig::linear(), 25), 1625);
        assert_eq!(head_parameter_count(64, &HeadConfig::mlp(), 25), 9945);
    }

    #[test]
    fn config_validation() {
        assert!(EncoderConfig::new("x", 10, 1, 3, 4).validate().is_err());
        assert!(EncoderConfig::new("x", 12, 1, 3, 4).validate().is_ok());
        assert!(HeadConfig::mlp().with_dropout(1.0).validate().is_err());
        assert!(HeadConfig::linear().with_dropout(1.0).validate().is_ok());
        for name in VARIANTS {
            variant(name).unwrap().validate().unwrap();
        }
        assert!(variant("huge").is_none());
    }
}
