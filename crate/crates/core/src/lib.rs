//! Turkish address parsing as IOB token classification.
//!
//! The crate covers the whole pipeline: Turkish-aware normalization
//! ([`turkish_text`]), tag schemas and CoNLL corpora ([`data`]), word-level
//! batching ([`encoding`]), a small transformer encoder with a linear or
//! two-hidden-layer MLP head ([`model`]), AdamW/RMSprop/SGD ([`optim`]),
//! early-stopped training ([`trainer`]), random-search tuning ([`hpo`]),
//! the five evaluation metrics ([`evalmetrics`]) and reporting ([`report`]).
//!
//! A guide with worked examples lives in the `book/` directory of the
//! repository; its code listings are compiled and run as doc-tests of this
//! crate.

pub mod data;
pub mod encoding;
mod error;
pub mod evalmetrics;
pub mod hpo;
pub mod model;
pub mod optim;
pub mod report;
pub mod tensor;
pub mod trainer;
pub mod turkish_text;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/normalization.md")]
    mod normalization {}
    #[doc = include_str!("../../../book/src/data.md")]
    mod data {}
    #[doc = include_str!("../../../book/src/encoding.md")]
    mod encoding {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/training.md")]
    mod training {}
    #[doc = include_str!("../../../book/src/evaluation.md")]
    mod evaluation {}
    #[doc = include_str!("../../../book/src/reporting.md")]
    mod reporting {}
}
