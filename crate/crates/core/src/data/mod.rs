//! Tagged address samples, CoNLL I/O, splitting, and the synthetic corpus.

mod conll;
mod generate;
mod schema;
mod split;

use std::collections::BTreeMap;

pub use conll::{parse_conll, write_conll};
pub use generate::generate_dataset;
pub use schema::{default_schema, validate_iob, TagId, TagKind, TagSchema};
pub use split::{split_dataset, split_indices, split_sizes, DatasetSplits};

use crate::error::{Error, Result};
use crate::turkish_text::NormalizedText;

/// Longest sample the pipeline accepts, in tokens.
pub const MAX_SEQ_LEN: usize = 256;

/// One address query: normalized tokens and their aligned IOB tags.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct AddressSample {
    tokens: Vec<NormalizedText>,
    tags: Vec<TagId>,
}

impl AddressSample {
    /// Checks length, token shape and IOB validity against `schema`.
    pub fn new(tokens: Vec<NormalizedText>, tags: Vec<TagId>, schema: &TagSchema) -> Result<Self> {
        if tokens.is_empty() {
            return Err(Error::EmptySample);
        }
        if tokens.len() != tags.len() {
            return Err(Error::InvalidSample(format!(
                "{} tokens but {} tags",
                tokens.len(),
                tags.len()
            )));
        }
        if tokens.len() > MAX_SEQ_LEN {
            return Err(Error::TooLong {
                len: tokens.len(),
                max: MAX_SEQ_LEN,
            });
        }
        if let Some(t) = tokens
            .iter()
            .find(|t| t.is_empty() || t.chars().any(char::is_whitespace))
        {
            return Err(Error::InvalidSample(format!(
                "token {:?} is empty or contains whitespace",
                t.as_str()
            )));
        }
        schema.check_iob(&tags)?;
        Ok(Self { tokens, tags })
    }

    /// Convenience constructor from raw strings and tag names.
    pub fn from_strs(tokens: &[&str], tags: &[&str], schema: &TagSchema) -> Result<Self> {
        let tokens = tokens.iter().map(|t| NormalizedText::from(*t)).collect();
        let tags = tags
            .iter()
            .map(|t| schema.tag_id(t).ok_or_else(|| Error::UnknownTag(t.to_string())))
            .collect::<Result<Vec<_>>>()?;
        Self::new(tokens, tags, schema)
    }

    pub fn tokens(&self) -> &[NormalizedText] {
        &self.tokens
    }

    pub fn tags(&self) -> &[TagId] {
        &self.tags
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

/// Tag counts over every token position.
pub fn label_histogram(samples: &[AddressSample]) -> BTreeMap<TagId, usize> {
    let mut counts = BTreeMap::new();
    for tag in samples.iter().flat_map(|s| s.tags()) {
        *counts.entry(*tag).or_insert(0) += 1;
    }
    counts
}

/// Token counts per entity type (B- and I- merged, `O` dropped), in schema
/// order. Types that never occur are reported with a zero count.
pub fn entity_histogram(samples: &[AddressSample], schema: &TagSchema) -> Vec<(String, usize)> {
    let mut counts = vec![0usize; schema.entity_types().len()];
    for tag in samples.iter().flat_map(|s| s.tags()) {
        if let Some(e) = schema.entity_of(*tag) {
            counts[e] += 1;
        }
    }
    schema.entity_types().iter().cloned().zip(counts).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_examples() {
        let s = default_schema();
        let a = AddressSample::from_strs(&["a", "b"], &["O", "O"], &s).unwrap();
        let h = label_histogram(&[a]);
        assert_eq!(h.len(), 1);
        assert_eq!(h[&TagId::OUTSIDE], 2);

        let poi = AddressSample::from_strs(
            &["nike", "store", "hagia", "sofia"],
            &["B-POI", "I-POI", "B-POI", "I-POI"],
            &s,
        )
        .unwrap();
        let h = label_histogram(std::slice::from_ref(&poi));
        assert_eq!(h[&s.tag_id("B-POI").unwrap()], 2);
        assert_eq!(h[&s.tag_id("I-POI").unwrap()], 2);
        assert_eq!(h.values().sum::<usize>(), poi.len());

        let e = entity_histogram(&[poi], &s);
        assert_eq!(e.iter().find(|(n, _)| n == "POI").unwrap().1, 4);
    }

    #[test]
    fn sample_invariants() {
        let s = default_schema();
        assert!(matches!(
            AddressSample::from_strs(&[], &[], &s),
            Err(Error::EmptySample)
        ));
        assert!(AddressSample::from_strs(&["a"], &["O", "O"], &s).is_err());
        assert!(AddressSample::from_strs(&["a b"], &["O"], &s).is_err());
        assert!(AddressSample::from_strs(&["x"], &["I-CITY"], &s).is_err());
        let long: Vec<&str> = vec!["x"; MAX_SEQ_LEN + 1];
        let tags: Vec<&str> = vec!["O"; MAX_SEQ_LEN + 1];
        assert!(matches!(
            AddressSample::from_strs(&long, &tags, &s),
            Err(Error::TooLong { .. })
        ));
        let ok = AddressSample::from_strs(&["İzmir"], &["B-CITY"], &s).unwrap();
        assert_eq!(ok.tokens()[0].as_str(), "izmir");
    }
}
