//! Corpus-scale properties of casing, CoNLL I/O and splitting.

mod common;

use adresparse::data::{default_schema, split_sizes};
use adresparse::turkish_text::turkish_lowercase;
use common::properties::{casing_fuzz, conll_round_trips};
use proptest::prelude::*;
use unicode_normalization::is_nfc;

#[test]
fn casing_holds_on_a_hundred_thousand_random_strings() {
    casing_fuzz(100_000, 4).unwrap();
}

#[test]
fn a_thousand_generated_datasets_round_trip() {
    conll_round_trips(1000, 8).unwrap();
}

#[test]
fn default_schema_has_twenty_five_tags() {
    assert_eq!(default_schema().tag_count(), 25);
}

#[test]
fn standard_split() {
    assert_eq!(split_sizes(1248).unwrap(), (874, 187, 187));
}

proptest! {
    #[test]
    fn lowercase_is_idempotent_and_nfc(raw in any::<String>()) {
        let once = turkish_lowercase(&raw);
        prop_assert!(is_nfc(&once));
        let twice = turkish_lowercase(&once);
        prop_assert_eq!(once, twice);
    }
}
