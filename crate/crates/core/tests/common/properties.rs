//! Corpus-level property sweeps shared by the property tests and the
//! acceptance suite.

use adresparse::data::{default_schema, generate_dataset, parse_conll, write_conll};
use adresparse::turkish_text::turkish_lowercase;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use unicode_normalization::is_nfc;

const TURKISH: &[char] = &['I', 'İ', 'ı', 'i', 'Ş', 'ş', 'Ğ', 'ğ', 'Ü', 'ü', 'Ö', 'ö', 'Ç', 'ç', 'Â', 'Î'];

fn random_char<R: Rng>(rng: &mut R) -> char {
    match rng.gen_range(0..6) {
        0 => rng.gen_range(' '..='~'),
        1 => TURKISH[rng.gen_range(0..TURKISH.len())],
        2 => char::from_u32(rng.gen_range(0x300..0x370)).expect("combining mark"),
        3 => '\u{307}',
        4 => rng.gen_range('\u{80}'..='\u{2FFF}'),
        _ => rng.gen(),
    }
}

pub fn random_string<R: Rng>(rng: &mut R) -> String {
    let len = rng.gen_range(0..24);
    (0..len).map(|_| random_char(rng)).collect()
}

/// Check Turkish lowercasing on `n` random strings: no character that still
/// has a lowercase mapping, NFC fixed point, idempotence, and no capital I
/// variants surviving.
pub fn casing_fuzz(n: usize, seed: u64) -> Result<(), String> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let raw = random_string(&mut rng);
        let out = turkish_lowercase(&raw);
        let s = out.as_str();
        if !is_nfc(s) {
            return Err(format!("string {i} {raw:?}: output {s:?} is not NFC"));
        }
        if turkish_lowercase(s).as_str() != s {
            return Err(format!("string {i} {raw:?}: lowercasing is not idempotent"));
        }
        if let Some(c) = s.chars().find(|&c| c == 'I' || c == 'İ' || c.to_lowercase().ne(std::iter::once(c))) {
            return Err(format!("string {i} {raw:?}: output keeps {c:?} (U+{:04X})", c as u32));
        }
    }
    Ok(())
}

/// Generate `n` datasets, check every sample is IOB-valid under the default
/// schema, and that writing then parsing CoNLL is the identity.
pub fn conll_round_trips(n: usize, seed: u64) -> Result<(), String> {
    let schema = default_schema();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for i in 0..n {
        let size = rng.gen_range(1..40);
        let data_seed = rng.gen();
        let data = generate_dataset(data_seed, size, &schema).map_err(|e| e.to_string())?;
        for (k, s) in data.iter().enumerate() {
            schema
                .check_iob(s.tags())
                .map_err(|e| format!("dataset {i}, sample {k}: {e}"))?;
        }
        let bytes = write_conll(&data, &schema);
        let back = parse_conll(&bytes, &schema).map_err(|e| format!("dataset {i}: {e}"))?;
        if back != data {
            return Err(format!("dataset {i} (seed {data_seed}) did not round-trip"));
        }
    }
    Ok(())
}
