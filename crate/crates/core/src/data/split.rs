use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::data::AddressSample;
use crate::error::{Error, Result};

/// Train/validation/test partition of one dataset.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct DatasetSplits {
    pub train: Vec<AddressSample>,
    pub validation: Vec<AddressSample>,
    pub test: Vec<AddressSample>,
}

/// `(train, validation, test)` sizes for `n` samples: 70% (rounded half up)
/// for training, the rest halved with validation taking the odd sample.
pub fn split_sizes(n: usize) -> Result<(usize, usize, usize)> {
    if n < 10 {
        return Err(Error::TooSmall(n));
    }
    let train = (7 * n + 5) / 10;
    let rest = n - train;
    let validation = rest.div_ceil(2);
    Ok((train, validation, rest - validation))
}

/// Seeded shuffle of `0..n` cut into the three split index lists.
pub fn split_indices(n: usize, seed: u64) -> Result<(Vec<usize>, Vec<usize>, Vec<usize>)> {
    let (train, validation, _) = split_sizes(n)?;
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let test = order.split_off(train + validation);
    let validation = order.split_off(train);
    Ok((order, validation, test))
}

pub fn split_dataset(samples: &[AddressSample], seed: u64) -> Result<DatasetSplits> {
    let (train, validation, test) = split_indices(samples.len(), seed)?;
    let pick = |idx: Vec<usize>| idx.into_iter().map(|i| samples[i].clone()).collect();
    Ok(DatasetSplits {
        train: pick(train),
        validation: pick(validation),
        test: pick(test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn size_examples() {
        assert_eq!(split_sizes(1248).unwrap(), (874, 187, 187));
        assert_eq!(split_sizes(10).unwrap(), (7, 2, 1));
        assert!(matches!(split_sizes(9), Err(Error::TooSmall(9))));
    }

    #[test]
    fn same_seed_same_split() {
        assert_eq!(split_indices(100, 3).unwrap(), split_indices(100, 3).unwrap());
        assert_ne!(split_indices(100, 3).unwrap(), split_indices(100, 4).unwrap());
    }

    proptest! {
        #[test]
        fn partition_rule(n in 10usize..=5000, seed in any::<u64>()) {
            let (tr, va, te) = split_indices(n, seed).unwrap();
            prop_assert_eq!(tr.len(), ((7 * n) as f64 / 10.0 + 0.5).floor() as usize);
            let rest = n - tr.len();
            prop_assert_eq!(va.len(), rest - rest / 2);
            prop_assert_eq!(te.len(), rest / 2);
            let mut all: Vec<usize> = tr.into_iter().chain(va).chain(te).collect();
            all.sort_unstable();
            prop_assert_eq!(all, (0..n).collect::<Vec<_>>());
        }
    }
}
