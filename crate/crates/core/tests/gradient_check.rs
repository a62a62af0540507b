//! Analytic gradients versus central finite differences.

mod common;

use adresparse::data::default_schema;
use adresparse::model::{HeadKind, Mode};
use common::gradcheck;

#[test]
fn twenty_random_configurations_match_finite_differences() {
    gradcheck::twenty_random_configurations().unwrap();
}

#[test]
fn dropout_path_matches_with_a_fixed_mask() {
    let schema = default_schema();
    let mut checked = 0;
    for seed in 100u64.. {
        let mut case = gradcheck::random_case(seed, &schema);
        if case.model.head.kind != HeadKind::Mlp {
            continue;
        }
        case.mode = Mode::Train;
        case.dropout_seed = seed;
        gradcheck::check_generic_point(case, seed).unwrap();
        checked += 1;
        if checked == 3 {
            break;
        }
    }
}
