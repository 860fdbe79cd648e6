mod common;

use border_peel::metrics::{ami, ari};
use proptest::prelude::*;

use common::*;

fn labeling(n: usize) -> impl Strategy<Value = Vec<i64>> {
    prop::collection::vec(-1i64..4, n)
}

fn pair() -> impl Strategy<Value = (Vec<i64>, Vec<i64>)> {
    (2usize..30).prop_flat_map(|n| (labeling(n), labeling(n)))
}

proptest! {
    #[test]
    fn indices_are_symmetric((a, b) in pair()) {
        prop_assert_eq!(ari(&a, &b).unwrap(), ari(&b, &a).unwrap());
        prop_assert!((ami(&a, &b).unwrap() - ami(&b, &a).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn indices_ignore_label_names((a, b) in pair(), shift in 1i64..50) {
        let renamed: Vec<i64> = a.iter().map(|&l| if l < 0 { l } else { 3 * l + shift }).collect();
        prop_assert_eq!(ari(&a, &b).unwrap(), ari(&renamed, &b).unwrap());
        prop_assert!((ami(&a, &b).unwrap() - ami(&renamed, &b).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn indices_are_permutation_invariant((a, b) in pair(), seed in any::<u64>()) {
        use rand::seq::SliceRandom;
        let mut order: Vec<usize> = (0..a.len()).collect();
        order.shuffle(&mut rng(seed));
        let pa: Vec<i64> = order.iter().map(|&i| a[i]).collect();
        let pb: Vec<i64> = order.iter().map(|&i| b[i]).collect();
        prop_assert_eq!(ari(&a, &b).unwrap(), ari(&pa, &pb).unwrap());
        prop_assert!((ami(&a, &b).unwrap() - ami(&pa, &pb).unwrap()).abs() < 1e-12);
    }

    #[test]
    fn ari_matches_pair_counting((a, b) in pair()) {
        prop_assert_eq!(ari(&a, &b).unwrap(), pair_count_ari(&a, &b));
    }

    #[test]
    fn self_comparison_is_perfect(a in (2usize..30).prop_flat_map(labeling)) {
        prop_assert_eq!(ari(&a, &a).unwrap(), 1.0);
        prop_assert_eq!(ami(&a, &a).unwrap(), 1.0);
    }
}

#[test]
fn ami_tracks_hypergeometric_oracle_on_unbalanced_tables() {
    let a: Vec<i64> = (0..40)
        .map(|i| if i < 30 { 0 } else { 1 + i % 3 })
        .collect();
    let b: Vec<i64> = (0..40).map(|i| (i * 7 % 5) as i64).collect();
    assert!((ami(&a, &b).unwrap() - oracle_ami(&a, &b)).abs() < 1e-9);
}
