use std::collections::HashSet;

use ddibench::pairs::{stratified_fraction_split, stratified_split, DirectedPair, Label, LabeledDataset, PairError};
use proptest::prelude::*;

fn balanced(per_class: usize) -> LabeledDataset {
    let mut pairs = Vec::new();
    for i in 0..per_class {
        pairs.push(DirectedPair::new(&format!("P{i}"), &format!("Q{i}"), Label::Interaction, "t"));
    }
    for i in 0..per_class {
        pairs.push(DirectedPair::new(&format!("N{i}"), &format!("M{i}"), Label::NoInteraction, "t"));
    }
    LabeledDataset::new("fixture", pairs)
}

fn keys(ds: &LabeledDataset) -> HashSet<(String, String)> {
    ds.pairs.iter().map(|p| (p.drug1.clone(), p.drug2.clone())).collect()
}

#[test]
fn twenty_pairs_split_five_and_five() {
    let ds = balanced(10);
    let (train, val) = stratified_split(&ds, 10, 10, 99).unwrap();
    for part in [&train, &val] {
        assert_eq!(part.count(Label::Interaction), 5);
        assert_eq!(part.count(Label::NoInteraction), 5);
    }
    assert!(keys(&train).is_disjoint(&keys(&val)));
    assert_eq!(stratified_split(&ds, 10, 10, 99).unwrap(), (train, val));
}

#[test]
fn odd_sizes_are_rejected() {
    let ds = balanced(10);
    assert!(matches!(stratified_split(&ds, 9, 10, 1), Err(PairError::OddSize(9))));
    assert!(matches!(stratified_split(&ds, 10, 7, 1), Err(PairError::OddSize(7))));
}

#[test]
fn oversized_request_is_rejected() {
    let ds = balanced(10);
    assert!(matches!(stratified_split(&ds, 12, 10, 1), Err(PairError::SplitTooLarge { .. })));
}

proptest! {
    #[test]
    fn split_is_stratified_and_disjoint(per_class in 1usize..60, t in 0usize..30, v in 0usize..30, seed: u64) {
        prop_assume!(t + v <= per_class);
        let ds = balanced(per_class);
        let (train, val) = stratified_split(&ds, 2 * t, 2 * v, seed).unwrap();
        prop_assert_eq!(train.count(Label::Interaction), t);
        prop_assert_eq!(train.count(Label::NoInteraction), t);
        prop_assert_eq!(val.count(Label::Interaction), v);
        prop_assert_eq!(val.count(Label::NoInteraction), v);
        prop_assert!(keys(&train).is_disjoint(&keys(&val)));
    }

    #[test]
    fn fraction_split_partitions(per_class in 1usize..200, frac in 0.01f64..0.99, seed: u64) {
        let ds = balanced(per_class);
        let (train, hold) = stratified_fraction_split(&ds, frac, seed).unwrap();
        let expect = (per_class as f64 * frac).round() as usize;
        prop_assert_eq!(hold.count(Label::Interaction), expect);
        prop_assert_eq!(hold.count(Label::NoInteraction), expect);
        prop_assert_eq!(train.len() + hold.len(), ds.len());
        prop_assert!(keys(&train).is_disjoint(&keys(&hold)));
    }
}
