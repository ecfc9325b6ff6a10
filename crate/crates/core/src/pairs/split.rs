use super::{Label, LabeledDataset, PairError};
use crate::rng::SeededRng;

fn class_indices(dataset: &LabeledDataset, seed: u64, stream: &str) -> (Vec<usize>, Vec<usize>) {
    let mut pos = Vec::new();
    let mut neg = Vec::new();
    for (i, p) in dataset.pairs.iter().enumerate() {
        match p.label {
            Some(Label::Interaction) => pos.push(i),
            Some(Label::NoInteraction) => neg.push(i),
            None => {}
        }
    }
    let mut rng = SeededRng::derive(seed, stream);
    rng.shuffle(&mut pos);
    rng.shuffle(&mut neg);
    (pos, neg)
}

fn subset(dataset: &LabeledDataset, name: String, mut idx: Vec<usize>) -> LabeledDataset {
    idx.sort_unstable();
    LabeledDataset::new(name, idx.into_iter().map(|i| dataset.pairs[i].clone()).collect())
}

/// Draws disjoint train and validation sets, each exactly half positive.
/// Pairs keep their relative order from `dataset`.
pub fn stratified_split(
    dataset: &LabeledDataset,
    train_size: usize,
    validation_size: usize,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), PairError> {
    for size in [train_size, validation_size] {
        if size % 2 != 0 {
            return Err(PairError::OddSize(size));
        }
    }
    let (t, v) = (train_size / 2, validation_size / 2);
    let (pos, neg) = class_indices(dataset, seed, "split");
    if t + v > pos.len() || t + v > neg.len() {
        return Err(PairError::SplitTooLarge {
            requested: t + v,
            positives: pos.len(),
            negatives: neg.len(),
        });
    }
    let train = [&pos[..t], &neg[..t]].concat();
    let validation = [&pos[t..t + v], &neg[t..t + v]].concat();
    Ok((
        subset(dataset, format!("{}_train", dataset.name), train),
        subset(dataset, format!("{}_validation", dataset.name), validation),
    ))
}

/// Splits every labeled pair into train and holdout, holding out
/// `round(fraction * class size)` pairs of each class.
pub fn stratified_fraction_split(
    dataset: &LabeledDataset,
    holdout_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset), PairError> {
    if !(holdout_fraction > 0.0 && holdout_fraction < 1.0) {
        return Err(PairError::BadFraction(holdout_fraction));
    }
    let (pos, neg) = class_indices(dataset, seed, "holdout");
    let hp = (pos.len() as f64 * holdout_fraction).round() as usize;
    let hn = (neg.len() as f64 * holdout_fraction).round() as usize;
    let holdout = [&pos[..hp], &neg[..hn]].concat();
    let train = [&pos[hp..], &neg[hn..]].concat();
    Ok((
        subset(dataset, format!("{}_train", dataset.name), train),
        subset(dataset, format!("{}_holdout", dataset.name), holdout),
    ))
}
