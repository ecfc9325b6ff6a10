use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::logreg::{predict, train, TrainOptions};
use super::{featurize_dataset, BaselineError, LabeledPoint};
use crate::catalog::{Catalog, GeneIndex};
use crate::pairs::{Label, LabeledDataset};
use crate::rng::SeededRng;

/// Powers of ten from 1e-16 to 1e16.
pub fn default_c_grid() -> Vec<f64> {
    (-16..=16)
        .map(|e| format!("1e{e}").parse().expect("valid literal"))
        .collect()
}

/// Fold assignment and the C values to search.
#[derive(Debug, Clone, PartialEq)]
pub struct CvPlan {
    pub k: usize,
    /// `folds[i]` is the fold of example `i`.
    pub folds: Vec<usize>,
    pub c_grid: Vec<f64>,
    pub seed: u64,
}

impl CvPlan {
    /// Shuffles each class separately, then deals examples to folds
    /// round-robin. The dealer position carries over from one class to the
    /// next so fold sizes also differ by at most one.
    pub fn stratified(labels: &[Label], k: usize, c_grid: Vec<f64>, seed: u64) -> Result<Self, BaselineError> {
        if k < 2 {
            return Err(BaselineError::BadPlan(format!("k must be at least 2, got {k}")));
        }
        let mut rng = SeededRng::derive(seed, "cv-folds");
        let mut folds = vec![0; labels.len()];
        let mut next = 0;
        for class in [Label::Interaction, Label::NoInteraction] {
            let mut members: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
            rng.shuffle(&mut members);
            for i in members {
                folds[i] = next;
                next = (next + 1) % k;
            }
        }
        let plan = Self { k, folds, c_grid, seed };
        plan.validate(labels)?;
        Ok(plan)
    }

    pub fn validate(&self, labels: &[Label]) -> Result<(), BaselineError> {
        let bad = |m: String| Err(BaselineError::BadPlan(m));
        if self.c_grid.is_empty() {
            return bad("C grid is empty".into());
        }
        if let Some(c) = self.c_grid.iter().find(|c| !(**c > 0.0 && c.is_finite())) {
            return Err(BaselineError::BadC(*c));
        }
        if self.folds.len() != labels.len() {
            return bad(format!(
                "{} fold assignments for {} examples",
                self.folds.len(),
                labels.len()
            ));
        }
        if let Some(f) = self.folds.iter().find(|f| **f >= self.k) {
            return bad(format!("fold id {f} out of range for k={}", self.k));
        }
        for class in [Label::Interaction, Label::NoInteraction] {
            let counts = self.class_counts(labels, class);
            let (lo, hi) = (counts.iter().min(), counts.iter().max());
            if let (Some(lo), Some(hi)) = (lo, hi) {
                if hi - lo > 1 {
                    return bad(format!("{} counts per fold range {lo}..{hi}", class.as_str()));
                }
            }
        }
        Ok(())
    }

    /// Number of examples of `class` in each fold.
    pub fn class_counts(&self, labels: &[Label], class: Label) -> Vec<usize> {
        let mut counts = vec![0; self.k];
        for (f, l) in self.folds.iter().zip(labels) {
            if *l == class {
                counts[*f] += 1;
            }
        }
        counts
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CScore {
    pub c: f64,
    /// Validation accuracy per fold, indexed by fold id.
    pub fold_accuracy: Vec<f64>,
    pub mean_accuracy: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CvResult {
    pub best_c: f64,
    pub scores: Vec<CScore>,
}

fn labels_of(points: &[LabeledPoint]) -> Vec<Label> {
    points
        .iter()
        .map(|p| if p.y > 0.0 { Label::Interaction } else { Label::NoInteraction })
        .collect()
}

fn fold_accuracy(
    points: &[LabeledPoint],
    folds: &[usize],
    fold: usize,
    c: f64,
    opts: &TrainOptions,
) -> Result<f64, BaselineError> {
    let (mut fit, mut held) = (Vec::new(), Vec::new());
    for (p, f) in points.iter().zip(folds) {
        if *f == fold {
            held.push(p);
        } else {
            fit.push(p.clone());
        }
    }
    for (part, set) in [("training", fit.iter().collect::<Vec<_>>()), ("validation", held.clone())] {
        let pos = set.iter().any(|p| p.y > 0.0);
        let neg = set.iter().any(|p| p.y < 0.0);
        if !(pos && neg) {
            return Err(BaselineError::SingleClassFold { fold, part });
        }
    }
    let model = train(&fit, c, opts)?;
    let mut correct = 0usize;
    for p in &held {
        let (_, label) = predict(&model, &p.x)?;
        if label.is_positive() == (p.y > 0.0) {
            correct += 1;
        }
    }
    Ok(correct as f64 / held.len() as f64)
}

/// Mean validation accuracy per C over the plan's folds. The best C has the
/// highest mean; ties go to the smaller C.
pub fn cross_validate(points: &[LabeledPoint], plan: &CvPlan, opts: &TrainOptions) -> Result<CvResult, BaselineError> {
    plan.validate(&labels_of(points))?;
    let jobs: Vec<(usize, usize)> = (0..plan.c_grid.len())
        .flat_map(|ci| (0..plan.k).map(move |f| (ci, f)))
        .collect();
    let results: Vec<f64> = jobs
        .par_iter()
        .map(|&(ci, f)| fold_accuracy(points, &plan.folds, f, plan.c_grid[ci], opts))
        .collect::<Result<_, _>>()?;

    let scores: Vec<CScore> = plan
        .c_grid
        .iter()
        .enumerate()
        .map(|(ci, &c)| {
            let fold_accuracy = results[ci * plan.k..(ci + 1) * plan.k].to_vec();
            let mean_accuracy = fold_accuracy.iter().sum::<f64>() / plan.k as f64;
            CScore { c, fold_accuracy, mean_accuracy }
        })
        .collect();
    let best_c = select_best(&scores);
    Ok(CvResult { best_c, scores })
}

fn select_best(scores: &[CScore]) -> f64 {
    let mut best: Option<&CScore> = None;
    for s in scores {
        best = match best {
            Some(b) if s.mean_accuracy < b.mean_accuracy => Some(b),
            Some(b) if s.mean_accuracy == b.mean_accuracy && b.c <= s.c => Some(b),
            _ => Some(s),
        };
    }
    best.expect("non-empty grid").c
}

/// Featurizes `dataset` and runs [`cross_validate`].
pub fn cross_validate_pairs(
    dataset: &LabeledDataset,
    catalog: &Catalog,
    index: &GeneIndex,
    plan: &CvPlan,
    opts: &TrainOptions,
) -> Result<CvResult, BaselineError> {
    let points = featurize_dataset(dataset, catalog, index)?;
    cross_validate(&points, plan, opts)
}
