//! l2-regularized logistic regression on concatenated gene-target profiles.

mod cv;
mod logreg;
mod model_io;

use std::path::PathBuf;

use crate::catalog::{encode_gene_vector, Catalog, CatalogError, GeneIndex};
use crate::pairs::{DirectedPair, Label, LabeledDataset};

pub use cv::{cross_validate, cross_validate_pairs, default_c_grid, CScore, CvPlan, CvResult};
pub use logreg::{objective_and_gradient, predict, train, Gradient, LogRegModel, TrainOptions};
pub use model_io::{load_model, read_model, save_model, write_model};

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error(transparent)]
    Encoding(#[from] CatalogError),
    #[error("drug {0:?} is not in the catalog")]
    UnknownDrug(String),
    #[error("pair ({0}, {1}) has no label")]
    Unlabeled(String, String),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("non-finite value in {0}")]
    NonFinite(&'static str),
    #[error("training data is empty")]
    EmptyData,
    #[error("training data contains a single class")]
    SingleClass,
    #[error("fold {fold} has a single class in its {part} part")]
    SingleClassFold { fold: usize, part: &'static str },
    #[error("regularization C must be positive and finite, got {0}")]
    BadC(f64),
    #[error("invalid CV plan: {0}")]
    BadPlan(String),
    #[error("model file line {line}: {message}")]
    ModelFormat { line: usize, message: String },
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

/// Sparse vector; `values == None` means every stored entry is 1.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector {
    pub dim: usize,
    pub indices: Vec<u32>,
    pub values: Option<Vec<f64>>,
}

impl SparseVector {
    pub fn binary(dim: usize, indices: Vec<u32>) -> Self {
        Self {
            dim,
            indices,
            values: None,
        }
    }

    pub fn from_dense(x: &[f64]) -> Self {
        let (indices, values) = x
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != 0.0)
            .map(|(i, v)| (i as u32, *v))
            .unzip();
        Self {
            dim: x.len(),
            indices,
            values: Some(values),
        }
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.indices.iter().enumerate().map(move |(k, &i)| {
            let v = self.values.as_ref().map_or(1.0, |vals| vals[k]);
            (i as usize, v)
        })
    }

    pub fn dot(&self, w: &[f64]) -> f64 {
        self.iter().map(|(i, v)| w[i] * v).sum()
    }

    pub fn to_dense(&self) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }
}

/// Training example with label `y` in {+1, -1}.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledPoint {
    pub x: SparseVector,
    pub y: f64,
}

impl LabeledPoint {
    pub fn new(x: SparseVector, label: Label) -> Self {
        Self {
            x,
            y: if label.is_positive() { 1.0 } else { -1.0 },
        }
    }
}

/// drug1 gene profile followed by drug2 gene profile, length `2G`.
#[derive(Debug, Clone, PartialEq)]
pub struct PairFeature {
    pub vector: SparseVector,
    pub label: Option<Label>,
}

impl PairFeature {
    pub fn to_point(&self) -> Option<LabeledPoint> {
        self.label.map(|l| LabeledPoint::new(self.vector.clone(), l))
    }
}

pub fn featurize_pair(
    pair: &DirectedPair,
    catalog: &Catalog,
    index: &GeneIndex,
) -> Result<PairFeature, BaselineError> {
    let g = index.len();
    let lookup = |id: &str| catalog.get(id).ok_or_else(|| BaselineError::UnknownDrug(id.to_string()));
    let v1 = encode_gene_vector(lookup(&pair.drug1)?, index)?;
    let v2 = encode_gene_vector(lookup(&pair.drug2)?, index)?;
    let mut indices = Vec::with_capacity(v1.popcount() + v2.popcount());
    indices.extend_from_slice(v1.ones());
    indices.extend(v2.ones().iter().map(|&i| i + g as u32));
    Ok(PairFeature {
        vector: SparseVector::binary(2 * g, indices),
        label: pair.label,
    })
}

/// Featurizes every labeled pair of a dataset.
pub fn featurize_dataset(
    dataset: &LabeledDataset,
    catalog: &Catalog,
    index: &GeneIndex,
) -> Result<Vec<LabeledPoint>, BaselineError> {
    dataset
        .pairs
        .iter()
        .map(|p| {
            featurize_pair(p, catalog, index)?
                .to_point()
                .ok_or_else(|| BaselineError::Unlabeled(p.drug1.clone(), p.drug2.clone()))
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{DrugGroup, DrugRecord};

    fn catalog() -> (Catalog, GeneIndex) {
        let mut c = Catalog::new("t");
        for (id, gene) in [("A", "G1"), ("B", "G2")] {
            c.insert(DrugRecord {
                drug_id: id.into(),
                name: id.into(),
                smiles: "C".into(),
                groups: [DrugGroup::Approved].into_iter().collect(),
                organisms: vec![],
                target_genes: [gene.to_string()].into_iter().collect(),
            })
            .unwrap();
        }
        let idx = crate::catalog::build_gene_index(&c);
        (c, idx)
    }

    #[test]
    fn concatenates_in_administration_order() {
        let (c, idx) = catalog();
        let ab = featurize_pair(&DirectedPair::new("A", "B", Label::Interaction, "t"), &c, &idx).unwrap();
        assert_eq!(ab.vector.to_dense(), vec![1.0, 0.0, 0.0, 1.0]);
        let ba = featurize_pair(&DirectedPair::new("B", "A", Label::Interaction, "t"), &c, &idx).unwrap();
        assert_eq!(ba.vector.to_dense(), vec![0.0, 1.0, 1.0, 0.0]);
        assert_ne!(ab, ba);
        assert_eq!(ab.to_point().unwrap().y, 1.0);
    }

    #[test]
    fn feature_length_is_twice_gene_count() {
        let idx = GeneIndex::from_sorted((0..3921).map(|i| format!("G{i:05}")).collect()).unwrap();
        let mut c = Catalog::new("t");
        for id in ["A", "B"] {
            c.insert(DrugRecord {
                drug_id: id.into(),
                name: String::new(),
                smiles: "C".into(),
                groups: [DrugGroup::Approved].into_iter().collect(),
                organisms: vec![],
                target_genes: ["G00007".to_string()].into_iter().collect(),
            })
            .unwrap();
        }
        let f = featurize_pair(&DirectedPair::new("A", "B", Label::NoInteraction, "t"), &c, &idx).unwrap();
        assert_eq!(f.vector.dim, 7842);
        assert_eq!(f.to_point().unwrap().y, -1.0);
    }

    #[test]
    fn unknown_gene_propagates() {
        let (c, _) = catalog();
        let small = GeneIndex::from_sorted(vec!["G1".into()]).unwrap();
        let r = featurize_pair(&DirectedPair::new("A", "B", Label::Interaction, "t"), &c, &small);
        assert!(matches!(r, Err(BaselineError::Encoding(_))));
    }

    #[test]
    fn sparse_dense_agree() {
        let x = [0.0, 2.5, 0.0, -1.0];
        let s = SparseVector::from_dense(&x);
        assert_eq!(s.to_dense(), x);
        assert_eq!(s.dot(&[1.0, 2.0, 3.0, 4.0]), 1.0);
    }
}
