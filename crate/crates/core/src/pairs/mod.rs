//! Directed drug pairs, the known-interaction registry, external dataset
//! import, negative sampling and stratified splitting.

mod io;
mod negatives;
mod split;

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::catalog::Catalog;

pub use io::{
    load_pairs, load_raw_pairs, read_pairs, read_raw_pairs, write_pairs, DatasetEntry,
    DatasetManifest, RawPair,
};
pub use negatives::{allot_negatives, generate_negatives, BlockingPolicy};
pub use split::{stratified_fraction_split, stratified_split};

/// Source tag carried by sampled negatives.
pub const GENERATED_NEGATIVE: &str = "generated_negative";

#[derive(Debug, thiserror::Error)]
pub enum PairError {
    #[error("unknown drug {0:?}")]
    UnknownDrug(String),
    #[error("self-pair on drug {0:?}")]
    SelfPair(String),
    #[error("pair ({0}, {1}) is not labeled as an interaction")]
    NotPositive(String, String),
    #[error("cannot generate {requested} negatives: at most {max} candidate pairs are available")]
    InsufficientCandidates { requested: usize, max: usize },
    #[error("not enough negatives: short by {shortfall}")]
    InsufficientNegatives { shortfall: usize },
    #[error("split size {0} is odd; an exact 50/50 stratification needs an even size")]
    OddSize(usize),
    #[error("requested {requested} examples per class but the dataset has {positives} positives and {negatives} negatives")]
    SplitTooLarge {
        requested: usize,
        positives: usize,
        negatives: usize,
    },
    #[error("holdout fraction {0} must lie strictly between 0 and 1")]
    BadFraction(f64),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Interaction,
    NoInteraction,
}

impl Label {
    pub fn as_str(self) -> &'static str {
        match self {
            Label::Interaction => "interaction",
            Label::NoInteraction => "no_interaction",
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Interaction
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "interaction" | "1" => Ok(Label::Interaction),
            "no_interaction" | "no interaction" | "0" => Ok(Label::NoInteraction),
            other => Err(format!("unknown label {other:?}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// Ordered drug pair; `drug1` is administered first.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DirectedPair {
    pub drug1: String,
    pub drug2: String,
    pub label: Option<Label>,
    pub source: String,
}

impl DirectedPair {
    pub fn new(drug1: &str, drug2: &str, label: Label, source: &str) -> Self {
        Self {
            drug1: drug1.to_string(),
            drug2: drug2.to_string(),
            label: Some(label),
            source: source.to_string(),
        }
    }

    pub fn reversed(&self) -> Self {
        Self {
            drug1: self.drug2.clone(),
            drug2: self.drug1.clone(),
            ..self.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct LabeledDataset {
    pub name: String,
    pub pairs: Vec<DirectedPair>,
}

impl LabeledDataset {
    pub fn new(name: impl Into<String>, pairs: Vec<DirectedPair>) -> Self {
        Self {
            name: name.into(),
            pairs,
        }
    }

    pub fn len(&self) -> usize {
        self.pairs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pairs.is_empty()
    }

    pub fn count(&self, label: Label) -> usize {
        self.pairs.iter().filter(|p| p.label == Some(label)).count()
    }

    pub fn is_balanced(&self) -> bool {
        let pos = self.count(Label::Interaction);
        pos == self.count(Label::NoInteraction) && 2 * pos == self.len()
    }
}

/// Dense numbering of catalog drug ids, shared by registries over the same
/// catalog.
#[derive(Debug)]
pub struct DrugUniverse {
    ids: Vec<String>,
    index: HashMap<String, u32>,
}

impl DrugUniverse {
    pub fn from_catalog(catalog: &Catalog) -> Self {
        let ids: Vec<String> = catalog.ids().map(str::to_string).collect();
        let index = ids
            .iter()
            .enumerate()
            .map(|(i, id)| (id.clone(), i as u32))
            .collect();
        Self { ids, index }
    }

    pub fn len(&self) -> usize {
        self.ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.ids.is_empty()
    }

    pub fn id(&self, ix: u32) -> &str {
        &self.ids[ix as usize]
    }

    pub fn ix(&self, id: &str) -> Option<u32> {
        self.index.get(id).copied()
    }
}

/// Set of known ordered interactions over one catalog.
#[derive(Debug, Clone)]
pub struct InteractionRegistry {
    universe: Arc<DrugUniverse>,
    known: HashSet<(u32, u32)>,
}

impl InteractionRegistry {
    pub fn new(catalog: &Catalog) -> Self {
        Self::with_universe(Arc::new(DrugUniverse::from_catalog(catalog)))
    }

    pub fn with_universe(universe: Arc<DrugUniverse>) -> Self {
        Self {
            universe,
            known: HashSet::new(),
        }
    }

    pub fn universe(&self) -> &Arc<DrugUniverse> {
        &self.universe
    }

    pub fn len(&self) -> usize {
        self.known.len()
    }

    pub fn is_empty(&self) -> bool {
        self.known.is_empty()
    }

    /// Adds positive pairs. All pairs are validated before any is inserted.
    /// Returns how many were new.
    pub fn register_known(&mut self, pairs: &[DirectedPair]) -> Result<usize, PairError> {
        let mut keys = Vec::with_capacity(pairs.len());
        for p in pairs {
            if p.label != Some(Label::Interaction) {
                return Err(PairError::NotPositive(p.drug1.clone(), p.drug2.clone()));
            }
            keys.push(self.key(&p.drug1, &p.drug2)?);
        }
        let before = self.known.len();
        self.known.extend(keys);
        Ok(self.known.len() - before)
    }

    pub fn contains(&self, drug1: &str, drug2: &str) -> bool {
        match (self.universe.ix(drug1), self.universe.ix(drug2)) {
            (Some(a), Some(b)) => self.known.contains(&(a, b)),
            _ => false,
        }
    }

    pub(crate) fn contains_ix(&self, a: u32, b: u32) -> bool {
        self.known.contains(&(a, b))
    }

    pub(crate) fn known_ix(&self) -> &HashSet<(u32, u32)> {
        &self.known
    }

    fn key(&self, drug1: &str, drug2: &str) -> Result<(u32, u32), PairError> {
        let a = self
            .universe
            .ix(drug1)
            .ok_or_else(|| PairError::UnknownDrug(drug1.to_string()))?;
        let b = self
            .universe
            .ix(drug2)
            .ok_or_else(|| PairError::UnknownDrug(drug2.to_string()))?;
        if a == b {
            return Err(PairError::SelfPair(drug1.to_string()));
        }
        Ok((a, b))
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum ImportExclusion {
    UnknownDrug(String),
    SelfPair,
    KnownInReference,
    Duplicate,
}

impl fmt::Display for ImportExclusion {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ImportExclusion::UnknownDrug(id) => write!(f, "drug {id} not in catalog"),
            ImportExclusion::SelfPair => f.write_str("self-pair"),
            ImportExclusion::KnownInReference => f.write_str("already known in reference set"),
            ImportExclusion::Duplicate => f.write_str("duplicate pair"),
        }
    }
}

#[derive(Debug, Clone)]
pub struct ImportReport {
    pub dataset: LabeledDataset,
    /// (row index in the raw input, reason).
    pub excluded: Vec<(usize, ImportExclusion)>,
    pub raw_count: usize,
}

impl ImportReport {
    /// Datasets left with no usable pair are dropped from evaluation.
    pub fn dropped(&self) -> bool {
        self.dataset.is_empty()
    }
}

/// Imports external interaction lists against a reference registry,
/// deduplicating pairs within and across every dataset it has seen.
pub struct ExternalImporter<'a> {
    reference: &'a InteractionRegistry,
    seen: HashSet<(u32, u32)>,
}

impl<'a> ExternalImporter<'a> {
    pub fn new(reference: &'a InteractionRegistry) -> Self {
        Self {
            reference,
            seen: HashSet::new(),
        }
    }

    pub fn import(&mut self, name: &str, raw: &[RawPair]) -> ImportReport {
        let universe = self.reference.universe();
        let mut pairs = Vec::new();
        let mut excluded = Vec::new();
        for (row, rp) in raw.iter().enumerate() {
            let (a, b) = match (universe.ix(&rp.drug1), universe.ix(&rp.drug2)) {
                (Some(a), Some(b)) => (a, b),
                (None, _) => {
                    excluded.push((row, ImportExclusion::UnknownDrug(rp.drug1.clone())));
                    continue;
                }
                (_, None) => {
                    excluded.push((row, ImportExclusion::UnknownDrug(rp.drug2.clone())));
                    continue;
                }
            };
            let reason = if a == b {
                Some(ImportExclusion::SelfPair)
            } else if self.reference.contains_ix(a, b) {
                Some(ImportExclusion::KnownInReference)
            } else if !self.seen.insert((a, b)) {
                Some(ImportExclusion::Duplicate)
            } else {
                None
            };
            match reason {
                Some(r) => excluded.push((row, r)),
                None => pairs.push(DirectedPair::new(
                    universe.id(a),
                    universe.id(b),
                    Label::Interaction,
                    name,
                )),
            }
        }
        ImportReport {
            dataset: LabeledDataset::new(name, pairs),
            excluded,
            raw_count: raw.len(),
        }
    }
}

/// Single-dataset form of [`ExternalImporter::import`].
pub fn import_external_dataset(
    name: &str,
    raw: &[RawPair],
    reference: &InteractionRegistry,
) -> ImportReport {
    ExternalImporter::new(reference).import(name, raw)
}

/// Takes as many negatives as there are positives and appends them.
pub fn build_balanced(
    positives: &LabeledDataset,
    negatives: &[DirectedPair],
) -> Result<LabeledDataset, PairError> {
    let need = positives.len();
    if negatives.len() < need {
        return Err(PairError::InsufficientNegatives {
            shortfall: need - negatives.len(),
        });
    }
    let mut pairs = positives.pairs.clone();
    pairs.extend_from_slice(&negatives[..need]);
    Ok(LabeledDataset::new(positives.name.clone(), pairs))
}
