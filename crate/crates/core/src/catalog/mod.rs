//! Drug catalog: records, eligibility filtering and gene-target encoding.
//!
//! Gene symbols are compared byte-wise and case-sensitively. Producers of a
//! catalog file are expected to normalize casing before loading.

mod genes;
mod io;
mod xml;

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::path::PathBuf;
use std::str::FromStr;

use chrono::{DateTime, Utc};
use serde::{Deserialize, Serialize};

pub use genes::{build_gene_index, encode_gene_vector, GeneIndex, GeneVector};
pub use io::{load_catalog, read_catalog, write_catalog, CatalogFormat};
pub use xml::{parse_drugbank_xml_subset, read_drugbank_xml, XmlImport};

#[derive(Debug, thiserror::Error)]
pub enum CatalogError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}: {message}")]
    Malformed { line: u64, message: String },
    #[error("line {line}: duplicate drug_id {drug_id:?}")]
    DuplicateId { drug_id: String, line: u64 },
    #[error("line {line}: unknown group tag {tag:?}")]
    UnknownGroup { tag: String, line: u64 },
    #[error("xml error at byte {offset}: {message}")]
    Xml { offset: u64, message: String },
    #[error("drug element at byte {offset} has no drugbank-id")]
    MissingId { offset: u64 },
    #[error("drug {drug_id:?} targets gene {gene:?} which is not in the gene index")]
    GeneNotIndexed { drug_id: String, gene: String },
}

/// Regulatory status tags a drug may carry.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DrugGroup {
    Approved,
    Experimental,
    Withdrawn,
    Illicit,
    Investigational,
    VetApproved,
    Nutraceutical,
}

impl DrugGroup {
    pub const ALL: [DrugGroup; 7] = [
        DrugGroup::Approved,
        DrugGroup::Experimental,
        DrugGroup::Withdrawn,
        DrugGroup::Illicit,
        DrugGroup::Investigational,
        DrugGroup::VetApproved,
        DrugGroup::Nutraceutical,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DrugGroup::Approved => "approved",
            DrugGroup::Experimental => "experimental",
            DrugGroup::Withdrawn => "withdrawn",
            DrugGroup::Illicit => "illicit",
            DrugGroup::Investigational => "investigational",
            DrugGroup::VetApproved => "vet_approved",
            DrugGroup::Nutraceutical => "nutraceutical",
        }
    }
}

impl FromStr for DrugGroup {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DrugGroup::ALL
            .iter()
            .copied()
            .find(|g| g.as_str() == s)
            .ok_or_else(|| s.to_string())
    }
}

impl fmt::Display for DrugGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DrugRecord {
    pub drug_id: String,
    pub name: String,
    /// May be empty on load; such records never survive [`filter_eligible`].
    pub smiles: String,
    pub groups: BTreeSet<DrugGroup>,
    /// Kept in source order.
    pub organisms: Vec<String>,
    pub target_genes: BTreeSet<String>,
}

impl DrugRecord {
    /// Name shown to humans and language models; falls back to the id.
    pub fn display_name(&self) -> &str {
        if self.name.trim().is_empty() {
            &self.drug_id
        } else {
            &self.name
        }
    }

    /// Every reason this record would be dropped by [`filter_eligible`].
    pub fn exclusion_reasons(&self) -> Vec<ExclusionReason> {
        let mut reasons = Vec::new();
        if !self.groups.contains(&DrugGroup::Approved)
            && !self.groups.contains(&DrugGroup::Experimental)
        {
            reasons.push(ExclusionReason::NotApprovedOrExperimental);
        }
        if self.groups.contains(&DrugGroup::Withdrawn) || self.groups.contains(&DrugGroup::Illicit)
        {
            reasons.push(ExclusionReason::WithdrawnOrIllicit);
        }
        if self.target_genes.is_empty() {
            reasons.push(ExclusionReason::NoGeneTargets);
        }
        if self.smiles.trim().is_empty() {
            reasons.push(ExclusionReason::MissingSmiles);
        }
        reasons
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum ExclusionReason {
    NotApprovedOrExperimental,
    WithdrawnOrIllicit,
    NoGeneTargets,
    MissingSmiles,
}

impl ExclusionReason {
    pub fn as_str(self) -> &'static str {
        match self {
            ExclusionReason::NotApprovedOrExperimental => "not approved/experimental",
            ExclusionReason::WithdrawnOrIllicit => "withdrawn/illicit",
            ExclusionReason::NoGeneTargets => "no gene targets",
            ExclusionReason::MissingSmiles => "missing SMILES",
        }
    }
}

impl fmt::Display for ExclusionReason {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Provenance {
    pub source: String,
    pub loaded_at: DateTime<Utc>,
}

/// Drug records keyed by id. Immutable once built.
#[derive(Debug, Clone)]
pub struct Catalog {
    records: BTreeMap<String, DrugRecord>,
    pub provenance: Provenance,
}

impl Catalog {
    pub fn new(source: impl Into<String>) -> Self {
        Self {
            records: BTreeMap::new(),
            provenance: Provenance {
                source: source.into(),
                loaded_at: Utc::now(),
            },
        }
    }

    /// Adds a record, refusing a drug_id that is already present.
    pub fn insert(&mut self, record: DrugRecord) -> Result<(), DrugRecord> {
        if self.records.contains_key(&record.drug_id) {
            return Err(record);
        }
        self.records.insert(record.drug_id.clone(), record);
        Ok(())
    }

    pub fn get(&self, drug_id: &str) -> Option<&DrugRecord> {
        self.records.get(drug_id)
    }

    pub fn contains(&self, drug_id: &str) -> bool {
        self.records.contains_key(drug_id)
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// Records in ascending drug_id order.
    pub fn records(&self) -> impl Iterator<Item = &DrugRecord> {
        self.records.values()
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.records.keys().map(String::as_str)
    }

    /// Record-level equality, ignoring provenance.
    pub fn same_records(&self, other: &Catalog) -> bool {
        self.records == other.records
    }
}

/// Result of [`filter_eligible`]: the retained catalog plus why each dropped
/// record was dropped.
#[derive(Debug, Clone)]
pub struct Filtered {
    pub catalog: Catalog,
    pub excluded: Vec<(String, Vec<ExclusionReason>)>,
}

/// Keeps approved or experimental drugs that are neither withdrawn nor
/// illicit, target at least one gene and carry a SMILES string.
pub fn filter_eligible(catalog: &Catalog) -> Filtered {
    let mut kept = Catalog {
        records: BTreeMap::new(),
        provenance: catalog.provenance.clone(),
    };
    let mut excluded = Vec::new();
    for record in catalog.records() {
        let reasons = record.exclusion_reasons();
        if reasons.is_empty() {
            kept.records.insert(record.drug_id.clone(), record.clone());
        } else {
            excluded.push((record.drug_id.clone(), reasons));
        }
    }
    Filtered {
        catalog: kept,
        excluded,
    }
}

#[cfg(test)]
pub(crate) mod tests {
    use super::*;

    pub(crate) fn drug(id: &str, groups: &[DrugGroup], genes: &[&str]) -> DrugRecord {
        DrugRecord {
            drug_id: id.to_string(),
            name: format!("name-{id}"),
            smiles: "CCO".to_string(),
            groups: groups.iter().copied().collect(),
            organisms: vec!["Humans".to_string()],
            target_genes: genes.iter().map(|g| g.to_string()).collect(),
        }
    }

    fn catalog_of(records: Vec<DrugRecord>) -> Catalog {
        let mut c = Catalog::new("test");
        for r in records {
            c.insert(r).unwrap();
        }
        c
    }

    #[test]
    fn approved_with_gene_is_retained() {
        let c = catalog_of(vec![drug("DB1", &[DrugGroup::Approved], &["EGFR"])]);
        let f = filter_eligible(&c);
        assert_eq!(f.catalog.len(), 1);
        assert!(f.excluded.is_empty());
    }

    #[test]
    fn withdrawn_is_excluded() {
        let c = catalog_of(vec![drug(
            "DB1",
            &[DrugGroup::Approved, DrugGroup::Withdrawn],
            &["EGFR"],
        )]);
        let f = filter_eligible(&c);
        assert!(f.catalog.is_empty());
        assert_eq!(f.excluded[0].1, vec![ExclusionReason::WithdrawnOrIllicit]);
        assert_eq!(f.excluded[0].1[0].to_string(), "withdrawn/illicit");
    }

    #[test]
    fn no_genes_is_excluded() {
        let c = catalog_of(vec![drug("DB1", &[DrugGroup::Approved], &[])]);
        let f = filter_eligible(&c);
        assert_eq!(f.excluded[0].1, vec![ExclusionReason::NoGeneTargets]);
        assert_eq!(f.excluded[0].1[0].to_string(), "no gene targets");
    }

    #[test]
    fn missing_smiles_and_status_reasons() {
        let mut r = drug("DB1", &[DrugGroup::Investigational], &["EGFR"]);
        r.smiles.clear();
        let f = filter_eligible(&catalog_of(vec![r]));
        assert_eq!(
            f.excluded[0].1,
            vec![
                ExclusionReason::NotApprovedOrExperimental,
                ExclusionReason::MissingSmiles
            ]
        );
    }

    #[test]
    fn duplicate_insert_rejected() {
        let mut c = Catalog::new("t");
        c.insert(drug("DB1", &[DrugGroup::Approved], &["A"])).unwrap();
        assert!(c.insert(drug("DB1", &[DrugGroup::Approved], &["B"])).is_err());
    }

    #[test]
    fn display_name_falls_back_to_id() {
        let mut r = drug("DB7", &[DrugGroup::Approved], &["A"]);
        r.name = "  ".into();
        assert_eq!(r.display_name(), "DB7");
    }

    #[test]
    fn group_tags_parse() {
        for g in DrugGroup::ALL {
            assert_eq!(g.as_str().parse::<DrugGroup>().unwrap(), g);
        }
        assert!("Approved".parse::<DrugGroup>().is_err());
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_record(i: usize) -> impl Strategy<Value = DrugRecord> {
            (
                proptest::sample::subsequence(DrugGroup::ALL.to_vec(), 0..4),
                proptest::collection::btree_set("[A-D][0-9]", 0..4),
                any::<bool>(),
            )
                .prop_map(move |(groups, genes, has_smiles)| DrugRecord {
                    drug_id: format!("DB{i:03}"),
                    name: String::new(),
                    smiles: if has_smiles { "C".into() } else { String::new() },
                    groups: groups.into_iter().collect(),
                    organisms: vec![],
                    target_genes: genes,
                })
        }

        fn arb_catalog() -> impl Strategy<Value = Catalog> {
            (0usize..12)
                .prop_flat_map(|n| (0..n).map(arb_record).collect::<Vec<_>>())
                .prop_map(catalog_of)
        }

        proptest! {
            #[test]
            fn filtering_is_idempotent(c in arb_catalog()) {
                let once = filter_eligible(&c).catalog;
                let twice = filter_eligible(&once);
                prop_assert!(once.same_records(&twice.catalog));
                prop_assert!(twice.excluded.is_empty());
                prop_assert!(once.len() <= c.len());
            }

            #[test]
            fn retained_records_encode(c in arb_catalog()) {
                let kept = filter_eligible(&c).catalog;
                let index = build_gene_index(&kept);
                for r in kept.records() {
                    let v = encode_gene_vector(r, &index).unwrap();
                    prop_assert_eq!(v.popcount(), r.target_genes.len());
                }
            }

            #[test]
            fn gene_index_ignores_record_order(c in arb_catalog(), seed in any::<u64>()) {
                let mut recs: Vec<&DrugRecord> = c.records().collect();
                crate::rng::SeededRng::new(seed).shuffle(&mut recs);
                prop_assert_eq!(build_gene_index(&c), GeneIndex::from_records(recs));
            }
        }
    }
}
