use std::collections::BTreeSet;

use super::{Catalog, CatalogError, DrugRecord};

/// Sorted, duplicate-free list of every gene symbol targeted by a catalog.
/// Position in this list is the coordinate of a gene in a [`GeneVector`].
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct GeneIndex {
    genes: Vec<String>,
}

impl GeneIndex {
    pub fn from_records<'a>(records: impl IntoIterator<Item = &'a DrugRecord>) -> Self {
        let set: BTreeSet<&str> = records
            .into_iter()
            .flat_map(|r| r.target_genes.iter().map(String::as_str))
            .collect();
        Self {
            genes: set.into_iter().map(str::to_string).collect(),
        }
    }

    /// Builds an index from an explicit gene list. The list must already be
    /// strictly increasing.
    pub fn from_sorted(genes: Vec<String>) -> Result<Self, String> {
        if let Some(w) = genes.windows(2).find(|w| w[0] >= w[1]) {
            return Err(format!(
                "gene list not strictly increasing at {:?}, {:?}",
                w[0], w[1]
            ));
        }
        Ok(Self { genes })
    }

    pub fn len(&self) -> usize {
        self.genes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.genes.is_empty()
    }

    pub fn genes(&self) -> &[String] {
        &self.genes
    }

    pub fn position(&self, gene: &str) -> Option<usize> {
        self.genes
            .binary_search_by(|g| g.as_str().cmp(gene))
            .ok()
    }
}

/// Sorted union of the target genes of every record in `catalog`.
pub fn build_gene_index(catalog: &Catalog) -> GeneIndex {
    let index = GeneIndex::from_records(catalog.records());
    if index.is_empty() {
        log::warn!("gene index is empty ({} records)", catalog.len());
    }
    index
}

/// Binary gene-target profile, stored as the sorted positions of its ones.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GeneVector {
    len: usize,
    ones: Vec<u32>,
}

impl GeneVector {
    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn ones(&self) -> &[u32] {
        &self.ones
    }

    pub fn popcount(&self) -> usize {
        self.ones.len()
    }

    pub fn to_dense(&self) -> Vec<u8> {
        let mut v = vec![0u8; self.len];
        for &i in &self.ones {
            v[i as usize] = 1;
        }
        v
    }
}

pub fn encode_gene_vector(drug: &DrugRecord, index: &GeneIndex) -> Result<GeneVector, CatalogError> {
    let mut ones = Vec::with_capacity(drug.target_genes.len());
    for gene in &drug.target_genes {
        let pos = index
            .position(gene)
            .ok_or_else(|| CatalogError::GeneNotIndexed {
                drug_id: drug.drug_id.clone(),
                gene: gene.clone(),
            })?;
        ones.push(pos as u32);
    }
    // target_genes iterates in the same byte order as the index.
    debug_assert!(ones.windows(2).all(|w| w[0] < w[1]));
    Ok(GeneVector {
        len: index.len(),
        ones,
    })
}

#[cfg(test)]
mod tests {
    use super::super::tests::drug;
    use super::super::DrugGroup::Approved;
    use super::*;

    fn catalog(records: Vec<DrugRecord>) -> Catalog {
        let mut c = Catalog::new("t");
        for r in records {
            c.insert(r).unwrap();
        }
        c
    }

    #[test]
    fn index_is_sorted_union() {
        let c = catalog(vec![
            drug("A", &[Approved], &["EGFR"]),
            drug("B", &[Approved], &["ABL1", "EGFR"]),
        ]);
        let idx = build_gene_index(&c);
        assert_eq!(idx.genes(), ["ABL1", "EGFR"]);
        assert_eq!(idx.len(), 2);
    }

    #[test]
    fn single_gene_index() {
        let c = catalog(vec![drug("A", &[Approved], &["BRAF"])]);
        assert_eq!(build_gene_index(&c).genes(), ["BRAF"]);
    }

    #[test]
    fn empty_catalog_gives_empty_index() {
        assert!(build_gene_index(&Catalog::new("t")).is_empty());
    }

    #[test]
    fn index_is_case_sensitive_bytewise() {
        let c = catalog(vec![drug("A", &[Approved], &["abl1", "ABL1", "Egfr"])]);
        assert_eq!(build_gene_index(&c).genes(), ["ABL1", "Egfr", "abl1"]);
    }

    #[test]
    fn encodes_against_index() {
        let idx = GeneIndex::from_sorted(vec!["ABL1".into(), "BRAF".into(), "EGFR".into()]).unwrap();
        let d = drug("A", &[Approved], &["EGFR", "ABL1"]);
        assert_eq!(encode_gene_vector(&d, &idx).unwrap().to_dense(), vec![1, 0, 1]);

        let all = drug("B", &[Approved], &["ABL1", "BRAF", "EGFR"]);
        assert_eq!(encode_gene_vector(&all, &idx).unwrap().to_dense(), vec![1, 1, 1]);
    }

    #[test]
    fn unknown_gene_is_an_error() {
        let idx = GeneIndex::from_sorted(vec!["ABL1".into()]).unwrap();
        let d = drug("A", &[Approved], &["KRAS"]);
        match encode_gene_vector(&d, &idx) {
            Err(CatalogError::GeneNotIndexed { gene, .. }) => assert_eq!(gene, "KRAS"),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn from_sorted_rejects_unsorted() {
        assert!(GeneIndex::from_sorted(vec!["B".into(), "A".into()]).is_err());
        assert!(GeneIndex::from_sorted(vec!["A".into(), "A".into()]).is_err());
    }
}
