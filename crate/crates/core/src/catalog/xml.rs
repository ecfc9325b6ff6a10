//! Best-effort reader for a DrugBank full-database XML export.
//!
//! Only the fields the pipeline needs are read: primary `drugbank-id`,
//! `name`, `groups/group`, the first calculated `SMILES` property, target
//! organisms, target polypeptide `gene-name`s and the `drug-interactions`
//! partner ids. Drugs without SMILES or gene targets are kept; they carry
//! the corresponding [`super::ExclusionReason`] and drop out at filtering.

use std::fs::File;
use std::io::{BufRead, BufReader};
use std::path::Path;

use quick_xml::events::Event;
use quick_xml::Reader;

use super::{Catalog, CatalogError, DrugGroup, DrugRecord};

#[derive(Debug)]
pub struct XmlImport {
    pub catalog: Catalog,
    /// Ordered (listing drug, partner) pairs from `drug-interactions`.
    pub interactions: Vec<(String, String)>,
}

pub fn parse_drugbank_xml_subset(path: &Path) -> Result<XmlImport, CatalogError> {
    let file = File::open(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_drugbank_xml(BufReader::new(file), &path.display().to_string())
}

#[derive(Default)]
struct DrugState {
    start: u64,
    depth: usize,
    id: Option<String>,
    id_is_primary: bool,
    name: String,
    smiles: String,
    groups: Vec<String>,
    organisms: Vec<String>,
    genes: Vec<String>,
    partners: Vec<String>,
    prop_kind: String,
    prop_value: String,
}

pub fn read_drugbank_xml<R: BufRead>(input: R, source: &str) -> Result<XmlImport, CatalogError> {
    let mut reader = Reader::from_reader(input);
    reader.config_mut().trim_text(true);

    let mut catalog = Catalog::new(source);
    let mut interactions = Vec::new();
    let mut stack: Vec<String> = Vec::new();
    let mut text = String::new();
    let mut primary_attr = false;
    let mut drug: Option<DrugState> = None;
    let mut buf = Vec::new();

    loop {
        let offset = reader.buffer_position() as u64;
        let event = reader
            .read_event_into(&mut buf)
            .map_err(|e| CatalogError::Xml {
                offset: reader.error_position() as u64,
                message: e.to_string(),
            })?;
        match event {
            Event::Start(e) => {
                let name = String::from_utf8_lossy(e.name().as_ref()).into_owned();
                if name == "drug" && drug.is_none() {
                    drug = Some(DrugState {
                        start: offset,
                        depth: stack.len() + 1,
                        ..DrugState::default()
                    });
                }
                if name == "drugbank-id" {
                    primary_attr = e.attributes().flatten().any(|a| {
                        a.key.as_ref() == b"primary" && a.value.as_ref() == b"true"
                    });
                }
                stack.push(name);
                text.clear();
            }
            Event::Text(t) => {
                let s = t.unescape().map_err(|e| CatalogError::Xml {
                    offset,
                    message: e.to_string(),
                })?;
                text.push_str(&s);
            }
            Event::CData(t) => text.push_str(&String::from_utf8_lossy(&t)),
            Event::End(_) => {
                if let Some(state) = drug.as_mut() {
                    let rel: Vec<&str> = stack[state.depth..].iter().map(String::as_str).collect();
                    let value = text.trim();
                    match rel.as_slice() {
                        ["drugbank-id"] => {
                            if state.id.is_none() || (primary_attr && !state.id_is_primary) {
                                state.id = Some(value.to_string());
                                state.id_is_primary = primary_attr;
                            }
                        }
                        ["name"] => state.name = value.to_string(),
                        ["groups", "group"] => state.groups.push(value.to_string()),
                        ["calculated-properties", "property", "kind"] => {
                            state.prop_kind = value.to_string()
                        }
                        ["calculated-properties", "property", "value"] => {
                            state.prop_value = value.to_string()
                        }
                        ["calculated-properties", "property"] => {
                            if state.prop_kind == "SMILES" && state.smiles.is_empty() {
                                state.smiles = std::mem::take(&mut state.prop_value);
                            }
                            state.prop_kind.clear();
                            state.prop_value.clear();
                        }
                        ["targets", "target", "organism"] => {
                            if !value.is_empty() && !state.organisms.iter().any(|o| o == value) {
                                state.organisms.push(value.to_string());
                            }
                        }
                        ["targets", "target", "polypeptide", "gene-name"] => {
                            if !value.is_empty() {
                                state.genes.push(value.to_string());
                            }
                        }
                        ["drug-interactions", "drug-interaction", "drugbank-id"] => {
                            state.partners.push(value.to_string())
                        }
                        [] => {
                            let done = drug.take().expect("inside drug");
                            finish_drug(done, &mut catalog, &mut interactions)?;
                        }
                        _ => {}
                    }
                }
                stack.pop();
                text.clear();
            }
            Event::Eof => {
                if !stack.is_empty() {
                    return Err(CatalogError::Xml {
                        offset: reader.buffer_position() as u64,
                        message: format!("unexpected end of document inside <{}>", stack.join("/")),
                    });
                }
                break;
            }
            _ => {}
        }
        buf.clear();
    }
    Ok(XmlImport {
        catalog,
        interactions,
    })
}

fn finish_drug(
    state: DrugState,
    catalog: &mut Catalog,
    interactions: &mut Vec<(String, String)>,
) -> Result<(), CatalogError> {
    let id = match state.id {
        Some(id) if !id.is_empty() => id,
        _ => return Err(CatalogError::MissingId { offset: state.start }),
    };
    let groups = state
        .groups
        .iter()
        .map(|g| {
            g.parse::<DrugGroup>().map_err(|tag| CatalogError::Xml {
                offset: state.start,
                message: format!("drug {id}: unknown group tag {tag:?}"),
            })
        })
        .collect::<Result<_, _>>()?;
    for partner in state.partners {
        interactions.push((id.clone(), partner));
    }
    let record = DrugRecord {
        drug_id: id,
        name: state.name,
        smiles: state.smiles,
        groups,
        organisms: state.organisms,
        target_genes: state.genes.into_iter().collect(),
    };
    catalog.insert(record).map_err(|r| CatalogError::Xml {
        offset: state.start,
        message: format!("duplicate drug id {:?}", r.drug_id),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::ExclusionReason;

    const ONE_DRUG: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<drugbank>
  <drug type="small molecule">
    <drugbank-id>APRD00001</drugbank-id>
    <drugbank-id primary="true">DB00001</drugbank-id>
    <name>Examplin</name>
    <groups><group>approved</group><group>investigational</group></groups>
    <calculated-properties>
      <property><kind>logP</kind><value>1.2</value></property>
      <property><kind>SMILES</kind><value>CC(=O)O</value></property>
      <property><kind>SMILES</kind><value>ignored</value></property>
    </calculated-properties>
    <targets>
      <target>
        <id>BE1</id><name>Target one</name><organism>Humans</organism>
        <polypeptide id="P1"><name>p</name><gene-name>EGFR</gene-name><organism>Humans</organism></polypeptide>
      </target>
      <target>
        <id>BE2</id><organism>Humans</organism>
        <polypeptide id="P2"><gene-name>ABL1</gene-name></polypeptide>
      </target>
    </targets>
    <drug-interactions>
      <drug-interaction><drugbank-id>DB00002</drugbank-id><name>Other</name></drug-interaction>
    </drug-interactions>
  </drug>
</drugbank>
"#;

    fn parse(s: &str) -> Result<XmlImport, CatalogError> {
        read_drugbank_xml(s.as_bytes(), "fixture")
    }

    #[test]
    fn reads_one_drug_with_two_targets() {
        let out = parse(ONE_DRUG).unwrap();
        let r = out.catalog.get("DB00001").unwrap();
        assert_eq!(r.name, "Examplin");
        assert_eq!(r.smiles, "CC(=O)O");
        assert_eq!(r.target_genes.len(), 2);
        assert_eq!(r.organisms, ["Humans"]);
        assert!(r.groups.contains(&DrugGroup::Approved));
        assert_eq!(out.interactions, [("DB00001".into(), "DB00002".into())]);
    }

    #[test]
    fn missing_smiles_is_flagged_not_rejected() {
        let s = ONE_DRUG.replace("<kind>SMILES</kind>", "<kind>InChI</kind>");
        let out = parse(&s).unwrap();
        let r = out.catalog.get("DB00001").unwrap();
        assert!(r.smiles.is_empty());
        assert!(r.exclusion_reasons().contains(&ExclusionReason::MissingSmiles));
    }

    #[test]
    fn truncated_document_reports_offset() {
        let cut = &ONE_DRUG[..ONE_DRUG.find("<targets>").unwrap()];
        match parse(cut) {
            Err(CatalogError::Xml { offset, .. }) => assert!(offset > 0),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn missing_id_is_an_error() {
        let s = "<drugbank><drug><name>x</name></drug></drugbank>";
        assert!(matches!(parse(s), Err(CatalogError::MissingId { .. })));
    }

    #[test]
    fn mismatched_tags_are_an_error() {
        assert!(matches!(
            parse("<drugbank><drug></drugbank>"),
            Err(CatalogError::Xml { .. })
        ));
    }
}
