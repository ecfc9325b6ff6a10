//! Normalized catalog files.
//!
//! Both variants carry the same six fields per record: `drug_id`, `name`,
//! `smiles`, `groups`, `organisms`, `target_genes`. The last three are
//! semicolon-separated lists.
//!
//! * `Tabular`: tab-separated, one record per line, optional header line
//!   starting with `drug_id`.
//! * `Jsonl`: one JSON object per line with the same field names. List fields
//!   may be semicolon-separated strings or JSON arrays.

use std::collections::BTreeSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use super::{Catalog, CatalogError, DrugGroup, DrugRecord};

pub const TABULAR_HEADER: [&str; 6] = [
    "drug_id",
    "name",
    "smiles",
    "groups",
    "organisms",
    "target_genes",
];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CatalogFormat {
    Tabular,
    Jsonl,
}

impl FromStr for CatalogFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "tabular" | "tsv" => Ok(CatalogFormat::Tabular),
            "jsonl" | "line-delimited" => Ok(CatalogFormat::Jsonl),
            other => Err(format!("unknown catalog format {other:?}")),
        }
    }
}

pub fn load_catalog(path: &Path, format: CatalogFormat) -> Result<Catalog, CatalogError> {
    let file = File::open(path).map_err(|source| CatalogError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    read_catalog(BufReader::new(file), format, &path.display().to_string())
}

pub fn read_catalog<R: Read>(
    reader: R,
    format: CatalogFormat,
    source: &str,
) -> Result<Catalog, CatalogError> {
    let mut catalog = Catalog::new(source);
    let mut push = |record: DrugRecord, line: u64| {
        catalog
            .insert(record)
            .map_err(|r| CatalogError::DuplicateId {
                drug_id: r.drug_id,
                line,
            })
    };
    match format {
        CatalogFormat::Tabular => {
            let mut rdr = csv::ReaderBuilder::new()
                .delimiter(b'\t')
                .has_headers(false)
                .quoting(false)
                .flexible(true)
                .from_reader(reader);
            for (i, row) in rdr.records().enumerate() {
                let row = row.map_err(|e| CatalogError::Malformed {
                    line: e.position().map_or(i as u64 + 1, |p| p.line()),
                    message: e.to_string(),
                })?;
                let line = row.position().map_or(i as u64 + 1, |p| p.line());
                if i == 0 && row.get(0) == Some("drug_id") {
                    continue;
                }
                if row.len() != 6 {
                    return Err(CatalogError::Malformed {
                        line,
                        message: format!("expected 6 tab-separated fields, found {}", row.len()),
                    });
                }
                let record = record_from_fields(
                    [&row[0], &row[1], &row[2], &row[3], &row[4], &row[5]],
                    line,
                )?;
                push(record, line)?;
            }
        }
        CatalogFormat::Jsonl => {
            for (i, text) in BufReader::new(reader).lines().enumerate() {
                let line = i as u64 + 1;
                let text = text.map_err(|e| CatalogError::Malformed {
                    line,
                    message: e.to_string(),
                })?;
                if text.trim().is_empty() {
                    continue;
                }
                let row: JsonRow =
                    serde_json::from_str(&text).map_err(|e| CatalogError::Malformed {
                        line,
                        message: e.to_string(),
                    })?;
                let record = DrugRecord {
                    drug_id: required_id(&row.drug_id, line)?,
                    name: row.name.trim().to_string(),
                    smiles: row.smiles.trim().to_string(),
                    groups: parse_groups(row.groups.items(), line)?,
                    organisms: row.organisms.items().collect(),
                    target_genes: row.target_genes.items().collect(),
                };
                push(record, line)?;
            }
        }
    }
    Ok(catalog)
}

pub fn write_catalog<W: Write>(
    writer: W,
    catalog: &Catalog,
    format: CatalogFormat,
) -> Result<(), CatalogError> {
    let io_err = |source| CatalogError::Io {
        path: "<catalog output>".into(),
        source,
    };
    match format {
        CatalogFormat::Tabular => {
            let mut w = csv::WriterBuilder::new()
                .delimiter(b'\t')
                .quote_style(csv::QuoteStyle::Never)
                .from_writer(writer);
            w.write_record(TABULAR_HEADER)
                .map_err(|e| io_err(e.into()))?;
            for r in catalog.records() {
                let fields = tabular_fields(r);
                if let Some(bad) = fields.iter().find(|f| f.contains(['\t', '\n', '\r'])) {
                    return Err(CatalogError::Malformed {
                        line: 0,
                        message: format!("{}: field {bad:?} contains a tab or newline", r.drug_id),
                    });
                }
                w.write_record(&fields).map_err(|e| io_err(e.into()))?;
            }
            w.flush().map_err(io_err)?;
        }
        CatalogFormat::Jsonl => {
            let mut w = std::io::BufWriter::new(writer);
            for r in catalog.records() {
                let [drug_id, name, smiles, groups, organisms, target_genes] = tabular_fields(r);
                let row = JsonRow {
                    drug_id,
                    name,
                    smiles,
                    groups: ListField::Joined(groups),
                    organisms: ListField::Joined(organisms),
                    target_genes: ListField::Joined(target_genes),
                };
                serde_json::to_writer(&mut w, &row).map_err(|e| io_err(e.into()))?;
                w.write_all(b"\n").map_err(io_err)?;
            }
            w.flush().map_err(io_err)?;
        }
    }
    Ok(())
}

fn tabular_fields(r: &DrugRecord) -> [String; 6] {
    [
        r.drug_id.clone(),
        r.name.clone(),
        r.smiles.clone(),
        r.groups
            .iter()
            .map(|g| g.as_str())
            .collect::<Vec<_>>()
            .join(";"),
        r.organisms.join(";"),
        r.target_genes
            .iter()
            .map(String::as_str)
            .collect::<Vec<_>>()
            .join(";"),
    ]
}

fn record_from_fields(f: [&str; 6], line: u64) -> Result<DrugRecord, CatalogError> {
    Ok(DrugRecord {
        drug_id: required_id(f[0], line)?,
        name: f[1].trim().to_string(),
        smiles: f[2].trim().to_string(),
        groups: parse_groups(split_list(f[3]), line)?,
        organisms: split_list(f[4]).collect(),
        target_genes: split_list(f[5]).collect(),
    })
}

fn required_id(id: &str, line: u64) -> Result<String, CatalogError> {
    let id = id.trim();
    if id.is_empty() {
        return Err(CatalogError::Malformed {
            line,
            message: "empty drug_id".into(),
        });
    }
    Ok(id.to_string())
}

fn split_list(s: &str) -> impl Iterator<Item = String> + '_ {
    s.split(';')
        .map(str::trim)
        .filter(|x| !x.is_empty())
        .map(str::to_string)
}

fn parse_groups(
    tags: impl Iterator<Item = String>,
    line: u64,
) -> Result<BTreeSet<DrugGroup>, CatalogError> {
    tags.map(|t| {
        t.parse::<DrugGroup>()
            .map_err(|tag| CatalogError::UnknownGroup { tag, line })
    })
    .collect()
}

#[derive(Serialize, Deserialize)]
struct JsonRow {
    drug_id: String,
    #[serde(default)]
    name: String,
    #[serde(default)]
    smiles: String,
    #[serde(default)]
    groups: ListField,
    #[serde(default)]
    organisms: ListField,
    #[serde(default)]
    target_genes: ListField,
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum ListField {
    Joined(String),
    Items(Vec<String>),
}

impl Default for ListField {
    fn default() -> Self {
        ListField::Items(Vec::new())
    }
}

impl ListField {
    fn items(&self) -> Box<dyn Iterator<Item = String> + '_> {
        match self {
            ListField::Joined(s) => Box::new(split_list(s)),
            ListField::Items(v) => Box::new(
                v.iter()
                    .map(|s| s.trim())
                    .filter(|s| !s.is_empty())
                    .map(str::to_string),
            ),
        }
    }
}
