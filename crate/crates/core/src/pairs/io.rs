//! Pair files and dataset manifests.
//!
//! A pair file is tab-separated with the header
//! `drug1_id  drug2_id  label  source`; `label` is `interaction`,
//! `no_interaction`, or empty for an unlabeled pair. Raw external lists only
//! need the first two columns; extra columns are ignored.

use std::fs::File;
use std::io::{BufReader, Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{DirectedPair, Label, LabeledDataset, PairError};

const PAIR_HEADER: [&str; 4] = ["drug1_id", "drug2_id", "label", "source"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RawPair {
    pub drug1: String,
    pub drug2: String,
}

fn open(path: &Path) -> Result<BufReader<File>, PairError> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|source| PairError::Io {
            path: path.to_path_buf(),
            source,
        })
}

fn tsv_reader<R: Read>(reader: R) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .delimiter(b'\t')
        .has_headers(false)
        .quoting(false)
        .flexible(true)
        .from_reader(reader)
}

fn malformed(line: u64, e: impl ToString) -> PairError {
    PairError::Malformed {
        line,
        message: e.to_string(),
    }
}

pub fn load_raw_pairs(path: &Path) -> Result<Vec<RawPair>, PairError> {
    read_raw_pairs(open(path)?)
}

pub fn read_raw_pairs<R: Read>(reader: R) -> Result<Vec<RawPair>, PairError> {
    let mut out = Vec::new();
    for (i, row) in tsv_reader(reader).records().enumerate() {
        let line = i as u64 + 1;
        let row = row.map_err(|e| malformed(line, e))?;
        if row.len() < 2 {
            return Err(malformed(line, "expected at least two tab-separated drug ids"));
        }
        let (a, b) = (row[0].trim(), row[1].trim());
        if i == 0 && a == "drug1_id" {
            continue;
        }
        out.push(RawPair {
            drug1: a.to_string(),
            drug2: b.to_string(),
        });
    }
    Ok(out)
}

pub fn load_pairs(path: &Path, name: &str) -> Result<LabeledDataset, PairError> {
    Ok(LabeledDataset::new(name, read_pairs(open(path)?)?))
}

pub fn read_pairs<R: Read>(reader: R) -> Result<Vec<DirectedPair>, PairError> {
    let mut out = Vec::new();
    for (i, row) in tsv_reader(reader).records().enumerate() {
        let line = i as u64 + 1;
        let row = row.map_err(|e| malformed(line, e))?;
        if i == 0 && row.get(0) == Some("drug1_id") {
            continue;
        }
        if row.len() != 4 {
            return Err(malformed(line, format!("expected 4 fields, found {}", row.len())));
        }
        let label = match row[2].trim() {
            "" => None,
            s => Some(s.parse::<Label>().map_err(|e| malformed(line, e))?),
        };
        out.push(DirectedPair {
            drug1: row[0].to_string(),
            drug2: row[1].to_string(),
            label,
            source: row[3].to_string(),
        });
    }
    Ok(out)
}

pub fn write_pairs<W: Write>(writer: W, pairs: &[DirectedPair]) -> Result<(), PairError> {
    let io_err = |e: csv::Error| PairError::Io {
        path: PathBuf::from("<pair output>"),
        source: e.into(),
    };
    let mut w = csv::WriterBuilder::new()
        .delimiter(b'\t')
        .quote_style(csv::QuoteStyle::Never)
        .from_writer(writer);
    w.write_record(PAIR_HEADER).map_err(io_err)?;
    for p in pairs {
        let label = p.label.map_or("", Label::as_str);
        w.write_record([p.drug1.as_str(), p.drug2.as_str(), label, p.source.as_str()])
            .map_err(io_err)?;
    }
    w.flush().map_err(|source| PairError::Io {
        path: PathBuf::from("<pair output>"),
        source,
    })
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetEntry {
    pub name: String,
    pub path: PathBuf,
    pub positives: usize,
    pub negatives: usize,
    pub total: usize,
}

impl DatasetEntry {
    pub fn describe(dataset: &LabeledDataset, path: PathBuf) -> Self {
        Self {
            name: dataset.name.clone(),
            path,
            positives: dataset.count(Label::Interaction),
            negatives: dataset.count(Label::NoInteraction),
            total: dataset.len(),
        }
    }
}

/// Counts of every dataset a build produced, in Table-2 shape.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub datasets: Vec<DatasetEntry>,
}

impl DatasetManifest {
    pub fn find(&self, name: &str) -> Option<&DatasetEntry> {
        self.datasets.iter().find(|d| d.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pair_file_round_trip() {
        let pairs = vec![
            DirectedPair::new("DB1", "DB2", Label::Interaction, "HEP"),
            DirectedPair::new("DB2", "DB1", Label::NoInteraction, "generated_negative"),
            DirectedPair {
                drug1: "DB3".into(),
                drug2: "DB1".into(),
                label: None,
                source: "query".into(),
            },
        ];
        let mut buf = Vec::new();
        write_pairs(&mut buf, &pairs).unwrap();
        assert!(buf.starts_with(b"drug1_id\tdrug2_id\tlabel\tsource\n"));
        assert_eq!(read_pairs(buf.as_slice()).unwrap(), pairs);
    }

    #[test]
    fn raw_pairs_skip_header_and_extra_columns() {
        let s = "drug1_id\tdrug2_id\n DB1 \tDB2\tseverity\nDB3\tDB4\n";
        let got = read_raw_pairs(s.as_bytes()).unwrap();
        assert_eq!(got.len(), 2);
        assert_eq!(got[0].drug1, "DB1");
    }

    #[test]
    fn bad_label_reports_line() {
        let s = "DB1\tDB2\tmaybe\tx\n";
        assert!(matches!(read_pairs(s.as_bytes()), Err(PairError::Malformed { line: 1, .. })));
    }
}
