//! Helpers shared by the integration tests and the acceptance suite.
#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;

use ddibench::catalog::{load_catalog, Catalog, CatalogFormat, DrugGroup, DrugRecord};
use ddibench::cli::OutLayout;
use ddibench::config::RunConfig;
use ddibench::llm::{
    write_replay_fixtures, EndpointConfig, LlmClient, ReplayEntry, ReplayTransport,
};
use ddibench::pairs::{load_pairs, DirectedPair};
use ddibench::prompt::build_zero_shot;

pub fn data_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests").join("data")
}

pub fn golden(name: &str) -> PathBuf {
    data_dir().join("golden").join(name)
}

pub fn fixture_config() -> PathBuf {
    data_dir().join("fixture").join("run.toml")
}

pub fn golden_catalog() -> Catalog {
    load_catalog(&golden("catalog.tsv"), CatalogFormat::Tabular).expect("golden catalog")
}

/// Approved drugs `S000`, `S001`, ... each targeting one gene.
pub fn synthetic_catalog(n: usize) -> Catalog {
    let mut c = Catalog::new("synthetic");
    for i in 0..n {
        c.insert(DrugRecord {
            drug_id: format!("S{i:03}"),
            name: format!("Synthetic {i}"),
            smiles: "C".into(),
            groups: [DrugGroup::Approved].into_iter().collect(),
            organisms: vec!["Humans".into()],
            target_genes: [format!("G{}", i % 7)].into_iter().collect(),
        })
        .expect("unique id");
    }
    c
}

/// Runs the `ddibench` binary and returns its exit status. Output is
/// captured and shown only when the status is non-zero.
pub fn cli(config: &Path, out: &Path, args: &[&str]) -> i32 {
    let output = Command::new(env!("CARGO_BIN_EXE_ddibench"))
        .arg("--config")
        .arg(config)
        .arg("--out")
        .arg(out)
        .args(args)
        .output()
        .expect("ddibench runs");
    let code = output.status.code().unwrap_or(-1);
    if code != 0 {
        eprintln!("ddibench {args:?} exited with {code}:\n{}", String::from_utf8_lossy(&output.stderr));
    }
    code
}

pub fn endpoint(config: &Path, name: &str) -> EndpointConfig {
    let (cfg, _) = RunConfig::load(config).expect("config loads");
    cfg.endpoints.get(name).cloned().expect("endpoint configured")
}

/// Writes replay fixtures answering every pair of `dataset` (already built
/// under `out`) with `answer(pair)`.
pub fn record_replay(
    out: &Path,
    dataset: &str,
    endpoint: EndpointConfig,
    answer: impl Fn(&DirectedPair) -> String,
    dest: &Path,
) -> usize {
    let layout = OutLayout::new(out);
    let catalog = load_catalog(&layout.catalog(), CatalogFormat::Jsonl).expect("ingested catalog");
    let ds = load_pairs(&out.join(OutLayout::dataset_rel(dataset)), dataset)
        .expect("dataset");
    let client = LlmClient::with_transport(endpoint, Arc::new(ReplayTransport::default()))
        .expect("client");
    let entries: Vec<ReplayEntry> = ds
        .pairs
        .iter()
        .map(|p| {
            let ex = build_zero_shot(p, &catalog).expect("prompt");
            ReplayEntry {
                request_hash: client.request_for(&ex).hash(),
                response: answer(p),
            }
        })
        .collect();
    let file = std::fs::File::create(dest).expect("replay file");
    write_replay_fixtures(file, &entries).expect("write replay");
    entries.len()
}
