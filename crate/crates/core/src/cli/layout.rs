use std::path::{Path, PathBuf};

use crate::finetune::ExportStyle;

/// Where each command reads and writes inside the output directory.
#[derive(Debug, Clone)]
pub struct OutLayout {
    root: PathBuf,
}

impl OutLayout {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    pub fn catalog(&self) -> PathBuf {
        self.root.join("ingest/catalog.jsonl")
    }

    pub fn genes(&self) -> PathBuf {
        self.root.join("ingest/genes.txt")
    }

    pub fn exclusions(&self) -> PathBuf {
        self.root.join("ingest/exclusions.tsv")
    }

    pub fn known_interactions(&self) -> PathBuf {
        self.root.join("ingest/known_interactions.tsv")
    }

    pub fn ingest_summary(&self) -> PathBuf {
        self.root.join("ingest/summary.json")
    }

    pub fn pairs_dir(&self) -> PathBuf {
        self.root.join("pairs")
    }

    /// Relative to the root, as recorded in the dataset manifest.
    pub fn dataset_rel(name: &str) -> PathBuf {
        PathBuf::from("pairs").join(format!("{name}.tsv"))
    }

    pub fn datasets(&self) -> PathBuf {
        self.root.join("pairs/datasets.json")
    }

    pub fn import_report(&self) -> PathBuf {
        self.root.join("pairs/import_report.tsv")
    }

    pub fn finetune(&self, dataset: &str, style: ExportStyle) -> PathBuf {
        let style = match style {
            ExportStyle::WithSystem => "with_system",
            ExportStyle::MergedSystem => "merged_system",
        };
        self.root.join(format!("finetune/{dataset}.{style}.jsonl"))
    }

    pub fn predictions(&self, model: &str, dataset: &str) -> PathBuf {
        self.root.join(format!("predictions/{model}/{dataset}.jsonl"))
    }

    pub fn baseline_predictions(&self, dataset: &str) -> PathBuf {
        self.root.join(format!("predictions/baseline/{dataset}.tsv"))
    }

    pub fn metrics_dir(&self) -> PathBuf {
        self.root.join("metrics")
    }

    pub fn evaluation(&self, model: &str, dataset: &str) -> PathBuf {
        self.root.join(format!("metrics/{model}/{dataset}.json"))
    }

    pub fn model(&self) -> PathBuf {
        self.root.join("baseline/model.txt")
    }

    pub fn cv(&self) -> PathBuf {
        self.root.join("baseline/cv.json")
    }

    pub fn report_dir(&self) -> PathBuf {
        self.root.join("report")
    }

    pub fn manifest(&self, stem: &str) -> PathBuf {
        self.root.join(format!("manifests/{stem}.json"))
    }
}
