use std::collections::HashMap;
use std::path::Path;

use super::{Metric, MetricsError, MetricsSummary};

pub const UNDEFINED: &str = "—";
pub const AVG: &str = "AVG";

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub enum Layout {
    /// One table per metric: datasets as rows, models as columns.
    #[default]
    PerMetricTable,
    /// One row per (dataset, model), one column per metric.
    SingleTable,
}

impl std::str::FromStr for Layout {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "per_metric_table" | "per-metric" => Ok(Layout::PerMetricTable),
            "single_table" | "single" => Ok(Layout::SingleTable),
            _ => Err(format!("unknown layout {s:?}")),
        }
    }
}

/// Machine-readable copy of one table.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TableFile {
    pub file_name: String,
    pub csv: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Report {
    pub text: String,
    pub tables: Vec<TableFile>,
}

impl Report {
    /// Writes `report.txt` and every table file into `dir`.
    pub fn write_to(&self, dir: &Path) -> std::io::Result<Vec<std::path::PathBuf>> {
        std::fs::create_dir_all(dir)?;
        let mut written = Vec::new();
        let txt = dir.join("report.txt");
        std::fs::write(&txt, &self.text)?;
        written.push(txt);
        for t in &self.tables {
            let p = dir.join(&t.file_name);
            std::fs::write(&p, &t.csv)?;
            written.push(p);
        }
        Ok(written)
    }
}

fn mean_defined(values: impl Iterator<Item = Option<f64>>) -> Option<f64> {
    let (sum, n) = values.flatten().fold((0.0, 0usize), |(s, n), v| (s + v, n + 1));
    (n > 0).then(|| sum / n as f64)
}

fn cell_text(v: Option<f64>) -> String {
    v.map_or_else(|| UNDEFINED.to_string(), |v| format!("{v:.3}"))
}

fn cell_csv(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| v.to_string())
}

fn first_seen<'a>(items: impl Iterator<Item = &'a str>) -> Vec<&'a str> {
    let mut out: Vec<&str> = Vec::new();
    for s in items {
        if !out.contains(&s) {
            out.push(s);
        }
    }
    out
}

/// Lays out rows of cells with the first `left` columns left-aligned and
/// the rest right-aligned.
fn text_table(title: &str, rows: &[Vec<String>], left: usize) -> String {
    let cols = rows.iter().map(Vec::len).max().unwrap_or(0);
    let widths: Vec<usize> = (0..cols)
        .map(|c| rows.iter().filter_map(|r| r.get(c)).map(|s| s.chars().count()).max().unwrap_or(0))
        .collect();
    let mut out = format!("{title}\n");
    for (ri, row) in rows.iter().enumerate() {
        let mut line = String::new();
        for (c, cell) in row.iter().enumerate() {
            if c > 0 {
                line.push_str("  ");
            }
            let pad = widths[c] - cell.chars().count();
            if c < left {
                line.push_str(cell);
                line.push_str(&" ".repeat(pad));
            } else {
                line.push_str(&" ".repeat(pad));
                line.push_str(cell);
            }
        }
        out.push_str(line.trim_end());
        out.push('\n');
        if ri == 0 {
            let total = widths.iter().sum::<usize>() + 2 * cols.saturating_sub(1);
            out.push_str(&"-".repeat(total));
            out.push('\n');
        }
    }
    out
}

fn csv_string(rows: &[Vec<String>]) -> String {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(Vec::new());
    for r in rows {
        w.write_record(r).expect("in-memory write");
    }
    String::from_utf8(w.into_inner().expect("in-memory flush")).expect("utf-8 cells")
}

/// Renders summaries as text tables plus CSV copies. Rows and columns keep
/// the order in which datasets and models first appear. Text cells are
/// rounded to three decimals; CSV cells keep full precision and are empty
/// where undefined. AVG is the unweighted mean of the defined cells above it.
pub fn render_report(summaries: &[MetricsSummary], layout: Layout) -> Result<Report, MetricsError> {
    if summaries.is_empty() {
        return Err(MetricsError::NoSummaries);
    }
    match layout {
        Layout::PerMetricTable => Ok(per_metric(summaries)),
        Layout::SingleTable => Ok(single(summaries)),
    }
}

fn per_metric(summaries: &[MetricsSummary]) -> Report {
    let datasets = first_seen(summaries.iter().map(|s| s.dataset.as_str()));
    let models = first_seen(summaries.iter().map(|s| s.model.as_str()));
    let lookup: HashMap<(&str, &str), &MetricsSummary> = summaries
        .iter()
        .map(|s| ((s.dataset.as_str(), s.model.as_str()), s))
        .collect();

    let mut text = String::new();
    let mut tables = Vec::new();
    for metric in Metric::ALL {
        let value = |d: &str, m: &str| lookup.get(&(d, m)).and_then(|s| s.get(metric));
        let header: Vec<String> = std::iter::once("Dataset".to_string())
            .chain(models.iter().map(|m| m.to_string()))
            .collect();
        let avgs: Vec<Option<f64>> = models
            .iter()
            .map(|m| mean_defined(datasets.iter().map(|d| value(d, m))))
            .collect();

        let mut txt_rows = vec![header.clone()];
        let mut csv_rows = vec![header];
        for d in &datasets {
            let vals: Vec<Option<f64>> = models.iter().map(|m| value(d, m)).collect();
            txt_rows.push(std::iter::once(d.to_string()).chain(vals.iter().map(|v| cell_text(*v))).collect());
            csv_rows.push(std::iter::once(d.to_string()).chain(vals.iter().map(|v| cell_csv(*v))).collect());
        }
        txt_rows.push(std::iter::once(AVG.to_string()).chain(avgs.iter().map(|v| cell_text(*v))).collect());
        csv_rows.push(std::iter::once(AVG.to_string()).chain(avgs.iter().map(|v| cell_csv(*v))).collect());

        if !text.is_empty() {
            text.push('\n');
        }
        text.push_str(&text_table(metric.title(), &txt_rows, 1));
        tables.push(TableFile {
            file_name: format!("{}.csv", metric.as_str()),
            csv: csv_string(&csv_rows),
        });
    }
    Report { text, tables }
}

fn single(summaries: &[MetricsSummary]) -> Report {
    let header: Vec<String> = ["Dataset", "Model"]
        .into_iter()
        .map(str::to_string)
        .chain(Metric::ALL.iter().map(|m| m.as_str().to_string()))
        .collect();
    let mut txt_rows = vec![header.clone()];
    let mut csv_rows = vec![header];
    for s in summaries {
        let lead = [s.dataset.clone(), s.model.clone()];
        txt_rows.push(lead.iter().cloned().chain(Metric::ALL.iter().map(|m| cell_text(s.get(*m)))).collect());
        csv_rows.push(lead.iter().cloned().chain(Metric::ALL.iter().map(|m| cell_csv(s.get(*m)))).collect());
    }
    let avgs: Vec<Option<f64>> = Metric::ALL
        .iter()
        .map(|m| mean_defined(summaries.iter().map(|s| s.get(*m))))
        .collect();
    let lead = [AVG.to_string(), String::new()];
    txt_rows.push(lead.iter().cloned().chain(avgs.iter().map(|v| cell_text(*v))).collect());
    csv_rows.push(lead.iter().cloned().chain(avgs.iter().map(|v| cell_csv(*v))).collect());
    Report {
        text: text_table("Summary", &txt_rows, 2),
        tables: vec![TableFile {
            file_name: "summary.csv".into(),
            csv: csv_string(&csv_rows),
        }],
    }
}
