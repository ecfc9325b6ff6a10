use std::collections::HashMap;
use std::fs::{File, OpenOptions};
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, AtomicUsize, Ordering};
use std::sync::mpsc;

use super::{LlmClient, LlmError, ParsedLabel, PredictionRecord};
use crate::catalog::Catalog;
use crate::pairs::LabeledDataset;
use crate::prompt::{build_zero_shot, PromptExchange};

#[derive(Debug, Clone)]
pub struct BatchOptions {
    pub repeats: u32,
    /// Line-delimited record file. Existing records are reused and new ones
    /// are appended as they complete.
    pub sink: Option<PathBuf>,
}

impl Default for BatchOptions {
    fn default() -> Self {
        Self {
            repeats: 5,
            sink: None,
        }
    }
}

fn io_err(path: &Path) -> impl Fn(std::io::Error) -> LlmError + '_ {
    move |source| LlmError::Io {
        path: path.to_path_buf(),
        source,
    }
}

/// Reads a prediction file. A torn final line, left by an interrupted
/// writer, is ignored.
pub fn load_records(path: &Path) -> Result<Vec<PredictionRecord>, LlmError> {
    let mut text = String::new();
    File::open(path)
        .and_then(|mut f| f.read_to_string(&mut text))
        .map_err(io_err(path))?;
    parse_records(&text, path)
}

fn parse_records(text: &str, path: &Path) -> Result<Vec<PredictionRecord>, LlmError> {
    let complete = match text.rfind('\n') {
        Some(i) => &text[..=i],
        None => "",
    };
    let mut out = Vec::new();
    for (i, line) in BufReader::new(complete.as_bytes()).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let rec = serde_json::from_str(&line).map_err(|e| LlmError::Io {
            path: path.to_path_buf(),
            source: std::io::Error::new(std::io::ErrorKind::InvalidData, format!("line {}: {e}", i + 1)),
        })?;
        out.push(rec);
    }
    Ok(out)
}

/// Opens the sink for appending, dropping any torn trailing line, and
/// returns the records already present.
fn open_sink(path: &Path) -> Result<(File, Vec<PredictionRecord>), LlmError> {
    let existing = match std::fs::read_to_string(path) {
        Ok(text) => {
            let keep = text.rfind('\n').map_or(0, |i| i + 1);
            let records = parse_records(&text, path)?;
            if keep != text.len() {
                let f = OpenOptions::new().write(true).open(path).map_err(io_err(path))?;
                f.set_len(keep as u64).map_err(io_err(path))?;
            }
            records
        }
        Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
        Err(e) => return Err(io_err(path)(e)),
    };
    let file = OpenOptions::new()
        .create(true)
        .append(true)
        .open(path)
        .map_err(io_err(path))?;
    Ok((file, existing))
}

/// Classifies every pair `repeats` times with at most `max_in_flight`
/// requests outstanding. The result is ordered by (pair index, repeat)
/// whatever the completion order. Per-request failures become `invalid`
/// records carrying the error; only configuration-level failures abort.
pub fn run_batch(
    dataset: &LabeledDataset,
    catalog: &Catalog,
    client: &LlmClient,
    options: &BatchOptions,
) -> Result<Vec<PredictionRecord>, LlmError> {
    if options.repeats < 1 {
        return Err(LlmError::Config("repeats must be at least 1".into()));
    }
    let exchanges: Vec<PromptExchange> = dataset
        .pairs
        .iter()
        .map(|p| build_zero_shot(p, catalog))
        .collect::<Result<_, _>>()?;

    let model = &client.config().model_name;
    let mut done: HashMap<(usize, u32), PredictionRecord> = HashMap::new();
    let mut sink = None;
    if let Some(path) = &options.sink {
        let (file, existing) = open_sink(path)?;
        for rec in existing {
            let pair = dataset.pairs.get(rec.pair_index);
            let matches = pair.is_some_and(|p| p.drug1 == rec.drug1 && p.drug2 == rec.drug2)
                && &rec.model_name == model
                && rec.repeat_index < options.repeats;
            if !matches {
                return Err(LlmError::Config(format!(
                    "{} holds records from a different run (pair {}, model {:?})",
                    path.display(),
                    rec.pair_index,
                    rec.model_name
                )));
            }
            // Failed attempts are retried on resume.
            if rec.error.is_none() {
                done.entry((rec.pair_index, rec.repeat_index)).or_insert(rec);
            }
        }
        if !done.is_empty() {
            log::info!("resuming: {} of {} records already present", done.len(), dataset.len() * options.repeats as usize);
        }
        sink = Some((file, path.clone()));
    }

    let jobs: Vec<(usize, u32)> = (0..dataset.len())
        .flat_map(|i| (0..options.repeats).map(move |r| (i, r)))
        .filter(|k| !done.contains_key(k))
        .collect();

    let next = AtomicUsize::new(0);
    let abort = AtomicBool::new(false);
    let workers = client.config().max_in_flight.min(jobs.len());
    let (tx, rx) = mpsc::channel::<Result<PredictionRecord, LlmError>>();

    let mut fatal = None;
    std::thread::scope(|scope| {
        for _ in 0..workers {
            let tx = tx.clone();
            let (jobs, next, abort, exchanges) = (&jobs, &next, &abort, &exchanges);
            scope.spawn(move || loop {
                if abort.load(Ordering::SeqCst) {
                    break;
                }
                let Some(&(i, r)) = jobs.get(next.fetch_add(1, Ordering::SeqCst)) else {
                    break;
                };
                let pair = &dataset.pairs[i];
                let result = match client.classify_one(&exchanges[i], i, &pair.drug1, &pair.drug2, r) {
                    Ok(rec) => Ok(rec),
                    Err(LlmError::Transport { last, .. }) if last.is_fatal() => {
                        abort.store(true, Ordering::SeqCst);
                        Err(LlmError::Config(format!("endpoint rejected requests: {last}")))
                    }
                    Err(e @ (LlmError::Transport { .. } | LlmError::PromptTooLong { .. })) => {
                        Ok(PredictionRecord {
                            pair_index: i,
                            drug1: pair.drug1.clone(),
                            drug2: pair.drug2.clone(),
                            model_name: client.config().model_name.clone(),
                            repeat_index: r,
                            request_hash: client.request_for(&exchanges[i]).hash(),
                            raw_response: String::new(),
                            parsed: ParsedLabel::Invalid,
                            latency_ms: 0,
                            error: Some(e.to_string()),
                        })
                    }
                    Err(e) => {
                        abort.store(true, Ordering::SeqCst);
                        Err(e)
                    }
                };
                if tx.send(result).is_err() {
                    break;
                }
            });
        }
        drop(tx);

        // Single writer: records are appended in completion order.
        for result in rx {
            match result {
                Ok(rec) => {
                    if let Some((file, path)) = sink.as_mut() {
                        let line = serde_json::to_string(&rec).expect("record serializes");
                        if let Err(e) = writeln!(file, "{line}").and_then(|_| file.flush()) {
                            abort.store(true, Ordering::SeqCst);
                            fatal.get_or_insert(io_err(path)(e));
                        }
                    }
                    done.insert((rec.pair_index, rec.repeat_index), rec);
                }
                Err(e) => {
                    fatal.get_or_insert(e);
                }
            }
        }
    });
    if let Some(e) = fatal {
        return Err(e);
    }

    let mut out: Vec<PredictionRecord> = done.into_values().collect();
    out.sort_by_key(|r| (r.pair_index, r.repeat_index));
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::catalog::{DrugGroup, DrugRecord};
    use crate::llm::{ChatRequest, ChatTransport, EndpointConfig, TransportError};
    use crate::pairs::{DirectedPair, Label};
    use std::sync::Arc;
    use std::time::Duration;

    fn fixture() -> (Catalog, LabeledDataset) {
        let mut c = Catalog::new("t");
        for id in ["A", "B", "C", "D"] {
            c.insert(DrugRecord {
                drug_id: id.into(),
                name: id.into(),
                smiles: "C".into(),
                groups: [DrugGroup::Approved].into_iter().collect(),
                organisms: vec!["Humans".into()],
                target_genes: ["G1".to_string()].into_iter().collect(),
            })
            .unwrap();
        }
        let pairs = (0..10)
            .map(|i| {
                let ids = ["A", "B", "C", "D"];
                DirectedPair::new(ids[i % 4], ids[(i + 1) % 4], Label::Interaction, "t")
            })
            .collect();
        (c, LabeledDataset::new("d", pairs))
    }

    /// Answers by drug1 after a short random-ish delay and tracks peak
    /// concurrency.
    struct Slow {
        live: AtomicUsize,
        peak: AtomicUsize,
    }

    impl ChatTransport for Slow {
        fn complete(&self, req: &ChatRequest) -> Result<String, TransportError> {
            let now = self.live.fetch_add(1, Ordering::SeqCst) + 1;
            self.peak.fetch_max(now, Ordering::SeqCst);
            let user = &req.messages[1].content;
            std::thread::sleep(Duration::from_millis(1 + (user.len() % 5) as u64));
            self.live.fetch_sub(1, Ordering::SeqCst);
            if user.starts_with("Drug1: A") {
                Ok("no interaction".into())
            } else if user.starts_with("Drug1: D") {
                Err(TransportError::Status { status: 400, body: "nope".into() })
            } else {
                Ok("Interaction".into())
            }
        }
    }

    fn client(max_in_flight: usize) -> (LlmClient, Arc<Slow>) {
        let t = Arc::new(Slow {
            live: AtomicUsize::new(0),
            peak: AtomicUsize::new(0),
        });
        let cfg = EndpointConfig {
            model_name: "m".into(),
            max_in_flight,
            ..Default::default()
        };
        (LlmClient::with_transport(cfg, t.clone()).unwrap(), t)
    }

    #[test]
    fn cardinality_order_and_bound() {
        let (c, d) = fixture();
        let (cl, t) = client(3);
        let recs = run_batch(&d, &c, &cl, &BatchOptions { repeats: 5, sink: None }).unwrap();
        assert_eq!(recs.len(), 50);
        let keys: Vec<_> = recs.iter().map(|r| (r.pair_index, r.repeat_index)).collect();
        let want: Vec<_> = (0..10).flat_map(|i| (0..5).map(move |r| (i, r))).collect();
        assert_eq!(keys, want);
        assert!(t.peak.load(Ordering::SeqCst) <= 3);
        assert!(t.peak.load(Ordering::SeqCst) >= 2);
    }

    #[test]
    fn per_record_failures_become_invalid() {
        let (c, d) = fixture();
        let (cl, _) = client(2);
        let recs = run_batch(&d, &c, &cl, &BatchOptions { repeats: 1, sink: None }).unwrap();
        let d_rec = recs.iter().find(|r| r.drug1 == "D").unwrap();
        assert_eq!(d_rec.parsed, ParsedLabel::Invalid);
        assert!(d_rec.error.as_deref().unwrap().contains("400"));
        assert_eq!(recs.iter().find(|r| r.drug1 == "A").unwrap().parsed, ParsedLabel::NoInteraction);
    }

    #[test]
    fn same_result_at_any_concurrency() {
        let (c, d) = fixture();
        let one = run_batch(&d, &c, &client(1).0, &BatchOptions { repeats: 2, sink: None }).unwrap();
        let many = run_batch(&d, &c, &client(8).0, &BatchOptions { repeats: 2, sink: None }).unwrap();
        assert!(one.iter().zip(&many).all(|(a, b)| a.same_outcome(b)));
    }

    #[test]
    fn zero_repeats_rejected() {
        let (c, d) = fixture();
        assert!(matches!(
            run_batch(&d, &c, &client(1).0, &BatchOptions { repeats: 0, sink: None }),
            Err(LlmError::Config(_))
        ));
    }

    #[test]
    fn failed_records_are_retried_on_resume() {
        use crate::llm::{ReplayEntry, ReplayTransport};
        let (c, d) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let opts = BatchOptions { repeats: 2, sink: Some(dir.path().join("p.jsonl")) };
        let cfg = EndpointConfig { model_name: "m".into(), ..Default::default() };
        let empty = LlmClient::with_transport(cfg.clone(), Arc::new(ReplayTransport::default())).unwrap();
        let failed = run_batch(&d, &c, &empty, &opts).unwrap();
        assert!(failed.iter().all(|r| r.error.is_some()));

        let entries: Vec<ReplayEntry> = failed
            .iter()
            .map(|r| ReplayEntry { request_hash: r.request_hash.clone(), response: "interaction".into() })
            .collect();
        let full = LlmClient::with_transport(cfg, Arc::new(ReplayTransport::from_entries(entries))).unwrap();
        let resumed = run_batch(&d, &c, &full, &opts).unwrap();
        assert_eq!(resumed.len(), 20);
        assert!(resumed.iter().all(|r| r.error.is_none() && r.parsed == ParsedLabel::Interaction));
    }

    #[test]
    fn resume_after_torn_write() {
        let (c, d) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("preds.jsonl");
        let opts = BatchOptions { repeats: 3, sink: Some(sink.clone()) };
        let full = run_batch(&d, &c, &client(4).0, &opts).unwrap();

        // Keep the first 7 lines plus half of the 8th, as if the process died.
        let text = std::fs::read_to_string(&sink).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        let mut partial = lines[..7].join("\n");
        partial.push('\n');
        partial.push_str(&lines[7][..lines[7].len() / 2]);
        std::fs::write(&sink, partial).unwrap();

        let resumed = run_batch(&d, &c, &client(4).0, &opts).unwrap();
        assert_eq!(resumed.len(), full.len());
        assert!(resumed.iter().zip(&full).all(|(a, b)| a.same_outcome(b)));
        let on_disk = load_records(&sink).unwrap();
        assert_eq!(on_disk.len(), 30);
    }

    #[test]
    fn foreign_sink_is_rejected() {
        let (c, d) = fixture();
        let dir = tempfile::tempdir().unwrap();
        let sink = dir.path().join("preds.jsonl");
        run_batch(&d, &c, &client(1).0, &BatchOptions { repeats: 1, sink: Some(sink.clone()) }).unwrap();
        let (other_client, _) = {
            let t = Arc::new(Slow { live: AtomicUsize::new(0), peak: AtomicUsize::new(0) });
            let cfg = EndpointConfig { model_name: "other".into(), ..Default::default() };
            (LlmClient::with_transport(cfg, t.clone()).unwrap(), t)
        };
        assert!(matches!(
            run_batch(&d, &c, &other_client, &BatchOptions { repeats: 1, sink: Some(sink) }),
            Err(LlmError::Config(_))
        ));
    }
}
