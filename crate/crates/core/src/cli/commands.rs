use std::collections::{BTreeMap, HashSet};

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{
    Cli, CliError, Command, OutLayout, BASELINE_HOLDOUT, BASELINE_MODEL, BASELINE_TRAIN, LLM_TRAIN, LLM_VALIDATION,
    REFERENCE,
};
use crate::baseline::{
    cross_validate, featurize_dataset, featurize_pair, load_model, predict, save_model, train, CvPlan, CvResult,
    TrainOptions,
};
use crate::catalog::{
    build_gene_index, filter_eligible, load_catalog, parse_drugbank_xml_subset, write_catalog, Catalog,
    CatalogFormat, GeneIndex,
};
use crate::config::{CatalogSource, RunConfig};
use crate::finetune::{export_jsonl, ExportStyle};
use crate::llm::{
    run_batch, write_replay_fixtures, BatchOptions, LlmClient, PredictionRecord, ReplayEntry,
    TransportKind,
};
use crate::manifest::RunManifest;
use crate::metrics::{
    compute_metrics, render_report, stability_report, tally_records, ExampleStability, InvalidPolicy, Layout,
    MetricsSummary,
};
use crate::pairs::{
    allot_negatives, build_balanced, generate_negatives, load_pairs, load_raw_pairs, stratified_fraction_split,
    stratified_split, write_pairs, DatasetEntry, DatasetManifest, DirectedPair, ExternalImporter, ImportExclusion,
    InteractionRegistry, Label, LabeledDataset, RawPair,
};
use crate::prompt::build_training_conversation;

struct Ctx {
    cfg: RunConfig,
    config_path: PathBuf,
    config_bytes: Vec<u8>,
    out: OutLayout,
    args: Vec<String>,
}

/// What a command read and wrote, for its manifest.
#[derive(Default)]
struct Touched {
    inputs: Vec<PathBuf>,
    outputs: Vec<PathBuf>,
}

fn other(path: &Path) -> impl Fn(std::io::Error) -> CliError + '_ {
    move |e| CliError::Other(format!("{}: {e}", path.display()))
}

/// Writes through a sibling temporary file so readers never see a partial
/// artifact.
fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(other(dir))?;
    }
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    std::fs::write(&tmp, bytes).map_err(other(&tmp))?;
    std::fs::rename(&tmp, path).map_err(other(path))
}

fn json_bytes<T: Serialize>(value: &T) -> Vec<u8> {
    let mut v = serde_json::to_vec_pretty(value).expect("serializable");
    v.push(b'\n');
    v
}

fn require_file(path: &Path, hint: &str) -> Result<(), CliError> {
    if path.is_file() {
        Ok(())
    } else {
        Err(CliError::Data(format!("{} not found; {hint}", path.display())))
    }
}

pub(super) fn execute(cli: Cli, args: Vec<String>) -> Result<(), CliError> {
    let (mut cfg, config_bytes) = RunConfig::load(&cli.global.config)?;
    if let Some(seed) = cli.global.seed {
        cfg.seed = Some(seed);
    }
    if let Some(out) = cli.global.out {
        cfg.out_dir = out;
    }
    let ctx = Ctx {
        out: OutLayout::new(cfg.out_dir.clone()),
        cfg,
        config_path: cli.global.config,
        config_bytes,
        args,
    };
    let mut manifest = RunManifest::begin(
        cli.command.name(),
        ctx.args.clone(),
        &ctx.config_path,
        &ctx.config_bytes,
        ctx.cfg.seed,
    );
    let (stem, touched) = match &cli.command {
        Command::Ingest => ("ingest".to_string(), ingest(&ctx)?),
        Command::BuildPairs => ("build-pairs".to_string(), build_pairs(&ctx)?),
        Command::ExportFinetune { dataset, style } => (
            format!("export-finetune-{dataset}"),
            export_finetune(&ctx, dataset, *style)?,
        ),
        Command::EvalLlm {
            model,
            dataset,
            repeats,
            replay,
            record_replay,
        } => (
            format!("eval-llm-{model}-{dataset}"),
            eval_llm(&ctx, model, dataset, *repeats, replay.as_deref(), record_replay.as_deref())?,
        ),
        Command::TrainBaseline { dataset, c } => ("train-baseline".to_string(), train_baseline(&ctx, dataset.as_deref(), *c)?),
        Command::EvalBaseline { dataset } => (format!("eval-baseline-{dataset}"), eval_baseline(&ctx, dataset)?),
        Command::Report { layout } => ("report".to_string(), report(&ctx, *layout)?),
    };
    manifest.seed = ctx.cfg.seed;
    let manifest = manifest
        .finish(&touched.inputs, &touched.outputs)
        .map_err(|e| CliError::Other(format!("manifest: {e}")))?;
    let path = ctx.out.manifest(&stem);
    manifest.write(&path).map_err(other(&path))?;
    Ok(())
}

#[derive(Debug, Serialize, Deserialize)]
struct IngestSummary {
    source: String,
    records_loaded: usize,
    records_retained: usize,
    records_excluded: usize,
    gene_count: usize,
    interactions_raw: usize,
    interactions_retained: usize,
}

fn ingest(ctx: &Ctx) -> Result<Touched, CliError> {
    let c = &ctx.cfg.catalog;
    let mut touched = Touched::default();
    touched.inputs.push(c.path.clone());
    let (catalog, raw): (Catalog, Vec<RawPair>) = match c.format {
        CatalogSource::DrugbankXml => {
            let x = parse_drugbank_xml_subset(&c.path)?;
            let raw = x
                .interactions
                .into_iter()
                .map(|(drug1, drug2)| RawPair { drug1, drug2 })
                .collect();
            (x.catalog, raw)
        }
        other => {
            let catalog = load_catalog(&c.path, other.normalized().expect("normalized format"))?;
            let path = c.interactions.as_ref().expect("validated");
            touched.inputs.push(path.clone());
            (catalog, load_raw_pairs(path)?)
        }
    };
    let filtered = filter_eligible(&catalog);
    let kept = &filtered.catalog;
    let index = build_gene_index(kept);

    // Positives need both drugs in the filtered catalog.
    let mut seen = HashSet::new();
    let known: Vec<DirectedPair> = raw
        .iter()
        .filter(|r| r.drug1 != r.drug2 && kept.contains(&r.drug1) && kept.contains(&r.drug2))
        .filter(|r| seen.insert((r.drug1.as_str(), r.drug2.as_str())))
        .map(|r| DirectedPair::new(&r.drug1, &r.drug2, Label::Interaction, REFERENCE))
        .collect();

    let mut cat_bytes = Vec::new();
    write_catalog(&mut cat_bytes, kept, CatalogFormat::Jsonl)?;
    let mut genes = String::new();
    for g in index.genes() {
        genes.push_str(g);
        genes.push('\n');
    }
    let mut excl = String::from("drug_id\treasons\n");
    for (id, reasons) in &filtered.excluded {
        let reasons: Vec<&str> = reasons.iter().map(|r| r.as_str()).collect();
        excl.push_str(&format!("{id}\t{}\n", reasons.join("; ")));
    }
    let mut known_bytes = Vec::new();
    write_pairs(&mut known_bytes, &known)?;
    let summary = IngestSummary {
        source: c.path.display().to_string(),
        records_loaded: catalog.len(),
        records_retained: kept.len(),
        records_excluded: filtered.excluded.len(),
        gene_count: index.len(),
        interactions_raw: raw.len(),
        interactions_retained: known.len(),
    };

    let out = &ctx.out;
    for (path, bytes) in [
        (out.catalog(), cat_bytes),
        (out.genes(), genes.into_bytes()),
        (out.exclusions(), excl.into_bytes()),
        (out.known_interactions(), known_bytes),
        (out.ingest_summary(), json_bytes(&summary)),
    ] {
        write_atomic(&path, &bytes)?;
        touched.outputs.push(path);
    }
    println!(
        "ingest: {} of {} drugs retained, {} genes, {} known interactions",
        summary.records_retained, summary.records_loaded, summary.gene_count, summary.interactions_retained
    );
    Ok(touched)
}

fn load_ingested(ctx: &Ctx, touched: &mut Touched) -> Result<(Catalog, GeneIndex), CliError> {
    let (cat, genes) = (ctx.out.catalog(), ctx.out.genes());
    require_file(&cat, "run `ingest` first")?;
    require_file(&genes, "run `ingest` first")?;
    let catalog = load_catalog(&cat, CatalogFormat::Jsonl)?;
    let text = std::fs::read_to_string(&genes).map_err(other(&genes))?;
    let index = GeneIndex::from_sorted(text.lines().map(str::to_string).collect())
        .map_err(|e| CliError::Data(format!("{}: {e}", genes.display())))?;
    touched.inputs.push(cat);
    touched.inputs.push(genes);
    Ok((catalog, index))
}

fn exclusion_counts(excluded: &[(usize, ImportExclusion)]) -> [usize; 4] {
    let mut c = [0; 4];
    for (_, e) in excluded {
        let i = match e {
            ImportExclusion::UnknownDrug(_) => 0,
            ImportExclusion::KnownInReference => 1,
            ImportExclusion::Duplicate => 2,
            ImportExclusion::SelfPair => 3,
        };
        c[i] += 1;
    }
    c
}

fn build_pairs(ctx: &Ctx) -> Result<Touched, CliError> {
    let seed = ctx.cfg.require_seed()?;
    let pc = &ctx.cfg.pairs;
    let mut touched = Touched::default();
    let (catalog, _) = load_ingested(ctx, &mut touched)?;
    let known_path = ctx.out.known_interactions();
    require_file(&known_path, "run `ingest` first")?;
    let positives = load_pairs(&known_path, REFERENCE)?;
    touched.inputs.push(known_path);

    let mut reference = InteractionRegistry::new(&catalog);
    reference.register_known(&positives.pairs)?;

    let mut importer = ExternalImporter::new(&reference);
    let mut reports = Vec::new();
    for ext in &pc.external {
        let raw = load_raw_pairs(&ext.path)?;
        touched.inputs.push(ext.path.clone());
        let report = importer.import(&ext.name, &raw);
        if report.dropped() {
            log::warn!("external dataset {} has no usable pairs after filtering", ext.name);
        }
        reports.push(report);
    }

    let mut all_known = reference.clone();
    for r in &reports {
        all_known.register_known(&r.dataset.pairs)?;
    }
    let mut sizes = vec![positives.len()];
    sizes.extend(reports.iter().map(|r| r.dataset.len()));
    let total: usize = sizes.iter().sum();
    let pool = generate_negatives(total, &all_known, seed, pc.blocking)?;
    let slices = allot_negatives(&pool, &sizes)?;

    let mut datasets = vec![build_balanced(&positives, slices[0])?];
    for (r, negs) in reports.iter().zip(&slices[1..]) {
        datasets.push(build_balanced(&r.dataset, negs)?);
    }
    let reference_balanced = datasets[0].clone();
    let (mut train_set, mut val_set) = stratified_split(&reference_balanced, pc.train_size, pc.validation_size, seed)?;
    train_set.name = LLM_TRAIN.into();
    val_set.name = LLM_VALIDATION.into();
    let (mut bl_train, mut bl_hold) = stratified_fraction_split(&reference_balanced, pc.baseline_holdout_fraction, seed)?;
    bl_train.name = BASELINE_TRAIN.into();
    bl_hold.name = BASELINE_HOLDOUT.into();
    datasets.extend([train_set, val_set, bl_train, bl_hold]);

    let mut manifest = DatasetManifest::default();
    for ds in &datasets {
        let rel = OutLayout::dataset_rel(&ds.name);
        let mut bytes = Vec::new();
        write_pairs(&mut bytes, &ds.pairs)?;
        let path = ctx.out.root().join(&rel);
        write_atomic(&path, &bytes)?;
        touched.outputs.push(path);
        manifest.datasets.push(DatasetEntry::describe(ds, rel));
    }
    let mut import = String::from("dataset\traw\tkept\tunknown_drug\tknown_in_reference\tduplicate\tself_pair\n");
    for r in &reports {
        let [u, k, d, s] = exclusion_counts(&r.excluded);
        import.push_str(&format!(
            "{}\t{}\t{}\t{u}\t{k}\t{d}\t{s}\n",
            r.dataset.name,
            r.raw_count,
            r.dataset.len()
        ));
    }
    for (path, bytes) in [
        (ctx.out.datasets(), json_bytes(&manifest)),
        (ctx.out.import_report(), import.into_bytes()),
    ] {
        write_atomic(&path, &bytes)?;
        touched.outputs.push(path);
    }

    println!("{:<24} {:>10} {:>10} {:>10}", "Dataset", "Positive", "Negative", "Total");
    for e in &manifest.datasets {
        println!("{:<24} {:>10} {:>10} {:>10}", e.name, e.positives, e.negatives, e.total);
    }
    Ok(touched)
}

fn load_dataset(ctx: &Ctx, name: &str, touched: &mut Touched) -> Result<LabeledDataset, CliError> {
    let mpath = ctx.out.datasets();
    require_file(&mpath, "run `build-pairs` first")?;
    let text = std::fs::read_to_string(&mpath).map_err(other(&mpath))?;
    let manifest: DatasetManifest =
        serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", mpath.display())))?;
    let entry = manifest.find(name).ok_or_else(|| {
        let known: Vec<&str> = manifest.datasets.iter().map(|d| d.name.as_str()).collect();
        CliError::Config(format!("unknown dataset {name:?}; available: {}", known.join(", ")))
    })?;
    let path = ctx.out.root().join(&entry.path);
    let ds = load_pairs(&path, name)?;
    touched.inputs.push(path);
    Ok(ds)
}

fn export_finetune(ctx: &Ctx, dataset: &str, style: ExportStyle) -> Result<Touched, CliError> {
    let mut touched = Touched::default();
    let (catalog, _) = load_ingested(ctx, &mut touched)?;
    let ds = load_dataset(ctx, dataset, &mut touched)?;
    let conversations = ds
        .pairs
        .iter()
        .map(|p| build_training_conversation(p, &catalog))
        .collect::<Result<Vec<_>, _>>()
        .map_err(|e| CliError::Data(e.to_string()))?;
    let path = ctx.out.finetune(dataset, style);
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(other(dir))?;
    }
    export_jsonl(&conversations, style, &path)?;
    println!("export-finetune: {} conversations -> {}", conversations.len(), path.display());
    touched.outputs.push(path);
    Ok(touched)
}

/// Stored result of one model on one dataset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationFile {
    pub model: String,
    pub dataset: String,
    pub invalid_policy: InvalidPolicy,
    pub summary: MetricsSummary,
    /// The same predictions scored under the other invalid-answer policy,
    /// present when some answers were invalid.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub alternate: Option<AlternateSummary>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stability: Option<StabilitySummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlternateSummary {
    pub invalid_policy: InvalidPolicy,
    pub summary: MetricsSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StabilitySummary {
    pub repeats: usize,
    pub examples: usize,
    /// Fraction of examples with any disagreeing repeat.
    pub aggregate: f64,
    pub unstable: Vec<ExampleStability>,
}

fn eval_llm(
    ctx: &Ctx,
    model: &str,
    dataset: &str,
    repeats: Option<u32>,
    replay: Option<&Path>,
    record_replay: Option<&Path>,
) -> Result<Touched, CliError> {
    let mut endpoint = ctx
        .cfg
        .endpoints
        .get(model)
        .cloned()
        .ok_or_else(|| {
            let known: Vec<&str> = ctx.cfg.endpoints.keys().map(String::as_str).collect();
            CliError::Config(format!("unknown model {model:?}; configured: {}", known.join(", ")))
        })?;
    let mut touched = Touched::default();
    if let Some(p) = replay {
        endpoint.transport = TransportKind::Replay { path: Some(p.to_path_buf()) };
    }
    if let TransportKind::Replay { path: Some(p) } = &endpoint.transport {
        touched.inputs.push(p.clone());
    }
    let client = LlmClient::from_config(endpoint)?;
    let (catalog, _) = load_ingested(ctx, &mut touched)?;
    let ds = load_dataset(ctx, dataset, &mut touched)?;
    let repeats = repeats.unwrap_or(ctx.cfg.evaluation.repeats);

    let sink = ctx.out.predictions(model, dataset);
    if let Some(dir) = sink.parent() {
        std::fs::create_dir_all(dir).map_err(other(dir))?;
    }
    let options = BatchOptions {
        repeats,
        sink: Some(sink.clone()),
    };
    let records = run_batch(&ds, &catalog, &client, &options)?;

    // The sink holds completion order; store the canonical order instead.
    let mut bytes = Vec::new();
    for r in &records {
        serde_json::to_writer(&mut bytes, r).expect("serializable");
        bytes.push(b'\n');
    }
    write_atomic(&sink, &bytes)?;
    touched.outputs.push(sink);

    if !records.is_empty() && records.iter().all(|r| r.error.is_some()) {
        return Err(CliError::Transport(format!(
            "no request to {model} succeeded ({}); rerun to retry the failed records",
            records[0].error.as_deref().unwrap_or("unknown error")
        )));
    }
    let eval = evaluate_records(&records, &ds, model, repeats, ctx.cfg.evaluation.invalid_policy)?;
    let epath = ctx.out.evaluation(model, dataset);
    write_atomic(&epath, &json_bytes(&eval))?;
    touched.outputs.push(epath);

    if let Some(path) = record_replay {
        let entries: BTreeMap<&str, &str> = records
            .iter()
            .filter(|r| r.error.is_none())
            .map(|r| (r.request_hash.as_str(), r.raw_response.as_str()))
            .collect();
        let entries: Vec<ReplayEntry> = entries
            .into_iter()
            .map(|(h, r)| ReplayEntry {
                request_hash: h.into(),
                response: r.into(),
            })
            .collect();
        let mut buf = Vec::new();
        write_replay_fixtures(&mut buf, &entries).map_err(other(path))?;
        write_atomic(path, &buf)?;
        touched.outputs.push(path.to_path_buf());
    }

    let s = &eval.summary;
    println!(
        "eval-llm: {model} on {dataset}: {} records, accuracy {}, sensitivity {}, invalid {}, instability {}",
        records.len(),
        fmt_opt(s.accuracy),
        fmt_opt(s.sensitivity),
        s.counts.invalid,
        eval.stability.as_ref().map_or(0.0, |st| st.aggregate)
    );
    Ok(touched)
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| crate::metrics::UNDEFINED.to_string(), |v| format!("{v:.3}"))
}

/// Scores LLM predictions under the configured policy and, when some
/// answers were invalid, under the other policy too.
pub fn evaluate_records(
    records: &[PredictionRecord],
    dataset: &LabeledDataset,
    model: &str,
    repeats: u32,
    policy: InvalidPolicy,
) -> Result<EvaluationFile, CliError> {
    let counts = tally_records(records, dataset, policy)?;
    let summary = compute_metrics(&counts, &dataset.name, model)?;
    let alternate = if counts.invalid > 0 {
        let other = match policy {
            InvalidPolicy::CountAsWrong => InvalidPolicy::Exclude,
            InvalidPolicy::Exclude => InvalidPolicy::CountAsWrong,
        };
        let c = tally_records(records, dataset, other)?;
        // Everything may be invalid, leaving nothing to score when excluded.
        compute_metrics(&c, &dataset.name, model).ok().map(|summary| AlternateSummary {
            invalid_policy: other,
            summary,
        })
    } else {
        None
    };
    let st = stability_report(records, repeats as usize)?;
    let stability = StabilitySummary {
        repeats: st.repeats,
        examples: st.examples.len(),
        aggregate: st.aggregate,
        unstable: st.examples.into_iter().filter(|e| e.disagreements > 0).collect(),
    };
    Ok(EvaluationFile {
        model: model.into(),
        dataset: dataset.name.clone(),
        invalid_policy: policy,
        summary,
        alternate,
        stability: Some(stability),
    })
}

#[derive(Debug, Serialize, Deserialize)]
struct CvFile {
    dataset: String,
    folds: usize,
    seed: u64,
    /// Set when C was given on the command line and no search ran.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    fixed_c: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    cv: Option<CvResult>,
    chosen_c: f64,
    iterations: usize,
    converged: bool,
    final_objective: f64,
}

fn train_baseline(ctx: &Ctx, dataset: Option<&str>, fixed_c: Option<f64>) -> Result<Touched, CliError> {
    let bc = &ctx.cfg.baseline;
    let name = dataset.unwrap_or(&bc.train_dataset);
    let mut touched = Touched::default();
    let (catalog, index) = load_ingested(ctx, &mut touched)?;
    let ds = load_dataset(ctx, name, &mut touched)?;
    let points = featurize_dataset(&ds, &catalog, &index)?;
    let opts = TrainOptions {
        tolerance: bc.tolerance,
        max_iterations: bc.max_iterations,
    };
    let seed = ctx.cfg.require_seed()?;
    let (chosen, cv) = match fixed_c {
        Some(c) => (c, None),
        None => {
            let labels: Vec<Label> = ds.pairs.iter().filter_map(|p| p.label).collect();
            let plan = CvPlan::stratified(&labels, bc.folds, ctx.cfg.c_grid(), seed)?;
            let result = cross_validate(&points, &plan, &opts)?;
            (result.best_c, Some(result))
        }
    };
    let model = train(&points, chosen, &opts)?;
    if !model.converged {
        log::warn!("baseline did not reach the gradient tolerance in {} iterations", model.iterations);
    }
    let mpath = ctx.out.model();
    if let Some(dir) = mpath.parent() {
        std::fs::create_dir_all(dir).map_err(other(dir))?;
    }
    save_model(&mpath, &model)?;
    touched.outputs.push(mpath);
    let file = CvFile {
        dataset: name.into(),
        folds: bc.folds,
        seed,
        fixed_c,
        cv,
        chosen_c: chosen,
        iterations: model.iterations,
        converged: model.converged,
        final_objective: model.final_objective,
    };
    let cpath = ctx.out.cv();
    write_atomic(&cpath, &json_bytes(&file))?;
    touched.outputs.push(cpath);
    println!(
        "train-baseline: {} examples, C = {chosen:e}, {} iterations, converged {}",
        points.len(),
        model.iterations,
        model.converged
    );
    Ok(touched)
}

fn eval_baseline(ctx: &Ctx, dataset: &str) -> Result<Touched, CliError> {
    let mut touched = Touched::default();
    let (catalog, index) = load_ingested(ctx, &mut touched)?;
    let mpath = ctx.out.model();
    require_file(&mpath, "run `train-baseline` first")?;
    let model = load_model(&mpath)?;
    touched.inputs.push(mpath);
    let ds = load_dataset(ctx, dataset, &mut touched)?;

    let mut counts = crate::metrics::ConfusionCounts::default();
    let mut tsv = String::from("drug1_id\tdrug2_id\tlabel\tprobability\tpredicted\n");
    for p in &ds.pairs {
        let f = featurize_pair(p, &catalog, &index)?;
        let (prob, predicted) = predict(&model, &f.vector)?;
        let truth = p
            .label
            .ok_or_else(|| CliError::Data(format!("pair ({}, {}) has no label", p.drug1, p.drug2)))?;
        counts.add(truth, predicted.into(), InvalidPolicy::CountAsWrong);
        tsv.push_str(&format!(
            "{}\t{}\t{}\t{prob}\t{}\n",
            p.drug1,
            p.drug2,
            truth.as_str(),
            predicted.as_str()
        ));
    }
    let summary = compute_metrics(&counts, dataset, BASELINE_MODEL)?;
    let eval = EvaluationFile {
        model: BASELINE_MODEL.into(),
        dataset: dataset.into(),
        invalid_policy: InvalidPolicy::CountAsWrong,
        summary,
        alternate: None,
        stability: None,
    };
    let ppath = ctx.out.baseline_predictions(dataset);
    write_atomic(&ppath, tsv.as_bytes())?;
    let epath = ctx.out.evaluation(BASELINE_MODEL, dataset);
    write_atomic(&epath, &json_bytes(&eval))?;
    touched.outputs.extend([ppath, epath]);
    println!(
        "eval-baseline: {dataset}: accuracy {}, sensitivity {}",
        fmt_opt(eval.summary.accuracy),
        fmt_opt(eval.summary.sensitivity)
    );
    Ok(touched)
}

/// Every stored evaluation, datasets in build order then models by name.
pub fn collect_evaluations(out: &OutLayout) -> Result<(Vec<EvaluationFile>, Vec<PathBuf>), CliError> {
    let dir = out.metrics_dir();
    let mut paths = Vec::new();
    if dir.is_dir() {
        let mut models: Vec<PathBuf> = std::fs::read_dir(&dir)
            .map_err(other(&dir))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.is_dir())
            .collect();
        models.sort();
        for m in models {
            let mut files: Vec<PathBuf> = std::fs::read_dir(&m)
                .map_err(other(&m))?
                .filter_map(|e| e.ok().map(|e| e.path()))
                .filter(|p| p.extension().is_some_and(|x| x == "json"))
                .collect();
            files.sort();
            paths.extend(files);
        }
    }
    let mut evals = Vec::new();
    for p in &paths {
        let text = std::fs::read_to_string(p).map_err(other(p))?;
        let e: EvaluationFile =
            serde_json::from_str(&text).map_err(|e| CliError::Data(format!("{}: {e}", p.display())))?;
        evals.push(e);
    }
    let order: Vec<String> = std::fs::read_to_string(out.datasets())
        .ok()
        .and_then(|t| serde_json::from_str::<DatasetManifest>(&t).ok())
        .map(|m| m.datasets.into_iter().map(|d| d.name).collect())
        .unwrap_or_default();
    let rank = |name: &str| order.iter().position(|n| n == name).unwrap_or(usize::MAX);
    evals.sort_by(|a, b| {
        (rank(&a.dataset), &a.dataset, &a.model).cmp(&(rank(&b.dataset), &b.dataset, &b.model))
    });
    Ok((evals, paths))
}

fn report(ctx: &Ctx, layout: Layout) -> Result<Touched, CliError> {
    let (evals, inputs) = collect_evaluations(&ctx.out)?;
    if evals.is_empty() {
        return Err(CliError::Data(format!(
            "no evaluations under {}; run eval-llm or eval-baseline first",
            ctx.out.metrics_dir().display()
        )));
    }
    let mut touched = Touched {
        inputs,
        outputs: Vec::new(),
    };
    let primary: Vec<MetricsSummary> = evals.iter().map(|e| e.summary.clone()).collect();
    let dir = ctx.out.report_dir();
    let report = render_report(&primary, layout)?;
    touched.outputs.extend(report.write_to(&dir).map_err(other(&dir))?);

    if evals.iter().any(|e| e.alternate.is_some()) {
        // Same tables with invalid answers scored the other way where that
        // differs.
        let alt: Vec<MetricsSummary> = evals
            .iter()
            .map(|e| e.alternate.as_ref().map_or_else(|| e.summary.clone(), |a| a.summary.clone()))
            .collect();
        let alt_dir = dir.join("alternate_invalid_policy");
        let r = render_report(&alt, layout)?;
        touched.outputs.extend(r.write_to(&alt_dir).map_err(other(&alt_dir))?);
    }
    print!("{}", report.text);
    Ok(touched)
}
