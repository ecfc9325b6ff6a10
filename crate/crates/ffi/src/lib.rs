//! C ABI over the ddibench core library.
//!
//! Conventions:
//! - Every fallible function returns a [`DdiStatus`]; on failure a message
//!   is kept per thread and can be fetched with [`ddi_last_error`].
//! - Handles are opaque and must be released with their `_free` function.
//! - Strings returned through out-parameters are owned by the caller and
//!   must be released with [`ddi_string_free`].
//! - Input strings are NUL-terminated UTF-8.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;

use ddibench::baseline::{featurize_pair, load_model, predict, BaselineError, LogRegModel};
use ddibench::catalog::{load_catalog, Catalog, CatalogFormat, GeneIndex};
use ddibench::llm::{parse_label, ParsedLabel};
use ddibench::metrics::{compute_metrics, ConfusionCounts};
use ddibench::pairs::{DirectedPair, Label};
use ddibench::prompt::build_zero_shot;

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdiStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    InvalidData = 4,
    NotFound = 5,
    InvalidArgument = 6,
    /// A Rust panic was caught at the boundary.
    Internal = 7,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DdiLabel {
    Invalid = 0,
    Interaction = 1,
    NoInteraction = 2,
}

impl From<ParsedLabel> for DdiLabel {
    fn from(p: ParsedLabel) -> Self {
        match p {
            ParsedLabel::Interaction => DdiLabel::Interaction,
            ParsedLabel::NoInteraction => DdiLabel::NoInteraction,
            ParsedLabel::Invalid => DdiLabel::Invalid,
        }
    }
}

/// Metric values; NaN marks an undefined ratio (zero denominator).
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DdiMetrics {
    pub accuracy: f64,
    pub precision: f64,
    pub sensitivity: f64,
    pub specificity: f64,
    pub f1: f64,
}

/// Drug catalog as loaded, without eligibility filtering.
pub struct DdiCatalog {
    catalog: Catalog,
}

/// Trained baseline together with the gene index it was trained on.
pub struct DdiModel {
    model: LogRegModel,
    genes: GeneIndex,
}

struct Failure {
    status: DdiStatus,
    message: String,
}

impl Failure {
    fn new(status: DdiStatus, message: impl Into<String>) -> Self {
        Self {
            status,
            message: message.into(),
        }
    }
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).expect("no interior NUL");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> DdiStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|e| *e.borrow_mut() = None);
            DdiStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(_) => {
            set_last_error("internal error (panic)");
            DdiStatus::Internal
        }
    }
}

unsafe fn text<'a>(ptr: *const c_char, what: &str) -> Result<&'a str, Failure> {
    if ptr.is_null() {
        return Err(Failure::new(DdiStatus::NullPointer, format!("{what} is null")));
    }
    CStr::from_ptr(ptr)
        .to_str()
        .map_err(|_| Failure::new(DdiStatus::InvalidUtf8, format!("{what} is not valid UTF-8")))
}

unsafe fn handle<'a, T>(ptr: *const T, what: &str) -> Result<&'a T, Failure> {
    ptr.as_ref()
        .ok_or_else(|| Failure::new(DdiStatus::NullPointer, format!("{what} is null")))
}

unsafe fn write_out<T>(out: *mut T, value: T, what: &str) -> Result<(), Failure> {
    if out.is_null() {
        return Err(Failure::new(DdiStatus::NullPointer, format!("{what} is null")));
    }
    out.write(value);
    Ok(())
}

fn owned(s: String) -> *mut c_char {
    CString::new(s.replace('\0', " ")).expect("no interior NUL").into_raw()
}

fn baseline_failure(e: BaselineError) -> Failure {
    let status = match &e {
        BaselineError::Io { .. } => DdiStatus::Io,
        BaselineError::UnknownDrug(_) => DdiStatus::NotFound,
        BaselineError::DimensionMismatch { .. } => DdiStatus::InvalidArgument,
        _ => DdiStatus::InvalidData,
    };
    Failure::new(status, e.to_string())
}

/// Message of the last failed call on this thread, or NULL. The caller
/// owns the returned string.
#[no_mangle]
pub extern "C" fn ddi_last_error() -> *mut c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(std::ptr::null_mut(), |c| c.clone().into_raw()))
}

/// Releases a string returned by this library. NULL is ignored.
///
/// # Safety
/// `s` must come from this library and not have been freed already.
#[no_mangle]
pub unsafe extern "C" fn ddi_string_free(s: *mut c_char) {
    if !s.is_null() {
        drop(CString::from_raw(s));
    }
}

/// Library version as a static string; do not free.
#[no_mangle]
pub extern "C" fn ddi_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Loads a catalog. `format` is "tabular" or "jsonl".
///
/// # Safety
/// `path` and `format` must be NUL-terminated strings; `out` must be a valid
/// pointer.
#[no_mangle]
pub unsafe extern "C" fn ddi_catalog_load(
    path: *const c_char,
    format: *const c_char,
    out: *mut *mut DdiCatalog,
) -> DdiStatus {
    guard(|| {
        let path = text(path, "path")?;
        let format: CatalogFormat = text(format, "format")?
            .parse()
            .map_err(|e: String| Failure::new(DdiStatus::InvalidArgument, e))?;
        let catalog = load_catalog(Path::new(path), format).map_err(|e| {
            let status = match e {
                ddibench::catalog::CatalogError::Io { .. } => DdiStatus::Io,
                _ => DdiStatus::InvalidData,
            };
            Failure::new(status, e.to_string())
        })?;
        write_out(out, Box::into_raw(Box::new(DdiCatalog { catalog })), "out")
    })
}

/// Number of drugs in the catalog; 0 for NULL.
///
/// # Safety
/// `catalog` must be NULL or a live handle.
#[no_mangle]
pub unsafe extern "C" fn ddi_catalog_len(catalog: *const DdiCatalog) -> usize {
    catalog.as_ref().map_or(0, |c| c.catalog.len())
}

/// # Safety
/// `catalog` must be NULL or a handle from [`ddi_catalog_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddi_catalog_free(catalog: *mut DdiCatalog) {
    if !catalog.is_null() {
        drop(Box::from_raw(catalog));
    }
}

/// Renders the zero-shot prompt for the directed pair (drug1, drug2).
///
/// # Safety
/// Pointers must be valid; `out_system` and `out_user` receive strings to
/// release with [`ddi_string_free`].
#[no_mangle]
pub unsafe extern "C" fn ddi_render_prompt(
    catalog: *const DdiCatalog,
    drug1: *const c_char,
    drug2: *const c_char,
    out_system: *mut *mut c_char,
    out_user: *mut *mut c_char,
) -> DdiStatus {
    guard(|| {
        let catalog = handle(catalog, "catalog")?;
        let pair = DirectedPair::new(text(drug1, "drug1")?, text(drug2, "drug2")?, Label::Interaction, "ffi");
        if out_system.is_null() || out_user.is_null() {
            return Err(Failure::new(DdiStatus::NullPointer, "output pointer is null"));
        }
        let ex = build_zero_shot(&pair, &catalog.catalog)
            .map_err(|e| Failure::new(DdiStatus::NotFound, e.to_string()))?;
        out_system.write(owned(ex.system_text));
        out_user.write(owned(ex.user_text));
        Ok(())
    })
}

/// Classifies a model answer. NULL or non-UTF-8 input is invalid.
///
/// # Safety
/// `raw` must be NULL or a NUL-terminated string.
#[no_mangle]
pub unsafe extern "C" fn ddi_parse_label(raw: *const c_char) -> DdiLabel {
    if raw.is_null() {
        return DdiLabel::Invalid;
    }
    match CStr::from_ptr(raw).to_str() {
        Ok(s) => parse_label(s).into(),
        Err(_) => DdiLabel::Invalid,
    }
}

/// Computes metrics from confusion counts. Fails when all counts are zero.
///
/// # Safety
/// `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddi_compute_metrics(
    tp: u64,
    fp: u64,
    tn: u64,
    fn_: u64,
    out: *mut DdiMetrics,
) -> DdiStatus {
    guard(|| {
        let counts = ConfusionCounts {
            tp,
            fp,
            tn,
            fn_,
            invalid: 0,
        };
        let m = compute_metrics(&counts, "", "").map_err(|e| Failure::new(DdiStatus::InvalidArgument, e.to_string()))?;
        let v = |x: Option<f64>| x.unwrap_or(f64::NAN);
        write_out(
            out,
            DdiMetrics {
                accuracy: v(m.accuracy),
                precision: v(m.precision),
                sensitivity: v(m.sensitivity),
                specificity: v(m.specificity),
                f1: v(m.f1),
            },
            "out",
        )
    })
}

/// Loads a trained baseline and the gene list it was trained against (the
/// `genes.txt` written by `ingest`, one symbol per line in sorted order).
///
/// # Safety
/// Paths must be NUL-terminated strings; `out` must be a valid pointer.
#[no_mangle]
pub unsafe extern "C" fn ddi_model_load(
    model_path: *const c_char,
    genes_path: *const c_char,
    out: *mut *mut DdiModel,
) -> DdiStatus {
    guard(|| {
        let model = load_model(Path::new(text(model_path, "model_path")?)).map_err(baseline_failure)?;
        let genes_path = text(genes_path, "genes_path")?;
        let list = std::fs::read_to_string(genes_path)
            .map_err(|e| Failure::new(DdiStatus::Io, format!("{genes_path}: {e}")))?;
        let genes = GeneIndex::from_sorted(list.lines().map(str::to_string).collect())
            .map_err(|e| Failure::new(DdiStatus::InvalidData, format!("{genes_path}: {e}")))?;
        if 2 * genes.len() != model.weights.len() {
            return Err(Failure::new(
                DdiStatus::InvalidData,
                format!("model has {} weights but the gene list has {} genes", model.weights.len(), genes.len()),
            ));
        }
        write_out(out, Box::into_raw(Box::new(DdiModel { model, genes })), "out")
    })
}

/// Interaction probability and label for the directed pair (drug1, drug2).
///
/// # Safety
/// Handles must be live; strings NUL-terminated; outputs valid pointers.
#[no_mangle]
pub unsafe extern "C" fn ddi_model_predict(
    model: *const DdiModel,
    catalog: *const DdiCatalog,
    drug1: *const c_char,
    drug2: *const c_char,
    out_probability: *mut f64,
    out_label: *mut DdiLabel,
) -> DdiStatus {
    guard(|| {
        let model = handle(model, "model")?;
        let catalog = handle(catalog, "catalog")?;
        let pair = DirectedPair {
            drug1: text(drug1, "drug1")?.to_string(),
            drug2: text(drug2, "drug2")?.to_string(),
            label: None,
            source: "ffi".into(),
        };
        if out_probability.is_null() || out_label.is_null() {
            return Err(Failure::new(DdiStatus::NullPointer, "output pointer is null"));
        }
        let feature = featurize_pair(&pair, &catalog.catalog, &model.genes).map_err(baseline_failure)?;
        let (p, label) = predict(&model.model, &feature.vector).map_err(baseline_failure)?;
        out_probability.write(p);
        out_label.write(ParsedLabel::from(label).into());
        Ok(())
    })
}

/// # Safety
/// `model` must be NULL or a handle from [`ddi_model_load`] not yet freed.
#[no_mangle]
pub unsafe extern "C" fn ddi_model_free(model: *mut DdiModel) {
    if !model.is_null() {
        drop(Box::from_raw(model));
    }
}
