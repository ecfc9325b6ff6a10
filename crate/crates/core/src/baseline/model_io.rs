//! Plain-text model files.
//!
//! ```text
//! ddibench-logreg 1
//! genes 3921
//! dim 7842
//! c 1
//! bias -0.25
//! iterations 312
//! converged true
//! objective 1234.5
//! nnz 2
//! 17 0.5
//! 4001 -1.25
//! ```
//!
//! Floats use Rust's shortest round-trip formatting, so a reload gives
//! bit-identical weights.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use super::logreg::LogRegModel;
use super::BaselineError;

const MAGIC: &str = "ddibench-logreg";
const VERSION: u32 = 1;

pub fn write_model<W: Write>(mut w: W, model: &LogRegModel) -> std::io::Result<()> {
    let nnz = model.weights.iter().filter(|v| **v != 0.0).count();
    writeln!(w, "{MAGIC} {VERSION}")?;
    writeln!(w, "genes {}", model.weights.len() / 2)?;
    writeln!(w, "dim {}", model.weights.len())?;
    writeln!(w, "c {:?}", model.c)?;
    writeln!(w, "bias {:?}", model.bias)?;
    writeln!(w, "iterations {}", model.iterations)?;
    writeln!(w, "converged {}", model.converged)?;
    writeln!(w, "objective {:?}", model.final_objective)?;
    writeln!(w, "nnz {nnz}")?;
    for (i, v) in model.weights.iter().enumerate() {
        if *v != 0.0 {
            writeln!(w, "{i} {v:?}")?;
        }
    }
    w.flush()
}

pub fn save_model(path: &Path, model: &LogRegModel) -> Result<(), BaselineError> {
    let io = |source| BaselineError::Io { path: path.to_path_buf(), source };
    let file = File::create(path).map_err(io)?;
    write_model(BufWriter::new(file), model).map_err(io)
}

pub fn load_model(path: &Path) -> Result<LogRegModel, BaselineError> {
    let file = File::open(path).map_err(|source| BaselineError::Io { path: path.to_path_buf(), source })?;
    read_model(BufReader::new(file)).map_err(|e| match e {
        BaselineError::Io { source, .. } => BaselineError::Io { path: path.to_path_buf(), source },
        other => other,
    })
}

struct Lines<R> {
    inner: std::io::Lines<R>,
    line: usize,
}

impl<R: BufRead> Lines<R> {
    fn err(&self, message: impl Into<String>) -> BaselineError {
        BaselineError::ModelFormat { line: self.line, message: message.into() }
    }

    fn next(&mut self) -> Result<Option<String>, BaselineError> {
        match self.inner.next() {
            None => Ok(None),
            Some(Ok(l)) => {
                self.line += 1;
                Ok(Some(l))
            }
            Some(Err(source)) => Err(BaselineError::Io { path: Default::default(), source }),
        }
    }

    fn field<T: std::str::FromStr>(&mut self, key: &str) -> Result<T, BaselineError> {
        let line = self.next()?.ok_or_else(|| self.err(format!("missing {key:?}")))?;
        let value = line
            .strip_prefix(key)
            .and_then(|r| r.strip_prefix(' '))
            .ok_or_else(|| self.err(format!("expected {key:?}")))?;
        value.parse().map_err(|_| self.err(format!("bad value for {key:?}: {value:?}")))
    }
}

pub fn read_model<R: BufRead>(reader: R) -> Result<LogRegModel, BaselineError> {
    let mut lines = Lines { inner: reader.lines(), line: 0 };
    let header = lines.next()?.unwrap_or_default();
    let version = header
        .strip_prefix(MAGIC)
        .and_then(|r| r.strip_prefix(' '))
        .ok_or_else(|| lines.err("not a ddibench model file"))?;
    if version.parse::<u32>().ok() != Some(VERSION) {
        return Err(lines.err(format!("unsupported version {version:?}")));
    }
    let genes: usize = lines.field("genes")?;
    let dim: usize = lines.field("dim")?;
    if dim != 2 * genes {
        return Err(lines.err(format!("dim {dim} is not twice the gene count {genes}")));
    }
    let c: f64 = lines.field("c")?;
    if !(c > 0.0 && c.is_finite()) {
        return Err(lines.err(format!("C must be positive and finite, got {c}")));
    }
    let bias: f64 = lines.field("bias")?;
    let iterations: usize = lines.field("iterations")?;
    let converged: bool = lines.field("converged")?;
    let final_objective: f64 = lines.field("objective")?;
    let nnz: usize = lines.field("nnz")?;

    let mut weights = vec![0.0; dim];
    let mut last: Option<usize> = None;
    for _ in 0..nnz {
        let line = lines.next()?.ok_or_else(|| lines.err("fewer weights than nnz"))?;
        let (i, v) = line.split_once(' ').ok_or_else(|| lines.err("expected \"index weight\""))?;
        let i: usize = i.parse().map_err(|_| lines.err(format!("bad index {i:?}")))?;
        let v: f64 = v.parse().map_err(|_| lines.err(format!("bad weight {v:?}")))?;
        if i >= dim || last.is_some_and(|l| i <= l) {
            return Err(lines.err(format!("index {i} out of order or range")));
        }
        if !v.is_finite() {
            return Err(lines.err("non-finite weight"));
        }
        weights[i] = v;
        last = Some(i);
    }
    if !bias.is_finite() {
        return Err(lines.err("non-finite bias"));
    }
    while let Some(extra) = lines.next()? {
        if !extra.trim().is_empty() {
            return Err(lines.err("trailing content after weights"));
        }
    }
    Ok(LogRegModel { weights, bias, c, iterations, final_objective, converged })
}
