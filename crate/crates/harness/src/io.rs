//! Dataset and trace file formats.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::Path;

use ncvx_core::data::{DataSource, Provenance};
use ncvx_core::linalg::Matrix;
use ncvx_core::optim::TrainTrace;
use ncvx_core::DataSet;
use serde::{Deserialize, Serialize};

use crate::error::{HarnessError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum Format {
    Libsvm,
    Csv,
}

impl Format {
    pub fn name(&self) -> &'static str {
        match self {
            Self::Libsvm => "libsvm",
            Self::Csv => "csv",
        }
    }
}

/// How raw target values are interpreted.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum LabelMode {
    /// Targets used as read.
    Real,
    /// Exactly two classes, mapped to `{0, 1}` (lower label to 0).
    Binary,
    /// Keep only rows labelled `negative` or `positive`, mapped to 0 and 1.
    TwoClass { negative: f64, positive: f64 },
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct LoadOptions {
    /// CSV target column; the last column when absent.
    #[serde(default)]
    pub target_column: Option<String>,
    /// Defaults to `Binary` for libsvm and `Real` for csv.
    #[serde(default)]
    pub labels: Option<LabelMode>,
    /// libsvm feature count; the largest index seen when absent.
    #[serde(default)]
    pub dim: Option<usize>,
}

pub fn load_dataset(path: &Path, format: Format, opts: &LoadOptions) -> Result<DataSet> {
    let file = File::open(path).map_err(|e| HarnessError::io(path, e))?;
    let (rows, targets) = match format {
        Format::Libsvm => read_libsvm(BufReader::new(file), path, opts.dim)?,
        Format::Csv => read_csv(file, path, opts.target_column.as_deref())?,
    };
    let mode = opts.labels.unwrap_or(match format {
        Format::Libsvm => LabelMode::Binary,
        Format::Csv => LabelMode::Real,
    });
    let (rows, targets) = map_labels(rows, targets, mode)?;
    let features = Matrix::from_rows(&rows)?;
    let meta = Provenance {
        source: DataSource::File { path: path.display().to_string(), format: format.name().to_owned() },
        ..Provenance::default()
    };
    Ok(DataSet::new(features, targets, meta)?)
}

type Rows = (Vec<Vec<f64>>, Vec<f64>);

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> HarnessError {
    HarnessError::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn parse_number(s: &str, path: &Path, line: usize) -> Result<f64> {
    let v: f64 = s.trim().parse().map_err(|_| parse_err(path, line, format!("not a number: {s:?}")))?;
    if !v.is_finite() {
        return Err(parse_err(path, line, format!("non-finite value {s:?}")));
    }
    Ok(v)
}

/// `label idx:val ...` with 1-based indices; missing entries are zero.
pub fn read_libsvm(reader: impl BufRead, path: &Path, dim: Option<usize>) -> Result<Rows> {
    let mut sparse: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut targets = Vec::new();
    let mut max_index = 0usize;
    for (k, line) in reader.lines().enumerate() {
        let lineno = k + 1;
        let line = line.map_err(|e| HarnessError::io(path, e))?;
        let content = line.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let mut tokens = content.split_whitespace();
        let label = parse_number(tokens.next().unwrap_or_default(), path, lineno)?;
        let mut entries = Vec::new();
        for tok in tokens {
            let (idx, val) = tok
                .split_once(':')
                .ok_or_else(|| parse_err(path, lineno, format!("expected index:value, got {tok:?}")))?;
            let idx: usize = idx
                .parse()
                .map_err(|_| parse_err(path, lineno, format!("bad feature index {idx:?}")))?;
            if idx == 0 {
                return Err(parse_err(path, lineno, "feature indices are 1-based"));
            }
            if let Some(p) = dim {
                if idx > p {
                    return Err(parse_err(path, lineno, format!("feature index {idx} exceeds dimension {p}")));
                }
            }
            max_index = max_index.max(idx);
            entries.push((idx - 1, parse_number(val, path, lineno)?));
        }
        sparse.push(entries);
        targets.push(label);
    }
    let p = dim.unwrap_or(max_index);
    if p == 0 {
        return Err(HarnessError::InvalidData(format!("{}: no features found", path.display())));
    }
    let rows = sparse
        .into_iter()
        .map(|entries| {
            let mut x = vec![0.0; p];
            for (j, v) in entries {
                x[j] = v;
            }
            x
        })
        .collect();
    Ok((rows, targets))
}

/// Numeric table with a header row.
pub fn read_csv(reader: impl Read, path: &Path, target: Option<&str>) -> Result<Rows> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(true).trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.len() < 2 {
        return Err(parse_err(path, 1, "need at least one feature column and a target column"));
    }
    let t = match target {
        Some(name) => headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| parse_err(path, 1, format!("no column named {name:?}")))?,
        None => headers.len() - 1,
    };
    let mut rows = Vec::new();
    let mut targets = Vec::new();
    for rec in rdr.records() {
        let rec = rec?;
        let lineno = rec.position().map_or(0, |p| p.line() as usize);
        if rec.len() != headers.len() {
            return Err(parse_err(path, lineno, format!("expected {} fields, got {}", headers.len(), rec.len())));
        }
        let mut x = Vec::with_capacity(headers.len() - 1);
        for (j, field) in rec.iter().enumerate() {
            let v = parse_number(field, path, lineno)?;
            if j == t {
                targets.push(v);
            } else {
                x.push(v);
            }
        }
        rows.push(x);
    }
    Ok((rows, targets))
}

fn map_labels(rows: Vec<Vec<f64>>, targets: Vec<f64>, mode: LabelMode) -> Result<Rows> {
    match mode {
        LabelMode::Real => Ok((rows, targets)),
        LabelMode::Binary => {
            let mut labels: Vec<f64> = targets.clone();
            labels.sort_by(f64::total_cmp);
            labels.dedup();
            if labels.len() > 2 {
                return Err(HarnessError::InvalidData(format!(
                    "{} distinct labels; binary classification needs two (configure a two-class filter)",
                    labels.len()
                )));
            }
            let (lo, hi) = (labels[0], *labels.last().expect("non-empty"));
            let mapped = if labels.len() == 1 {
                // A single class keeps its own meaning when it is already 0 or 1.
                match lo {
                    v if v == 0.0 || v == -1.0 => vec![0.0; targets.len()],
                    _ => vec![1.0; targets.len()],
                }
            } else {
                targets.iter().map(|&y| if y == hi { 1.0 } else { 0.0 }).collect()
            };
            Ok((rows, mapped))
        }
        LabelMode::TwoClass { negative, positive } => {
            let mut out_rows = Vec::new();
            let mut out_y = Vec::new();
            for (x, y) in rows.into_iter().zip(targets) {
                if y == negative {
                    out_rows.push(x);
                    out_y.push(0.0);
                } else if y == positive {
                    out_rows.push(x);
                    out_y.push(1.0);
                }
            }
            if out_rows.is_empty() {
                return Err(HarnessError::InvalidData("no rows carry either selected class".into()));
            }
            Ok((out_rows, out_y))
        }
    }
}

/// Writes features as `x1..xp` followed by `y`, in shortest round-trip form.
pub fn write_dataset_csv(data: &DataSet, writer: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    let mut header: Vec<String> = (1..=data.dim()).map(|j| format!("x{j}")).collect();
    header.push("y".into());
    w.write_record(&header)?;
    let mut buf = Vec::with_capacity(data.dim() + 1);
    for s in data.samples() {
        buf.clear();
        buf.extend(s.x.iter().map(|v| v.to_string()));
        buf.push(s.y.to_string());
        w.write_record(&buf)?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_dataset_csv(data: &DataSet, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_dataset_csv(data, std::io::BufWriter::new(file))
}

pub const TRACE_HEADER: [&str; 5] = ["pass", "objective", "objective_gap", "grad_norm", "wall_ms"];

fn opt(v: Option<f64>) -> String {
    v.map(|v| v.to_string()).unwrap_or_default()
}

pub fn write_trace_csv(trace: &TrainTrace, writer: impl Write) -> Result<()> {
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(writer);
    w.write_record(TRACE_HEADER)?;
    for r in &trace.records {
        w.write_record([
            r.pass.to_string(),
            r.objective.to_string(),
            opt(r.objective_gap),
            r.grad_norm.to_string(),
            opt(r.wall_ms),
        ])?;
    }
    w.flush().map_err(|e| HarnessError::io("<csv writer>", e))?;
    Ok(())
}

pub fn save_trace_csv(trace: &TrainTrace, path: &Path) -> Result<()> {
    let file = File::create(path).map_err(|e| HarnessError::io(path, e))?;
    write_trace_csv(trace, std::io::BufWriter::new(file))
}

pub fn write_json<T: Serialize>(value: &T, path: &Path) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    std::fs::write(path, text).map_err(|e| HarnessError::io(path, e))
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| HarnessError::io(path, e))?;
    Ok(serde_json::from_str(&text)?)
}
