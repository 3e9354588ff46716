use std::fmt::Write as _;
use std::path::Path;

use bigrad::data::Split;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::{BenchError, Result};

pub const CSV_HEADER: &str = "epoch,split,loss,accuracy,wall_ms,steps";

/// One evaluation of one split after one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub epoch: usize,
    pub split: Split,
    pub loss: f64,
    /// Absent for experiments without labels (the test surfaces).
    pub accuracy: Option<f64>,
    pub wall_ms: f64,
    /// Optimizer steps taken since the start of the run.
    pub steps: u64,
}

impl MetricRow {
    /// Equality on every column except `wall_ms`.
    pub fn same_outcome(&self, other: &MetricRow) -> bool {
        self.epoch == other.epoch
            && self.split == other.split
            && self.loss.to_bits() == other.loss.to_bits()
            && self.accuracy.map(f64::to_bits) == other.accuracy.map(f64::to_bits)
            && self.steps == other.steps
    }
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct MetricsTable {
    rows: Vec<MetricRow>,
}

impl MetricsTable {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, row: MetricRow) {
        self.rows.push(row);
    }

    pub fn rows(&self) -> &[MetricRow] {
        &self.rows
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    /// Number of completed epochs.
    pub fn epochs(&self) -> usize {
        self.rows.last().map_or(0, |r| r.epoch)
    }

    pub fn split_rows(&self, split: Split) -> impl Iterator<Item = &MetricRow> {
        self.rows.iter().filter(move |r| r.split == split)
    }

    pub fn last(&self, split: Split) -> Option<&MetricRow> {
        self.split_rows(split).last()
    }

    /// First epoch whose accuracy on `split` reaches `threshold`.
    pub fn epochs_to_accuracy(&self, split: Split, threshold: f64) -> Option<usize> {
        self.split_rows(split)
            .find(|r| r.accuracy.is_some_and(|a| a >= threshold))
            .map(|r| r.epoch)
    }

    /// Tables agree on every column except `wall_ms`.
    pub fn same_outcome(&self, other: &MetricsTable) -> bool {
        self.rows.len() == other.rows.len()
            && self.rows.iter().zip(&other.rows).all(|(a, b)| a.same_outcome(b))
    }

    /// Checks one train row then one validation row per epoch, with epochs
    /// contiguous from 1 and finite values.
    pub fn validate(&self) -> Result<()> {
        if !self.rows.len().is_multiple_of(2) {
            return Err(BenchError::Config(format!(
                "metrics table has {} rows; expected a train and a validation row per epoch",
                self.rows.len()
            )));
        }
        for (i, pair) in self.rows.chunks(2).enumerate() {
            let epoch = i + 1;
            let ok = pair[0].split == Split::Train
                && pair[1].split == Split::Validation
                && pair.iter().all(|r| r.epoch == epoch)
                && pair
                    .iter()
                    .all(|r| r.loss.is_finite() && r.accuracy.is_none_or(f64::is_finite));
            if !ok {
                return Err(BenchError::Config(format!(
                    "metrics rows for epoch {epoch} are malformed"
                )));
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum MetricsFormat {
    Csv,
    Json,
}

impl MetricsFormat {
    /// Guesses the format from a file extension, defaulting to CSV.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(e) if e.eq_ignore_ascii_case("json") => MetricsFormat::Json,
            _ => MetricsFormat::Csv,
        }
    }
}

/// `%g`-style rendering with `digits` significant digits: fixed notation for
/// decimal exponents in `[-5, digits)`, scientific otherwise, trailing zeros
/// removed.
pub fn format_sig(v: f64, digits: usize) -> String {
    assert!(digits >= 1);
    if v == 0.0 {
        return "0".into();
    }
    if !v.is_finite() {
        return format!("{v}");
    }
    let sci = format!("{:.*e}", digits - 1, v);
    let (mant, exp) = sci.split_once('e').expect("scientific notation");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        format!("{}e{exp}", trim_zeros(mant))
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{v:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

fn sig9(v: f64) -> String {
    format_sig(v, 9)
}

pub fn render_csv(table: &MetricsTable) -> String {
    let mut out = String::new();
    out.push_str(CSV_HEADER);
    out.push('\n');
    for r in table.rows() {
        let acc = r.accuracy.map(sig9).unwrap_or_default();
        writeln!(
            out,
            "{},{},{},{},{},{}",
            r.epoch,
            r.split.name(),
            sig9(r.loss),
            acc,
            sig9(r.wall_ms),
            r.steps
        )
        .expect("writing to a String");
    }
    out
}

#[derive(Serialize)]
struct JsonRow<'a> {
    epoch: usize,
    split: &'a str,
    loss: f64,
    accuracy: Option<f64>,
    wall_ms: f64,
    steps: u64,
}

/// Same records as the CSV, as an array of objects; floats are rounded to the
/// same 9 significant digits.
pub fn render_json(table: &MetricsTable) -> String {
    let round = |v: f64| sig9(v).parse::<f64>().expect("formatted float parses");
    let rows: Vec<JsonRow> = table
        .rows()
        .iter()
        .map(|r| JsonRow {
            epoch: r.epoch,
            split: r.split.name(),
            loss: round(r.loss),
            accuracy: r.accuracy.map(round),
            wall_ms: round(r.wall_ms),
            steps: r.steps,
        })
        .collect();
    let mut s = serde_json::to_string_pretty(&rows).expect("metrics serialize");
    s.push('\n');
    s
}

/// Parses a metrics CSV as written by [`render_csv`].
pub fn parse_csv(text: &str) -> Result<MetricsTable> {
    let mut lines = text.lines().enumerate();
    match lines.next() {
        Some((_, h)) if h.trim_end() == CSV_HEADER => {}
        _ => {
            return Err(BenchError::Metrics {
                line: 1,
                msg: format!("expected header `{CSV_HEADER}`"),
            })
        }
    }
    let mut table = MetricsTable::new();
    for (i, line) in lines {
        let line_no = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let err = |msg: String| BenchError::Metrics { line: line_no, msg };
        let cols: Vec<&str> = line.trim_end().split(',').collect();
        let [epoch, split, loss, acc, wall, steps] = cols[..] else {
            return Err(err(format!("expected 6 columns, found {}", cols.len())));
        };
        let float = |name: &str, s: &str| {
            s.parse::<f64>()
                .map_err(|e| err(format!("bad {name} `{s}`: {e}")))
        };
        let split = match split {
            "train" => Split::Train,
            "validation" => Split::Validation,
            other => return Err(err(format!("unknown split `{other}`"))),
        };
        table.push(MetricRow {
            epoch: epoch
                .parse()
                .map_err(|e| err(format!("bad epoch `{epoch}`: {e}")))?,
            split,
            loss: float("loss", loss)?,
            accuracy: if acc.is_empty() {
                None
            } else {
                Some(float("accuracy", acc)?)
            },
            wall_ms: float("wall_ms", wall)?,
            steps: steps
                .parse()
                .map_err(|e| err(format!("bad steps `{steps}`: {e}")))?,
        });
    }
    Ok(table)
}

/// Writes `table` to `path`, creating parent directories as needed.
pub fn write_metrics(table: &MetricsTable, path: &Path, format: MetricsFormat) -> Result<()> {
    let text = match format {
        MetricsFormat::Csv => render_csv(table),
        MetricsFormat::Json => render_json(table),
    };
    let io = |source| BenchError::Io {
        path: path.to_path_buf(),
        source,
    };
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir).map_err(io)?;
    }
    std::fs::write(path, text).map_err(io)
}
