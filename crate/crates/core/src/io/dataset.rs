//! Dataset readers and the generic CSV writer.
//!
//! The generic CSV layout has one curve per row: the sampled values, then
//! the label. An optional first line ending in a `label` cell carries the
//! abscissae. Parsing only accepts `.` as the decimal separator.
//!
//! Two adapters read the public files of the benchmark datasets:
//!
//! - `tecator`: the statlib text file. Leading description lines are
//!   skipped; the rest is a stream of 125 numbers per sample: 100
//!   absorbances, 22 principal components, then moisture, fat and protein
//!   contents. Samples with more than `fat_threshold` percent fat are `+1`.
//!   The default grid is 100 equispaced wavelengths in 850..1050 nm.
//! - `phoneme`: the CSV with header `row.names, x.1 .. x.256, g, speaker`.
//!   Rows whose class `g` is in neither label list are dropped, since the
//!   file holds five phoneme classes. `subset` keeps only speakers whose id
//!   starts with `train.` or `test.`.

use std::fs::File;
use std::io::{BufRead, BufReader, Read, Write};
use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::func::{Label, LabeledDataset, SamplingGrid};

/// Raw class names mapped to the two labels.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub positive: Vec<String>,
    pub negative: Vec<String>,
}

impl LabelMapping {
    pub fn new(positive: &[&str], negative: &[&str]) -> Self {
        LabelMapping {
            positive: positive.iter().map(|s| s.to_string()).collect(),
            negative: negative.iter().map(|s| s.to_string()).collect(),
        }
    }

    pub fn map(&self, raw: &str) -> Option<Label> {
        if self.positive.iter().any(|p| p == raw) {
            Some(Label::Positive)
        } else if self.negative.iter().any(|n| n == raw) {
            Some(Label::Negative)
        } else {
            None
        }
    }
}

/// Numeric `1` / `-1` labels.
fn numeric_label(raw: &str) -> Option<Label> {
    match raw.parse::<f64>().ok()? {
        1.0 => Some(Label::Positive),
        -1.0 => Some(Label::Negative),
        _ => None,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum GridDecl {
    /// Equispaced points over `[lo, hi]`.
    Interval([f64; 2]),
    Abscissae(Vec<f64>),
}

impl GridDecl {
    fn build(&self, len: usize) -> Result<SamplingGrid> {
        match self {
            GridDecl::Interval([lo, hi]) => SamplingGrid::uniform(*lo, *hi, len),
            GridDecl::Abscissae(t) => {
                if t.len() != len {
                    return Err(Error::GridMismatch(format!(
                        "declared grid has {} points, the file has {len} value columns",
                        t.len()
                    )));
                }
                SamplingGrid::new(t.clone())
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "format", rename_all = "snake_case")]
pub enum DatasetFormat {
    /// Generic rows; labels are `1` / `-1` unless a mapping is given.
    CsvRows {
        #[serde(default)]
        labels: Option<LabelMapping>,
    },
    Tecator {
        #[serde(default = "default_fat_threshold")]
        fat_threshold: f64,
    },
    Phoneme {
        #[serde(default = "default_phoneme_labels")]
        labels: LabelMapping,
        #[serde(default)]
        subset: Option<String>,
    },
}

fn default_fat_threshold() -> f64 {
    20.0
}

fn default_phoneme_labels() -> LabelMapping {
    LabelMapping::new(&["aa"], &["ao"])
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DatasetDescriptor {
    pub path: PathBuf,
    #[serde(flatten)]
    pub format: DatasetFormat,
    #[serde(default)]
    pub grid: Option<GridDecl>,
}

impl DatasetDescriptor {
    pub fn csv(path: impl Into<PathBuf>) -> Self {
        DatasetDescriptor {
            path: path.into(),
            format: DatasetFormat::CsvRows { labels: None },
            grid: None,
        }
    }

    /// Resolves a relative path against `base`.
    pub fn relative_to(mut self, base: &Path) -> Self {
        if self.path.is_relative() {
            self.path = base.join(&self.path);
        }
        self
    }
}

pub fn load_dataset(desc: &DatasetDescriptor) -> Result<LabeledDataset> {
    let file = File::open(&desc.path)?;
    match &desc.format {
        DatasetFormat::CsvRows { labels } => {
            let table = read_csv_table(file, true)?;
            table.into_dataset(labels.as_ref(), desc.grid.as_ref())
        }
        DatasetFormat::Tecator { fat_threshold } => read_tecator(file, *fat_threshold, desc.grid.as_ref()),
        DatasetFormat::Phoneme { labels, subset } => {
            read_phoneme(file, labels, subset.as_deref(), desc.grid.as_ref())
        }
    }
}

/// Parsed generic CSV before a grid is attached.
#[derive(Debug, Clone, PartialEq)]
pub struct CsvTable {
    pub abscissae: Option<Vec<f64>>,
    pub rows: Vec<Vec<f64>>,
    /// Raw label cells, empty when the file has no label column.
    pub labels: Vec<String>,
    /// 1-based line number of each row.
    pub lines: Vec<usize>,
}

fn parse_number(cell: &str, line: usize, column: usize) -> Result<f64> {
    let v: f64 = cell.parse().map_err(|_| Error::Parse {
        line,
        message: format!("non-numeric cell '{cell}' in column {column}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value '{cell}' in column {column}"),
        });
    }
    Ok(v)
}

fn csv_reader<R: Read>(reader: R, headers: bool) -> csv::Reader<R> {
    csv::ReaderBuilder::new()
        .has_headers(headers)
        .flexible(true)
        .trim(csv::Trim::All)
        .comment(Some(b'#'))
        .from_reader(reader)
}

fn csv_error(e: csv::Error) -> Error {
    let line = e.position().map_or(0, |p| p.line() as usize);
    Error::Parse {
        line,
        message: e.to_string(),
    }
}

/// Reads generic rows. With `labelled`, the last cell of each row is the
/// label.
pub fn read_csv_table<R: Read>(reader: R, labelled: bool) -> Result<CsvTable> {
    let mut table = CsvTable {
        abscissae: None,
        rows: Vec::new(),
        labels: Vec::new(),
        lines: Vec::new(),
    };
    let mut width: Option<usize> = None;
    for (k, record) in csv_reader(reader, false).into_records().enumerate() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(k + 1, |p| p.line() as usize);
        if record.iter().all(str::is_empty) {
            continue;
        }
        let n = record.len();
        if k == 0 && record.get(n - 1).is_some_and(|c| c.eq_ignore_ascii_case("label")) {
            let cells: Vec<&str> = record.iter().take(n - 1).collect();
            let parsed: Option<Vec<f64>> = cells.iter().map(|c| c.parse().ok()).collect();
            table.abscissae = parsed;
            // unlabelled rows omit the cell under `label`
            width = Some(if labelled { n } else { n - 1 });
            continue;
        }
        match width {
            Some(w) if w != n => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} columns, found {n}"),
                })
            }
            _ => width = Some(n),
        }
        let value_cells = if labelled { n - 1 } else { n };
        if value_cells == 0 {
            return Err(Error::Parse {
                line,
                message: "row has no value columns".into(),
            });
        }
        let values = (0..value_cells)
            .map(|j| parse_number(&record[j], line, j + 1))
            .collect::<Result<Vec<_>>>()?;
        if labelled {
            table.labels.push(record[n - 1].to_string());
        }
        table.rows.push(values);
        table.lines.push(line);
    }
    if let (Some(t), Some(r)) = (&table.abscissae, table.rows.first()) {
        if t.len() != r.len() {
            return Err(Error::Parse {
                line: 1,
                message: format!("header has {} abscissae, rows have {} values", t.len(), r.len()),
            });
        }
    }
    Ok(table)
}

impl CsvTable {
    /// Grid from the header, else from `decl`, else equispaced on `[0, 1]`.
    pub fn grid(&self, decl: Option<&GridDecl>) -> Result<SamplingGrid> {
        let m = self
            .rows
            .first()
            .map(|r| r.len())
            .or(self.abscissae.as_ref().map(Vec::len))
            .ok_or_else(|| Error::Parse {
                line: 1,
                message: "file holds no curves".into(),
            })?;
        match (&self.abscissae, decl) {
            (Some(t), _) => SamplingGrid::new(t.clone()),
            (None, Some(d)) => d.build(m),
            (None, None) => SamplingGrid::uniform(0.0, 1.0, m),
        }
    }

    pub fn mapped_labels(&self, mapping: Option<&LabelMapping>) -> Result<Vec<Label>> {
        self.labels
            .iter()
            .zip(&self.lines)
            .map(|(raw, &line)| {
                let label = match mapping {
                    Some(m) => m.map(raw),
                    None => numeric_label(raw),
                };
                label.ok_or_else(|| Error::Parse {
                    line,
                    message: format!("label '{raw}' maps to neither class"),
                })
            })
            .collect()
    }

    pub fn into_dataset(self, mapping: Option<&LabelMapping>, decl: Option<&GridDecl>) -> Result<LabeledDataset> {
        let grid = Arc::new(self.grid(decl)?);
        let labels = self.mapped_labels(mapping)?;
        LabeledDataset::from_rows(grid, self.rows, labels)
    }
}

/// Writes `data` in the generic layout with an abscissae header. Values use
/// the shortest representation that parses back to the same `f64`.
pub fn write_csv<W: Write>(data: &LabeledDataset, mut out: W) -> Result<()> {
    let header: Vec<String> = data.grid().abscissae().iter().map(f64::to_string).collect();
    writeln!(out, "{},label", header.join(","))?;
    for (f, l) in data.functions().iter().zip(data.labels()) {
        let row: Vec<String> = f.values().iter().map(f64::to_string).collect();
        writeln!(out, "{},{l}", row.join(","))?;
    }
    Ok(())
}

pub const TECATOR_CHANNELS: usize = 100;
pub const TECATOR_RECORD: usize = 125;
const TECATOR_FAT: usize = 123;

pub fn read_tecator<R: Read>(reader: R, fat_threshold: f64, decl: Option<&GridDecl>) -> Result<LabeledDataset> {
    let mut numbers: Vec<(f64, usize)> = Vec::new();
    let mut in_data = false;
    for (k, line) in BufReader::new(reader).lines().enumerate() {
        let line = line?;
        let lineno = k + 1;
        let tokens: Vec<&str> = line.split_whitespace().collect();
        if tokens.is_empty() {
            continue;
        }
        let parsed: Option<Vec<f64>> = tokens.iter().map(|t| t.parse().ok()).collect();
        match parsed {
            Some(vals) => {
                in_data = true;
                for (j, v) in vals.into_iter().enumerate() {
                    if !v.is_finite() {
                        return Err(Error::Parse {
                            line: lineno,
                            message: format!("non-finite value '{}'", tokens[j]),
                        });
                    }
                    numbers.push((v, lineno));
                }
            }
            None if !in_data => continue,
            None => {
                let bad = tokens.iter().find(|t| t.parse::<f64>().is_err()).unwrap_or(&"");
                return Err(Error::Parse {
                    line: lineno,
                    message: format!("non-numeric token '{bad}' in the data section"),
                });
            }
        }
    }
    if numbers.is_empty() {
        return Err(Error::Parse {
            line: 0,
            message: "no numeric data found in tecator file".into(),
        });
    }
    if !numbers.len().is_multiple_of(TECATOR_RECORD) {
        let (_, line) = numbers[numbers.len() - 1];
        return Err(Error::Parse {
            line,
            message: format!(
                "{} trailing values do not form a full {TECATOR_RECORD}-value sample",
                numbers.len() % TECATOR_RECORD
            ),
        });
    }
    let grid = match decl {
        Some(d) => d.build(TECATOR_CHANNELS)?,
        None => SamplingGrid::uniform(850.0, 1050.0, TECATOR_CHANNELS)?,
    };
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in numbers.chunks(TECATOR_RECORD) {
        rows.push(record[..TECATOR_CHANNELS].iter().map(|(v, _)| *v).collect());
        labels.push(if record[TECATOR_FAT].0 > fat_threshold {
            Label::Positive
        } else {
            Label::Negative
        });
    }
    LabeledDataset::from_rows(Arc::new(grid), rows, labels)
}

pub fn read_phoneme<R: Read>(
    reader: R,
    mapping: &LabelMapping,
    subset: Option<&str>,
    decl: Option<&GridDecl>,
) -> Result<LabeledDataset> {
    let mut rdr = csv_reader(reader, true);
    let headers = rdr.headers().map_err(csv_error)?.clone();
    let value_cols: Vec<usize> = headers
        .iter()
        .enumerate()
        .filter(|(_, h)| h.starts_with("x."))
        .map(|(i, _)| i)
        .collect();
    let find = |name: &str| {
        headers.iter().position(|h| h == name).ok_or_else(|| Error::Parse {
            line: 1,
            message: format!("phoneme header lacks a '{name}' column"),
        })
    };
    let class_col = find("g")?;
    let speaker_col = if subset.is_some() { Some(find("speaker")?) } else { None };
    if value_cols.is_empty() {
        return Err(Error::Parse {
            line: 1,
            message: "phoneme header has no 'x.*' value columns".into(),
        });
    }
    let mut rows = Vec::new();
    let mut labels = Vec::new();
    for record in rdr.records() {
        let record = record.map_err(csv_error)?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() != headers.len() {
            return Err(Error::Parse {
                line,
                message: format!("expected {} columns, found {}", headers.len(), record.len()),
            });
        }
        if let (Some(prefix), Some(col)) = (subset, speaker_col) {
            if !record[col].starts_with(&format!("{prefix}.")) {
                continue;
            }
        }
        let Some(label) = mapping.map(&record[class_col]) else {
            continue;
        };
        let values = value_cols
            .iter()
            .map(|&j| parse_number(&record[j], line, j + 1))
            .collect::<Result<Vec<_>>>()?;
        rows.push(values);
        labels.push(label);
    }
    let m = value_cols.len();
    let grid = match decl {
        Some(d) => d.build(m)?,
        None => SamplingGrid::uniform(1.0, m as f64, m)?,
    };
    LabeledDataset::from_rows(Arc::new(grid), rows, labels)
}
