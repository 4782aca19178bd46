//! Datasets, binary labels and CSV input/output.

use std::collections::BTreeSet;
use std::fmt;
use std::fs::File;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Scalar;

/// A binary class label, serialized as `-1` / `1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(into = "i8", try_from = "i8")]
pub enum Label {
    Negative,
    Positive,
}

impl Label {
    pub fn from_sign<F: Scalar>(v: F) -> Label {
        if v >= F::zero() {
            Label::Positive
        } else {
            Label::Negative
        }
    }

    pub fn sign<F: Scalar>(self) -> F {
        match self {
            Label::Positive => F::one(),
            Label::Negative => -F::one(),
        }
    }

    /// `1` for positive, `0` for negative.
    pub fn indicator<F: Scalar>(self) -> F {
        match self {
            Label::Positive => F::one(),
            Label::Negative => F::zero(),
        }
    }

    pub fn flip(self) -> Label {
        match self {
            Label::Positive => Label::Negative,
            Label::Negative => Label::Positive,
        }
    }

    pub fn is_positive(self) -> bool {
        self == Label::Positive
    }
}

impl From<Label> for i8 {
    fn from(l: Label) -> i8 {
        match l {
            Label::Positive => 1,
            Label::Negative => -1,
        }
    }
}

impl TryFrom<i8> for Label {
    type Error = String;
    fn try_from(v: i8) -> std::result::Result<Self, String> {
        match v {
            1 => Ok(Label::Positive),
            -1 => Ok(Label::Negative),
            other => Err(format!("label must be -1 or 1, got {other}")),
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:+}", i8::from(*self))
    }
}

/// Which original label text became -1 and which became +1.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabelMapping {
    pub negative: String,
    pub positive: String,
}

/// Feature vectors with binary labels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(bound = "")]
pub struct Dataset<F: Scalar> {
    pub points: Vec<Vec<F>>,
    pub labels: Vec<Label>,
    pub feature_names: Vec<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label_mapping: Option<LabelMapping>,
}

impl<F: Scalar> Dataset<F> {
    pub fn new(points: Vec<Vec<F>>, labels: Vec<Label>, feature_names: Vec<String>) -> Result<Self> {
        let d = feature_names.len();
        if d == 0 {
            return Err(Error::InvalidArgument("dataset needs at least one feature".into()));
        }
        if points.len() != labels.len() {
            return Err(Error::Dimension {
                expected: points.len(),
                found: labels.len(),
            });
        }
        if let Some(bad) = points.iter().find(|p| p.len() != d) {
            return Err(Error::Dimension {
                expected: d,
                found: bad.len(),
            });
        }
        Ok(Dataset {
            points,
            labels,
            feature_names,
            label_mapping: None,
        })
    }

    /// Feature names `x1..xd`.
    pub fn default_names(d: usize) -> Vec<String> {
        (1..=d).map(|j| format!("x{j}")).collect()
    }

    pub fn n(&self) -> usize {
        self.points.len()
    }

    pub fn dim(&self) -> usize {
        self.feature_names.len()
    }

    pub fn positive_share(&self) -> F {
        if self.labels.is_empty() {
            return F::zero();
        }
        let pos = self.labels.iter().filter(|l| l.is_positive()).count();
        F::from_usize_lossy(pos) / F::from_usize_lossy(self.labels.len())
    }

    pub fn has_both_classes(&self) -> bool {
        self.labels.iter().any(|l| l.is_positive()) && self.labels.iter().any(|l| !l.is_positive())
    }

    pub fn column(&self, j: usize) -> Vec<F> {
        self.points.iter().map(|p| p[j]).collect()
    }

    /// Rows `indices`, in that order.
    pub fn select(&self, indices: &[usize]) -> Dataset<F> {
        Dataset {
            points: indices.iter().map(|&i| self.points[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            label_mapping: self.label_mapping.clone(),
        }
    }

    /// First `n` rows and the rest.
    pub fn split_at(&self, n: usize) -> (Dataset<F>, Dataset<F>) {
        let n = n.min(self.n());
        let head: Vec<usize> = (0..n).collect();
        let tail: Vec<usize> = (n..self.n()).collect();
        (self.select(&head), self.select(&tail))
    }
}

/// Binary attribute annotations aligned with dataset rows, one column per
/// attribute.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Annotations {
    pub names: Vec<String>,
    pub columns: Vec<Vec<Label>>,
}

impl Annotations {
    pub fn n_rows(&self) -> usize {
        self.columns.first().map_or(0, Vec::len)
    }

    pub fn select(&self, indices: &[usize]) -> Annotations {
        Annotations {
            names: self.names.clone(),
            columns: self
                .columns
                .iter()
                .map(|c| indices.iter().map(|&i| c[i]).collect())
                .collect(),
        }
    }
}

/// How to interpret the columns of a dataset CSV.
#[derive(Clone, Debug)]
pub struct CsvOptions {
    pub label_column: String,
    /// Columns whose header starts with this prefix are read as `{-1,+1}`
    /// attribute annotations instead of features.
    pub attribute_prefix: Option<String>,
}

impl CsvOptions {
    pub fn new(label_column: impl Into<String>) -> Self {
        CsvOptions {
            label_column: label_column.into(),
            attribute_prefix: None,
        }
    }

    pub fn with_attribute_prefix(mut self, prefix: impl Into<String>) -> Self {
        self.attribute_prefix = Some(prefix.into());
        self
    }
}

/// Loads a CSV whose columns are numeric features plus one label column.
pub fn load_dataset<F: Scalar>(path: impl AsRef<Path>, label_column: &str) -> Result<Dataset<F>> {
    load_dataset_with(path, &CsvOptions::new(label_column)).map(|(d, _)| d)
}

/// Loads features, labels and (optionally) prefixed attribute columns.
///
/// The two distinct label values are mapped by byte-wise string order: the
/// smaller becomes -1 and the larger +1.
pub fn load_dataset_with<F: Scalar>(
    path: impl AsRef<Path>,
    opts: &CsvOptions,
) -> Result<(Dataset<F>, Option<Annotations>)> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let label_idx = headers
        .iter()
        .position(|h| *h == opts.label_column)
        .ok_or_else(|| Error::MissingColumn(opts.label_column.clone()))?;
    let is_attr = |h: &str| opts.attribute_prefix.as_deref().is_some_and(|p| h.starts_with(p));
    let feature_idx: Vec<usize> = (0..headers.len())
        .filter(|&i| i != label_idx && !is_attr(&headers[i]))
        .collect();
    let attr_idx: Vec<usize> = (0..headers.len()).filter(|&i| i != label_idx && is_attr(&headers[i])).collect();

    let mut points = Vec::new();
    let mut raw_labels = Vec::new();
    let mut attr_columns: Vec<Vec<Label>> = vec![Vec::new(); attr_idx.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let row_no = row + 1;
        let mut point = Vec::with_capacity(feature_idx.len());
        for &i in &feature_idx {
            let cell = record.get(i).unwrap_or("").trim();
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: row_no,
                column: headers[i].clone(),
                value: cell.to_string(),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: row_no,
                    column: headers[i].clone(),
                    value: cell.to_string(),
                });
            }
            point.push(F::lit(v));
        }
        for (slot, &i) in attr_idx.iter().enumerate() {
            let cell = record.get(i).unwrap_or("").trim();
            let label = parse_signed_label(cell).ok_or_else(|| Error::Parse {
                row: row_no,
                column: headers[i].clone(),
                value: cell.to_string(),
            })?;
            attr_columns[slot].push(label);
        }
        points.push(point);
        raw_labels.push(record.get(label_idx).unwrap_or("").trim().to_string());
    }

    let distinct: BTreeSet<&str> = raw_labels.iter().map(String::as_str).collect();
    if distinct.len() == 1 {
        return Err(Error::SingleClass(format!(
            "label column '{}' only contains '{}'",
            opts.label_column,
            distinct.iter().next().unwrap()
        )));
    }
    if distinct.len() != 2 {
        return Err(Error::LabelValues(distinct.iter().map(|s| s.to_string()).collect()));
    }
    let mut it = distinct.iter();
    let negative = it.next().unwrap().to_string();
    let positive = it.next().unwrap().to_string();
    let labels = raw_labels
        .iter()
        .map(|s| if *s == negative { Label::Negative } else { Label::Positive })
        .collect();

    let names = feature_idx.iter().map(|&i| headers[i].clone()).collect();
    let mut data = Dataset::new(points, labels, names)?;
    data.label_mapping = Some(LabelMapping { negative, positive });
    let annotations = (!attr_idx.is_empty()).then(|| Annotations {
        names: attr_idx
            .iter()
            .map(|&i| {
                let h = &headers[i];
                h.strip_prefix(opts.attribute_prefix.as_deref().unwrap_or(""))
                    .unwrap_or(h)
                    .to_string()
            })
            .collect(),
        columns: attr_columns,
    });
    Ok((data, annotations))
}

/// Reads a standalone annotation CSV: every column is an attribute in `{-1,+1}`.
pub fn load_annotations(path: impl AsRef<Path>) -> Result<Annotations> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let names: Vec<String> = reader.headers()?.iter().map(|h| h.trim().to_string()).collect();
    let mut columns = vec![Vec::new(); names.len()];
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (j, col) in columns.iter_mut().enumerate() {
            let cell = record.get(j).unwrap_or("").trim();
            col.push(parse_signed_label(cell).ok_or_else(|| Error::Parse {
                row: row + 1,
                column: names[j].clone(),
                value: cell.to_string(),
            })?);
        }
    }
    Ok(Annotations { names, columns })
}

fn parse_signed_label(cell: &str) -> Option<Label> {
    match cell {
        "1" | "+1" | "1.0" => Some(Label::Positive),
        "-1" | "-1.0" => Some(Label::Negative),
        _ => None,
    }
}

/// Writes features, a `label` column (`-1`/`1`) and optional `attr_`-prefixed
/// annotation columns.
pub fn write_csv<F: Scalar>(
    path: impl AsRef<Path>,
    data: &Dataset<F>,
    annotations: Option<&Annotations>,
) -> Result<()> {
    let path = path.as_ref();
    let mut file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = String::new();
    let mut header: Vec<String> = data.feature_names.clone();
    header.push("label".into());
    if let Some(a) = annotations {
        header.extend(a.names.iter().map(|n| format!("attr_{n}")));
    }
    out.push_str(&header.join(","));
    out.push('\n');
    for i in 0..data.n() {
        let mut cells: Vec<String> = data.points[i].iter().map(|v| format!("{v}")).collect();
        cells.push(i8::from(data.labels[i]).to_string());
        if let Some(a) = annotations {
            cells.extend(a.columns.iter().map(|c| i8::from(c[i]).to_string()));
        }
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    file.write_all(out.as_bytes()).map_err(|e| Error::io(path, e))
}
