//! Point sets, labelings and CSV ingestion.
//!
//! CSV layout: comma separated, an optional single header row, one point per
//! row. An optional integer column holds ground-truth labels; negative labels
//! denote noise.

use std::collections::BTreeMap;
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use crate::error::{Error, Result};

/// Label assigned to points that belong to no cluster.
pub const NOISE: i64 = -1;

/// Immutable `n x d` matrix of finite coordinates, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointSet {
    coords: Vec<f64>,
    n: usize,
    dim: usize,
    ground_truth: Option<Vec<i64>>,
}

impl PointSet {
    pub fn new(coords: Vec<f64>, dim: usize, ground_truth: Option<Vec<i64>>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Validation("dimension must be at least 1".into()));
        }
        if coords.is_empty() {
            return Err(Error::EmptyInput);
        }
        if !coords.len().is_multiple_of(dim) {
            return Err(Error::Validation(format!(
                "{} coordinates do not form rows of width {dim}",
                coords.len()
            )));
        }
        if let Some(pos) = coords.iter().position(|v| !v.is_finite()) {
            return Err(Error::Validation(format!(
                "non-finite coordinate in row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        let n = coords.len() / dim;
        if let Some(gt) = &ground_truth {
            if gt.len() != n {
                return Err(Error::Validation(format!(
                    "ground truth has {} entries for {n} points",
                    gt.len()
                )));
            }
        }
        Ok(Self {
            coords,
            n,
            dim,
            ground_truth,
        })
    }

    /// Builds a point set from rows; all rows must share one width.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().ok_or(Error::EmptyInput)?.as_ref().len();
        let mut coords = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::Validation(format!(
                    "row {i} has width {}, expected {dim}",
                    row.len()
                )));
            }
            coords.extend_from_slice(row);
        }
        Self::new(coords, dim, None)
    }

    /// One-dimensional point set.
    pub fn from_scalars(values: &[f64]) -> Result<Self> {
        Self::new(values.to_vec(), 1, None)
    }

    pub fn with_ground_truth(self, labels: Vec<i64>) -> Result<Self> {
        Self::new(self.coords, self.dim, Some(labels))
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    #[inline]
    pub fn point(&self, i: usize) -> &[f64] {
        &self.coords[i * self.dim..(i + 1) * self.dim]
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn ground_truth(&self) -> Option<&[i64]> {
        self.ground_truth.as_deref()
    }

    #[inline]
    pub fn squared_distance(&self, i: usize, j: usize) -> f64 {
        squared_euclidean(self.point(i), self.point(j))
    }

    #[inline]
    pub fn distance(&self, i: usize, j: usize) -> f64 {
        self.squared_distance(i, j).sqrt()
    }

    /// Writes the set as CSV with 17 significant digits per coordinate, so
    /// that reloading reproduces every value bit for bit. Ground truth, when
    /// present, is appended as the last column.
    pub fn write_csv<W: Write>(&self, out: W, header: bool) -> Result<()> {
        let mut writer = csv::Writer::from_writer(out);
        let csv_err = |e: csv::Error| Error::Io(std::io::Error::other(e));
        if header {
            let mut names: Vec<String> = (0..self.dim).map(|c| format!("x{c}")).collect();
            if self.ground_truth.is_some() {
                names.push("label".into());
            }
            writer.write_record(&names).map_err(csv_err)?;
        }
        for i in 0..self.n {
            let mut record: Vec<String> = self.point(i).iter().map(|v| format_real(*v)).collect();
            if let Some(gt) = &self.ground_truth {
                record.push(gt[i].to_string());
            }
            writer.write_record(&record).map_err(csv_err)?;
        }
        writer.flush()?;
        Ok(())
    }

    pub fn save_csv(&self, path: impl AsRef<Path>, header: bool) -> Result<()> {
        let file = File::create(path)?;
        self.write_csv(std::io::BufWriter::new(file), header)
    }
}

#[inline]
pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Formats a real with 17 significant digits.
pub fn format_real(v: f64) -> String {
    format!("{v:.16e}")
}

/// Loads a CSV file. `label_column` is a zero-based column index.
pub fn load_csv(
    path: impl AsRef<Path>,
    has_header: bool,
    label_column: Option<usize>,
) -> Result<PointSet> {
    let file = File::open(path)?;
    read_csv(file, has_header, label_column)
}

pub fn read_csv<R: Read>(
    input: R,
    has_header: bool,
    label_column: Option<usize>,
) -> Result<PointSet> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(has_header)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(input);

    let mut coords = Vec::new();
    let mut labels = Vec::new();
    let mut width: Option<usize> = None;
    let mut dim = 0;

    for record in reader.records() {
        let record = record.map_err(|e| {
            let line = e.position().map_or(0, |p| p.line() as usize);
            Error::Parse {
                line,
                message: e.to_string(),
            }
        })?;
        let line = record.position().map_or(0, |p| p.line() as usize);
        if record.len() == 1 && record.get(0) == Some("") {
            continue;
        }
        match width {
            None => {
                if let Some(c) = label_column {
                    if c >= record.len() {
                        return Err(Error::Parse {
                            line,
                            message: format!(
                                "label column {c} out of range for {} columns",
                                record.len()
                            ),
                        });
                    }
                }
                width = Some(record.len());
                dim = record.len() - usize::from(label_column.is_some());
                if dim == 0 {
                    return Err(Error::Parse {
                        line,
                        message: "row has no coordinate columns".into(),
                    });
                }
            }
            Some(w) if w != record.len() => {
                return Err(Error::Parse {
                    line,
                    message: format!("expected {w} columns, found {}", record.len()),
                });
            }
            Some(_) => {}
        }

        for (c, field) in record.iter().enumerate() {
            if Some(c) == label_column {
                let label: i64 = field.parse().map_err(|_| Error::Parse {
                    line,
                    message: format!("label {field:?} is not an integer"),
                })?;
                labels.push(label);
                continue;
            }
            let value: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("column {c}: {field:?} is not a number"),
            })?;
            if !value.is_finite() {
                return Err(Error::Validation(format!(
                    "non-finite value {field:?} at line {line}"
                )));
            }
            coords.push(value);
        }
    }

    if coords.is_empty() {
        return Err(Error::EmptyInput);
    }
    PointSet::new(coords, dim, label_column.map(|_| labels))
}

/// Final assignment of points to clusters; [`NOISE`] marks unclustered points.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClusterLabels {
    labels: Vec<i64>,
    n_clusters: usize,
}

impl ClusterLabels {
    /// Accepts any integer assignment. Negative values become noise and the
    /// remaining values are renumbered `0..n_clusters` in ascending order of
    /// their original value.
    pub fn from_assignments(raw: &[i64]) -> Self {
        let mut remap = BTreeMap::new();
        for &v in raw.iter().filter(|v| **v >= 0) {
            remap.entry(v).or_insert(0usize);
        }
        for (next, slot) in remap.values_mut().enumerate() {
            *slot = next;
        }
        let labels = raw
            .iter()
            .map(|v| if *v < 0 { NOISE } else { remap[v] as i64 })
            .collect();
        Self {
            labels,
            n_clusters: remap.len(),
        }
    }

    pub fn labels(&self) -> &[i64] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn n_clusters(&self) -> usize {
        self.n_clusters
    }

    pub fn n_noise(&self) -> usize {
        self.labels.iter().filter(|l| **l == NOISE).count()
    }

    /// Member point ids of `cluster`, ascending.
    pub fn members(&self, cluster: i64) -> Vec<usize> {
        self.labels
            .iter()
            .enumerate()
            .filter(|(_, l)| **l == cluster)
            .map(|(i, _)| i)
            .collect()
    }

    /// Single-column CSV aligned with input row order.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "label")?;
        for l in &self.labels {
            writeln!(out, "{l}")?;
        }
        out.flush()?;
        Ok(())
    }
}
