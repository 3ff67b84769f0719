//! Tabular classification data: CSV loading, mean imputation, logistic
//! scaling and stratified three-way splitting.

use std::cmp::Ordering;
use std::fs::File;
use std::path::Path;

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{self, Stream};
use crate::softmax;

/// Default train/validation/test proportions.
pub const DEFAULT_SPLIT: [f64; 3] = [0.6, 0.2, 0.2];

/// Pattern matrix with dense class labels.
///
/// Values are stored row-major. A missing cell is stored as `NaN` until
/// [`impute_missing`] replaces it.
#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    values: Vec<f64>,
    n_features: usize,
    labels: Vec<usize>,
    feature_names: Vec<String>,
    class_names: Vec<String>,
}

impl Dataset {
    /// Builds a dataset from rows, validating shape and that every class in
    /// `class_names` occurs at least once.
    pub fn new(
        rows: Vec<Vec<f64>>,
        labels: Vec<usize>,
        feature_names: Vec<String>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let n_features = feature_names.len();
        if rows.len() != labels.len() {
            return Err(Error::invalid(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        let mut values = Vec::with_capacity(rows.len() * n_features);
        for (i, row) in rows.into_iter().enumerate() {
            if row.len() != n_features {
                return Err(Error::invalid(format!(
                    "row {i} has {} values, expected {n_features}",
                    row.len()
                )));
            }
            values.extend(row);
        }
        let dataset = Dataset {
            values,
            n_features,
            labels,
            feature_names,
            class_names,
        };
        dataset.check_classes()?;
        Ok(dataset)
    }

    /// Convenience constructor: features named `f0, f1, …`, classes `0..=max(label)`.
    pub fn from_rows(rows: Vec<Vec<f64>>, labels: Vec<usize>) -> Result<Self> {
        let n = rows.first().map_or(0, Vec::len);
        let classes = labels.iter().max().map_or(0, |&m| m + 1);
        Dataset::new(
            rows,
            labels,
            (0..n).map(|j| format!("f{j}")).collect(),
            (0..classes).map(|c| c.to_string()).collect(),
        )
    }

    fn check_classes(&self) -> Result<()> {
        let counts = self.class_counts_raw()?;
        if let Some(c) = counts.iter().position(|&n| n == 0) {
            return Err(Error::invalid(format!(
                "class {:?} has no patterns",
                self.class_names[c]
            )));
        }
        Ok(())
    }

    fn class_counts_raw(&self) -> Result<Vec<usize>> {
        let mut counts = vec![0; self.class_names.len()];
        for &label in &self.labels {
            *counts.get_mut(label).ok_or_else(|| {
                Error::invalid(format!(
                    "label {label} outside [0, {})",
                    self.class_names.len()
                ))
            })? += 1;
        }
        Ok(counts)
    }

    pub fn n_patterns(&self) -> usize {
        self.labels.len()
    }

    pub fn n_features(&self) -> usize {
        self.n_features
    }

    pub fn class_count(&self) -> usize {
        self.class_names.len()
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_features..(i + 1) * self.n_features]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        // chunks_exact panics on zero width
        self.values.chunks_exact(self.n_features.max(1))
    }

    pub fn value(&self, row: usize, feature: usize) -> f64 {
        self.values[row * self.n_features + feature]
    }

    pub fn column(&self, feature: usize) -> Vec<f64> {
        (0..self.n_patterns())
            .map(|i| self.value(i, feature))
            .collect()
    }

    pub fn missing_count(&self) -> usize {
        self.values.iter().filter(|v| v.is_nan()).count()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_count()];
        for &label in &self.labels {
            counts[label] += 1;
        }
        counts
    }

    /// Pattern subset in the given order, keeping the full class list.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Dataset> {
        let subset = self.select_rows_unchecked(indices);
        subset.check_classes()?;
        Ok(subset)
    }

    fn select_rows_unchecked(&self, indices: &[usize]) -> Dataset {
        let mut values = Vec::with_capacity(indices.len() * self.n_features);
        for &i in indices {
            values.extend_from_slice(self.row(i));
        }
        Dataset {
            values,
            n_features: self.n_features,
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            feature_names: self.feature_names.clone(),
            class_names: self.class_names.clone(),
        }
    }

    fn map_columns(&self, f: impl Fn(&[f64]) -> Vec<f64>) -> Dataset {
        let mut out = self.clone();
        for j in 0..self.n_features {
            for (i, v) in f(&self.column(j)).into_iter().enumerate() {
                out.values[i * self.n_features + j] = v;
            }
        }
        out
    }
}

/// Which CSV column carries the class label.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub enum LabelColumn {
    #[default]
    Last,
    Index(usize),
    Name(String),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

pub fn is_missing_marker(cell: &str) -> bool {
    cell.is_empty() || cell == "?" || cell.eq_ignore_ascii_case("na")
}

fn parse_number(cell: &str) -> Option<f64> {
    cell.parse::<f64>().ok().filter(|v| v.is_finite())
}

/// Loads a comma-separated file.
///
/// A header row is assumed when the label is selected by name, or when any
/// feature cell of the first row is neither numeric nor a missing marker.
/// Missing cells become `NaN`. Labels are relabelled densely in sorted order
/// (numeric order when every label parses as a number).
pub fn load_csv(path: impl AsRef<Path>, label: &LabelColumn) -> Result<Dataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(file);

    let mut records = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        // skip blank lines
        if record.len() == 1 && record[0].is_empty() {
            continue;
        }
        records.push((i + 1, record));
    }
    let Some((_, first)) = records.first() else {
        return Err(Error::invalid(format!("{} is empty", path.display())));
    };
    let width = first.len();
    if width < 2 {
        return Err(Error::Parse {
            row: 1,
            message: "need at least one feature column and a label column".into(),
        });
    }

    let (label_idx, has_header) = match label {
        LabelColumn::Name(name) => {
            let idx = first.iter().position(|c| c == name).ok_or_else(|| {
                Error::invalid(format!("label column {name:?} not found in header"))
            })?;
            (idx, true)
        }
        LabelColumn::Index(i) if *i >= width => {
            return Err(Error::invalid(format!(
                "label column {i} out of range for {width} columns"
            )));
        }
        LabelColumn::Index(i) => (*i, false),
        LabelColumn::Last => (width - 1, false),
    };
    let has_header = has_header
        || first
            .iter()
            .enumerate()
            .any(|(j, c)| j != label_idx && !is_missing_marker(c) && parse_number(c).is_none());

    let feature_names: Vec<String> = if has_header {
        first
            .iter()
            .enumerate()
            .filter(|&(j, _)| j != label_idx)
            .map(|(_, c)| c.to_string())
            .collect()
    } else {
        (0..width)
            .filter(|&j| j != label_idx)
            .map(|j| format!("f{j}"))
            .collect()
    };

    let body = &records[usize::from(has_header)..];
    let mut rows = Vec::with_capacity(body.len());
    let mut raw_labels = Vec::with_capacity(body.len());
    for (row_no, record) in body {
        if record.len() != width {
            return Err(Error::Parse {
                row: *row_no,
                message: format!("expected {width} cells, found {}", record.len()),
            });
        }
        let mut row = Vec::with_capacity(width - 1);
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                if is_missing_marker(cell) {
                    return Err(Error::Parse {
                        row: *row_no,
                        message: "missing class label".into(),
                    });
                }
                raw_labels.push(cell.to_string());
            } else if is_missing_marker(cell) {
                row.push(f64::NAN);
            } else {
                row.push(parse_number(cell).ok_or_else(|| Error::Parse {
                    row: *row_no,
                    message: format!("non-numeric value {cell:?} in column {j}"),
                })?);
            }
        }
        rows.push(row);
    }

    let mut class_names: Vec<String> = raw_labels.clone();
    class_names.sort_by(|a, b| compare_labels(a, b));
    class_names.dedup();
    if class_names.len() < 2 {
        return Err(Error::invalid(format!(
            "need at least two classes, found {}",
            class_names.len()
        )));
    }
    let labels = raw_labels
        .iter()
        .map(|l| class_names.binary_search_by(|c| compare_labels(c, l)).unwrap())
        .collect();
    Dataset::new(rows, labels, feature_names, class_names)
}

fn compare_labels(a: &str, b: &str) -> Ordering {
    match (parse_number(a), parse_number(b)) {
        (Some(x), Some(y)) => x.total_cmp(&y).then_with(|| a.cmp(b)),
        (Some(_), None) => Ordering::Less,
        (None, Some(_)) => Ordering::Greater,
        (None, None) => a.cmp(b),
    }
}

/// Replaces each missing cell with the mean of its feature's present values.
pub fn impute_missing(d: &Dataset) -> Result<Dataset> {
    for j in 0..d.n_features() {
        if d.n_patterns() > 0 && d.column(j).iter().all(|v| v.is_nan()) {
            return Err(Error::invalid(format!(
                "feature {:?} has no values to impute from",
                d.feature_names()[j]
            )));
        }
    }
    Ok(d.map_columns(|col| {
        let present: Vec<f64> = col.iter().copied().filter(|v| !v.is_nan()).collect();
        let mean = present.iter().sum::<f64>() / present.len() as f64;
        col.iter()
            .map(|&v| if v.is_nan() { mean } else { v })
            .collect()
    }))
}

/// Logistic scaling of every feature by its own mean and population
/// standard deviation; constant features become 0.5.
pub fn softmax_scale(d: &Dataset) -> Result<Dataset> {
    if d.missing_count() > 0 {
        return Err(Error::invalid("missing values must be imputed before scaling"));
    }
    Ok(d.map_columns(softmax::logistic_scale))
}

/// Train/validation/test partition. Index lists refer to the source dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct SplitDataset {
    pub train: Dataset,
    pub validation: Dataset,
    pub test: Dataset,
    pub split_seed: u64,
    pub train_indices: Vec<usize>,
    pub validation_indices: Vec<usize>,
    pub test_indices: Vec<usize>,
}

/// Stratified seeded split.
///
/// Each class is shuffled and then dealt into the three parts according to
/// per-class largest-remainder quotas. Every part receives at least one
/// pattern of every class. Indices inside each part are kept in source order.
pub fn split(d: &Dataset, ratios: [f64; 3], seed: u64) -> Result<SplitDataset> {
    if ratios.iter().any(|r| !(r.is_finite() && *r > 0.0)) {
        return Err(Error::invalid(format!(
            "split ratios must all be positive, got {ratios:?}"
        )));
    }
    let total: f64 = ratios.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::invalid(format!(
            "split ratios must sum to 1, got {total}"
        )));
    }

    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); d.class_count()];
    for (i, &label) in d.labels().iter().enumerate() {
        by_class[label].push(i);
    }

    let mut rng = rng::stream(seed, Stream::Split);
    let mut parts: [Vec<usize>; 3] = Default::default();
    for (class, mut members) in by_class.into_iter().enumerate() {
        if members.len() < parts.len() {
            return Err(Error::invalid(format!(
                "class {:?} has {} patterns; at least {} are needed for a three-way split",
                d.class_names()[class],
                members.len(),
                parts.len()
            )));
        }
        let quotas = apportion(members.len(), &ratios);
        members.shuffle(&mut rng);
        let mut rest = members.as_slice();
        for (part, quota) in parts.iter_mut().zip(quotas) {
            let (taken, remaining) = rest.split_at(quota);
            part.extend_from_slice(taken);
            rest = remaining;
        }
    }
    for part in &mut parts {
        part.sort_unstable();
    }
    let [train_indices, validation_indices, test_indices] = parts;
    Ok(SplitDataset {
        train: d.select_rows_unchecked(&train_indices),
        validation: d.select_rows_unchecked(&validation_indices),
        test: d.select_rows_unchecked(&test_indices),
        split_seed: seed,
        train_indices,
        validation_indices,
        test_indices,
    })
}

/// Largest-remainder apportionment of `count` items, at least one per part.
fn apportion(count: usize, ratios: &[f64; 3]) -> [usize; 3] {
    let targets = ratios.map(|r| r * count as f64);
    let mut quotas = targets.map(|t| t.floor() as usize);
    let assigned: usize = quotas.iter().sum();
    let mut order: Vec<usize> = (0..3).collect();
    order.sort_by(|&a, &b| {
        let ra = targets[a] - targets[a].floor();
        let rb = targets[b] - targets[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &part in order.iter().take(count.saturating_sub(assigned)) {
        quotas[part] += 1;
    }
    while let Some(empty) = quotas.iter().position(|&q| q == 0) {
        let donor = (0..3).max_by_key(|&p| (quotas[p], std::cmp::Reverse(p))).unwrap();
        quotas[donor] -= 1;
        quotas[empty] += 1;
    }
    quotas
}
