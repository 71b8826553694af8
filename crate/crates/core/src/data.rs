//! Dataset ingestion and the split machinery the experiments are built on:
//! CSV loading with optional z-scoring, majority-class binarization, and
//! seeded stratified train/test partitions.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::scalar::Real;

/// Rows of features with dense class ids. `class_names[labels[i]]` is the
/// original label string of row i.
#[derive(Debug, Clone, PartialEq)]
pub struct LabeledDataset<F: Real> {
    pub features: Array2<F>,
    pub labels: Vec<usize>,
    pub class_names: Vec<String>,
    /// Present when the dataset was standardized at load time.
    pub scaler: Option<Scaler<F>>,
}

impl<F: Real> LabeledDataset<F> {
    pub fn from_parts(
        features: Array2<F>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        if labels.len() != features.nrows() {
            return Err(Error::schema(format!(
                "{} labels for {} rows",
                labels.len(),
                features.nrows()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_names.len()) {
            return Err(Error::schema(format!("label id {bad} out of range")));
        }
        Ok(Self { features, labels, class_names, scaler: None })
    }

    pub fn n_rows(&self) -> usize {
        self.features.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_rows(&self, class: usize) -> Vec<usize> {
        (0..self.labels.len()).filter(|&i| self.labels[i] == class).collect()
    }
}

/// Per-column z-score statistics, reusable on query rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Scaler<F: Real> {
    pub mean: Vec<F>,
    pub std: Vec<F>,
}

impl<F: Real> Scaler<F> {
    /// Population mean/std per column; columns whose deviation vanishes
    /// (within rounding of the mean) keep divisor 1.
    pub fn fit(x: ArrayView2<'_, F>) -> Self {
        let n = F::cast(x.nrows() as f64);
        let mut mean = Vec::with_capacity(x.ncols());
        let mut std = Vec::with_capacity(x.ncols());
        for col in x.columns() {
            let m = col.iter().copied().sum::<F>() / n;
            let var = col.iter().map(|&v| (v - m) * (v - m)).sum::<F>() / n;
            let s = var.sqrt();
            let floor = F::epsilon() * F::cast(16.0) * (F::one() + m.abs());
            mean.push(m);
            std.push(if s > floor { s } else { F::one() });
        }
        Scaler { mean, std }
    }

    pub fn transform(&self, x: &mut Array2<F>) {
        for mut row in x.rows_mut() {
            for (j, v) in row.iter_mut().enumerate() {
                *v = (*v - self.mean[j]) / self.std[j];
            }
        }
    }

    pub fn transformed(&self, x: ArrayView2<'_, F>) -> Array2<F> {
        let mut out = x.to_owned();
        self.transform(&mut out);
        out
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    /// Bare integers select by zero-based index, anything else by name.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl fmt::Display for LabelColumn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            LabelColumn::Name(n) => write!(f, "{n}"),
            LabelColumn::Index(i) => write!(f, "{i}"),
        }
    }
}

/// Loads a comma-separated file with an optional header row.
///
/// Selecting the label by name requires a header; selecting by index treats
/// the first row as a header exactly when some non-label cell of it does not
/// parse as a number. With `standardize`, every feature column is z-scored
/// with its own statistics and the fitted [`Scaler`] is kept on the dataset
/// for reuse on query rows.
pub fn load_csv<F: Real>(
    path: impl AsRef<Path>,
    label: &LabelColumn,
    standardize: bool,
) -> Result<LabeledDataset<F>> {
    let path = path.as_ref();
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .from_path(path)?;
    let mut records = Vec::new();
    for record in reader.records() {
        records.push(record?);
    }
    if records.is_empty() {
        return Err(Error::malformed(format!("{}: no rows", path.display())));
    }

    let width = records[0].len();
    let (label_idx, header_rows) = match label {
        LabelColumn::Name(name) => {
            let idx = records[0]
                .iter()
                .position(|cell| cell == name)
                .ok_or_else(|| {
                    Error::schema(format!(
                        "label column \"{name}\" not found in header of {}",
                        path.display()
                    ))
                })?;
            (idx, 1)
        }
        LabelColumn::Index(idx) => {
            if *idx >= width {
                return Err(Error::schema(format!(
                    "label column index {idx} out of range for {width}-column file"
                )));
            }
            let first_is_header = records[0]
                .iter()
                .enumerate()
                .any(|(j, cell)| j != *idx && cell.trim().parse::<f64>().is_err());
            (*idx, usize::from(first_is_header))
        }
    };
    if width < 2 {
        return Err(Error::schema(format!(
            "{}: no feature columns besides the label",
            path.display()
        )));
    }
    if records.len() <= header_rows {
        return Err(Error::malformed(format!("{}: no data rows", path.display())));
    }

    let n = records.len() - header_rows;
    let d = width - 1;
    let mut features = Array2::zeros((n, d));
    let mut labels = Vec::with_capacity(n);
    let mut class_names: Vec<String> = Vec::new();

    for (r, record) in records.iter().enumerate().skip(header_rows) {
        if record.len() != width {
            return Err(Error::malformed(format!(
                "{}: row {} has {} cells, expected {width}",
                path.display(),
                r + 1,
                record.len()
            )));
        }
        let mut feat_j = 0;
        for (j, cell) in record.iter().enumerate() {
            if j == label_idx {
                let name = cell.trim();
                let id = class_names.iter().position(|c| c == name).unwrap_or_else(|| {
                    class_names.push(name.to_string());
                    class_names.len() - 1
                });
                labels.push(id);
                continue;
            }
            let value: f64 = cell.trim().parse().map_err(|_| {
                Error::malformed(format!(
                    "{}: cell at row {}, column {} is not a number: \"{cell}\"",
                    path.display(),
                    r + 1,
                    j + 1
                ))
            })?;
            if !value.is_finite() {
                return Err(Error::malformed(format!(
                    "{}: non-finite value at row {}, column {}",
                    path.display(),
                    r + 1,
                    j + 1
                )));
            }
            features[[r - header_rows, feat_j]] = F::cast(value);
            feat_j += 1;
        }
    }

    let mut ds = LabeledDataset { features, labels, class_names, scaler: None };
    if standardize {
        let scaler = Scaler::fit(ds.features.view());
        scaler.transform(&mut ds.features);
        ds.scaler = Some(scaler);
    }
    Ok(ds)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum BinaryLabel {
    Target,
    Outlier,
}

/// A labeled dataset with one class designated the target.
#[derive(Debug, Clone, PartialEq)]
pub struct OneClassDataset<F: Real> {
    pub base: LabeledDataset<F>,
    pub positive_class: usize,
    pub binary_labels: Vec<BinaryLabel>,
}

impl<F: Real> OneClassDataset<F> {
    pub fn is_target(&self, row: usize) -> bool {
        self.binary_labels[row] == BinaryLabel::Target
    }

    pub fn target_indices(&self) -> Vec<usize> {
        (0..self.binary_labels.len()).filter(|&i| self.is_target(i)).collect()
    }

    /// Owned copy of the target-class feature rows.
    pub fn target_rows(&self) -> Array2<F> {
        self.base.features.select(Axis(0), &self.target_indices())
    }
}

/// Designates the positive class: the override when given, otherwise the
/// class with the most rows (ties broken by lowest class id).
pub fn binarize_majority<F: Real>(
    ds: LabeledDataset<F>,
    positive_override: Option<&str>,
) -> Result<OneClassDataset<F>> {
    if ds.n_rows() == 0 {
        return Err(Error::InsufficientData { detail: "empty dataset".into() });
    }
    let positive_class = match positive_override {
        Some(name) => ds
            .class_names
            .iter()
            .position(|c| c == name)
            .ok_or_else(|| Error::schema(format!("unknown class \"{name}\"")))?,
        None => {
            let mut counts = vec![0usize; ds.class_names.len()];
            for &l in &ds.labels {
                counts[l] += 1;
            }
            counts
                .iter()
                .enumerate()
                .max_by(|(ia, ca), (ib, cb)| ca.cmp(cb).then(ib.cmp(ia)))
                .map(|(i, _)| i)
                .expect("nonempty dataset has classes")
        }
    };
    let binary_labels = ds
        .labels
        .iter()
        .map(|&l| if l == positive_class { BinaryLabel::Target } else { BinaryLabel::Outlier })
        .collect();
    Ok(OneClassDataset { base: ds, positive_class, binary_labels })
}

/// Specification for repeated stratified train/test splitting.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub partition_count: usize,
    pub seed: u64,
}

impl SplitSpec {
    pub fn new(train_fraction: f64, partition_count: usize, seed: u64) -> Result<Self> {
        if !(train_fraction > 0.0 && train_fraction < 1.0) {
            return Err(Error::config(format!(
                "train_fraction must lie in (0,1), got {train_fraction}"
            )));
        }
        if partition_count == 0 {
            return Err(Error::config("partition_count must be positive".to_string()));
        }
        Ok(Self { train_fraction, partition_count, seed })
    }
}

/// One train/test split as row-index sets; serializable for rerun audits.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Partition {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Stratified random splits: within each partition, every original class
/// contributes round(train_fraction × class size) rows to the train side.
/// Partition p draws from an independent stream derived from (seed, p), so
/// any single partition is reproducible on its own.
pub fn make_partitions<F: Real>(
    ds: &OneClassDataset<F>,
    spec: &SplitSpec,
) -> Result<Vec<Partition>> {
    let base = &ds.base;
    let per_class: Vec<Vec<usize>> =
        (0..base.class_names.len()).map(|c| base.class_rows(c)).collect();
    for (c, rows) in per_class.iter().enumerate() {
        if rows.is_empty() {
            continue;
        }
        let take = (spec.train_fraction * rows.len() as f64).round() as usize;
        if take == 0 || take == rows.len() {
            return Err(Error::DegenerateSplit {
                detail: format!(
                    "class \"{}\" has {} rows; fraction {} leaves one side empty",
                    base.class_names[c],
                    rows.len(),
                    spec.train_fraction
                ),
            });
        }
    }

    let mut partitions = Vec::with_capacity(spec.partition_count);
    for p in 0..spec.partition_count {
        let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
        rng.set_stream(p as u64);
        let mut train = Vec::new();
        let mut test = Vec::new();
        for rows in &per_class {
            if rows.is_empty() {
                continue;
            }
            let mut shuffled = rows.clone();
            shuffled.shuffle(&mut rng);
            let take = (spec.train_fraction * rows.len() as f64).round() as usize;
            train.extend_from_slice(&shuffled[..take]);
            test.extend_from_slice(&shuffled[take..]);
        }
        train.sort_unstable();
        test.sort_unstable();
        partitions.push(Partition { train, test });
    }
    Ok(partitions)
}

/// Arithmetic mean of Euclidean distances over all unordered row pairs.
pub fn mean_pairwise_distance<F: Real>(x: ArrayView2<'_, F>) -> Result<F> {
    let n = x.nrows();
    if n < 2 {
        return Err(Error::InsufficientData {
            detail: format!("mean pairwise distance needs ≥ 2 rows, got {n}"),
        });
    }
    let mut sum = F::zero();
    for i in 0..n {
        for j in 0..i {
            let mut sq = F::zero();
            for (a, b) in x.row(i).iter().zip(x.row(j).iter()) {
                let diff = *a - *b;
                sq += diff * diff;
            }
            sum += sq.sqrt();
        }
    }
    Ok(sum / F::cast((n * (n - 1) / 2) as f64))
}
