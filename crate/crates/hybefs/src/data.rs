//! Expression matrix model: CSV ingestion, canonical CSV output, and
//! synthetic dataset generation with planted informative features.
//!
//! A dataset is a dense samples x features matrix of finite reals plus a
//! binary label per sample. Feature names are opaque identifiers; the only
//! requirement is uniqueness.

use std::fmt::Write as _;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2, Axis};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DataError {
    #[error("i/o error on {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("csv error on {path}: {source}")]
    Csv {
        path: String,
        #[source]
        source: csv::Error,
    },
    #[error("missing label column `{0}` in header")]
    MissingLabelColumn(String),
    #[error("duplicate column name `{name}` (columns {first} and {second})")]
    DuplicateColumn {
        name: String,
        first: usize,
        second: usize,
    },
    #[error("line {line}, column `{column}`: cannot parse `{value}` as a number")]
    NonNumericCell {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}, column `{column}`: value `{value}` is not finite")]
    NonFiniteCell {
        line: u64,
        column: String,
        value: String,
    },
    #[error("line {line}: label `{value}` is not binary (expected 0 or 1)")]
    NonBinaryLabel { line: u64, value: String },
    #[error("line {line}: expected {expected} fields, found {found}")]
    RaggedRow {
        line: u64,
        expected: usize,
        found: usize,
    },
    #[error("dataset has no samples")]
    NoSamples,
    #[error("dataset has no feature columns")]
    NoFeatures,
    #[error("dataset contains a single class; both labels 0 and 1 must be present")]
    SingleClass,
    #[error("value at sample {row}, feature {col} is not finite")]
    NonFiniteValue { row: usize, col: usize },
    #[error("label at sample {row} is {value}; labels must be 0 or 1")]
    BadLabel { row: usize, value: u8 },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("feature name `{0}` collides with the label column written by the canonical writer")]
    ReservedFeatureName(String),
    #[error("invalid synthetic spec: {0}")]
    InvalidSyntheticSpec(String),
}

/// Label column name used by the canonical CSV writer and assumed by default
/// on ingestion.
pub const DEFAULT_LABEL_COLUMN: &str = "class";

/// Formats a real with 17 significant digits, enough to reproduce the exact
/// f64 bit pattern on re-parse.
pub(crate) fn fmt_f64(v: f64) -> String {
    format!("{v:.16e}")
}

/// Dense expression dataset: one row per sample, one column per feature,
/// binary labels.
///
/// Invariants enforced at construction: every value is finite, feature names
/// are unique and non-empty, labels are 0/1, and both classes are present.
#[derive(Debug, Clone)]
pub struct ExpressionMatrix {
    values: Array2<f64>,
    feature_names: Vec<String>,
    labels: Vec<u8>,
}

impl ExpressionMatrix {
    pub fn new(
        values: Array2<f64>,
        feature_names: Vec<String>,
        labels: Vec<u8>,
    ) -> Result<Self, DataError> {
        let (n_samples, n_features) = values.dim();
        if labels.len() != n_samples {
            return Err(DataError::ShapeMismatch(format!(
                "{} rows but {} labels",
                n_samples,
                labels.len()
            )));
        }
        if feature_names.len() != n_features {
            return Err(DataError::ShapeMismatch(format!(
                "{} columns but {} feature names",
                n_features,
                feature_names.len()
            )));
        }
        if n_samples == 0 {
            return Err(DataError::NoSamples);
        }
        if n_features == 0 {
            return Err(DataError::NoFeatures);
        }
        let mut seen = std::collections::HashMap::with_capacity(feature_names.len());
        for (i, name) in feature_names.iter().enumerate() {
            if name.is_empty() {
                return Err(DataError::DuplicateColumn {
                    name: String::new(),
                    first: i,
                    second: i,
                });
            }
            if let Some(&first) = seen.get(name.as_str()) {
                return Err(DataError::DuplicateColumn {
                    name: name.clone(),
                    first,
                    second: i,
                });
            }
            seen.insert(name.as_str(), i);
        }
        for (row, &label) in labels.iter().enumerate() {
            if label > 1 {
                return Err(DataError::BadLabel { row, value: label });
            }
        }
        if !labels.contains(&0) || !labels.contains(&1) {
            return Err(DataError::SingleClass);
        }
        for ((row, col), &v) in values.indexed_iter() {
            if !v.is_finite() {
                return Err(DataError::NonFiniteValue { row, col });
            }
        }
        Ok(Self {
            values,
            feature_names,
            labels,
        })
    }

    pub fn n_samples(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn values(&self) -> ArrayView2<'_, f64> {
        self.values.view()
    }

    pub fn feature_names(&self) -> &[String] {
        &self.feature_names
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// (count of label 0, count of label 1)
    pub fn class_counts(&self) -> (usize, usize) {
        let pos = self.labels.iter().filter(|&&l| l == 1).count();
        (self.labels.len() - pos, pos)
    }

    /// Builds a new dataset from the given sample rows, in order. Indices may
    /// repeat (bootstrap bags are multisets).
    ///
    /// Fails if the selected rows contain a single class.
    pub fn restrict_rows(&self, rows: &[usize]) -> Result<Self, DataError> {
        for &r in rows {
            assert!(r < self.n_samples(), "row index {r} out of range");
        }
        let values = self.values.select(Axis(0), rows);
        let labels = rows.iter().map(|&r| self.labels[r]).collect();
        Self::new(values, self.feature_names.clone(), labels)
    }
}

/// Ingestion options for [`load_csv`].
#[derive(Debug, Clone)]
pub struct LoadOptions {
    /// Header name of the label column.
    pub label_column: String,
    /// Skip the first column (a sample identifier) instead of treating it as
    /// a feature.
    pub ignore_sample_id: bool,
}

impl Default for LoadOptions {
    fn default() -> Self {
        Self {
            label_column: DEFAULT_LABEL_COLUMN.to_string(),
            ignore_sample_id: false,
        }
    }
}

/// Loads a dataset from a headered CSV file: one row per sample, one numeric
/// column per feature, and a 0/1 label column identified by name.
///
/// # Errors
///
/// Reports the offending line and column for unparseable or non-finite cells,
/// duplicate column names, non-binary labels, and ragged rows. Files with a
/// single class, no samples, or no feature columns are rejected.
pub fn load_csv(path: &Path, options: &LoadOptions) -> Result<ExpressionMatrix, DataError> {
    let path_str = path.display().to_string();
    let io_err = |source| DataError::Io {
        path: path_str.clone(),
        source,
    };
    let file = File::open(path).map_err(io_err)?;
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(true)
        .flexible(true)
        .from_reader(file);

    let headers = reader
        .headers()
        .map_err(|source| DataError::Csv {
            path: path_str.clone(),
            source,
        })?
        .clone();
    let skip = usize::from(options.ignore_sample_id);
    let columns: Vec<String> = headers.iter().skip(skip).map(str::to_string).collect();

    let mut label_idx = None;
    let mut seen = std::collections::HashMap::new();
    for (i, name) in columns.iter().enumerate() {
        if let Some(&first) = seen.get(name.as_str()) {
            return Err(DataError::DuplicateColumn {
                name: name.clone(),
                first: first + skip,
                second: i + skip,
            });
        }
        seen.insert(name.as_str(), i);
        if *name == options.label_column {
            label_idx = Some(i);
        }
    }
    let label_idx =
        label_idx.ok_or_else(|| DataError::MissingLabelColumn(options.label_column.clone()))?;
    let feature_names: Vec<String> = columns
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, n)| n.clone())
        .collect();

    let mut rows: Vec<f64> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    for (i, record) in reader.records().enumerate() {
        let record = record.map_err(|source| DataError::Csv {
            path: path_str.clone(),
            source,
        })?;
        let line = record
            .position()
            .map(|p| p.line())
            .unwrap_or(i as u64 + 2);
        if record.len() != columns.len() + skip {
            return Err(DataError::RaggedRow {
                line,
                expected: columns.len() + skip,
                found: record.len(),
            });
        }
        for (c, cell) in record.iter().skip(skip).enumerate() {
            let cell = cell.trim();
            if c == label_idx {
                let v: f64 = cell.parse().map_err(|_| DataError::NonNumericCell {
                    line,
                    column: columns[c].clone(),
                    value: cell.to_string(),
                })?;
                if v == 0.0 {
                    labels.push(0);
                } else if v == 1.0 {
                    labels.push(1);
                } else {
                    return Err(DataError::NonBinaryLabel {
                        line,
                        value: cell.to_string(),
                    });
                }
            } else {
                let v: f64 = cell.parse().map_err(|_| DataError::NonNumericCell {
                    line,
                    column: columns[c].clone(),
                    value: cell.to_string(),
                })?;
                if !v.is_finite() {
                    return Err(DataError::NonFiniteCell {
                        line,
                        column: columns[c].clone(),
                        value: cell.to_string(),
                    });
                }
                rows.push(v);
            }
        }
    }

    if labels.is_empty() {
        return Err(DataError::NoSamples);
    }
    if feature_names.is_empty() {
        return Err(DataError::NoFeatures);
    }
    let n_samples = labels.len();
    let n_features = feature_names.len();
    let values = Array2::from_shape_vec((n_samples, n_features), rows)
        .map_err(|e| DataError::ShapeMismatch(e.to_string()))?;
    ExpressionMatrix::new(values, feature_names, labels)
}

/// Writes a dataset in the canonical CSV layout: feature columns in order,
/// then a final `class` column. Reals carry 17 significant digits, so a
/// write/load round trip reproduces every value bit for bit.
pub fn write_csv(matrix: &ExpressionMatrix, path: &Path) -> Result<(), DataError> {
    let path_str = path.display().to_string();
    let io_err = |source| DataError::Io {
        path: path_str.clone(),
        source,
    };
    if let Some(name) = matrix
        .feature_names()
        .iter()
        .find(|n| n.as_str() == DEFAULT_LABEL_COLUMN)
    {
        return Err(DataError::ReservedFeatureName(name.clone()));
    }
    let file = File::create(path).map_err(io_err)?;
    let mut writer = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(BufWriter::new(file));
    let csv_err = |source| DataError::Csv {
        path: path_str.clone(),
        source,
    };

    let mut header: Vec<&str> = matrix.feature_names().iter().map(String::as_str).collect();
    header.push(DEFAULT_LABEL_COLUMN);
    writer.write_record(&header).map_err(csv_err)?;

    let mut record: Vec<String> = Vec::with_capacity(matrix.n_features() + 1);
    for (row, label) in matrix.values().outer_iter().zip(matrix.labels()) {
        record.clear();
        record.extend(row.iter().map(|&v| fmt_f64(v)));
        record.push(label.to_string());
        writer.write_record(&record).map_err(csv_err)?;
    }
    writer
        .into_inner()
        .map_err(|e| e.into_error())
        .and_then(|mut w| w.flush().map(|_| w))
        .map_err(io_err)?;
    Ok(())
}

/// Recipe for a synthetic dataset with a known set of informative features.
#[derive(Debug, Clone, serde::Serialize, serde::Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SyntheticSpec {
    pub n_samples: usize,
    pub n_features: usize,
    pub n_informative: usize,
    /// Class-mean shift of informative features, in units of the within-class
    /// standard deviation (which is 1).
    pub effect_size: f64,
    /// Fraction of samples labeled 1, in (0, 1). Rounded to the nearest count
    /// and clamped so both classes keep at least one sample.
    #[serde(default = "default_class_balance")]
    pub class_balance: f64,
    pub seed: u64,
}

fn default_class_balance() -> f64 {
    0.5
}

/// Generates a dataset where `n_informative` randomly placed features carry a
/// class-mean gap of `effect_size` over unit-variance normal noise, and every
/// other feature is class-independent noise.
///
/// Returns the dataset and the planted feature indices in ascending order.
/// Output is a pure function of the spec; thread counts play no part.
pub fn generate_synthetic(
    spec: &SyntheticSpec,
) -> Result<(ExpressionMatrix, Vec<usize>), DataError> {
    if spec.n_samples < 2 {
        return Err(DataError::InvalidSyntheticSpec(format!(
            "n_samples = {}; need at least 2",
            spec.n_samples
        )));
    }
    if spec.n_features == 0 {
        return Err(DataError::InvalidSyntheticSpec("n_features = 0".into()));
    }
    if spec.n_informative > spec.n_features {
        return Err(DataError::InvalidSyntheticSpec(format!(
            "n_informative = {} exceeds n_features = {}",
            spec.n_informative, spec.n_features
        )));
    }
    if !(spec.class_balance > 0.0 && spec.class_balance < 1.0) {
        return Err(DataError::InvalidSyntheticSpec(format!(
            "class_balance = {} outside (0, 1)",
            spec.class_balance
        )));
    }
    if !spec.effect_size.is_finite() || spec.effect_size < 0.0 {
        return Err(DataError::InvalidSyntheticSpec(format!(
            "effect_size = {} must be finite and non-negative",
            spec.effect_size
        )));
    }

    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let n = spec.n_samples;
    let n_pos = ((spec.class_balance * n as f64).round() as usize).clamp(1, n - 1);

    let mut labels = vec![0u8; n];
    labels[..n_pos].fill(1);
    labels.shuffle(&mut rng);

    let mut planted = rand::seq::index::sample(&mut rng, spec.n_features, spec.n_informative)
        .into_vec();
    planted.sort_unstable();
    let mut is_planted = vec![false; spec.n_features];
    for &f in &planted {
        is_planted[f] = true;
    }

    let mut values = Array2::zeros((n, spec.n_features));
    for s in 0..n {
        let shift = if labels[s] == 1 { spec.effect_size } else { 0.0 };
        for f in 0..spec.n_features {
            let noise: f64 = rng.sample(StandardNormal);
            values[[s, f]] = if is_planted[f] { noise + shift } else { noise };
        }
    }

    let width = spec.n_features.to_string().len();
    let mut names = Vec::with_capacity(spec.n_features);
    let mut buf = String::new();
    for f in 1..=spec.n_features {
        buf.clear();
        write!(buf, "f{f:0width$}").expect("write to string");
        names.push(buf.clone());
    }

    let matrix = ExpressionMatrix::new(values, names, labels)?;
    Ok((matrix, planted))
}
