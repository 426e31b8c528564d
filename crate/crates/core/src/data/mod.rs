//! Datasets, labels, splits and on-disk formats.

mod matrix_io;
mod network_io;

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{self, Domain};

pub use matrix_io::{
    decode_binary, encode_binary, load_matrix, parse_csv, to_csv, write_matrix, MatrixFormat,
    MATRIX_MAGIC, MATRIX_VERSION,
};
pub use network_io::{
    decode_network, encode_network, load_network, save_network, NetworkFile, NetworkMeta,
    NETWORK_MAGIC, NETWORK_VERSION,
};

/// Contiguous class ids `0..class_count` plus the original id of each class.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Labels {
    values: Vec<usize>,
    class_count: usize,
    original_ids: Vec<u64>,
}

impl Labels {
    /// Remaps arbitrary non-negative ids to `0..k` in ascending order of
    /// the original id.
    pub fn from_ids(ids: &[u64]) -> Result<Self> {
        if ids.is_empty() {
            return Err(Error::Format("label list is empty".into()));
        }
        let mut mapping: BTreeMap<u64, usize> = ids.iter().map(|&id| (id, 0)).collect();
        for (next, slot) in mapping.values_mut().enumerate() {
            *slot = next;
        }
        let values = ids.iter().map(|id| mapping[id]).collect();
        let original_ids = mapping.keys().copied().collect::<Vec<_>>();
        Ok(Labels {
            values,
            class_count: original_ids.len(),
            original_ids,
        })
    }

    pub fn values(&self) -> &[usize] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// Original label id for each contiguous class id.
    pub fn original_ids(&self) -> &[u64] {
        &self.original_ids
    }

    pub fn was_remapped(&self) -> bool {
        self.original_ids
            .iter()
            .enumerate()
            .any(|(i, &id)| id != i as u64)
    }

    pub fn select(&self, indices: &[usize]) -> Vec<usize> {
        indices.iter().map(|&i| self.values[i]).collect()
    }
}

pub fn parse_labels(text: &str) -> Result<Labels> {
    let mut ids = Vec::new();
    for (row, line) in text.lines().enumerate() {
        let field = line.trim();
        if field.is_empty() || field.starts_with('#') {
            continue;
        }
        let id: i64 = field.parse().map_err(|_| Error::Parse {
            row,
            col: 0,
            message: format!("{field:?} is not an integer label"),
        })?;
        if id < 0 {
            return Err(Error::Validation(format!(
                "negative label {id} at row {row}"
            )));
        }
        ids.push(id as u64);
    }
    Labels::from_ids(&ids)
}

pub fn load_labels(path: impl AsRef<Path>) -> Result<Labels> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_labels(&text)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSpec {
    pub train: f64,
    pub val: f64,
    pub test: f64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        SplitSpec {
            train: 0.8,
            val: 0.1,
            test: 0.1,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<()> {
        let parts = [self.train, self.val, self.test];
        if parts.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(Error::Config(format!(
                "split fractions must be positive, got {parts:?}"
            )));
        }
        if (parts.iter().sum::<f64>() - 1.0).abs() > 1e-12 {
            return Err(Error::Config(format!(
                "split fractions must sum to 1, got {parts:?}"
            )));
        }
        Ok(())
    }
}

/// Train, validation and test row indices, each sorted ascending.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Split {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

// Guards floor() against products like 0.29 * 100 = 28.999999999999996.
fn floor_share(fraction: f64, n: usize) -> usize {
    (fraction * n as f64 + 1e-9).floor() as usize
}

/// Seeded permutation partition. Validation and test receive
/// `floor(fraction * n)` rows; the remainder goes to training.
pub fn split_dataset(rows: usize, spec: &SplitSpec, seed: u64) -> Result<Split> {
    spec.validate()?;
    if rows < 10 {
        return Err(Error::Config(format!(
            "need at least 10 rows to split, got {rows}"
        )));
    }
    let n_val = floor_share(spec.val, rows);
    let n_test = floor_share(spec.test, rows);
    let n_train = rows.saturating_sub(n_val + n_test);
    for (name, size) in [("train", n_train), ("validation", n_val), ("test", n_test)] {
        if size == 0 {
            return Err(Error::Config(format!(
                "{name} split is empty for {rows} rows with fractions {spec:?}"
            )));
        }
    }
    let mut perm: Vec<usize> = (0..rows).collect();
    perm.shuffle(&mut rng::keyed(seed, Domain::Split, &[]));

    let mut train = perm[..n_train].to_vec();
    let mut val = perm[n_train..n_train + n_val].to_vec();
    let mut test = perm[n_train + n_val..].to_vec();
    train.sort_unstable();
    val.sort_unstable();
    test.sort_unstable();
    Ok(Split { train, val, test })
}

/// Checks that labels and embedding agree with the dataset row count and
/// that the embedding is two dimensional.
pub fn check_inputs(data: &Matrix, labels: &Labels, embedding: &Matrix) -> Result<()> {
    if embedding.cols() != 2 {
        return Err(Error::Validation(format!(
            "embedding must have 2 columns, has {}",
            embedding.cols()
        )));
    }
    if embedding.rows() != data.rows() {
        return Err(Error::Validation(format!(
            "embedding has {} rows but data has {}",
            embedding.rows(),
            data.rows()
        )));
    }
    if labels.len() != data.rows() {
        return Err(Error::Validation(format!(
            "labels have {} rows but data has {}",
            labels.len(),
            data.rows()
        )));
    }
    Ok(())
}
