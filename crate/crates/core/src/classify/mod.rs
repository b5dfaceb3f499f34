//! KNN, random forest and soft-voting ensemble classifiers.
//!
//! All models index classes by position in an ordered class list; every
//! [`ClassScores`] vector uses that order. Ties are always resolved toward
//! the lowest index (training row, class, or split feature).

mod ensemble;
mod forest;
mod knn;
mod persist;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use ensemble::{combine, EnsembleModel};
pub use forest::{best_split, gini, DecisionTree, Node, RfConfig, RfModel, Split};
pub use knn::KnnModel;
pub use persist::{load_model, read_model, save_model, write_model, PipelineInfo, SavedModel, FORMAT_VERSION};

#[derive(Debug, Error)]
pub enum ClassifyError {
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("k must be odd and positive (got {0})")]
    EvenK(usize),
    #[error("k = {k} exceeds the {n} training vectors")]
    KTooLarge { k: usize, n: usize },
    #[error("insufficient training data: {0}")]
    InsufficientData(String),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("label index {label} out of range for {classes} classes")]
    BadLabel { label: usize, classes: usize },
    #[error("ensemble members disagree on the class list")]
    ClassListMismatch,
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported model format version {found} (expected {expected})")]
    VersionMismatch { found: String, expected: u32 },
    #[error("malformed model file: {0}")]
    Parse(String),
}

/// Per-class scores: non-negative, summing to 1, indexed by class position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassScores(pub Vec<f64>);

impl ClassScores {
    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    /// Index of the highest score; the lowest index wins ties.
    pub fn argmax(&self) -> usize {
        let mut best = 0;
        for (i, &s) in self.0.iter().enumerate() {
            if s > self.0[best] {
                best = i;
            }
        }
        best
    }

    /// Elementwise mean of several score vectors of equal length.
    pub fn mean(parts: &[&ClassScores]) -> ClassScores {
        let n = parts[0].0.len();
        let mut out = vec![0.0; n];
        for p in parts {
            for (o, s) in out.iter_mut().zip(&p.0) {
                *o += s;
            }
        }
        let k = parts.len() as f64;
        ClassScores(out.into_iter().map(|v| v / k).collect())
    }
}

/// Euclidean distance.
pub fn euclidean(p: &[f64], q: &[f64]) -> Result<f64, ClassifyError> {
    if p.len() != q.len() {
        return Err(ClassifyError::DimensionMismatch {
            expected: p.len(),
            actual: q.len(),
        });
    }
    Ok(euclidean_unchecked(p, q))
}

#[inline]
pub(crate) fn euclidean_unchecked(p: &[f64], q: &[f64]) -> f64 {
    p.iter()
        .zip(q)
        .map(|(a, b)| (a - b) * (a - b))
        .sum::<f64>()
        .sqrt()
}

/// A trained classifier of any of the three kinds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum Model {
    Knn(KnnModel),
    Rf(RfModel),
    Ensemble(EnsembleModel),
}

impl Model {
    pub fn kind(&self) -> &'static str {
        match self {
            Model::Knn(_) => "knn",
            Model::Rf(_) => "rf",
            Model::Ensemble(_) => "ensemble",
        }
    }

    pub fn classes(&self) -> &[String] {
        match self {
            Model::Knn(m) => m.classes(),
            Model::Rf(m) => m.classes(),
            Model::Ensemble(m) => m.classes(),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            Model::Knn(m) => m.dim(),
            Model::Rf(m) => m.dim(),
            Model::Ensemble(m) => m.dim(),
        }
    }

    pub fn predict(&self, v: &[f64]) -> Result<(usize, ClassScores), ClassifyError> {
        match self {
            Model::Knn(m) => m.predict(v),
            Model::Rf(m) => m.predict(v),
            Model::Ensemble(m) => m.predict(v),
        }
    }
}

pub(crate) fn check_dim(expected: usize, v: &[f64]) -> Result<(), ClassifyError> {
    if v.len() != expected {
        return Err(ClassifyError::DimensionMismatch {
            expected,
            actual: v.len(),
        });
    }
    Ok(())
}

pub(crate) fn check_training(
    rows: &[Vec<f64>],
    labels: &[usize],
    classes: &[String],
) -> Result<usize, ClassifyError> {
    if rows.is_empty() {
        return Err(ClassifyError::InsufficientData("no training vectors".into()));
    }
    if rows.len() != labels.len() {
        return Err(ClassifyError::InsufficientData(format!(
            "{} vectors but {} labels",
            rows.len(),
            labels.len()
        )));
    }
    let dim = rows[0].len();
    if dim == 0 {
        return Err(ClassifyError::InsufficientData("zero-length vectors".into()));
    }
    for r in rows {
        check_dim(dim, r)?;
    }
    if let Some(&label) = labels.iter().find(|&&l| l >= classes.len()) {
        return Err(ClassifyError::BadLabel {
            label,
            classes: classes.len(),
        });
    }
    Ok(dim)
}
