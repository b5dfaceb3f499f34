//! Train/test splitting, confusion matrices, support-weighted metrics, and
//! the seven-cell experiment grid.

use std::fmt::Write as _;
use std::io::Write;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::classify::{ClassifyError, EnsembleModel, KnnModel, RfModel};
use crate::config::PipelineConfig;
use crate::features::{FeatureError, FeatureVariant, FeatureVector, Standardizer};
use crate::seed;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("class `{class}` has {count} sample(s); a split needs at least 2")]
    ClassTooSmall { class: String, count: usize },
    #[error("dataset has {0} sample(s); a split needs at least 2")]
    TooFewSamples(usize),
    #[error("train fraction {0} not strictly between 0 and 1")]
    BadFraction(f64),
    #[error("label `{0}` is not in the class list")]
    UnknownLabel(String),
    #[error("{actual} actual labels but {predicted} predicted")]
    LengthMismatch { actual: usize, predicted: usize },
    #[error("confusion matrix is empty")]
    EmptyMatrix,
    #[error("grid needs combined feature vectors (got {0})")]
    NotCombined(FeatureVariant),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error(transparent)]
    Classify(#[from] ClassifyError),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_fraction: f64,
    pub stratified: bool,
    pub seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_fraction: 0.9,
            stratified: true,
            seed: 0,
        }
    }
}

fn train_count(n: usize, fraction: f64) -> usize {
    ((n as f64 * fraction).round() as usize).clamp(1, n - 1)
}

/// Partitions sample indices into (train, test), both ascending.
///
/// Stratified mode shuffles each class independently and sends
/// `round(n_c * fraction)` samples (clamped to `1..n_c`) to training, so every
/// class keeps at least one training and one test sample.
pub fn split_indices<S: AsRef<str>>(
    labels: &[S],
    spec: &SplitSpec,
) -> Result<(Vec<usize>, Vec<usize>), EvalError> {
    if !(spec.train_fraction > 0.0 && spec.train_fraction < 1.0) {
        return Err(EvalError::BadFraction(spec.train_fraction));
    }
    let mut rng = seed::rng(spec.seed);
    let mut train = Vec::new();
    let mut test = Vec::new();
    if spec.stratified {
        let mut classes: Vec<&str> = labels.iter().map(|l| l.as_ref()).collect();
        classes.sort_unstable();
        classes.dedup();
        for class in classes {
            let mut members: Vec<usize> = (0..labels.len())
                .filter(|&i| labels[i].as_ref() == class)
                .collect();
            if members.len() < 2 {
                return Err(EvalError::ClassTooSmall {
                    class: class.to_string(),
                    count: members.len(),
                });
            }
            members.shuffle(&mut rng);
            let cut = train_count(members.len(), spec.train_fraction);
            train.extend_from_slice(&members[..cut]);
            test.extend_from_slice(&members[cut..]);
        }
    } else {
        if labels.len() < 2 {
            return Err(EvalError::TooFewSamples(labels.len()));
        }
        let mut all: Vec<usize> = (0..labels.len()).collect();
        all.shuffle(&mut rng);
        let cut = train_count(all.len(), spec.train_fraction);
        train.extend_from_slice(&all[..cut]);
        test.extend_from_slice(&all[cut..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok((train, test))
}

pub fn split(
    data: &[FeatureVector],
    spec: &SplitSpec,
) -> Result<(Vec<FeatureVector>, Vec<FeatureVector>), EvalError> {
    let labels: Vec<&str> = data.iter().map(|v| v.label.as_str()).collect();
    let (tr, te) = split_indices(&labels, spec)?;
    Ok((
        tr.into_iter().map(|i| data[i].clone()).collect(),
        te.into_iter().map(|i| data[i].clone()).collect(),
    ))
}

/// Rows are actual classes, columns predicted classes.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn zeros(classes: Vec<String>) -> Self {
        let n = classes.len();
        Self {
            classes,
            counts: vec![vec![0; n]; n],
        }
    }

    pub fn from_counts(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Self {
        assert!(counts.len() == classes.len() && counts.iter().all(|r| r.len() == classes.len()));
        Self { classes, counts }
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.classes.len()).map(|i| self.counts[i][i]).sum()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let mut header = vec!["actual\\predicted".to_string()];
        header.extend(self.classes.iter().cloned());
        out.write_record(&header)?;
        for (class, row) in self.classes.iter().zip(&self.counts) {
            let mut rec = vec![class.clone()];
            rec.extend(row.iter().map(|c| c.to_string()));
            out.write_record(&rec)?;
        }
        out.flush()
    }
}

pub fn confusion<S: AsRef<str>>(
    actual: &[S],
    predicted: &[S],
    classes: &[String],
) -> Result<ConfusionMatrix, EvalError> {
    if actual.len() != predicted.len() {
        return Err(EvalError::LengthMismatch {
            actual: actual.len(),
            predicted: predicted.len(),
        });
    }
    let index = |label: &str| {
        classes
            .iter()
            .position(|c| c == label)
            .ok_or_else(|| EvalError::UnknownLabel(label.to_string()))
    };
    let mut cm = ConfusionMatrix::zeros(classes.to_vec());
    for (a, p) in actual.iter().zip(predicted) {
        cm.counts[index(a.as_ref())?][index(p.as_ref())?] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Averaging {
    /// Per-class values weighted by class support (row sums).
    #[default]
    Weighted,
    Macro,
}

/// Percentages, unrounded.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl Metrics {
    /// Two-decimal values as shown in report tables.
    pub fn rounded(&self) -> Metrics {
        let r = |v: f64| (v * 100.0).round() / 100.0;
        Metrics {
            accuracy: r(self.accuracy),
            precision: r(self.precision),
            recall: r(self.recall),
            f1: r(self.f1),
        }
    }
}

pub fn metrics(cm: &ConfusionMatrix, averaging: Averaging) -> Result<Metrics, EvalError> {
    let total = cm.total();
    if total == 0 {
        return Err(EvalError::EmptyMatrix);
    }
    let n = cm.classes.len();
    let ratio = |a: u64, b: u64| if b == 0 { 0.0 } else { a as f64 / b as f64 };
    let (mut p, mut r, mut f) = (0.0, 0.0, 0.0);
    for c in 0..n {
        let tp = cm.counts[c][c];
        let support: u64 = cm.counts[c].iter().sum();
        let predicted: u64 = (0..n).map(|a| cm.counts[a][c]).sum();
        let precision = ratio(tp, predicted);
        let recall = ratio(tp, support);
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        let w = match averaging {
            Averaging::Weighted => support as f64 / total as f64,
            Averaging::Macro => 1.0 / n as f64,
        };
        p += w * precision;
        r += w * recall;
        f += w * f1;
    }
    Ok(Metrics {
        accuracy: 100.0 * cm.trace() as f64 / total as f64,
        precision: 100.0 * p,
        recall: 100.0 * r,
        f1: 100.0 * f,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Classifier {
    Knn,
    Rf,
    Ensemble,
}

impl Classifier {
    pub fn display(self) -> &'static str {
        match self {
            Classifier::Knn => "KNN",
            Classifier::Rf => "RF",
            Classifier::Ensemble => "VE",
        }
    }
}

/// The seven grid cells in report order.
pub const GRID: [(FeatureVariant, Classifier); 7] = [
    (FeatureVariant::Combined, Classifier::Knn),
    (FeatureVariant::Combined, Classifier::Rf),
    (FeatureVariant::Lbp, Classifier::Knn),
    (FeatureVariant::Lbp, Classifier::Rf),
    (FeatureVariant::Glcm, Classifier::Knn),
    (FeatureVariant::Glcm, Classifier::Rf),
    (FeatureVariant::Combined, Classifier::Ensemble),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub name: String,
    pub variant: FeatureVariant,
    pub classifier: Classifier,
    /// `None` when the cell failed.
    pub metrics: Option<Metrics>,
    pub rounded: Option<Metrics>,
    pub confusion: Option<ConfusionMatrix>,
    pub error: Option<String>,
}

impl EvaluationReport {
    pub fn failed(&self) -> bool {
        self.error.is_some()
    }

    /// File-name friendly cell id, e.g. `combined_knn`.
    pub fn slug(&self) -> String {
        format!("{}_{}", self.variant.name(), self.classifier.display().to_lowercase())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GridReport {
    pub config: PipelineConfig,
    pub averaging: Averaging,
    pub classes: Vec<String>,
    pub train_size: usize,
    pub test_size: usize,
    pub rows: Vec<EvaluationReport>,
}

impl GridReport {
    pub fn any_failed(&self) -> bool {
        self.rows.iter().any(EvaluationReport::failed)
    }

    pub fn row(&self, variant: FeatureVariant, classifier: Classifier) -> Option<&EvaluationReport> {
        self.rows
            .iter()
            .find(|r| r.variant == variant && r.classifier == classifier)
    }

    /// Aligned plain-text table, two decimals.
    pub fn table(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{:<18} {:>12} {:>13} {:>10} {:>12}",
            "Model", "Accuracy (%)", "Precision (%)", "Recall (%)", "F1-score (%)"
        );
        for r in &self.rows {
            match &r.rounded {
                Some(m) => {
                    let _ = writeln!(
                        s,
                        "{:<18} {:>12.2} {:>13.2} {:>10.2} {:>12.2}",
                        r.name, m.accuracy, m.precision, m.recall, m.f1
                    );
                }
                None => {
                    let _ = writeln!(
                        s,
                        "{:<18} FAILED: {}",
                        r.name,
                        r.error.as_deref().unwrap_or("unknown error")
                    );
                }
            }
        }
        s
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

struct Prepared {
    train_x: Vec<Vec<f64>>,
    test_x: Vec<Vec<f64>>,
}

fn prepare(
    train: &[&FeatureVector],
    test: &[&FeatureVector],
    variant: FeatureVariant,
    glcm_len: usize,
    standardize: bool,
) -> Result<Prepared, EvalError> {
    let slice = |v: &FeatureVector| -> Vec<f64> {
        match variant {
            FeatureVariant::Glcm => v.values[..glcm_len].to_vec(),
            FeatureVariant::Lbp => v.values[glcm_len..].to_vec(),
            FeatureVariant::Combined => v.values.clone(),
        }
    };
    let mut train_x: Vec<Vec<f64>> = train.iter().map(|v| slice(v)).collect();
    let mut test_x: Vec<Vec<f64>> = test.iter().map(|v| slice(v)).collect();
    if standardize {
        let s = Standardizer::fit(train_x.iter().map(Vec::as_slice))?;
        for row in train_x.iter_mut().chain(test_x.iter_mut()) {
            *row = s.transform(row)?;
        }
    }
    Ok(Prepared { train_x, test_x })
}

fn cell_name(variant: FeatureVariant, classifier: Classifier) -> String {
    format!("{} + {}", variant.name(), classifier.display())
}

/// Runs all seven cells on one shared split of `data` (combined vectors).
/// A failing cell is recorded in its row; the remaining cells still run.
pub fn run_grid(
    data: &[FeatureVector],
    config: &PipelineConfig,
    averaging: Averaging,
) -> Result<GridReport, EvalError> {
    if let Some(v) = data.iter().find(|v| v.variant != FeatureVariant::Combined) {
        return Err(EvalError::NotCombined(v.variant));
    }
    let glcm_len = config.aggregation.block_len();
    let expected = config.extract_config().len(FeatureVariant::Combined);
    if let Some(v) = data.iter().find(|v| v.values.len() != expected) {
        return Err(FeatureError::DimensionMismatch {
            expected,
            actual: v.values.len(),
        }
        .into());
    }
    let mut classes: Vec<String> = data.iter().map(|v| v.label.clone()).collect();
    classes.sort_unstable();
    classes.dedup();
    let labels: Vec<&str> = data.iter().map(|v| v.label.as_str()).collect();
    let (tr, te) = split_indices(&labels, &config.split_spec())?;
    let train: Vec<&FeatureVector> = tr.iter().map(|&i| &data[i]).collect();
    let test: Vec<&FeatureVector> = te.iter().map(|&i| &data[i]).collect();
    let class_of = |l: &str| classes.iter().position(|c| c == l).expect("label in class list");
    let train_y: Vec<usize> = train.iter().map(|v| class_of(&v.label)).collect();
    let actual: Vec<&str> = test.iter().map(|v| v.label.as_str()).collect();

    let mut rows = Vec::with_capacity(GRID.len());
    let mut combined_models: Option<(KnnModel, RfModel, Vec<Vec<f64>>)> = None;
    for variant in [FeatureVariant::Combined, FeatureVariant::Lbp, FeatureVariant::Glcm] {
        let prepared = prepare(&train, &test, variant, glcm_len, config.standardize);
        let prepared = match prepared {
            Ok(p) => p,
            Err(e) => {
                for (v, c) in GRID.iter().filter(|(v, _)| *v == variant) {
                    rows.push(failed_row(*v, *c, &e.to_string()));
                }
                continue;
            }
        };
        let knn = KnnModel::fit(config.k, prepared.train_x.clone(), train_y.clone(), classes.clone());
        let rf = RfModel::train(&prepared.train_x, &train_y, classes.clone(), config.rf_config());
        let cell = |c, m| score_cell(variant, c, m, &prepared.test_x, &actual, &classes, averaging);
        rows.push(cell(Classifier::Knn, knn.as_ref().map(|m| m as &dyn Predictor).map_err(|e| e.to_string())));
        rows.push(cell(Classifier::Rf, rf.as_ref().map(|m| m as &dyn Predictor).map_err(|e| e.to_string())));
        if variant == FeatureVariant::Combined {
            if let (Ok(k), Ok(r)) = (knn, rf) {
                combined_models = Some((k, r, prepared.test_x));
            }
        }
    }
    let ve = match combined_models {
        Some((k, r, test_x)) => {
            let model = EnsembleModel::new(k, r);
            let model = model.as_ref().map(|m| m as &dyn Predictor).map_err(|e| e.to_string());
            score_cell(FeatureVariant::Combined, Classifier::Ensemble, model, &test_x, &actual, &classes, averaging)
        }
        None => failed_row(
            FeatureVariant::Combined,
            Classifier::Ensemble,
            "ensemble members failed to train",
        ),
    };
    rows.push(ve);
    // report order, independent of evaluation order
    rows.sort_by_key(|r| GRID.iter().position(|&(v, c)| v == r.variant && c == r.classifier));
    Ok(GridReport {
        config: config.clone(),
        averaging,
        classes,
        train_size: train.len(),
        test_size: test.len(),
        rows,
    })
}

trait Predictor {
    fn predict_label(&self, v: &[f64]) -> Result<usize, ClassifyError>;
}

impl Predictor for KnnModel {
    fn predict_label(&self, v: &[f64]) -> Result<usize, ClassifyError> {
        Ok(self.predict(v)?.0)
    }
}

impl Predictor for RfModel {
    fn predict_label(&self, v: &[f64]) -> Result<usize, ClassifyError> {
        Ok(self.predict(v)?.0)
    }
}

impl Predictor for EnsembleModel {
    fn predict_label(&self, v: &[f64]) -> Result<usize, ClassifyError> {
        Ok(self.predict(v)?.0)
    }
}

fn failed_row(variant: FeatureVariant, classifier: Classifier, err: &str) -> EvaluationReport {
    EvaluationReport {
        name: cell_name(variant, classifier),
        variant,
        classifier,
        metrics: None,
        rounded: None,
        confusion: None,
        error: Some(err.to_string()),
    }
}

fn score_cell(
    variant: FeatureVariant,
    classifier: Classifier,
    model: Result<&dyn Predictor, String>,
    test_x: &[Vec<f64>],
    actual: &[&str],
    classes: &[String],
    averaging: Averaging,
) -> EvaluationReport {
    let model = match model {
        Ok(m) => m,
        Err(e) => return failed_row(variant, classifier, &e),
    };
    let run = || -> Result<(Metrics, ConfusionMatrix), EvalError> {
        let predicted = test_x
            .iter()
            .map(|x| model.predict_label(x).map(|i| classes[i].as_str()))
            .collect::<Result<Vec<_>, _>>()?;
        let cm = confusion(actual, &predicted, classes)?;
        Ok((metrics(&cm, averaging)?, cm))
    };
    match run() {
        Ok((m, cm)) => EvaluationReport {
            name: cell_name(variant, classifier),
            variant,
            classifier,
            metrics: Some(m),
            rounded: Some(m.rounded()),
            confusion: Some(cm),
            error: None,
        },
        Err(e) => failed_row(variant, classifier, &e.to_string()),
    }
}
