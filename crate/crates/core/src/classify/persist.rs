//! Versioned JSON model files.

use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{ClassifyError, KnnModel, Model, Node, RfModel};
use crate::features::{ExtractConfig, FeatureVariant, Standardizer};

pub const FORMAT_VERSION: u32 = 1;

/// How raw images become model inputs; stored with the model so `predict`
/// needs no other file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineInfo {
    pub variant: FeatureVariant,
    pub extract: ExtractConfig,
    pub standardizer: Option<Standardizer>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SavedModel {
    pub format_version: u32,
    pub model: Model,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pipeline: Option<PipelineInfo>,
}

impl SavedModel {
    pub fn new(model: Model, pipeline: Option<PipelineInfo>) -> Self {
        Self {
            format_version: FORMAT_VERSION,
            model,
            pipeline,
        }
    }
}

pub fn write_model<W: Write>(saved: &SavedModel, mut w: W) -> Result<(), ClassifyError> {
    serde_json::to_writer_pretty(&mut w, saved).map_err(|e| ClassifyError::Parse(e.to_string()))?;
    w.write_all(b"\n")?;
    Ok(())
}

pub fn save_model(saved: &SavedModel, path: &Path) -> Result<(), ClassifyError> {
    let f = std::fs::File::create(path)?;
    let mut w = std::io::BufWriter::new(f);
    write_model(saved, &mut w)?;
    w.flush()?;
    Ok(())
}

/// Parses and structurally validates a model document. The version is
/// checked before the body so future formats fail with `VersionMismatch`.
pub fn read_model<R: Read>(r: R) -> Result<SavedModel, ClassifyError> {
    let value: serde_json::Value =
        serde_json::from_reader(r).map_err(|e| ClassifyError::Parse(e.to_string()))?;
    let found = value.get("format_version");
    if found.and_then(|v| v.as_u64()) != Some(u64::from(FORMAT_VERSION)) {
        return Err(ClassifyError::VersionMismatch {
            found: found.map_or_else(|| "none".to_string(), |v| v.to_string()),
            expected: FORMAT_VERSION,
        });
    }
    let saved: SavedModel =
        serde_json::from_value(value).map_err(|e| ClassifyError::Parse(e.to_string()))?;
    validate(&saved)?;
    Ok(saved)
}

pub fn load_model(path: &Path) -> Result<SavedModel, ClassifyError> {
    read_model(std::io::BufReader::new(std::fs::File::open(path)?))
}

fn invalid(msg: impl Into<String>) -> ClassifyError {
    ClassifyError::Parse(msg.into())
}

fn validate_knn(m: &KnnModel) -> Result<(), ClassifyError> {
    // refitting re-runs every constructor check
    KnnModel::fit(
        m.k(),
        m.train_rows().to_vec(),
        m.train_labels().to_vec(),
        m.classes().to_vec(),
    )
    .map_err(|e| invalid(format!("knn: {e}")))?;
    Ok(())
}

fn validate_rf(m: &RfModel) -> Result<(), ClassifyError> {
    let n_classes = m.classes().len();
    if m.trees().is_empty() || m.dim() == 0 || n_classes == 0 {
        return Err(invalid("rf: empty forest, dimension, or class list"));
    }
    for (t, tree) in m.trees().iter().enumerate() {
        if tree.nodes.is_empty() {
            return Err(invalid(format!("rf: tree {t} has no nodes")));
        }
        for (at, node) in tree.nodes.iter().enumerate() {
            match node {
                Node::Leaf { freq } => {
                    if freq.len() != n_classes || freq.iter().any(|f| !f.is_finite()) {
                        return Err(invalid(format!("rf: tree {t} node {at} has a bad leaf")));
                    }
                }
                Node::Split {
                    feature,
                    left,
                    right,
                    ..
                } => {
                    // children always follow their parent, so traversal terminates
                    let n = tree.nodes.len();
                    if *feature >= m.dim() || *left <= at || *right <= at || *left >= n || *right >= n {
                        return Err(invalid(format!("rf: tree {t} node {at} has a bad split")));
                    }
                }
            }
        }
    }
    Ok(())
}

fn validate(saved: &SavedModel) -> Result<(), ClassifyError> {
    match &saved.model {
        Model::Knn(m) => validate_knn(m)?,
        Model::Rf(m) => validate_rf(m)?,
        Model::Ensemble(e) => {
            validate_knn(e.knn())?;
            validate_rf(e.rf())?;
            if e.knn().classes() != e.rf().classes() || e.knn().dim() != e.rf().dim() {
                return Err(invalid("ensemble members disagree"));
            }
        }
    }
    if let Some(p) = &saved.pipeline {
        if let Some(s) = &p.standardizer {
            if s.dim() != saved.model.dim() || s.std.len() != s.dim() {
                return Err(invalid("standardizer dimension disagrees with the model"));
            }
        }
        if !(2..=256).contains(&p.extract.levels) || p.extract.distance == 0 {
            return Err(invalid("pipeline extraction settings out of range"));
        }
        if matches!(p.extract.resize, Some((0, _)) | Some((_, 0))) {
            return Err(invalid("pipeline resize target has a zero dimension"));
        }
    }
    Ok(())
}
