//! Feature-vector assembly (GLCM, LBP, or both), z-score standardization,
//! and the feature CSV interchange format.
//!
//! CSV layout: a header `source,label,f0,...,fN` followed by one row per
//! vector. Values are written in shortest round-trip decimal form. The
//! variant is not stored explicitly; every (variant, aggregation, LBP mode)
//! combination has a distinct length, so it is recovered from the column count.

use std::fmt;
use std::io::{Read, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::glcm::{self, Aggregation, GlcmError};
use crate::imaging::{self, GrayImage, ImageError};
use crate::lbp::{self, LbpError, LbpMode};

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error(transparent)]
    Image(#[from] ImageError),
    #[error(transparent)]
    Glcm(#[from] GlcmError),
    #[error(transparent)]
    Lbp(#[from] LbpError),
    #[error("standardizer needs at least 2 training vectors (got {0})")]
    EmptyTrainingSet(usize),
    #[error("feature vectors have mixed lengths ({first} and {other})")]
    MixedLengths { first: usize, other: usize },
    #[error("dimension mismatch: expected {expected}, got {actual}")]
    DimensionMismatch { expected: usize, actual: usize },
    #[error("I/O failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("feature file schema mismatch: {0}")]
    SchemaMismatch(String),
}

impl From<csv::Error> for FeatureError {
    fn from(e: csv::Error) -> Self {
        match e.into_kind() {
            csv::ErrorKind::Io(io) => FeatureError::Io(io),
            other => FeatureError::SchemaMismatch(format!("{other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureVariant {
    Glcm,
    Lbp,
    Combined,
}

impl FeatureVariant {
    pub const ALL: [FeatureVariant; 3] =
        [FeatureVariant::Glcm, FeatureVariant::Lbp, FeatureVariant::Combined];

    pub fn name(self) -> &'static str {
        match self {
            FeatureVariant::Glcm => "glcm",
            FeatureVariant::Lbp => "lbp",
            FeatureVariant::Combined => "combined",
        }
    }

    pub fn len(self, aggregation: Aggregation, mode: LbpMode) -> usize {
        match self {
            FeatureVariant::Glcm => aggregation.block_len(),
            FeatureVariant::Lbp => mode.bins(),
            FeatureVariant::Combined => aggregation.block_len() + mode.bins(),
        }
    }

    /// Recovers the layout that produces vectors of length `dim`.
    pub fn infer(dim: usize) -> Option<FeatureLayout> {
        const AGGS: [Aggregation; 2] = [Aggregation::Average, Aggregation::Concatenate];
        const MODES: [LbpMode; 2] = [LbpMode::RotationInvariant, LbpMode::Raw];
        for variant in FeatureVariant::ALL {
            for aggregation in AGGS {
                for lbp_mode in MODES {
                    if variant.len(aggregation, lbp_mode) == dim {
                        return Some(FeatureLayout {
                            variant,
                            aggregation,
                            lbp_mode,
                        });
                    }
                }
            }
        }
        None
    }
}

impl fmt::Display for FeatureVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for FeatureVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "glcm" => Ok(FeatureVariant::Glcm),
            "lbp" => Ok(FeatureVariant::Lbp),
            "combined" => Ok(FeatureVariant::Combined),
            _ => Err(format!("unknown feature variant `{s}`")),
        }
    }
}

/// Variant plus the settings that determine its length. For a GLCM-only
/// layout `lbp_mode` is irrelevant (and vice versa); inference reports the default.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FeatureLayout {
    pub variant: FeatureVariant,
    pub aggregation: Aggregation,
    pub lbp_mode: LbpMode,
}

/// Extraction settings shared by every variant.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExtractConfig {
    /// Working resolution; `None` keeps the source size.
    pub resize: Option<(usize, usize)>,
    pub levels: usize,
    pub distance: usize,
    pub aggregation: Aggregation,
    pub lbp_mode: LbpMode,
}

impl Default for ExtractConfig {
    fn default() -> Self {
        Self {
            resize: Some((128, 128)),
            levels: 8,
            distance: 1,
            aggregation: Aggregation::Average,
            lbp_mode: LbpMode::RotationInvariant,
        }
    }
}

impl ExtractConfig {
    pub fn len(&self, variant: FeatureVariant) -> usize {
        variant.len(self.aggregation, self.lbp_mode)
    }

    pub fn glcm_len(&self) -> usize {
        self.aggregation.block_len()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub variant: FeatureVariant,
    pub values: Vec<f64>,
    pub label: String,
    pub source: String,
}

impl FeatureVector {
    /// Slices one variant out of a combined vector (GLCM block first).
    pub fn project(&self, variant: FeatureVariant, glcm_len: usize) -> FeatureVector {
        assert_eq!(self.variant, FeatureVariant::Combined, "project needs a combined vector");
        let values = match variant {
            FeatureVariant::Glcm => self.values[..glcm_len].to_vec(),
            FeatureVariant::Lbp => self.values[glcm_len..].to_vec(),
            FeatureVariant::Combined => self.values.clone(),
        };
        FeatureVector {
            variant,
            values,
            label: self.label.clone(),
            source: self.source.clone(),
        }
    }
}

/// Raw feature values for `img`: GLCM on `quantize(resize(img))`, LBP on `resize(img)`.
pub fn extract_values(
    img: &GrayImage,
    variant: FeatureVariant,
    cfg: &ExtractConfig,
) -> Result<Vec<f64>, FeatureError> {
    let resized;
    let work = match cfg.resize {
        Some((w, h)) => {
            resized = imaging::resize(img, w, h)?;
            &resized
        }
        None => img,
    };
    let mut values = Vec::with_capacity(cfg.len(variant));
    if matches!(variant, FeatureVariant::Glcm | FeatureVariant::Combined) {
        let q = imaging::quantize(work, cfg.levels)?;
        values.extend(glcm::glcm_feature_block(&q, cfg.distance, cfg.aggregation)?);
    }
    if matches!(variant, FeatureVariant::Lbp | FeatureVariant::Combined) {
        values.extend(lbp::lbp_histogram(work, cfg.lbp_mode)?.bins);
    }
    Ok(values)
}

pub fn extract(
    img: &GrayImage,
    variant: FeatureVariant,
    cfg: &ExtractConfig,
    label: impl Into<String>,
    source: impl Into<String>,
) -> Result<FeatureVector, FeatureError> {
    Ok(FeatureVector {
        variant,
        values: extract_values(img, variant, cfg)?,
        label: label.into(),
        source: source.into(),
    })
}

const STD_FLOOR: f64 = 1e-12;

/// Per-dimension z-score transform fitted on training vectors.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Standardizer {
    pub mean: Vec<f64>,
    pub std: Vec<f64>,
}

impl Standardizer {
    /// Population mean and standard deviation; deviations are floored at 1e-12.
    pub fn fit<'a, I>(train: I) -> Result<Self, FeatureError>
    where
        I: IntoIterator<Item = &'a [f64]>,
    {
        let rows: Vec<&[f64]> = train.into_iter().collect();
        if rows.len() < 2 {
            return Err(FeatureError::EmptyTrainingSet(rows.len()));
        }
        let dim = rows[0].len();
        if let Some(bad) = rows.iter().find(|r| r.len() != dim) {
            return Err(FeatureError::MixedLengths {
                first: dim,
                other: bad.len(),
            });
        }
        let n = rows.len() as f64;
        let mut mean = vec![0.0; dim];
        for r in &rows {
            for (m, v) in mean.iter_mut().zip(r.iter()) {
                *m += v;
            }
        }
        mean.iter_mut().for_each(|m| *m /= n);
        let mut var = vec![0.0; dim];
        for r in &rows {
            for ((s, v), m) in var.iter_mut().zip(r.iter()).zip(&mean) {
                *s += (v - m).powi(2);
            }
        }
        let std = var.into_iter().map(|s| (s / n).sqrt().max(STD_FLOOR)).collect();
        Ok(Self { mean, std })
    }

    pub fn fit_vectors(train: &[FeatureVector]) -> Result<Self, FeatureError> {
        Self::fit(train.iter().map(|v| v.values.as_slice()))
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Returns true for dimensions whose deviation hit the floor.
    pub fn is_floored(&self, dim: usize) -> bool {
        self.std[dim] <= STD_FLOOR
    }

    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>, FeatureError> {
        self.check(values)?;
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(v, (m, s))| (v - m) / s)
            .collect())
    }

    pub fn inverse(&self, values: &[f64]) -> Result<Vec<f64>, FeatureError> {
        self.check(values)?;
        Ok(values
            .iter()
            .zip(self.mean.iter().zip(&self.std))
            .map(|(z, (m, s))| z * s + m)
            .collect())
    }

    pub fn apply(&self, v: &FeatureVector) -> Result<FeatureVector, FeatureError> {
        Ok(FeatureVector {
            values: self.transform(&v.values)?,
            ..v.clone()
        })
    }

    fn check(&self, values: &[f64]) -> Result<(), FeatureError> {
        if values.len() != self.dim() {
            return Err(FeatureError::DimensionMismatch {
                expected: self.dim(),
                actual: values.len(),
            });
        }
        Ok(())
    }
}

fn uniform_dim(set: &[FeatureVector]) -> Result<usize, FeatureError> {
    let Some(first) = set.first() else {
        return Ok(0);
    };
    let dim = first.values.len();
    for v in set {
        if v.values.len() != dim {
            return Err(FeatureError::MixedLengths {
                first: dim,
                other: v.values.len(),
            });
        }
        if v.variant != first.variant {
            return Err(FeatureError::SchemaMismatch(format!(
                "mixed variants {} and {}",
                first.variant, v.variant
            )));
        }
    }
    Ok(dim)
}

pub fn write_features<W: Write>(set: &[FeatureVector], w: W) -> Result<(), FeatureError> {
    let dim = uniform_dim(set)?;
    let mut out = csv::WriterBuilder::new()
        .terminator(csv::Terminator::Any(b'\n'))
        .from_writer(w);
    let mut header = vec!["source".to_string(), "label".to_string()];
    header.extend((0..dim).map(|i| format!("f{i}")));
    out.write_record(&header)?;
    for v in set {
        if let Some(bad) = v.values.iter().find(|x| !x.is_finite()) {
            return Err(FeatureError::SchemaMismatch(format!(
                "non-finite value {bad} in {}",
                v.source
            )));
        }
        let mut row = vec![v.source.clone(), v.label.clone()];
        row.extend(v.values.iter().map(|x| x.to_string()));
        out.write_record(&row)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a feature CSV. The variant is inferred from the column count.
pub fn read_features<R: Read>(r: R) -> Result<Vec<FeatureVector>, FeatureError> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
    let mut records = rdr.records();
    let header = match records.next() {
        Some(h) => h?,
        None => return Err(FeatureError::SchemaMismatch("missing header row".into())),
    };
    if header.len() < 2 || &header[0] != "source" || &header[1] != "label" {
        return Err(FeatureError::SchemaMismatch(
            "header must start with `source,label`".into(),
        ));
    }
    for (i, name) in header.iter().skip(2).enumerate() {
        if name != format!("f{i}") {
            return Err(FeatureError::SchemaMismatch(format!(
                "column {} is `{name}`, expected `f{i}`",
                i + 2
            )));
        }
    }
    let dim = header.len() - 2;
    let variant = if dim == 0 {
        None
    } else {
        Some(
            FeatureVariant::infer(dim)
                .ok_or_else(|| {
                    FeatureError::SchemaMismatch(format!("{dim} feature columns match no variant"))
                })?
                .variant,
        )
    };
    let mut set = Vec::new();
    for (row, rec) in records.enumerate() {
        let rec = rec?;
        let Some(variant) = variant else {
            return Err(FeatureError::SchemaMismatch("data row without feature columns".into()));
        };
        if rec.len() != header.len() {
            return Err(FeatureError::SchemaMismatch(format!(
                "row {} has {} fields, expected {}",
                row + 1,
                rec.len(),
                header.len()
            )));
        }
        let values = rec
            .iter()
            .skip(2)
            .map(|s| match s.parse::<f64>() {
                Ok(v) if v.is_finite() => Ok(v),
                _ => Err(FeatureError::SchemaMismatch(format!(
                    "row {}: invalid value `{s}`",
                    row + 1
                ))),
            })
            .collect::<Result<Vec<_>, _>>()?;
        set.push(FeatureVector {
            variant,
            values,
            label: rec[1].to_string(),
            source: rec[0].to_string(),
        });
    }
    Ok(set)
}

pub fn save_features(set: &[FeatureVector], path: &Path) -> Result<(), FeatureError> {
    let file = std::fs::File::create(path)?;
    write_features(set, std::io::BufWriter::new(file))
}

pub fn load_features(path: &Path) -> Result<Vec<FeatureVector>, FeatureError> {
    read_features(std::io::BufReader::new(std::fs::File::open(path)?))
}
