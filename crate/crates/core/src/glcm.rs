//! Symmetric, normalized gray-level co-occurrence matrices and the five
//! scalar texture statistics derived from them.
//!
//! Feature order is a serialization contract:
//! contrast, correlation, energy, homogeneity, entropy.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::QuantizedImage;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GlcmError {
    #[error("no pixel pair fits a {width}x{height} image at offset ({dx},{dy})")]
    NoValidPairs {
        width: usize,
        height: usize,
        dx: isize,
        dy: isize,
    },
    #[error("GLCM distance must be at least 1")]
    ZeroDistance,
}

/// The four orientations, angle measured counter-clockwise from East with y pointing down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum GlcmAngle {
    Deg0,
    Deg45,
    Deg90,
    Deg135,
}

impl GlcmAngle {
    pub const ALL: [GlcmAngle; 4] = [
        GlcmAngle::Deg0,
        GlcmAngle::Deg45,
        GlcmAngle::Deg90,
        GlcmAngle::Deg135,
    ];

    pub fn degrees(self) -> u32 {
        match self {
            GlcmAngle::Deg0 => 0,
            GlcmAngle::Deg45 => 45,
            GlcmAngle::Deg90 => 90,
            GlcmAngle::Deg135 => 135,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GlcmOffset {
    pub distance: usize,
    pub angle: GlcmAngle,
}

impl GlcmOffset {
    pub fn new(distance: usize, angle: GlcmAngle) -> Self {
        Self { distance, angle }
    }

    /// Pixel displacement `(dx, dy)`.
    pub fn delta(self) -> (isize, isize) {
        let d = self.distance as isize;
        match self.angle {
            GlcmAngle::Deg0 => (d, 0),
            GlcmAngle::Deg45 => (d, -d),
            GlcmAngle::Deg90 => (0, -d),
            GlcmAngle::Deg135 => (-d, -d),
        }
    }
}

/// Normalized symmetric co-occurrence matrix with its marginal mean and variance.
#[derive(Debug, Clone, PartialEq)]
pub struct GlcmMatrix {
    levels: usize,
    p: Vec<f64>,
    mu: f64,
    sigma2: f64,
}

impl GlcmMatrix {
    /// Normalizes a symmetric count matrix. `counts` is `levels x levels`, row-major.
    pub fn from_counts(levels: usize, counts: &[u64]) -> Option<Self> {
        assert_eq!(counts.len(), levels * levels);
        let total: u64 = counts.iter().sum();
        if total == 0 {
            return None;
        }
        let t = total as f64;
        let p: Vec<f64> = counts.iter().map(|&c| c as f64 / t).collect();
        let marginal: Vec<f64> = p.chunks(levels).map(|row| row.iter().sum()).collect();
        let mu: f64 = marginal.iter().enumerate().map(|(i, m)| i as f64 * m).sum();
        let sigma2: f64 = marginal
            .iter()
            .enumerate()
            .map(|(i, m)| (i as f64 - mu).powi(2) * m)
            .sum();
        Some(Self {
            levels,
            p,
            mu,
            sigma2,
        })
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    /// Row-major probabilities.
    pub fn probabilities(&self) -> &[f64] {
        &self.p
    }

    #[inline]
    pub fn p(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.levels + j]
    }

    pub fn mu(&self) -> f64 {
        self.mu
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    fn cells(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        let n = self.levels;
        self.p
            .iter()
            .enumerate()
            .map(move |(k, &v)| (k / n, k % n, v))
    }
}

/// Counts every ordered pair `(p, p + offset)` inside the image into both
/// `(i, j)` and `(j, i)`, then normalizes.
pub fn compute_glcm(img: &QuantizedImage, offset: GlcmOffset) -> Result<GlcmMatrix, GlcmError> {
    if offset.distance == 0 {
        return Err(GlcmError::ZeroDistance);
    }
    let n = img.levels();
    let (w, h) = (img.width() as isize, img.height() as isize);
    let (dx, dy) = offset.delta();
    let no_pairs = || GlcmError::NoValidPairs {
        width: img.width(),
        height: img.height(),
        dx,
        dy,
    };
    // source pixels (x, y) whose partner (x+dx, y+dy) is in bounds
    let x_range = (0.max(-dx))..(w.min(w - dx));
    let y_range = (0.max(-dy))..(h.min(h - dy));
    if x_range.is_empty() || y_range.is_empty() {
        return Err(no_pairs());
    }
    let mut counts = vec![0u64; n * n];
    let data = img.data();
    let stride = img.width();
    for y in y_range {
        let row = &data[y as usize * stride..][..stride];
        let partner = &data[(y + dy) as usize * stride..][..stride];
        let xs = x_range.start as usize..x_range.end as usize;
        let ps = (x_range.start + dx) as usize..(x_range.end + dx) as usize;
        for (&a, &b) in row[xs].iter().zip(&partner[ps]) {
            let (a, b) = (usize::from(a), usize::from(b));
            counts[a * n + b] += 1;
            counts[b * n + a] += 1;
        }
    }
    GlcmMatrix::from_counts(n, &counts).ok_or_else(no_pairs)
}

pub fn contrast(m: &GlcmMatrix) -> f64 {
    m.cells()
        .map(|(i, j, p)| p * (i as f64 - j as f64).powi(2))
        .sum()
}

/// Returns 1.0 when the marginal variance is below 1e-12 (single-valued image).
pub fn correlation(m: &GlcmMatrix) -> f64 {
    if m.sigma2 < 1e-12 {
        return 1.0;
    }
    let mu = m.mu;
    let cov: f64 = m
        .cells()
        .map(|(i, j, p)| p * (i as f64 - mu) * (j as f64 - mu))
        .sum();
    cov / m.sigma2
}

pub fn energy(m: &GlcmMatrix) -> f64 {
    m.p.iter().map(|p| p * p).sum()
}

pub fn homogeneity(m: &GlcmMatrix) -> f64 {
    m.cells()
        .map(|(i, j, p)| p / (1.0 + (i as f64 - j as f64).powi(2)))
        .sum()
}

/// Natural-log entropy with `0 ln 0 = 0`.
pub fn glcm_entropy(m: &GlcmMatrix) -> f64 {
    m.p.iter()
        .filter(|&&p| p > 0.0)
        .map(|&p| -p.ln() * p)
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GlcmFeatures {
    pub contrast: f64,
    pub correlation: f64,
    pub energy: f64,
    pub homogeneity: f64,
    pub entropy: f64,
}

impl GlcmFeatures {
    pub const LEN: usize = 5;
    pub const NAMES: [&'static str; 5] =
        ["contrast", "correlation", "energy", "homogeneity", "entropy"];

    pub fn from_matrix(m: &GlcmMatrix) -> Self {
        Self {
            contrast: contrast(m),
            correlation: correlation(m),
            energy: energy(m),
            homogeneity: homogeneity(m),
            entropy: glcm_entropy(m),
        }
    }

    pub fn to_array(self) -> [f64; 5] {
        [
            self.contrast,
            self.correlation,
            self.energy,
            self.homogeneity,
            self.entropy,
        ]
    }
}

/// How the four per-angle feature sets are folded into one block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Aggregation {
    /// Per-feature mean over the four angles (5 values).
    #[default]
    Average,
    /// Angle-major concatenation (20 values).
    Concatenate,
}

impl Aggregation {
    pub fn block_len(self) -> usize {
        match self {
            Aggregation::Average => GlcmFeatures::LEN,
            Aggregation::Concatenate => GlcmFeatures::LEN * GlcmAngle::ALL.len(),
        }
    }
}

pub fn glcm_feature_block(
    img: &QuantizedImage,
    distance: usize,
    aggregation: Aggregation,
) -> Result<Vec<f64>, GlcmError> {
    let mut per_angle = [[0.0; 5]; 4];
    for (slot, angle) in per_angle.iter_mut().zip(GlcmAngle::ALL) {
        let m = compute_glcm(img, GlcmOffset::new(distance, angle))?;
        *slot = GlcmFeatures::from_matrix(&m).to_array();
    }
    Ok(match aggregation {
        Aggregation::Concatenate => per_angle.concat(),
        Aggregation::Average => (0..GlcmFeatures::LEN)
            .map(|f| per_angle.iter().map(|a| a[f]).sum::<f64>() / 4.0)
            .collect(),
    })
}
