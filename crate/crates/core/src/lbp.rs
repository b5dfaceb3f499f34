//! 8-neighbour local binary patterns and their rotation-invariant histogram.
//!
//! Bit `i` of a code belongs to the neighbour at `45° * i` counter-clockwise
//! from East (y pointing down):
//!
//! ```text
//!   3  2  1
//!   4  c  0
//!   5  6  7
//! ```
//!
//! A bit is set when the neighbour is greater than or equal to the center.
//! This order is frozen; raw-mode histograms depend on it.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::GrayImage;

/// `(dx, dy)` of neighbour `i`.
pub const NEIGHBOR_OFFSETS: [(isize, isize); 8] = [
    (1, 0),
    (1, -1),
    (0, -1),
    (-1, -1),
    (-1, 0),
    (-1, 1),
    (0, 1),
    (1, 1),
];

/// Number of rotation-invariant classes of 8-bit codes.
pub const RI_CLASS_COUNT: usize = 36;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum LbpError {
    #[error("LBP needs an image of at least 3x3 (got {width}x{height})")]
    ImageTooSmall { width: usize, height: usize },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum LbpMode {
    Raw,
    #[default]
    #[serde(rename = "ri")]
    RotationInvariant,
}

impl LbpMode {
    pub fn bins(self) -> usize {
        match self {
            LbpMode::Raw => 256,
            LbpMode::RotationInvariant => RI_CLASS_COUNT,
        }
    }
}

#[inline]
pub fn lbp_code(center: u8, neighbors: [u8; 8]) -> u8 {
    neighbors
        .iter()
        .enumerate()
        .fold(0u8, |code, (i, &n)| code | (u8::from(n >= center) << i))
}

/// Minimum over the eight cyclic bit rotations.
#[inline]
pub const fn ri_map(code: u8) -> u8 {
    let mut best = code;
    let mut r = 1;
    while r < 8 {
        let c = code.rotate_right(r);
        if c < best {
            best = c;
        }
        r += 1;
    }
    best
}

const fn build_ri_tables() -> ([u8; RI_CLASS_COUNT], [u8; 256]) {
    let mut classes = [0u8; RI_CLASS_COUNT];
    let mut bin_of = [0u8; 256];
    let mut n = 0;
    // canonical codes are visited in ascending order, so bins are sorted
    let mut c = 0;
    while c < 256 {
        if ri_map(c as u8) == c as u8 {
            classes[n] = c as u8;
            n += 1;
        }
        c += 1;
    }
    let mut c = 0;
    while c < 256 {
        let canon = ri_map(c as u8);
        let mut k = 0;
        while classes[k] != canon {
            k += 1;
        }
        bin_of[c] = k as u8;
        c += 1;
    }
    (classes, bin_of)
}

const RI_TABLES: ([u8; RI_CLASS_COUNT], [u8; 256]) = build_ri_tables();

/// Canonical codes, ascending; index = histogram bin in rotation-invariant mode.
pub const RI_CLASSES: [u8; RI_CLASS_COUNT] = RI_TABLES.0;
const RI_BIN: [u8; 256] = RI_TABLES.1;

/// Histogram bin of `code` under `mode`.
#[inline]
pub fn bin_index(code: u8, mode: LbpMode) -> usize {
    match mode {
        LbpMode::Raw => usize::from(code),
        LbpMode::RotationInvariant => usize::from(RI_BIN[usize::from(code)]),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LbpHistogram {
    pub mode: LbpMode,
    pub bins: Vec<f64>,
}

/// LBP codes of every interior pixel, row-major over `1..w-1 x 1..h-1`.
pub fn lbp_codes(img: &GrayImage) -> Result<Vec<u8>, LbpError> {
    let (w, h) = (img.width(), img.height());
    if w < 3 || h < 3 {
        return Err(LbpError::ImageTooSmall {
            width: w,
            height: h,
        });
    }
    let data = img.data();
    let offsets = NEIGHBOR_OFFSETS.map(|(dx, dy)| dy * w as isize + dx);
    let mut codes = Vec::with_capacity((w - 2) * (h - 2));
    for y in 1..h - 1 {
        for x in 1..w - 1 {
            let k = (y * w + x) as isize;
            let neighbors = offsets.map(|o| data[(k + o) as usize]);
            codes.push(lbp_code(data[k as usize], neighbors));
        }
    }
    Ok(codes)
}

/// Normalized code histogram over interior pixels; borders are skipped.
pub fn lbp_histogram(img: &GrayImage, mode: LbpMode) -> Result<LbpHistogram, LbpError> {
    let codes = lbp_codes(img)?;
    let mut counts = vec![0u64; mode.bins()];
    for &c in &codes {
        counts[bin_index(c, mode)] += 1;
    }
    let total = codes.len() as f64;
    Ok(LbpHistogram {
        mode,
        bins: counts.into_iter().map(|c| c as f64 / total).collect(),
    })
}
