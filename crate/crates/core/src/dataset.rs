//! Class-per-directory datasets, rotation augmentation, and the procedural
//! three-family texture generator.
//!
//! Layout: `root/<class>/<image>` with an optional `root/manifest.csv`
//! (`path,label,provenance`). Paths in a manifest are relative to the root and
//! use `/` separators. Rotated copies are named `<stem>__rot<angle>.pgm`.

use std::collections::HashSet;
use std::fmt;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};
use std::str::FromStr;

use rand::Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::imaging::{self, GrayImage, ReadError};
use crate::seed;

pub const MANIFEST_FILE: &str = "manifest.csv";
const ROT_MARKER: &str = "__rot";

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("no class directories under {0}")]
    NoClasses(PathBuf),
    #[error("no readable images under {0}")]
    EmptyDataset(PathBuf),
    #[error("invalid synthetic spec: {0}")]
    BadSpec(String),
    #[error("invalid rotation schedule: {step} degrees x {count} must stay below 360")]
    BadRotation { step: f64, count: usize },
    #[error("I/O failure on {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("manifest error: {0}")]
    Manifest(String),
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Provenance {
    Original,
    Rotated(f64),
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Provenance::Original => f.write_str("original"),
            Provenance::Rotated(a) => write!(f, "rotated:{a}"),
        }
    }
}

impl FromStr for Provenance {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if s == "original" {
            return Ok(Provenance::Original);
        }
        match s.strip_prefix("rotated:").map(str::parse::<f64>) {
            Some(Ok(a)) if a.is_finite() => Ok(Provenance::Rotated(a)),
            _ => Err(format!("bad provenance `{s}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestEntry {
    /// Relative to the dataset root, `/`-separated.
    pub path: String,
    pub label: String,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct DatasetManifest {
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

impl DatasetManifest {
    /// Builds a manifest whose class list is the sorted set of entry labels.
    pub fn from_entries(entries: Vec<ManifestEntry>) -> Result<Self, DatasetError> {
        let mut classes: Vec<String> = entries.iter().map(|e| e.label.clone()).collect();
        classes.sort_unstable();
        classes.dedup();
        let m = Self { classes, entries };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<(), DatasetError> {
        let mut seen = HashSet::new();
        for e in &self.entries {
            if !self.classes.contains(&e.label) {
                return Err(DatasetError::Manifest(format!("unknown class `{}`", e.label)));
            }
            if !seen.insert(e.path.as_str()) {
                return Err(DatasetError::Manifest(format!("duplicate path `{}`", e.path)));
            }
            if e.path.is_empty() || e.path.starts_with('/') || e.path.split('/').any(|c| c == "..") {
                return Err(DatasetError::Manifest(format!("path `{}` escapes the root", e.path)));
            }
        }
        Ok(())
    }

    pub fn originals(&self) -> impl Iterator<Item = &ManifestEntry> {
        self.entries
            .iter()
            .filter(|e| e.provenance == Provenance::Original)
    }

    pub fn class_counts(&self) -> Vec<(String, usize)> {
        self.classes
            .iter()
            .map(|c| (c.clone(), self.entries.iter().filter(|e| &e.label == c).count()))
            .collect()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> Result<(), DatasetError> {
        let mut out = csv::WriterBuilder::new()
            .terminator(csv::Terminator::Any(b'\n'))
            .from_writer(w);
        let wrap = |e: csv::Error| DatasetError::Manifest(e.to_string());
        out.write_record(["path", "label", "provenance"]).map_err(wrap)?;
        for e in &self.entries {
            out.write_record([e.path.as_str(), e.label.as_str(), &e.provenance.to_string()])
                .map_err(wrap)?;
        }
        out.flush().map_err(|e| DatasetError::Manifest(e.to_string()))
    }

    pub fn read_csv<R: Read>(r: R) -> Result<Self, DatasetError> {
        let mut rdr = csv::ReaderBuilder::new().has_headers(false).from_reader(r);
        let wrap = |e: csv::Error| DatasetError::Manifest(e.to_string());
        let mut records = rdr.records();
        let header = records
            .next()
            .ok_or_else(|| DatasetError::Manifest("missing header".into()))?
            .map_err(wrap)?;
        if header.iter().collect::<Vec<_>>() != ["path", "label", "provenance"] {
            return Err(DatasetError::Manifest("header must be `path,label,provenance`".into()));
        }
        let mut entries = Vec::new();
        for rec in records {
            let rec = rec.map_err(wrap)?;
            entries.push(ManifestEntry {
                path: rec[0].to_string(),
                label: rec[1].to_string(),
                provenance: rec[2].parse().map_err(DatasetError::Manifest)?,
            });
        }
        Self::from_entries(entries)
    }

    pub fn save(&self, path: &Path) -> Result<(), DatasetError> {
        let f = std::fs::File::create(path).map_err(io_err(path))?;
        self.write_csv(std::io::BufWriter::new(f))
    }

    pub fn load(path: &Path) -> Result<Self, DatasetError> {
        let f = std::fs::File::open(path).map_err(io_err(path))?;
        Self::read_csv(std::io::BufReader::new(f))
    }

    /// Decodes every entry (in parallel), preserving manifest order.
    pub fn load_images(&self, root: &Path) -> Vec<Result<GrayImage, ReadError>> {
        self.entries
            .par_iter()
            .map(|e| imaging::read_image(&root.join(&e.path)))
            .collect()
    }
}

/// Result of scanning a directory tree.
#[derive(Debug, Clone, PartialEq)]
pub struct Ingested {
    pub manifest: DatasetManifest,
    /// Files that could not be decoded, with the reason.
    pub skipped: Vec<(String, String)>,
}

fn provenance_from_name(stem: &str) -> Provenance {
    stem.rfind(ROT_MARKER)
        .and_then(|i| stem[i + ROT_MARKER.len()..].parse::<f64>().ok())
        .filter(|a| a.is_finite())
        .map_or(Provenance::Original, Provenance::Rotated)
}

fn sorted_dir(path: &Path) -> Result<Vec<PathBuf>, DatasetError> {
    let mut items = std::fs::read_dir(path)
        .map_err(io_err(path))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<Vec<_>, _>>()
        .map_err(io_err(path))?;
    items.sort();
    Ok(items)
}

/// Scans `root/<class>/<file>`; classes and files are sorted by name.
/// Files that fail to decode are skipped and reported.
pub fn ingest(root: &Path) -> Result<Ingested, DatasetError> {
    let class_dirs: Vec<PathBuf> = sorted_dir(root)?.into_iter().filter(|p| p.is_dir()).collect();
    if class_dirs.is_empty() {
        return Err(DatasetError::NoClasses(root.to_path_buf()));
    }
    let mut entries = Vec::new();
    let mut skipped = Vec::new();
    for dir in class_dirs {
        let Some(class) = dir.file_name().and_then(|n| n.to_str()).map(str::to_string) else {
            continue;
        };
        for file in sorted_dir(&dir)?.into_iter().filter(|p| p.is_file()) {
            let Some(name) = file.file_name().and_then(|n| n.to_str()) else {
                continue;
            };
            let rel = format!("{class}/{name}");
            match imaging::read_image(&file) {
                Ok(_) => {
                    let stem = file.file_stem().and_then(|s| s.to_str()).unwrap_or(name);
                    entries.push(ManifestEntry {
                        path: rel,
                        label: class.clone(),
                        provenance: provenance_from_name(stem),
                    });
                }
                Err(e) => {
                    log::warn!("skipping {rel}: {e}");
                    skipped.push((rel, e.to_string()));
                }
            }
        }
    }
    if entries.is_empty() {
        return Err(DatasetError::EmptyDataset(root.to_path_buf()));
    }
    Ok(Ingested {
        manifest: DatasetManifest::from_entries(entries)?,
        skipped,
    })
}

/// Loads `root/manifest.csv` when present, otherwise scans the tree.
pub fn open(root: &Path) -> Result<Ingested, DatasetError> {
    let manifest_path = root.join(MANIFEST_FILE);
    if manifest_path.is_file() {
        let manifest = DatasetManifest::load(&manifest_path)?;
        if manifest.entries.is_empty() {
            return Err(DatasetError::EmptyDataset(root.to_path_buf()));
        }
        return Ok(Ingested {
            manifest,
            skipped: Vec::new(),
        });
    }
    ingest(root)
}

fn write_pgm(img: &GrayImage, path: &Path) -> Result<(), DatasetError> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir).map_err(io_err(dir))?;
    }
    std::fs::write(path, img.to_pgm_bytes()).map_err(io_err(path))
}

fn rotated_name(rel: &str, angle: f64) -> String {
    let (dir, file) = rel.rsplit_once('/').unwrap_or(("", rel));
    let stem = file.rsplit_once('.').map_or(file, |(s, _)| s);
    let name = format!("{stem}{ROT_MARKER}{angle}.pgm");
    if dir.is_empty() {
        name
    } else {
        format!("{dir}/{name}")
    }
}

/// Writes `count` rotated copies (at `step`, `2*step`, ...) of every original
/// into `out`, copying the originals too unless `out` is `src_root`. Returns the
/// manifest of originals followed, per original, by its rotations.
pub fn augment_rotations(
    manifest: &DatasetManifest,
    src_root: &Path,
    step: f64,
    count: usize,
    out: &Path,
) -> Result<DatasetManifest, DatasetError> {
    if !step.is_finite() || step <= 0.0 || step * count as f64 >= 360.0 {
        return Err(DatasetError::BadRotation { step, count });
    }
    let same_root = match (src_root.canonicalize(), out.canonicalize()) {
        (Ok(a), Ok(b)) => a == b,
        _ => false,
    };
    let originals: Vec<&ManifestEntry> = manifest.originals().collect();
    let produced: Vec<Vec<ManifestEntry>> = originals
        .par_iter()
        .map(|e| -> Result<Vec<ManifestEntry>, DatasetError> {
            let src = src_root.join(&e.path);
            let img = imaging::read_image(&src).map_err(|err| DatasetError::Io {
                path: src.clone(),
                source: std::io::Error::other(err.to_string()),
            })?;
            let mut out_entries = Vec::with_capacity(count + 1);
            if !same_root {
                write_pgm(&img, &out.join(&e.path))?;
            }
            out_entries.push((*e).clone());
            for r in 1..=count {
                let angle = step * r as f64;
                let rel = rotated_name(&e.path, angle);
                write_pgm(&imaging::rotate(&img, angle), &out.join(&rel))?;
                out_entries.push(ManifestEntry {
                    path: rel,
                    label: e.label.clone(),
                    provenance: Provenance::Rotated(angle),
                });
            }
            Ok(out_entries)
        })
        .collect::<Result<_, _>>()?;
    DatasetManifest::from_entries(produced.into_iter().flatten().collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TextureFamily {
    Checkerboard,
    Stripes,
    BlobNoise,
}

impl TextureFamily {
    pub const ALL: [TextureFamily; 3] = [
        TextureFamily::Checkerboard,
        TextureFamily::Stripes,
        TextureFamily::BlobNoise,
    ];

    pub fn name(self) -> &'static str {
        match self {
            TextureFamily::Checkerboard => "checkerboard",
            TextureFamily::Stripes => "stripes",
            TextureFamily::BlobNoise => "blob-noise",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SyntheticSpec {
    pub per_class: usize,
    pub size: usize,
    /// Checkerboard cell edge in pixels.
    pub cell_range: (usize, usize),
    /// Stripe period in pixels.
    pub period_range: (f64, f64),
    /// Blob smoothing radius in pixels.
    pub blob_radius_range: (usize, usize),
    /// Standard deviation of the per-image additive Gaussian noise.
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        Self {
            per_class: 20,
            size: 128,
            cell_range: (6, 20),
            period_range: (8.0, 24.0),
            blob_radius_range: (2, 6),
            noise_sigma: 6.0,
            seed: 42,
        }
    }
}

impl SyntheticSpec {
    pub fn validate(&self) -> Result<(), DatasetError> {
        let bad = |m: &str| Err(DatasetError::BadSpec(m.to_string()));
        if self.per_class == 0 {
            return bad("per-class count must be at least 1");
        }
        if self.size < 16 {
            return bad("image size must be at least 16");
        }
        let (c0, c1) = self.cell_range;
        if c0 < 1 || c0 > c1 || c1 * 2 > self.size {
            return bad("cell range must satisfy 1 <= min <= max <= size/2");
        }
        let (p0, p1) = self.period_range;
        if !(p0 >= 2.0 && p0 <= p1 && p1 * 2.0 <= self.size as f64) {
            return bad("period range must satisfy 2 <= min <= max <= size/2");
        }
        let (r0, r1) = self.blob_radius_range;
        if r0 < 1 || r0 > r1 || r1 * 4 > self.size {
            return bad("blob radius range must satisfy 1 <= min <= max <= size/4");
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma <= 64.0) {
            return bad("noise sigma must be in [0, 64]");
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticImage {
    pub family: TextureFamily,
    /// `<class>/<class>_<index>.pgm`
    pub path: String,
    pub image: GrayImage,
}

fn two_levels(rng: &mut impl Rng) -> (f64, f64) {
    (rng.random_range(25.0..95.0), rng.random_range(160.0..230.0))
}

fn checkerboard(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<f64> {
    let n = spec.size;
    let cell = rng.random_range(spec.cell_range.0..=spec.cell_range.1);
    let (px, py) = (rng.random_range(0..cell), rng.random_range(0..cell));
    let (lo, hi) = two_levels(rng);
    (0..n * n)
        .map(|k| {
            let (x, y) = (k % n + px, k / n + py);
            if (x / cell + y / cell) % 2 == 0 {
                lo
            } else {
                hi
            }
        })
        .collect()
}

fn stripes(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<f64> {
    let n = spec.size;
    let period = rng.random_range(spec.period_range.0..=spec.period_range.1);
    let theta = rng.random_range(0.0..std::f64::consts::PI);
    let amp = rng.random_range(50.0..100.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    let (s, c) = theta.sin_cos();
    (0..n * n)
        .map(|k| {
            let (x, y) = ((k % n) as f64, (k / n) as f64);
            128.0 + amp * (std::f64::consts::TAU * (x * c + y * s) / period + phase).sin()
        })
        .collect()
}

/// Separable box blur with edge clamping.
fn box_blur(src: &[f64], n: usize, r: usize) -> Vec<f64> {
    let pass = |src: &[f64], horizontal: bool| -> Vec<f64> {
        let mut out = vec![0.0; n * n];
        for a in 0..n {
            for b in 0..n {
                let mut acc = 0.0;
                for d in 0..=2 * r {
                    let t = (b + d).saturating_sub(r).min(n - 1);
                    acc += if horizontal { src[a * n + t] } else { src[t * n + a] };
                }
                let v = acc / (2 * r + 1) as f64;
                if horizontal {
                    out[a * n + b] = v;
                } else {
                    out[b * n + a] = v;
                }
            }
        }
        out
    };
    pass(&pass(src, true), false)
}

fn blob_noise(spec: &SyntheticSpec, rng: &mut impl Rng) -> Vec<f64> {
    let n = spec.size;
    let r = rng.random_range(spec.blob_radius_range.0..=spec.blob_radius_range.1);
    let white: Vec<f64> = (0..n * n).map(|_| rng.random::<f64>()).collect();
    let smooth = box_blur(&box_blur(&white, n, r), n, r);
    let mut sorted = smooth.clone();
    sorted.sort_unstable_by(f64::total_cmp);
    let median = sorted[sorted.len() / 2];
    let (lo, hi) = two_levels(rng);
    smooth.into_iter().map(|v| if v < median { lo } else { hi }).collect()
}

/// Generates the base (unrotated) images in class order, `per_class` each.
pub fn synthesize(spec: &SyntheticSpec) -> Result<Vec<SyntheticImage>, DatasetError> {
    spec.validate()?;
    let jobs: Vec<(TextureFamily, usize)> = TextureFamily::ALL
        .iter()
        .flat_map(|&f| (0..spec.per_class).map(move |i| (f, i)))
        .collect();
    let images = jobs
        .par_iter()
        .enumerate()
        .map(|(k, &(family, i))| {
            let mut rng = seed::rng(seed::derive(spec.seed, k as u64));
            let noise = Normal::new(0.0, spec.noise_sigma).expect("validated sigma");
            loop {
                let base = match family {
                    TextureFamily::Checkerboard => checkerboard(spec, &mut rng),
                    TextureFamily::Stripes => stripes(spec, &mut rng),
                    TextureFamily::BlobNoise => blob_noise(spec, &mut rng),
                };
                let data: Vec<u8> = base
                    .into_iter()
                    .map(|v| (v + noise.sample(&mut rng)).round().clamp(0.0, 255.0) as u8)
                    .collect();
                if data.iter().any(|&v| v != data[0]) {
                    let image = GrayImage::new(spec.size, spec.size, data).expect("square buffer");
                    let name = family.name();
                    return SyntheticImage {
                        family,
                        path: format!("{name}/{name}_{i:03}.pgm"),
                        image,
                    };
                }
            }
        })
        .collect();
    Ok(images)
}

/// Writes the base images under `out` and returns their manifest.
pub fn generate_synthetic(spec: &SyntheticSpec, out: &Path) -> Result<DatasetManifest, DatasetError> {
    let images = synthesize(spec)?;
    images
        .par_iter()
        .try_for_each(|s| write_pgm(&s.image, &out.join(&s.path)))?;
    DatasetManifest::from_entries(
        images
            .into_iter()
            .map(|s| ManifestEntry {
                path: s.path,
                label: s.family.name().to_string(),
                provenance: Provenance::Original,
            })
            .collect(),
    )
}
