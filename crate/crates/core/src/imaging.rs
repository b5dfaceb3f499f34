//! Image decoding and pre-processing: grayscale conversion, bilinear resize,
//! rotation about the image center, and gray-level quantization.
//!
//! PGM (P2/P5) and PPM (P3/P6) are decoded natively. PNG and BMP go through
//! the `image` crate and are then converted with [`to_grayscale`].

use std::io::Write;

use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum ImageError {
    #[error("unsupported image format")]
    UnsupportedFormat,
    #[error("corrupt image file: {0}")]
    CorruptFile(String),
    #[error("image dimensions must be at least 1x1 (got {width}x{height})")]
    ZeroDimension { width: usize, height: usize },
    #[error("pixel buffer has {actual} elements, expected {expected}")]
    BufferSize { expected: usize, actual: usize },
    #[error("quantization level count must be in 2..=256 (got {0})")]
    BadLevelCount(usize),
}

fn corrupt(msg: impl Into<String>) -> ImageError {
    ImageError::CorruptFile(msg.into())
}

/// Row-major 8-bit grayscale raster.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: usize,
    height: usize,
    data: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, data: Vec<u8>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| corrupt("dimension overflow"))?;
        if data.len() != expected {
            return Err(ImageError::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn filled(width: usize, height: usize, value: u8) -> Result<Self, ImageError> {
        Self::new(width, height, vec![value; width.saturating_mul(height)])
    }

    pub fn from_fn(
        width: usize,
        height: usize,
        mut f: impl FnMut(usize, usize) -> u8,
    ) -> Result<Self, ImageError> {
        let mut data = Vec::with_capacity(width.saturating_mul(height));
        for y in 0..height {
            for x in 0..width {
                data.push(f(x, y));
            }
        }
        Self::new(width, height, data)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    pub fn into_data(self) -> Vec<u8> {
        self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }

    pub fn transpose(&self) -> GrayImage {
        GrayImage::from_fn(self.height, self.width, |x, y| self.get(y, x))
            .expect("transpose preserves a valid shape")
    }

    /// Encodes as binary PGM (P5, maxval 255).
    pub fn write_pgm<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        write!(w, "P5\n{} {}\n255\n", self.width, self.height)?;
        w.write_all(&self.data)
    }

    pub fn to_pgm_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(self.data.len() + 20);
        self.write_pgm(&mut out).expect("writing to a Vec cannot fail");
        out
    }

    /// Encodes as plain PGM (P2), at most 16 samples per line.
    pub fn to_plain_pgm(&self) -> String {
        let mut s = format!("P2\n{} {}\n255\n", self.width, self.height);
        for row in self.data.chunks(self.width) {
            for (i, chunk) in row.chunks(16).enumerate() {
                if i > 0 {
                    s.push('\n');
                }
                let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
                s.push_str(&line.join(" "));
            }
            s.push('\n');
        }
        s
    }
}

/// Row-major interleaved RGB raster.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    data: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, data: Vec<[u8; 3]>) -> Result<Self, ImageError> {
        if width == 0 || height == 0 {
            return Err(ImageError::ZeroDimension { width, height });
        }
        let expected = width
            .checked_mul(height)
            .ok_or_else(|| corrupt("dimension overflow"))?;
        if data.len() != expected {
            return Err(ImageError::BufferSize {
                expected,
                actual: data.len(),
            });
        }
        Ok(Self {
            width,
            height,
            data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.data
    }
}

/// BT.601 luma, `round(0.299 R + 0.587 G + 0.114 B)` in exact integer arithmetic.
#[inline]
pub fn luma(rgb: [u8; 3]) -> u8 {
    let [r, g, b] = rgb.map(u32::from);
    ((299 * r + 587 * g + 114 * b + 500) / 1000) as u8
}

pub fn to_grayscale(rgb: &RgbImage) -> GrayImage {
    GrayImage {
        width: rgb.width,
        height: rgb.height,
        data: rgb.data.iter().copied().map(luma).collect(),
    }
}

/// Quantized raster: every element is a level index in `0..levels`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct QuantizedImage {
    width: usize,
    height: usize,
    levels: usize,
    data: Vec<u8>,
}

impl QuantizedImage {
    /// Builds a quantized image from level indices directly.
    pub fn new(
        width: usize,
        height: usize,
        levels: usize,
        data: Vec<u8>,
    ) -> Result<Self, ImageError> {
        if !(2..=256).contains(&levels) {
            return Err(ImageError::BadLevelCount(levels));
        }
        let gray = GrayImage::new(width, height, data)?;
        if let Some(&bad) = gray.data.iter().find(|&&v| usize::from(v) >= levels) {
            return Err(corrupt(format!("level {bad} out of range for {levels} levels")));
        }
        Ok(Self {
            width,
            height,
            levels,
            data: gray.data,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn data(&self) -> &[u8] {
        &self.data
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.data[y * self.width + x]
    }
}

/// Maps one intensity to its level: `floor(v * levels / 256)`.
#[inline]
pub fn quantize_value(v: u8, levels: usize) -> u8 {
    ((usize::from(v) * levels) >> 8) as u8
}

pub fn quantize(img: &GrayImage, levels: usize) -> Result<QuantizedImage, ImageError> {
    if !(2..=256).contains(&levels) {
        return Err(ImageError::BadLevelCount(levels));
    }
    Ok(QuantizedImage {
        width: img.width,
        height: img.height,
        levels,
        data: img.data.iter().map(|&v| quantize_value(v, levels)).collect(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Interpolation {
    #[default]
    Bilinear,
    Nearest,
}

#[inline]
fn round_u8(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// Bilinear sample at a point already known to lie inside `[0, w-1] x [0, h-1]`.
#[inline]
fn sample_bilinear(img: &GrayImage, sx: f64, sy: f64) -> f64 {
    let x0 = sx.floor() as usize;
    let y0 = sy.floor() as usize;
    let x1 = (x0 + 1).min(img.width - 1);
    let y1 = (y0 + 1).min(img.height - 1);
    let fx = sx - x0 as f64;
    let fy = sy - y0 as f64;
    let p = |x, y| f64::from(img.get(x, y));
    let top = p(x0, y0) * (1.0 - fx) + p(x1, y0) * fx;
    let bottom = p(x0, y1) * (1.0 - fx) + p(x1, y1) * fx;
    top * (1.0 - fy) + bottom * fy
}

/// Resizes with center-aligned sampling (`src = (dst + 0.5) * scale - 0.5`)
/// and edge clamping.
pub fn resize(img: &GrayImage, out_w: usize, out_h: usize) -> Result<GrayImage, ImageError> {
    resize_with(img, out_w, out_h, Interpolation::Bilinear)
}

pub fn resize_with(
    img: &GrayImage,
    out_w: usize,
    out_h: usize,
    interp: Interpolation,
) -> Result<GrayImage, ImageError> {
    if out_w == 0 || out_h == 0 {
        return Err(ImageError::ZeroDimension {
            width: out_w,
            height: out_h,
        });
    }
    if out_w == img.width && out_h == img.height {
        return Ok(img.clone());
    }
    let sx_scale = img.width as f64 / out_w as f64;
    let sy_scale = img.height as f64 / out_h as f64;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    GrayImage::from_fn(out_w, out_h, |x, y| {
        let sx = ((x as f64 + 0.5) * sx_scale - 0.5).clamp(0.0, max_x);
        let sy = ((y as f64 + 0.5) * sy_scale - 0.5).clamp(0.0, max_y);
        match interp {
            Interpolation::Bilinear => round_u8(sample_bilinear(img, sx, sy)),
            Interpolation::Nearest => img.get(sx.round() as usize, sy.round() as usize),
        }
    })
}

/// Exact (sin, cos) for multiples of 90 degrees, libm values otherwise.
fn sin_cos_degrees(degrees: f64) -> (f64, f64) {
    let r = degrees.rem_euclid(360.0);
    if r == 0.0 {
        (0.0, 1.0)
    } else if r == 90.0 {
        (1.0, 0.0)
    } else if r == 180.0 {
        (0.0, -1.0)
    } else if r == 270.0 {
        (-1.0, 0.0)
    } else {
        r.to_radians().sin_cos()
    }
}

const GRID_SNAP: f64 = 1e-9;

#[inline]
fn snap(v: f64) -> f64 {
    let r = v.round();
    if (v - r).abs() < GRID_SNAP {
        r
    } else {
        v
    }
}

/// Rotates counter-clockwise (as displayed, y pointing down) about the image
/// center. The canvas keeps its size; samples falling outside the source are 0.
pub fn rotate(img: &GrayImage, degrees: f64) -> GrayImage {
    rotate_with(img, degrees, Interpolation::Bilinear)
}

pub fn rotate_with(img: &GrayImage, degrees: f64, interp: Interpolation) -> GrayImage {
    let (sin, cos) = sin_cos_degrees(degrees);
    if sin == 0.0 && cos == 1.0 {
        return img.clone();
    }
    let cx = (img.width as f64 - 1.0) / 2.0;
    let cy = (img.height as f64 - 1.0) / 2.0;
    let max_x = (img.width - 1) as f64;
    let max_y = (img.height - 1) as f64;
    GrayImage::from_fn(img.width, img.height, |x, y| {
        let dx = x as f64 - cx;
        let dy = y as f64 - cy;
        let sx = snap(cx + dx * cos - dy * sin);
        let sy = snap(cy + dx * sin + dy * cos);
        if !(0.0..=max_x).contains(&sx) || !(0.0..=max_y).contains(&sy) {
            return 0;
        }
        match interp {
            Interpolation::Bilinear => round_u8(sample_bilinear(img, sx, sy)),
            Interpolation::Nearest => img.get(sx.round() as usize, sy.round() as usize),
        }
    })
    .expect("rotation keeps the source shape")
}

// ---------------------------------------------------------------------------
// Decoding

/// Tokenizer over a Netpbm header: whitespace separated, `#` comments to EOL.
struct PnmCursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> PnmCursor<'a> {
    fn skip_ws_and_comments(&mut self) {
        while let Some(&b) = self.bytes.get(self.pos) {
            if b == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    if c == b'\n' || c == b'\r' {
                        break;
                    }
                    self.pos += 1;
                }
            } else if b.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<u64, ImageError> {
        self.skip_ws_and_comments();
        let start = self.pos;
        let mut value: u64 = 0;
        while let Some(&b) = self.bytes.get(self.pos) {
            if !b.is_ascii_digit() {
                break;
            }
            value = value
                .checked_mul(10)
                .and_then(|v| v.checked_add(u64::from(b - b'0')))
                .ok_or_else(|| corrupt(format!("{what} overflows")))?;
            self.pos += 1;
        }
        if self.pos == start {
            return Err(corrupt(format!("expected {what}")));
        }
        Ok(value)
    }
}

struct PnmHeader {
    width: usize,
    height: usize,
    maxval: u64,
    channels: usize,
    binary: bool,
}

fn parse_pnm_header(cur: &mut PnmCursor<'_>) -> Result<PnmHeader, ImageError> {
    let magic = cur.bytes.get(..2).ok_or(ImageError::UnsupportedFormat)?;
    let (channels, binary) = match magic {
        b"P2" => (1, false),
        b"P5" => (1, true),
        b"P3" => (3, false),
        b"P6" => (3, true),
        _ => return Err(ImageError::UnsupportedFormat),
    };
    cur.pos = 2;
    match cur.bytes.get(2) {
        Some(b) if b.is_ascii_whitespace() || *b == b'#' => {}
        _ => return Err(corrupt("missing whitespace after magic number")),
    }
    let width = cur.number("width")?;
    let height = cur.number("height")?;
    let maxval = cur.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(corrupt("zero image dimension"));
    }
    if !(1..=65535).contains(&maxval) {
        return Err(corrupt(format!("maxval {maxval} outside 1..=65535")));
    }
    let width = usize::try_from(width).map_err(|_| corrupt("width too large"))?;
    let height = usize::try_from(height).map_err(|_| corrupt("height too large"))?;
    width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| corrupt("dimension overflow"))?;
    Ok(PnmHeader {
        width,
        height,
        maxval,
        channels,
        binary,
    })
}

fn rescale(v: u64, maxval: u64) -> u8 {
    if maxval == 255 {
        v as u8
    } else {
        ((v * 255 + maxval / 2) / maxval) as u8
    }
}

/// Decodes PGM/PPM bytes into samples, one `u8` per channel.
fn decode_pnm(bytes: &[u8]) -> Result<(PnmHeader, Vec<u8>), ImageError> {
    let mut cur = PnmCursor { bytes, pos: 0 };
    let header = parse_pnm_header(&mut cur)?;
    let count = header.width * header.height * header.channels;
    let mut samples = Vec::new();
    if header.binary {
        // exactly one whitespace byte separates maxval from the raster
        match bytes.get(cur.pos) {
            Some(b) if b.is_ascii_whitespace() => cur.pos += 1,
            _ => return Err(corrupt("missing whitespace before raster")),
        }
        let bps = if header.maxval < 256 { 1 } else { 2 };
        let payload = &bytes[cur.pos..];
        let needed = count
            .checked_mul(bps)
            .ok_or_else(|| corrupt("dimension overflow"))?;
        if payload.len() < needed {
            return Err(corrupt(format!(
                "raster truncated: {} bytes, expected {needed}",
                payload.len()
            )));
        }
        samples.reserve_exact(count);
        for chunk in payload[..needed].chunks_exact(bps) {
            let v = if bps == 1 {
                u64::from(chunk[0])
            } else {
                u64::from(u16::from_be_bytes([chunk[0], chunk[1]]))
            };
            if v > header.maxval {
                return Err(corrupt(format!("sample {v} exceeds maxval {}", header.maxval)));
            }
            samples.push(rescale(v, header.maxval));
        }
    } else {
        // plain samples need at least two bytes each except the last
        if bytes.len().saturating_sub(cur.pos) < count.saturating_mul(2).saturating_sub(1) {
            return Err(corrupt("raster truncated"));
        }
        samples.reserve_exact(count);
        for _ in 0..count {
            let v = cur.number("sample").map_err(|_| corrupt("raster truncated"))?;
            if v > header.maxval {
                return Err(corrupt(format!("sample {v} exceeds maxval {}", header.maxval)));
            }
            samples.push(rescale(v, header.maxval));
        }
    }
    Ok((header, samples))
}

/// Decodes an encoded raster into grayscale. PGM/PPM natively, PNG/BMP via `image`.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    if bytes.len() >= 2 && bytes[0] == b'P' && matches!(bytes[1], b'2' | b'3' | b'5' | b'6') {
        let (h, samples) = decode_pnm(bytes)?;
        return if h.channels == 1 {
            GrayImage::new(h.width, h.height, samples)
        } else {
            let px = samples.chunks_exact(3).map(|c| [c[0], c[1], c[2]]).collect();
            Ok(to_grayscale(&RgbImage::new(h.width, h.height, px)?))
        };
    }
    decode_other(bytes)
}

fn decode_other(bytes: &[u8]) -> Result<GrayImage, ImageError> {
    let format = image::guess_format(bytes).map_err(|_| ImageError::UnsupportedFormat)?;
    if !matches!(format, image::ImageFormat::Png | image::ImageFormat::Bmp) {
        return Err(ImageError::UnsupportedFormat);
    }
    let decoded = image::load_from_memory_with_format(bytes, format)
        .map_err(|e| corrupt(e.to_string()))?;
    let rgb = decoded.to_rgb8();
    let (w, h) = (rgb.width() as usize, rgb.height() as usize);
    let px = rgb.pixels().map(|p| p.0).collect();
    Ok(to_grayscale(&RgbImage::new(w, h, px)?))
}

pub fn read_image(path: &std::path::Path) -> Result<GrayImage, ReadError> {
    let bytes = std::fs::read(path)?;
    Ok(decode_image(&bytes)?)
}

#[derive(Debug, Error)]
pub enum ReadError {
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Image(#[from] ImageError),
}

#[cfg(test)]
mod tests {
    use super::*;

    fn img(w: usize, h: usize, data: &[u8]) -> GrayImage {
        GrayImage::new(w, h, data.to_vec()).unwrap()
    }

    #[test]
    fn plain_pgm_fixture() {
        let g = decode_image(b"P2\n2 2\n255\n0 0 255 255\n").unwrap();
        assert_eq!(g, img(2, 2, &[0, 0, 255, 255]));
    }

    #[test]
    fn pgm_comments_and_binary() {
        let g = decode_image(b"P2 # c\n# full line\n2 1 # w h\n255\n7 9").unwrap();
        assert_eq!(g.data(), &[7, 9]);
        let mut p5 = b"P5\n3 1\n255\n".to_vec();
        p5.extend_from_slice(&[1, 2, 3]);
        assert_eq!(decode_image(&p5).unwrap().data(), &[1, 2, 3]);
    }

    #[test]
    fn pgm_sixteen_bit_and_rescale() {
        let mut p5 = b"P5 2 1 65535\n".to_vec();
        p5.extend_from_slice(&[0xff, 0xff, 0x00, 0x00]);
        assert_eq!(decode_image(&p5).unwrap().data(), &[255, 0]);
        let g = decode_image(b"P2 3 1 15 0 15 7").unwrap();
        assert_eq!(g.data(), &[0, 255, 119]);
    }

    #[test]
    fn pgm_errors() {
        assert_eq!(decode_image(b"GIF89a"), Err(ImageError::UnsupportedFormat));
        assert_eq!(decode_image(b""), Err(ImageError::UnsupportedFormat));
        assert!(matches!(decode_image(b"P5\n4 4\n255\n\x01\x02"), Err(ImageError::CorruptFile(_))));
        assert!(matches!(decode_image(b"P2\n2 2\n255\n0 0 1"), Err(ImageError::CorruptFile(_))));
        assert!(matches!(decode_image(b"P2\n2 1\n10\n0 11"), Err(ImageError::CorruptFile(_))));
        assert!(matches!(decode_image(b"P2\n0 1\n255\n"), Err(ImageError::CorruptFile(_))));
        assert!(matches!(
            decode_image(b"P5 99999999999 99999999999 255\n"),
            Err(ImageError::CorruptFile(_))
        ));
    }

    #[test]
    fn ppm_goes_through_luma() {
        let g = decode_image(b"P3 2 1 255  100 150 200  255 255 255").unwrap();
        assert_eq!(g.data(), &[141, 255]);
    }

    #[test]
    fn luma_examples() {
        assert_eq!(luma([255, 255, 255]), 255);
        assert_eq!(luma([100, 150, 200]), 141);
        assert_eq!(luma([0, 255, 0]), 150);
        assert_eq!(luma([255, 0, 0]), 76);
        assert_eq!(luma([0, 0, 0]), 0);
        for v in 0..=255u8 {
            assert_eq!(luma([v, v, v]), v);
        }
    }

    #[test]
    fn png_via_image_crate() {
        let mut buf = Vec::new();
        let rgb = image::RgbImage::from_raw(2, 1, vec![100, 150, 200, 0, 255, 0]).unwrap();
        rgb.write_to(&mut std::io::Cursor::new(&mut buf), image::ImageFormat::Png)
            .unwrap();
        assert_eq!(decode_image(&buf).unwrap().data(), &[141, 150]);
    }

    #[test]
    fn pgm_roundtrip() {
        let g = GrayImage::from_fn(20, 3, |x, y| (x * 13 + y * 7) as u8).unwrap();
        assert_eq!(decode_image(&g.to_pgm_bytes()).unwrap(), g);
        assert_eq!(decode_image(g.to_plain_pgm().as_bytes()).unwrap(), g);
    }

    #[test]
    fn resize_examples() {
        let c = GrayImage::filled(4, 4, 100).unwrap();
        for (w, h) in [(1, 1), (3, 7), (9, 9)] {
            assert!(resize(&c, w, h).unwrap().data().iter().all(|&v| v == 100));
        }
        let g = img(2, 1, &[0, 255]);
        assert_eq!(resize(&g, 3, 1).unwrap().data(), &[0, 128, 255]);
        assert_eq!(resize(&g, 2, 1).unwrap(), g);
        assert!(matches!(resize(&g, 0, 1), Err(ImageError::ZeroDimension { .. })));
        assert_eq!(
            resize_with(&g, 4, 1, Interpolation::Nearest).unwrap().data(),
            &[0, 0, 255, 255]
        );
    }

    #[test]
    fn rotate_ninety_is_permutation() {
        let g = GrayImage::from_fn(5, 5, |x, y| (y * 5 + x) as u8).unwrap();
        let r = rotate(&g, 90.0);
        let mut a = g.data().to_vec();
        let mut b = r.data().to_vec();
        a.sort_unstable();
        b.sort_unstable();
        assert_eq!(a, b);
        // counter-clockwise: the right column becomes the top row
        assert_eq!(r.get(0, 0), g.get(4, 0));
        let back = rotate(&rotate(&rotate(&r, 90.0), 90.0), 90.0);
        assert_eq!(back, g);
        assert_eq!(rotate(&g, 0.0), g);
        assert_eq!(rotate(&g, 360.0), g);
    }

    #[test]
    fn rotate_even_square_and_half_turns() {
        let g = GrayImage::from_fn(4, 4, |x, y| (y * 40 + x * 3) as u8).unwrap();
        assert_eq!(rotate(&rotate(&rotate(&rotate(&g, 90.0), 90.0), 90.0), 90.0), g);
        assert_eq!(rotate(&rotate(&g, 180.0), 180.0), g);
        assert_eq!(rotate(&g, -90.0), rotate(&g, 270.0));
    }

    #[test]
    fn rotate_fills_corners_with_zero() {
        let g = GrayImage::filled(16, 16, 200).unwrap();
        let r = rotate(&g, 45.0);
        assert_eq!(r.get(0, 0), 0);
        assert_eq!(r.get(8, 8), 200);
        assert_eq!((r.width(), r.height()), (16, 16));
    }

    #[test]
    fn quantize_examples() {
        let g = img(3, 1, &[255, 0, 128]);
        assert_eq!(quantize(&g, 8).unwrap().data(), &[7, 0, 4]);
        assert_eq!(quantize(&g, 2).unwrap().data(), &[1, 0, 1]);
        assert_eq!(quantize(&g, 256).unwrap().data(), g.data());
        assert_eq!(quantize(&g, 1), Err(ImageError::BadLevelCount(1)));
        assert_eq!(quantize(&g, 257), Err(ImageError::BadLevelCount(257)));
    }

    #[test]
    fn quantize_exhaustive_bounds_and_monotone() {
        for levels in [2usize, 4, 8, 16, 32, 64, 128, 256] {
            let mut prev = 0;
            for v in 0..=255u8 {
                let q = quantize_value(v, levels);
                assert!(usize::from(q) < levels);
                assert!(q >= prev);
                prev = q;
            }
            assert_eq!(usize::from(quantize_value(255, levels)), levels - 1);
        }
    }

    #[test]
    fn constructor_validation() {
        assert!(matches!(GrayImage::new(0, 3, vec![]), Err(ImageError::ZeroDimension { .. })));
        assert!(matches!(GrayImage::new(2, 2, vec![0; 3]), Err(ImageError::BufferSize { .. })));
        assert!(QuantizedImage::new(2, 1, 2, vec![0, 2]).is_err());
    }
}
