//! Grayscale digital images over a d-dimensional box domain.
//!
//! Voxel values are stored row-major with the last axis fastest. Only sign
//! flips and comparisons are ever applied to values, so every pipeline in this
//! crate is exact on `f64`.

use std::fmt::Write as _;
use std::io::Read;
use std::path::Path;
use std::str::FromStr;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ImageError {
    #[error("parse error at byte {offset}: {message}")]
    Parse { offset: usize, message: String },
    #[error("invalid image: {0}")]
    Invalid(String),
    #[error("precondition violated: {0}")]
    Precondition(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl ImageError {
    fn parse(offset: usize, message: impl Into<String>) -> Self {
        ImageError::Parse {
            offset,
            message: message.into(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum ImageFormat {
    /// `d`, then the `d` side lengths, then the values, whitespace separated.
    NdText,
    /// Netpbm graymap, ASCII (`P2`) or binary (`P5`).
    Pgm,
}

impl ImageFormat {
    /// Guesses the format from a file extension; anything but `.pgm` is NDTEXT.
    pub fn from_path(path: &Path) -> Self {
        match path.extension().and_then(|e| e.to_str()) {
            Some(ext) if ext.eq_ignore_ascii_case("pgm") => ImageFormat::Pgm,
            _ => ImageFormat::NdText,
        }
    }
}

impl FromStr for ImageFormat {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ndtext" | "nd" | "txt" => Ok(ImageFormat::NdText),
            "pgm" => Ok(ImageFormat::Pgm),
            other => Err(format!("unknown image format '{other}'")),
        }
    }
}

/// A real-valued function on the grid `[0, n_1) x ... x [0, n_d)`.
#[derive(Clone, Debug, PartialEq)]
pub struct GrayscaleImage {
    dims: Vec<usize>,
    values: Vec<f64>,
}

impl GrayscaleImage {
    pub fn new(dims: Vec<usize>, values: Vec<f64>) -> Result<Self, ImageError> {
        if dims.is_empty() {
            return Err(ImageError::Invalid("an image needs at least one axis".into()));
        }
        if let Some(axis) = dims.iter().position(|&n| n == 0) {
            return Err(ImageError::Invalid(format!("axis {axis} has length 0")));
        }
        let expected = dims
            .iter()
            .try_fold(1usize, |acc, &n| acc.checked_mul(n))
            .ok_or_else(|| ImageError::Invalid("voxel count overflows".into()))?;
        if values.len() != expected {
            return Err(ImageError::Invalid(format!(
                "expected {expected} values, got {}",
                values.len()
            )));
        }
        if let Some(i) = values.iter().position(|v| !v.is_finite()) {
            return Err(ImageError::Invalid(format!("value {i} is not finite")));
        }
        let values = values.into_iter().map(canonical_zero).collect();
        Ok(GrayscaleImage { dims, values })
    }

    /// A constant image.
    pub fn filled(dims: Vec<usize>, value: f64) -> Result<Self, ImageError> {
        let len: usize = dims.iter().product();
        Self::new(dims, vec![value; len])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn ndim(&self) -> usize {
        self.dims.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    /// Flat offset of a voxel, last axis fastest.
    pub fn offset(&self, index: &[usize]) -> usize {
        debug_assert_eq!(index.len(), self.dims.len());
        index.iter().zip(&self.dims).fold(0, |acc, (&i, &n)| acc * n + i)
    }

    pub fn get(&self, index: &[usize]) -> f64 {
        self.values[self.offset(index)]
    }

    pub fn min_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max_value(&self) -> f64 {
        self.values.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    /// Surrounds the image with a one-voxel shell of value `shell`, which must
    /// exceed every voxel value.
    pub fn pad(&self, shell: f64) -> Result<GrayscaleImage, ImageError> {
        let max = self.max_value();
        if shell.partial_cmp(&max) != Some(std::cmp::Ordering::Greater) || !shell.is_finite() {
            return Err(ImageError::Precondition(format!(
                "padding value {shell} must be finite and exceed the image maximum {max}"
            )));
        }
        let dims: Vec<usize> = self.dims.iter().map(|n| n + 2).collect();
        let total: usize = dims.iter().product();
        let mut values = vec![shell; total];
        let mut index = vec![0usize; self.ndim()];
        for &v in &self.values {
            let target = index.iter().zip(&dims).fold(0, |acc, (&i, &n)| acc * n + i + 1);
            values[target] = v;
            advance(&mut index, &self.dims);
        }
        GrayscaleImage::new(dims, values)
    }

    pub fn negate(&self) -> GrayscaleImage {
        GrayscaleImage {
            dims: self.dims.clone(),
            values: self.values.iter().map(|&v| canonical_zero(-v)).collect(),
        }
    }

    /// Serializes in NDTEXT, one row of the last axis per line.
    pub fn to_ndtext(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "{}", self.ndim());
        let dims: Vec<String> = self.dims.iter().map(|n| n.to_string()).collect();
        let _ = writeln!(out, "{}", dims.join(" "));
        let row = *self.dims.last().unwrap();
        for chunk in self.values.chunks(row) {
            let line: Vec<String> = chunk.iter().map(|v| v.to_string()).collect();
            let _ = writeln!(out, "{}", line.join(" "));
        }
        out
    }
}

/// Maps `-0.0` to `0.0` so that equal values are bitwise equal.
pub(crate) fn canonical_zero(v: f64) -> f64 {
    v + 0.0
}

/// Row-major odometer step; wraps to all zeros after the last index.
pub(crate) fn advance(index: &mut [usize], dims: &[usize]) {
    for axis in (0..index.len()).rev() {
        index[axis] += 1;
        if index[axis] < dims[axis] {
            return;
        }
        index[axis] = 0;
    }
}

pub fn load_image<R: Read>(mut source: R, format: ImageFormat) -> Result<GrayscaleImage, ImageError> {
    let mut bytes = Vec::new();
    source.read_to_end(&mut bytes)?;
    match format {
        ImageFormat::NdText => parse_ndtext(&bytes),
        ImageFormat::Pgm => parse_pgm(&bytes),
    }
}

pub fn load_image_file(path: &Path, format: Option<ImageFormat>) -> Result<GrayscaleImage, ImageError> {
    let file = std::fs::File::open(path)?;
    load_image(
        std::io::BufReader::new(file),
        format.unwrap_or_else(|| ImageFormat::from_path(path)),
    )
}

/// Whitespace-separated tokens with their byte offsets, skipping `#` comment lines.
fn ndtext_tokens(text: &str) -> Vec<(usize, &str)> {
    let mut tokens = Vec::new();
    let mut line_start = 0;
    for line in text.split_inclusive('\n') {
        if !line.trim_start().starts_with('#') {
            for tok in line.split_ascii_whitespace() {
                let offset = line_start + (tok.as_ptr() as usize - line.as_ptr() as usize);
                tokens.push((offset, tok));
            }
        }
        line_start += line.len();
    }
    tokens
}

fn parse_ndtext(bytes: &[u8]) -> Result<GrayscaleImage, ImageError> {
    let text =
        std::str::from_utf8(bytes).map_err(|e| ImageError::parse(e.valid_up_to(), "input is not valid UTF-8"))?;
    let tokens = ndtext_tokens(text);
    let mut iter = tokens.iter();

    let (off, tok) = iter
        .next()
        .ok_or_else(|| ImageError::parse(text.len(), "missing dimension count"))?;
    let ndim: usize = tok
        .parse()
        .map_err(|_| ImageError::parse(*off, format!("bad dimension count '{tok}'")))?;
    if ndim == 0 {
        return Err(ImageError::parse(*off, "dimension count must be at least 1"));
    }

    let mut dims = Vec::with_capacity(ndim);
    for _ in 0..ndim {
        let (off, tok) = iter
            .next()
            .ok_or_else(|| ImageError::parse(text.len(), "missing side length"))?;
        let n: usize = tok
            .parse()
            .map_err(|_| ImageError::parse(*off, format!("bad side length '{tok}'")))?;
        if n == 0 {
            return Err(ImageError::parse(*off, "side lengths must be positive"));
        }
        dims.push(n);
    }
    let expected = dims
        .iter()
        .try_fold(1usize, |acc, &n| acc.checked_mul(n))
        .ok_or_else(|| ImageError::parse(0, "voxel count overflows"))?;

    let rest: Vec<&(usize, &str)> = iter.collect();
    if rest.len() != expected {
        let offset = rest.get(expected).map(|(o, _)| *o).unwrap_or(text.len());
        return Err(ImageError::parse(
            offset,
            format!("value count mismatch: expected {expected}, found {}", rest.len()),
        ));
    }
    let mut values = Vec::with_capacity(expected);
    for (off, tok) in rest {
        let v: f64 = tok
            .parse()
            .map_err(|_| ImageError::parse(*off, format!("bad value '{tok}'")))?;
        if !v.is_finite() {
            return Err(ImageError::parse(*off, format!("non-finite value '{tok}'")));
        }
        values.push(v);
    }
    GrayscaleImage::new(dims, values)
}

struct PgmHeader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl PgmHeader<'_> {
    fn skip_space_and_comments(&mut self) {
        while self.pos < self.bytes.len() {
            match self.bytes[self.pos] {
                b'#' => {
                    while self.pos < self.bytes.len() && self.bytes[self.pos] != b'\n' {
                        self.pos += 1;
                    }
                }
                b if b.is_ascii_whitespace() => self.pos += 1,
                _ => break,
            }
        }
    }

    fn number(&mut self, what: &str) -> Result<usize, ImageError> {
        self.skip_space_and_comments();
        let start = self.pos;
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_digit() {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(ImageError::parse(start, format!("expected {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| ImageError::parse(start, format!("bad {what}")))
    }
}

fn parse_pgm(bytes: &[u8]) -> Result<GrayscaleImage, ImageError> {
    if bytes.len() < 2 || bytes[0] != b'P' || !(bytes[1] == b'2' || bytes[1] == b'5') {
        return Err(ImageError::parse(0, "expected PGM magic 'P2' or 'P5'"));
    }
    let binary = bytes[1] == b'5';
    let mut header = PgmHeader { bytes, pos: 2 };
    let width = header.number("width")?;
    let height = header.number("height")?;
    let maxval_at = header.pos;
    let maxval = header.number("maxval")?;
    if width == 0 || height == 0 {
        return Err(ImageError::parse(maxval_at, "PGM dimensions must be positive"));
    }
    if maxval == 0 || maxval > 65535 {
        return Err(ImageError::parse(maxval_at, format!("invalid maxval {maxval}")));
    }
    let count = width * height;
    let mut values = Vec::with_capacity(count);

    if binary {
        if maxval > 255 {
            return Err(ImageError::parse(
                maxval_at,
                "binary PGM with maxval > 255 is not supported",
            ));
        }
        // exactly one whitespace byte separates the header from the raster
        let start = header.pos + 1;
        if header.pos >= bytes.len() || !bytes[header.pos].is_ascii_whitespace() {
            return Err(ImageError::parse(header.pos, "missing whitespace after maxval"));
        }
        let raster = &bytes[start.min(bytes.len())..];
        if raster.len() != count {
            return Err(ImageError::parse(
                start,
                format!("value count mismatch: expected {count} bytes, found {}", raster.len()),
            ));
        }
        values.extend(raster.iter().map(|&b| b as f64));
    } else {
        for _ in 0..count {
            let at = header.pos;
            let v = header.number("pixel value").map_err(|e| match e {
                ImageError::Parse { offset, .. } if offset >= bytes.len() => {
                    ImageError::parse(offset, format!("value count mismatch: expected {count}"))
                }
                other => other,
            })?;
            if v > maxval {
                return Err(ImageError::parse(
                    at,
                    format!("pixel value {v} exceeds maxval {maxval}"),
                ));
            }
            values.push(v as f64);
        }
        header.skip_space_and_comments();
        if header.pos != bytes.len() {
            return Err(ImageError::parse(header.pos, "trailing data after pixel values"));
        }
    }
    GrayscaleImage::new(vec![height, width], values)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn nd(text: &str) -> Result<GrayscaleImage, ImageError> {
        load_image(text.as_bytes(), ImageFormat::NdText)
    }

    fn checkerboard() -> GrayscaleImage {
        GrayscaleImage::new(vec![2, 2], vec![0.0, 1.0, 1.0, 0.0]).unwrap()
    }

    #[test]
    fn ndtext_examples() {
        let img = nd("2\n2 2\n0 1\n1 0\n").unwrap();
        assert_eq!(img.dims(), &[2, 2]);
        assert_eq!(img.values(), &[0.0, 1.0, 1.0, 0.0]);

        let img = nd("1\n3\n5 5 5\n").unwrap();
        assert_eq!(img.dims(), &[3]);
        assert_eq!(img.values(), &[5.0, 5.0, 5.0]);

        match nd("2\n2 2\n0 1\n1\n") {
            Err(ImageError::Parse { message, .. }) => assert!(message.contains("mismatch")),
            other => panic!("expected count mismatch, got {other:?}"),
        }
    }

    #[test]
    fn ndtext_comments_and_errors() {
        let img = nd("# a comment\n2\n# another\n1 2\n-1.5 2e1\n").unwrap();
        assert_eq!(img.values(), &[-1.5, 20.0]);

        match nd("1\n2\n1 nan\n") {
            Err(ImageError::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        match nd("1\n2\n1 x\n") {
            Err(ImageError::Parse { offset, .. }) => assert_eq!(offset, 6),
            other => panic!("{other:?}"),
        }
        assert!(nd("1\n2\n1 2 3\n").is_err());
        assert!(nd("").is_err());
        assert!(nd("0\n").is_err());
        assert!(nd("2\n0 3\n").is_err());
    }

    #[test]
    fn ndtext_round_trip() {
        let img = GrayscaleImage::new(vec![2, 1, 3], vec![0.5, -2.0, 3.0, 7.0, 1e-3, 9.0]).unwrap();
        let back = nd(&img.to_ndtext()).unwrap();
        assert_eq!(img, back);
    }

    #[test]
    fn pgm_ascii_and_binary() {
        let img = load_image(&b"P2\n# c\n3 2\n9\n0 1 2\n3 4 9\n"[..], ImageFormat::Pgm).unwrap();
        assert_eq!(img.dims(), &[2, 3]);
        assert_eq!(img.values(), &[0.0, 1.0, 2.0, 3.0, 4.0, 9.0]);

        let mut raw = b"P5 2 2 255\n".to_vec();
        raw.extend_from_slice(&[0, 255, 7, 1]);
        let img = load_image(&raw[..], ImageFormat::Pgm).unwrap();
        assert_eq!(img.values(), &[0.0, 255.0, 7.0, 1.0]);

        assert!(load_image(&b"P2 2 1 5 1\n"[..], ImageFormat::Pgm).is_err());
        assert!(load_image(&b"P2 2 1 5 1 6\n"[..], ImageFormat::Pgm).is_err());
        assert!(load_image(&b"P6 1 1 255\n\0\0\0"[..], ImageFormat::Pgm).is_err());
        assert!(load_image(&b"P5 2 1 255\n\0"[..], ImageFormat::Pgm).is_err());
    }

    #[test]
    fn pad_examples() {
        let padded = checkerboard().pad(2.0).unwrap();
        assert_eq!(padded.dims(), &[4, 4]);
        #[rustfmt::skip]
        let expected = [
            2.0, 2.0, 2.0, 2.0,
            2.0, 0.0, 1.0, 2.0,
            2.0, 1.0, 0.0, 2.0,
            2.0, 2.0, 2.0, 2.0,
        ];
        assert_eq!(padded.values(), &expected);

        let single = GrayscaleImage::new(vec![1, 1], vec![5.0]).unwrap();
        let padded = single.pad(6.0).unwrap();
        assert_eq!(padded.dims(), &[3, 3]);
        assert_eq!(padded.get(&[1, 1]), 5.0);
        assert_eq!(padded.values().iter().filter(|&&v| v == 6.0).count(), 8);

        assert!(matches!(checkerboard().pad(1.0), Err(ImageError::Precondition(_))));
    }

    #[test]
    fn negate_and_extrema() {
        let neg = checkerboard().negate();
        assert_eq!(neg.values(), &[0.0, -1.0, -1.0, 0.0]);
        assert!(neg.values()[0].is_sign_positive());

        let zeros = GrayscaleImage::filled(vec![3, 2], 0.0).unwrap();
        assert_eq!(zeros.negate(), zeros);

        let img = checkerboard();
        assert_eq!((img.min_value(), img.max_value()), (0.0, 1.0));
        let one = GrayscaleImage::new(vec![1], vec![7.0]).unwrap();
        assert_eq!((one.min_value(), one.max_value()), (7.0, 7.0));
        let img = GrayscaleImage::new(vec![2, 2], vec![-3.0, 4.0, 0.0, 2.0]).unwrap();
        assert_eq!((img.min_value(), img.max_value()), (-3.0, 4.0));
    }

    #[test]
    fn format_from_path() {
        assert_eq!(ImageFormat::from_path(Path::new("a.PGM")), ImageFormat::Pgm);
        assert_eq!(ImageFormat::from_path(Path::new("a.txt")), ImageFormat::NdText);
    }
}

#[cfg(test)]
mod proptests {
    use super::*;
    use proptest::prelude::*;

    fn image() -> impl Strategy<Value = GrayscaleImage> {
        prop::collection::vec(1usize..4, 1..4).prop_flat_map(|dims| {
            let len: usize = dims.iter().product();
            prop::collection::vec(-50i32..50, len).prop_map(move |vals| {
                GrayscaleImage::new(dims.clone(), vals.into_iter().map(f64::from).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn negate_is_involution(img in image()) {
            prop_assert_eq!(img.negate().negate(), img.clone());
            prop_assert_eq!(img.negate().min_value(), -img.max_value());
        }

        #[test]
        fn pad_preserves_interior(img in image(), extra in 1u32..100) {
            let shell = img.max_value() + f64::from(extra);
            let padded = img.pad(shell).unwrap();
            let added = padded.len() - img.len();
            let expected: usize = img.dims().iter().map(|n| n + 2).product::<usize>() - img.len();
            prop_assert_eq!(added, expected);
            prop_assert_eq!(padded.values().iter().filter(|&&v| v == shell).count(), added);
            let mut idx = vec![0; img.ndim()];
            for &v in img.values() {
                let shifted: Vec<usize> = idx.iter().map(|i| i + 1).collect();
                prop_assert_eq!(padded.get(&shifted), v);
                advance(&mut idx, img.dims());
            }
        }
    }
}
