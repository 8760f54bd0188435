//! 8-bit grayscale and binary raster types plus PGM/PNG round-trip support.
//!
//! Pixels are stored row-major. Coordinates are `(x, y)` with `x` running
//! along a row and `y` selecting the row, both zero-based. The geometric
//! center of pixel `(x, y)` is at `(x + 0.5, y + 0.5)`.

use std::fs;
use std::io::Write as _;
use std::path::Path;

use crate::error::{Error, Result};

/// An 8-bit grayscale image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    /// Creates an image from row-major pixel data.
    pub fn from_pixels(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if pixels.len() != (width as usize) * (height as usize) {
            return Err(Error::ShapeMismatch(format!(
                "{} pixels provided for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(GrayImage {
            width,
            height,
            pixels,
        })
    }

    /// Creates an image filled with a constant intensity.
    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::from_pixels(width, height, vec![value; (width as usize) * (height as usize)])
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        debug_assert!(x < self.width && y < self.height);
        self.pixels[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn row(&self, y: u32) -> &[u8] {
        let w = self.width as usize;
        let start = y as usize * w;
        &self.pixels[start..start + w]
    }

    /// Loads a grayscale image from a binary PGM (`P5`) or PNG file,
    /// dispatching on the file extension.
    pub fn load(path: &Path) -> Result<Self> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => Self::load_pgm(path),
            Some("png") => Self::load_png(path),
            other => Err(Error::Format(format!(
                "unsupported image extension {:?} for {}",
                other,
                path.display()
            ))),
        }
    }

    /// Saves the image, dispatching on the file extension like [`GrayImage::load`].
    pub fn save(&self, path: &Path) -> Result<()> {
        match path.extension().and_then(|e| e.to_str()) {
            Some("pgm") => self.save_pgm(path),
            Some("png") => self.save_png(path),
            other => Err(Error::Format(format!(
                "unsupported image extension {:?} for {}",
                other,
                path.display()
            ))),
        }
    }

    /// Reads a binary (`P5`) PGM file with a maxval of 255.
    pub fn load_pgm(path: &Path) -> Result<Self> {
        let data = fs::read(path)?;
        parse_pgm(&data)
    }

    /// Writes a binary (`P5`) PGM file. The output is byte-reproducible.
    pub fn save_pgm(&self, path: &Path) -> Result<()> {
        let mut out = Vec::with_capacity(self.pixels.len() + 32);
        write!(out, "P5\n{} {}\n255\n", self.width, self.height)?;
        out.extend_from_slice(&self.pixels);
        fs::write(path, out)?;
        Ok(())
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        let img = image::open(path)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))?
            .into_luma8();
        GrayImage::from_pixels(img.width(), img.height(), img.into_raw())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        let buf: image::GrayImage =
            image::ImageBuffer::from_raw(self.width, self.height, self.pixels.clone())
                .expect("pixel buffer length matches dimensions");
        buf.save_with_format(path, image::ImageFormat::Png)
            .map_err(|e| Error::Format(format!("{}: {e}", path.display())))
    }
}

/// A binary image; `true` marks foreground pixels.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

impl BinaryImage {
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(BinaryImage {
            width,
            height,
            bits: vec![false; (width as usize) * (height as usize)],
        })
    }

    pub fn from_bits(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidParameter(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        if bits.len() != (width as usize) * (height as usize) {
            return Err(Error::ShapeMismatch(format!(
                "{} bits provided for a {width}x{height} image",
                bits.len()
            )));
        }
        Ok(BinaryImage {
            width,
            height,
            bits,
        })
    }

    /// Builds a mask by applying `pred` to every pixel of a grayscale image.
    pub fn from_gray_where(img: &GrayImage, pred: impl Fn(u8) -> bool) -> Self {
        BinaryImage {
            width: img.width(),
            height: img.height(),
            bits: img.pixels().iter().map(|&p| pred(p)).collect(),
        }
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> bool {
        debug_assert!(x < self.width && y < self.height);
        self.bits[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: bool) {
        debug_assert!(x < self.width && y < self.height);
        self.bits[y as usize * self.width as usize + x as usize] = value;
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of foreground pixels.
    pub fn count_ones(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    /// Position of the first foreground pixel in row-major order.
    pub fn first_set(&self) -> Option<(u32, u32)> {
        self.bits.iter().position(|&b| b).map(|i| {
            let w = self.width as usize;
            ((i % w) as u32, (i / w) as u32)
        })
    }

    /// Pixel-wise logical AND of two equally sized masks.
    pub fn and(&self, other: &BinaryImage) -> Result<BinaryImage> {
        if self.width != other.width || self.height != other.height {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(BinaryImage {
            width: self.width,
            height: self.height,
            bits: self
                .bits
                .iter()
                .zip(&other.bits)
                .map(|(&a, &b)| a && b)
                .collect(),
        })
    }

    /// Renders the mask as a grayscale image with foreground at 255.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            pixels: self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect(),
        }
    }
}

/// Parses a binary `P5` PGM buffer. Comments (`#` to end of line) are allowed
/// anywhere whitespace is.
fn parse_pgm(data: &[u8]) -> Result<GrayImage> {
    if data.len() < 2 || &data[0..2] != b"P5" {
        return Err(Error::Format("missing P5 magic".into()));
    }
    let mut pos = 2usize;
    let mut fields = [0usize; 3];
    for field in fields.iter_mut() {
        // Skip whitespace and comments between header tokens.
        loop {
            match data.get(pos) {
                Some(b) if b.is_ascii_whitespace() => pos += 1,
                Some(b'#') => {
                    while pos < data.len() && data[pos] != b'\n' {
                        pos += 1;
                    }
                }
                Some(_) => break,
                None => return Err(Error::Format("truncated PGM header".into())),
            }
        }
        let start = pos;
        while pos < data.len() && data[pos].is_ascii_digit() {
            pos += 1;
        }
        if start == pos {
            return Err(Error::Format("malformed PGM header token".into()));
        }
        let text = std::str::from_utf8(&data[start..pos]).expect("digits are utf-8");
        *field = text
            .parse()
            .map_err(|_| Error::Format("PGM header value out of range".into()))?;
    }
    let [width, height, maxval] = fields;
    if maxval != 255 {
        return Err(Error::Format(format!(
            "only 8-bit PGM supported, maxval was {maxval}"
        )));
    }
    // Exactly one whitespace byte separates the header from the raster.
    match data.get(pos) {
        Some(b) if b.is_ascii_whitespace() => pos += 1,
        _ => return Err(Error::Format("missing raster separator".into())),
    }
    let expected = width * height;
    let raster = &data[pos..];
    if raster.len() < expected {
        return Err(Error::Format(format!(
            "raster holds {} bytes, expected {expected}",
            raster.len()
        )));
    }
    GrayImage::from_pixels(width as u32, height as u32, raster[..expected].to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn pgm_round_trip_is_byte_exact() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.pgm");
        let img = GrayImage::from_pixels(3, 2, vec![0, 17, 255, 4, 9, 128]).unwrap();
        img.save_pgm(&path).unwrap();
        let bytes_a = std::fs::read(&path).unwrap();
        let back = GrayImage::load_pgm(&path).unwrap();
        assert_eq!(back, img);
        back.save_pgm(&path).unwrap();
        let bytes_b = std::fs::read(&path).unwrap();
        assert_eq!(bytes_a, bytes_b);
    }

    #[test]
    fn pgm_header_comments_are_skipped() {
        let data = b"P5 # comment\n# another\n3 2\n255\n\x00\x01\x02\x03\x04\x05";
        let img = parse_pgm(data).unwrap();
        assert_eq!(img.width(), 3);
        assert_eq!(img.height(), 2);
        assert_eq!(img.get(2, 1), 5);
    }

    #[test]
    fn png_round_trip_preserves_pixels() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("img.png");
        let img = GrayImage::from_pixels(4, 3, (0u8..12).collect()).unwrap();
        img.save(&path).unwrap();
        assert_eq!(GrayImage::load(&path).unwrap(), img);
    }

    #[test]
    fn truncated_pgm_is_rejected() {
        let data = b"P5\n4 4\n255\nshort";
        assert!(matches!(parse_pgm(data), Err(Error::Format(_))));
    }

    #[test]
    fn binary_and_requires_matching_shapes() {
        let a = BinaryImage::new(3, 3).unwrap();
        let b = BinaryImage::new(4, 3).unwrap();
        assert!(matches!(a.and(&b), Err(Error::ShapeMismatch(_))));
    }

    #[test]
    fn first_set_scans_row_major() {
        let mut m = BinaryImage::new(4, 3).unwrap();
        m.set(1, 2, true);
        m.set(3, 1, true);
        assert_eq!(m.first_set(), Some((3, 1)));
    }
}
