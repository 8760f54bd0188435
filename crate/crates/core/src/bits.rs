//! Packed bit matrix used for iris codes and their occlusion masks.

use crate::error::{Error, Result};

/// A row-major matrix of bits packed MSB-first into bytes.
///
/// Bit `(r, c)` lives at linear index `r * cols + c`; byte `i / 8`, bit
/// `7 - i % 8`. Trailing pad bits in the last byte are always zero, so byte
/// popcounts are exact.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMatrix {
    rows: usize,
    cols: usize,
    bytes: Vec<u8>,
}

impl BitMatrix {
    pub fn new(rows: usize, cols: usize) -> Self {
        BitMatrix {
            rows,
            cols,
            bytes: vec![0u8; (rows * cols).div_ceil(8)],
        }
    }

    /// Builds a matrix from packed bytes (row-major, MSB-first).
    pub fn from_bytes(rows: usize, cols: usize, bytes: Vec<u8>) -> Result<Self> {
        let bit_count = rows * cols;
        if bytes.len() != bit_count.div_ceil(8) {
            return Err(Error::ShapeMismatch(format!(
                "{} bytes for a {rows}x{cols} bit matrix",
                bytes.len()
            )));
        }
        let mut m = BitMatrix { rows, cols, bytes };
        m.clear_padding();
        Ok(m)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn bit_len(&self) -> usize {
        self.rows * self.cols
    }

    /// Packed bytes, row-major MSB-first — the on-disk layout.
    pub fn as_bytes(&self) -> &[u8] {
        &self.bytes
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> bool {
        debug_assert!(r < self.rows && c < self.cols);
        let i = r * self.cols + c;
        self.bytes[i >> 3] & (0x80 >> (i & 7)) != 0
    }

    #[inline]
    pub fn set(&mut self, r: usize, c: usize, value: bool) {
        debug_assert!(r < self.rows && c < self.cols);
        let i = r * self.cols + c;
        let mask = 0x80 >> (i & 7);
        if value {
            self.bytes[i >> 3] |= mask;
        } else {
            self.bytes[i >> 3] &= !mask;
        }
    }

    pub fn count_ones(&self) -> usize {
        self.bytes.iter().map(|b| b.count_ones() as usize).sum()
    }

    pub fn same_shape(&self, other: &BitMatrix) -> bool {
        self.rows == other.rows && self.cols == other.cols
    }

    /// Bitwise AND, requiring equal shapes.
    pub fn and(&self, other: &BitMatrix) -> Result<BitMatrix> {
        self.zip_with(other, |a, b| a & b)
    }

    /// Bitwise XOR, requiring equal shapes.
    pub fn xor(&self, other: &BitMatrix) -> Result<BitMatrix> {
        self.zip_with(other, |a, b| a ^ b)
    }

    fn zip_with(&self, other: &BitMatrix, f: impl Fn(u8, u8) -> u8) -> Result<BitMatrix> {
        if !self.same_shape(other) {
            return Err(Error::ShapeMismatch(format!(
                "{}x{} vs {}x{}",
                self.rows, self.cols, other.rows, other.cols
            )));
        }
        let bytes = self
            .bytes
            .iter()
            .zip(&other.bytes)
            .map(|(&a, &b)| f(a, b))
            .collect();
        Ok(BitMatrix {
            rows: self.rows,
            cols: self.cols,
            bytes,
        })
    }

    /// Zeroes the pad bits beyond `rows * cols` in the final byte.
    fn clear_padding(&mut self) {
        let used = self.rows * self.cols;
        let tail = used % 8;
        if tail != 0 {
            let last = self.bytes.len() - 1;
            self.bytes[last] &= 0xFFu8 << (8 - tail);
        }
    }
}
