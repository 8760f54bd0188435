//! Run-length encoding and run-length re-quantization.
//!
//! Binary masks carry their morphology in the lengths of their runs: long
//! runs of foreground survive along the interior of a compact region, short
//! runs belong to noise and thin structures. Re-quantizing each run's length
//! back into pixel intensities turns that morphology into an 8-bit image that
//! ordinary intensity clustering can operate on.

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};

/// One maximal run: `length` consecutive copies of `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RleRun<T> {
    pub value: T,
    pub length: usize,
}

/// Scan direction for [`rlq_directional`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Axis {
    /// Runs along rows.
    Horizontal,
    /// Runs along columns.
    Vertical,
}

/// Encodes a sequence as maximal runs of equal values.
pub fn rle_encode<T: PartialEq + Clone>(values: &[T]) -> Result<Vec<RleRun<T>>> {
    let Some(first) = values.first() else {
        return Err(Error::EmptyInput);
    };
    let mut runs = Vec::new();
    let mut current = first.clone();
    let mut length = 0usize;
    for v in values {
        if *v == current {
            length += 1;
        } else {
            runs.push(RleRun {
                value: current,
                length,
            });
            current = v.clone();
            length = 1;
        }
    }
    runs.push(RleRun {
        value: current,
        length,
    });
    Ok(runs)
}

/// Expands runs back into the original sequence.
pub fn rle_decode<T: Clone>(runs: &[RleRun<T>]) -> Result<Vec<T>> {
    let mut out = Vec::new();
    for run in runs {
        if run.length == 0 {
            return Err(Error::InvalidRun);
        }
        out.extend(std::iter::repeat(run.value.clone()).take(run.length));
    }
    Ok(out)
}

/// Re-quantizes non-negative coefficients onto `1..=255`, scaled by the
/// maximum coefficient: `min(255, max(1, round(255 * v / max)))`.
///
/// Zero coefficients map to 1, not 0, so every coefficient stays visible
/// after quantization. All-zero input has no scale and is rejected.
pub fn rqf(values: &[usize]) -> Result<Vec<u8>> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let max = *values.iter().max().expect("non-empty");
    if max == 0 {
        return Err(Error::DegenerateInput(
            "all coefficients are zero; no quantization scale".into(),
        ));
    }
    Ok(values.iter().map(|&v| rqf_scalar(v, max)).collect())
}

#[inline]
fn rqf_scalar(value: usize, max: usize) -> u8 {
    let scaled = (255.0 * value as f64 / max as f64).round();
    scaled.clamp(1.0, 255.0) as u8
}

/// Replaces every foreground pixel with the re-quantized length of the
/// maximal run it belongs to along `axis`; background stays 0.
///
/// Run lengths are normalized by the longest run in the whole image (along
/// the same axis), so output intensity is relative prominence: 255 marks the
/// longest run(s), short runs fade toward 1.
pub fn rlq_directional(img: &BinaryImage, axis: Axis) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    // First pass: per-pixel run length and the global maximum.
    let mut lengths = vec![0usize; w as usize * h as usize];
    let mut max_len = 0usize;
    let (outer, inner) = match axis {
        Axis::Horizontal => (h, w),
        Axis::Vertical => (w, h),
    };
    for o in 0..outer {
        let mut i = 0;
        while i < inner {
            let (x, y) = match axis {
                Axis::Horizontal => (i, o),
                Axis::Vertical => (o, i),
            };
            if !img.get(x, y) {
                i += 1;
                continue;
            }
            let start = i;
            while i < inner && {
                let (x, y) = match axis {
                    Axis::Horizontal => (i, o),
                    Axis::Vertical => (o, i),
                };
                img.get(x, y)
            } {
                i += 1;
            }
            let run = (i - start) as usize;
            max_len = max_len.max(run);
            for j in start..i {
                let (x, y) = match axis {
                    Axis::Horizontal => (j, o),
                    Axis::Vertical => (o, j),
                };
                lengths[y as usize * w as usize + x as usize] = run;
            }
        }
    }
    if max_len == 0 {
        return Err(Error::DegenerateInput(
            "mask has no foreground pixels".into(),
        ));
    }
    let pixels = lengths
        .iter()
        .map(|&len| if len == 0 { 0 } else { rqf_scalar(len, max_len) })
        .collect();
    GrayImage::from_pixels(w, h, pixels)
}

/// Longest foreground run along `axis`; 0 when the mask is empty.
pub(crate) fn max_run_length(img: &BinaryImage, axis: Axis) -> usize {
    let (outer, inner) = match axis {
        Axis::Horizontal => (img.height(), img.width()),
        Axis::Vertical => (img.width(), img.height()),
    };
    let mut max_len = 0usize;
    for o in 0..outer {
        let mut run = 0usize;
        for i in 0..inner {
            let (x, y) = match axis {
                Axis::Horizontal => (i, o),
                Axis::Vertical => (o, i),
            };
            if img.get(x, y) {
                run += 1;
                max_len = max_len.max(run);
            } else {
                run = 0;
            }
        }
    }
    max_len
}
