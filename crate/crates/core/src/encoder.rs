//! Phase-based binary iris encoding.
//!
//! Each line of the segmented band is split into short windows, every window
//! is lifted to its analytic signal through a discrete Hilbert transform, and
//! the sign of the instantaneous phase becomes one code bit. A companion mask
//! marks which bits are backed by usable pixels (inside the butterfly sector,
//! not saturated).

use std::fs;
use std::io::Read;
use std::path::Path;
use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use crate::bits::BitMatrix;
use crate::cfis::{IrisRing, UnwrappedIris};
use crate::error::{Error, Result};

/// How the per-sample phase angle is computed from the analytic pair
/// `(f, H(f))`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhaseConvention {
    /// Full four-quadrant angle of `(f, H(f))`, in `(-pi, pi]`.
    TwoArgument,
    /// `arctan(H(f) / f)` in `(-pi/2, pi/2)`, defined as 0 where `f = 0`.
    SingleArgument,
}

/// Code geometry and phase options.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EncoderConfig {
    pub code_rows: usize,
    pub code_cols: usize,
    /// Samples per analytic window; must divide `code_cols`.
    pub window_size: usize,
    pub phase_convention: PhaseConvention,
    /// Butterfly sector half-angle in radians, or `None` to keep all
    /// columns.
    pub butterfly_half_angle: Option<f64>,
}

impl EncoderConfig {
    /// 192-byte code: 16 lines of 96 bits, 8-sample windows.
    pub fn code_192_byte() -> Self {
        EncoderConfig {
            code_rows: 16,
            code_cols: 96,
            window_size: 8,
            phase_convention: PhaseConvention::TwoArgument,
            butterfly_half_angle: Some(std::f64::consts::FRAC_PI_4),
        }
    }

    /// 768-byte code: 32 lines of 192 bits, 16-sample windows.
    pub fn code_768_byte() -> Self {
        EncoderConfig {
            code_rows: 32,
            code_cols: 192,
            window_size: 16,
            phase_convention: PhaseConvention::TwoArgument,
            butterfly_half_angle: Some(std::f64::consts::FRAC_PI_4),
        }
    }

    pub fn code_bits(&self) -> usize {
        self.code_rows * self.code_cols
    }

    pub fn code_bytes(&self) -> usize {
        self.code_bits() / 8
    }

    pub fn validate(&self) -> Result<()> {
        if self.code_rows == 0 || self.code_cols == 0 {
            return Err(Error::InvalidParameter(
                "code dimensions must be positive".into(),
            ));
        }
        check_window_size(self.window_size)?;
        if self.code_cols % self.window_size != 0 {
            return Err(Error::InvalidParameter(format!(
                "code width {} not divisible by window size {}",
                self.code_cols, self.window_size
            )));
        }
        if (self.code_rows * self.code_cols) % 8 != 0 {
            return Err(Error::InvalidParameter(format!(
                "code size {}x{} is not a whole number of bytes",
                self.code_rows, self.code_cols
            )));
        }
        if let Some(h) = self.butterfly_half_angle {
            if !(h > 0.0 && h <= std::f64::consts::FRAC_PI_2) {
                return Err(Error::InvalidParameter(format!(
                    "butterfly half-angle {h} outside (0, pi/2]"
                )));
            }
        }
        Ok(())
    }

    /// True when codes produced under the two configurations can be matched
    /// against each other. The butterfly option only shapes the mask, which
    /// travels with each code, so it does not affect compatibility.
    pub fn compatible(&self, other: &EncoderConfig) -> bool {
        self.code_rows == other.code_rows
            && self.code_cols == other.code_cols
            && self.window_size == other.window_size
            && self.phase_convention == other.phase_convention
    }
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig::code_768_byte()
    }
}

fn check_window_size(s: usize) -> Result<()> {
    if s < 4 || s % 2 != 0 {
        return Err(Error::InvalidParameter(format!(
            "window size must be even and at least 4, got {s}"
        )));
    }
    Ok(())
}

/// Reusable forward/inverse DFT plans for one window size.
pub struct AnalyticTransform {
    window: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl AnalyticTransform {
    pub fn new(window: usize) -> Result<Self> {
        check_window_size(window)?;
        let mut planner = FftPlanner::new();
        Ok(AnalyticTransform {
            window,
            forward: planner.plan_fft_forward(window),
            inverse: planner.plan_fft_inverse(window),
        })
    }

    pub fn window(&self) -> usize {
        self.window
    }

    /// Discrete Hilbert transform of one window (assumed already centered).
    ///
    /// Builds the analytic spectrum — negative-frequency bins zeroed,
    /// strictly positive bins doubled, DC and Nyquist kept at unit gain —
    /// and returns the imaginary part of its inverse transform.
    fn hilbert(&self, window: &[f64]) -> Vec<f64> {
        debug_assert_eq!(window.len(), self.window);
        let s = self.window;
        let mut buf: Vec<Complex64> = window.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        self.forward.process(&mut buf);
        for bin in buf.iter_mut().take(s / 2).skip(1) {
            *bin *= 2.0;
        }
        for bin in buf.iter_mut().skip(s / 2 + 1) {
            *bin = Complex64::new(0.0, 0.0);
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / s as f64;
        buf.iter().map(|c| c.im * scale).collect()
    }
}

/// Discrete Hilbert transform of a single window.
///
/// The window is mean-subtracted first; the analytic signal's real part is
/// then exactly the centered window, and a constant window maps to exactly
/// zero.
pub fn hilbert_window(x: &[f64]) -> Result<Vec<f64>> {
    let t = AnalyticTransform::new(x.len())?;
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    let centered: Vec<f64> = x.iter().map(|&v| v - mean).collect();
    if centered.iter().all(|&v| v == 0.0) {
        return Ok(centered);
    }
    Ok(t.hilbert(&centered))
}

/// Analytic decomposition of one line: per-sample real part, Hilbert
/// transform, instant amplitude, and instant phase.
#[derive(Debug, Clone)]
pub struct AnalyticRow {
    /// Mean-subtracted input, window by window.
    pub f: Vec<f64>,
    /// Hilbert transform of `f`, window by window.
    pub hilbert: Vec<f64>,
    /// `sqrt(f^2 + hilbert^2)`.
    pub amplitude: Vec<f64>,
    /// Phase angle per sample under the chosen convention.
    pub phase: Vec<f64>,
}

impl AnalyticRow {
    /// Splits `row` into non-overlapping windows of `transform.window()`
    /// samples, centers each, and lifts it to its analytic signal.
    pub fn analyze(
        row: &[f64],
        transform: &AnalyticTransform,
        convention: PhaseConvention,
    ) -> Result<AnalyticRow> {
        let s = transform.window();
        if row.is_empty() || row.len() % s != 0 {
            return Err(Error::ShapeMismatch(format!(
                "row length {} is not a positive multiple of window size {s}",
                row.len()
            )));
        }
        let mut f = Vec::with_capacity(row.len());
        let mut hilbert = Vec::with_capacity(row.len());
        for chunk in row.chunks_exact(s) {
            let mean = chunk.iter().sum::<f64>() / s as f64;
            let centered: Vec<f64> = chunk.iter().map(|&v| v - mean).collect();
            if centered.iter().all(|&v| v == 0.0) {
                hilbert.extend(std::iter::repeat(0.0).take(s));
            } else {
                hilbert.extend(transform.hilbert(&centered));
            }
            f.extend(centered);
        }
        let amplitude = f.iter().zip(&hilbert).map(|(&a, &b)| a.hypot(b)).collect();
        let phase = f
            .iter()
            .zip(&hilbert)
            .map(|(&a, &b)| phase_of(a, b, convention))
            .collect();
        Ok(AnalyticRow {
            f,
            hilbert,
            amplitude,
            phase,
        })
    }

    /// Code bits: the sign of the instant phase.
    pub fn bits(&self) -> Vec<bool> {
        self.phase.iter().map(|&p| p >= 0.0).collect()
    }
}

fn phase_of(f: f64, h: f64, convention: PhaseConvention) -> f64 {
    match convention {
        PhaseConvention::TwoArgument => h.atan2(f),
        PhaseConvention::SingleArgument => {
            if f == 0.0 {
                0.0
            } else {
                (h / f).atan()
            }
        }
    }
}

/// Instant phase of one line under the given window size and convention.
pub fn instant_phase(row: &[f64], window: usize, convention: PhaseConvention) -> Result<Vec<f64>> {
    let t = AnalyticTransform::new(window)?;
    Ok(AnalyticRow::analyze(row, &t, convention)?.phase)
}

/// Butterfly sector mask: columns map linearly to angles in `[0, 2pi)`, and
/// a column is kept when its angle falls within `half_angle` of 0 or pi.
/// Rows are uniform.
///
/// Boundary columns resolve by a half-open rule (sector start included, end
/// excluded), so `half_angle = pi/4` keeps exactly half the columns and the
/// mask is exactly symmetric under a half-turn column shift.
pub fn butterfly_mask(d1: usize, d2: usize, half_angle: f64) -> BitMatrix {
    let mut mask = BitMatrix::new(d1, d2);
    for j in 0..d2 {
        // Folded angle: u/d2 * pi = column angle mod pi.
        let u = (2 * j) % d2;
        let keep = (u as f64) * std::f64::consts::PI < half_angle * d2 as f64
            || ((d2 - u) as f64) * std::f64::consts::PI <= half_angle * d2 as f64;
        if keep {
            for i in 0..d1 {
                mask.set(i, j, true);
            }
        }
    }
    mask
}

/// A binary iris code with its validity mask.
#[derive(Debug, Clone)]
pub struct IrisCode {
    pub bits: BitMatrix,
    /// 1 = usable bit (inside the butterfly sector, source pixel not
    /// saturated).
    pub mask: BitMatrix,
    pub config: EncoderConfig,
    /// Identifier of the source image, if known. Not persisted in `.gcode`
    /// files.
    pub provenance: Option<String>,
}

const GCODE_MAGIC: &[u8; 4] = b"GAIT";
const GCODE_VERSION: u8 = 1;

impl IrisCode {
    pub fn rows(&self) -> usize {
        self.bits.rows()
    }

    pub fn cols(&self) -> usize {
        self.bits.cols()
    }

    /// Serializes to the `.gcode` wire format: magic `GAIT`, a version byte,
    /// `d1`, `d2`, `s` as 16-bit big-endian, a phase-convention byte, then
    /// the bits and the mask, each row-major and packed MSB-first.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 2 * self.bits.as_bytes().len());
        out.extend_from_slice(GCODE_MAGIC);
        out.push(GCODE_VERSION);
        out.extend_from_slice(&(self.config.code_rows as u16).to_be_bytes());
        out.extend_from_slice(&(self.config.code_cols as u16).to_be_bytes());
        out.extend_from_slice(&(self.config.window_size as u16).to_be_bytes());
        out.push(match self.config.phase_convention {
            PhaseConvention::TwoArgument => 0,
            PhaseConvention::SingleArgument => 1,
        });
        out.extend_from_slice(self.bits.as_bytes());
        out.extend_from_slice(self.mask.as_bytes());
        out
    }

    /// Parses the `.gcode` wire format. The butterfly option is not stored,
    /// so the returned config has it disabled; the mask already reflects it.
    pub fn from_bytes(data: &[u8]) -> Result<IrisCode> {
        let mut cursor = data;
        let mut header = [0u8; 12];
        cursor
            .read_exact(&mut header)
            .map_err(|_| Error::Format("iris code header truncated".into()))?;
        if &header[0..4] != GCODE_MAGIC {
            return Err(Error::Format("bad iris code magic".into()));
        }
        if header[4] != GCODE_VERSION {
            return Err(Error::Format(format!(
                "unsupported iris code version {}",
                header[4]
            )));
        }
        let d1 = u16::from_be_bytes([header[5], header[6]]) as usize;
        let d2 = u16::from_be_bytes([header[7], header[8]]) as usize;
        let s = u16::from_be_bytes([header[9], header[10]]) as usize;
        let convention = match header[11] {
            0 => PhaseConvention::TwoArgument,
            1 => PhaseConvention::SingleArgument,
            other => {
                return Err(Error::Format(format!(
                    "unknown phase convention byte {other}"
                )))
            }
        };
        let config = EncoderConfig {
            code_rows: d1,
            code_cols: d2,
            window_size: s,
            phase_convention: convention,
            butterfly_half_angle: None,
        };
        config
            .validate()
            .map_err(|e| Error::Format(format!("invalid stored code geometry: {e}")))?;
        let plane = d1.saturating_mul(d2).div_ceil(8);
        if cursor.len() != 2 * plane {
            return Err(Error::Format(format!(
                "iris code payload is {} bytes, expected {}",
                cursor.len(),
                2 * plane
            )));
        }
        let bits = BitMatrix::from_bytes(d1, d2, cursor[..plane].to_vec())?;
        let mask = BitMatrix::from_bytes(d1, d2, cursor[plane..].to_vec())?;
        Ok(IrisCode {
            bits,
            mask,
            config,
            provenance: None,
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        fs::write(path, self.to_bytes())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<IrisCode> {
        let data = fs::read(path)?;
        IrisCode::from_bytes(&data)
    }
}

/// Bilinear resize with half-pixel alignment, clamped at the borders.
fn resize_bilinear(src: &[Vec<f64>], dst_rows: usize, dst_cols: usize) -> Vec<Vec<f64>> {
    let src_rows = src.len();
    let src_cols = src[0].len();
    let row_scale = src_rows as f64 / dst_rows as f64;
    let col_scale = src_cols as f64 / dst_cols as f64;
    let mut out = vec![vec![0.0f64; dst_cols]; dst_rows];
    for (i, out_row) in out.iter_mut().enumerate() {
        let sy = ((i as f64 + 0.5) * row_scale - 0.5).clamp(0.0, (src_rows - 1) as f64);
        let y0 = sy.floor() as usize;
        let y1 = (y0 + 1).min(src_rows - 1);
        let fy = sy - y0 as f64;
        for (j, out_val) in out_row.iter_mut().enumerate() {
            let sx = ((j as f64 + 0.5) * col_scale - 0.5).clamp(0.0, (src_cols - 1) as f64);
            let x0 = sx.floor() as usize;
            let x1 = (x0 + 1).min(src_cols - 1);
            let fx = sx - x0 as f64;
            let top = src[y0][x0] + fx * (src[y0][x1] - src[y0][x0]);
            let bottom = src[y1][x0] + fx * (src[y1][x1] - src[y1][x0]);
            *out_val = top + fy * (bottom - top);
        }
    }
    out
}

/// Encodes a segmented iris ring.
pub fn encode(ring: &IrisRing, cfg: &EncoderConfig) -> Result<IrisCode> {
    encode_band(&ring.band, cfg)
}

/// Encodes an unwrapped band directly.
///
/// The band's stretched lines are resized to the code dimensions, each
/// resized line is phase-analyzed window by window, and bits are the phase
/// signs. Mask bits are cleared outside the butterfly sector (when enabled)
/// and wherever the resized band is saturated (intensity 0 or 255).
pub fn encode_band(band: &UnwrappedIris, cfg: &EncoderConfig) -> Result<IrisCode> {
    cfg.validate()?;
    if band.rows.len() < 2 {
        return Err(Error::DegenerateInput(format!(
            "iris band has {} line(s); encoding needs at least 2",
            band.rows.len()
        )));
    }
    let src: Vec<Vec<f64>> = band
        .rows
        .iter()
        .map(|r| r.stretched.iter().map(|&v| v as f64).collect())
        .collect();
    if src.iter().any(|r| r.len() != band.stretched_width) {
        return Err(Error::ShapeMismatch(
            "band lines disagree on stretched width".into(),
        ));
    }
    let resized = resize_bilinear(&src, cfg.code_rows, cfg.code_cols);

    let transform = AnalyticTransform::new(cfg.window_size)?;
    let mut bits = BitMatrix::new(cfg.code_rows, cfg.code_cols);
    let mut mask = match cfg.butterfly_half_angle {
        Some(h) => butterfly_mask(cfg.code_rows, cfg.code_cols, h),
        None => {
            let mut all = BitMatrix::new(cfg.code_rows, cfg.code_cols);
            for i in 0..cfg.code_rows {
                for j in 0..cfg.code_cols {
                    all.set(i, j, true);
                }
            }
            all
        }
    };
    for (i, row) in resized.iter().enumerate() {
        let analytic = AnalyticRow::analyze(row, &transform, cfg.phase_convention)?;
        for (j, bit) in analytic.bits().into_iter().enumerate() {
            bits.set(i, j, bit);
        }
        for (j, &v) in row.iter().enumerate() {
            if v <= 0.0 || v >= 255.0 {
                mask.set(i, j, false);
            }
        }
    }
    Ok(IrisCode {
        bits,
        mask,
        config: *cfg,
        provenance: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cfis::UnwrappedRow;
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_2, FRAC_PI_4, PI, TAU};

    fn band_from_rows(rows: Vec<Vec<f32>>) -> UnwrappedIris {
        let width = rows[0].len();
        UnwrappedIris {
            rows: rows
                .into_iter()
                .map(|stretched| UnwrappedRow {
                    samples: stretched.iter().map(|&v| v.round() as u8).collect(),
                    stretched,
                })
                .collect(),
            start_radius: 20.0,
            radial_step: 1.0,
            stretched_width: width,
        }
    }

    #[test]
    fn hilbert_of_cosine_is_sine() {
        let s = 16;
        let x: Vec<f64> = (0..s).map(|k| (TAU * k as f64 / s as f64).cos()).collect();
        let h = hilbert_window(&x).unwrap();
        for k in 0..s {
            assert_abs_diff_eq!(h[k], (TAU * k as f64 / s as f64).sin(), epsilon = 1e-9);
        }
    }

    #[test]
    fn hilbert_of_constant_is_exactly_zero() {
        let h = hilbert_window(&[42.5; 8]).unwrap();
        assert!(h.iter().all(|&v| v == 0.0));
    }

    #[test]
    fn hilbert_rejects_odd_or_tiny_windows() {
        assert!(hilbert_window(&[1.0; 7]).is_err());
        assert!(hilbert_window(&[1.0; 2]).is_err());
    }

    /// Removes the mean and Nyquist component so the window lives where the
    /// Hilbert transform is an isometry with H^2 = -I.
    fn project_band(x: &mut [f64]) {
        let n = x.len() as f64;
        let mean = x.iter().sum::<f64>() / n;
        let nyq = x
            .iter()
            .enumerate()
            .map(|(i, &v)| v * if i % 2 == 0 { 1.0 } else { -1.0 })
            .sum::<f64>()
            / n;
        for (i, v) in x.iter_mut().enumerate() {
            *v -= mean + nyq * if i % 2 == 0 { 1.0 } else { -1.0 };
        }
    }

    #[test]
    fn hilbert_twice_negates_banded_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for _ in 0..50 {
            let mut x: Vec<f64> = (0..16).map(|_| rng.gen_range(-100.0..100.0)).collect();
            project_band(&mut x);
            let hh = hilbert_window(&hilbert_window(&x).unwrap()).unwrap();
            for k in 0..16 {
                assert_abs_diff_eq!(hh[k], -x[k], epsilon = 1e-9);
            }
        }
    }

    #[test]
    fn hilbert_preserves_energy_of_banded_windows() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        for _ in 0..50 {
            let mut x: Vec<f64> = (0..32).map(|_| rng.gen_range(-100.0..100.0)).collect();
            project_band(&mut x);
            let h = hilbert_window(&x).unwrap();
            let ex: f64 = x.iter().map(|v| v * v).sum();
            let eh: f64 = h.iter().map(|v| v * v).sum();
            assert_abs_diff_eq!(eh, ex, epsilon = 1e-9 * ex.max(1.0));
        }
    }

    #[test]
    fn cosine_window_phase_ramps_and_bits_split_in_half() {
        // Quarter-sample offset keeps every sample away from the phase wrap,
        // where the bit would hinge on the sign of a rounding error.
        let s = 16usize;
        let row: Vec<f64> = (0..s)
            .map(|k| (TAU * (k as f64 + 0.25) / s as f64).cos())
            .collect();
        let t = AnalyticTransform::new(s).unwrap();
        let a = AnalyticRow::analyze(&row, &t, PhaseConvention::TwoArgument).unwrap();
        // Ramp from just above zero, ascending by 2 pi / s until the wrap.
        assert!(a.phase[0] > 0.0 && a.phase[0] < 0.2);
        for k in 0..s - 1 {
            let diff = a.phase[k + 1] - a.phase[k];
            let wrapped = if diff < -PI { diff + TAU } else { diff };
            assert_abs_diff_eq!(wrapped, TAU / s as f64, epsilon = 1e-9);
        }
        let bits = a.bits();
        for k in 0..s {
            assert_eq!(bits[k], k < s / 2, "bit {k}");
        }
    }

    #[test]
    fn first_quadrant_phase_is_positive_under_both_conventions() {
        let mut rng = ChaCha8Rng::seed_from_u64(13);
        for _ in 0..200 {
            let f = rng.gen_range(0.01..10.0);
            let h = rng.gen_range(0.01..10.0);
            assert!(phase_of(f, h, PhaseConvention::TwoArgument) > 0.0);
            assert!(phase_of(f, h, PhaseConvention::SingleArgument) > 0.0);
        }
    }

    #[test]
    fn bit_sign_equivalences_hold_on_random_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(14);
        let t = AnalyticTransform::new(8).unwrap();
        for _ in 0..100 {
            let row: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..255.0)).collect();
            let two = AnalyticRow::analyze(&row, &t, PhaseConvention::TwoArgument).unwrap();
            for k in 0..row.len() {
                assert_eq!(two.phase[k] >= 0.0, two.hilbert[k] >= 0.0);
            }
            let one = AnalyticRow::analyze(&row, &t, PhaseConvention::SingleArgument).unwrap();
            for k in 0..row.len() {
                assert_eq!(one.phase[k] >= 0.0, one.f[k] * one.hilbert[k] >= 0.0);
            }
        }
    }

    #[test]
    fn amplitude_squares_to_component_energy() {
        let mut rng = ChaCha8Rng::seed_from_u64(15);
        let t = AnalyticTransform::new(8).unwrap();
        let row: Vec<f64> = (0..64).map(|_| rng.gen_range(0.0..255.0)).collect();
        let a = AnalyticRow::analyze(&row, &t, PhaseConvention::TwoArgument).unwrap();
        for k in 0..row.len() {
            assert_abs_diff_eq!(
                a.amplitude[k] * a.amplitude[k],
                a.f[k] * a.f[k] + a.hilbert[k] * a.hilbert[k],
                epsilon = 1e-9
            );
        }
    }

    #[test]
    fn analyze_keeps_centered_window_as_real_part() {
        let t = AnalyticTransform::new(4).unwrap();
        let row = vec![10.0, 20.0, 40.0, 10.0];
        let a = AnalyticRow::analyze(&row, &t, PhaseConvention::TwoArgument).unwrap();
        assert_eq!(a.f, vec![-10.0, 0.0, 20.0, -10.0]);
    }

    #[test]
    fn analyze_rejects_ragged_rows() {
        let t = AnalyticTransform::new(8).unwrap();
        assert!(matches!(
            AnalyticRow::analyze(&[0.0; 12], &t, PhaseConvention::TwoArgument),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn butterfly_quarter_sector_keeps_exactly_half() {
        let m = butterfly_mask(4, 512, FRAC_PI_4);
        assert_eq!(m.count_ones(), 4 * 256);
    }

    #[test]
    fn butterfly_full_sector_keeps_everything() {
        let m = butterfly_mask(2, 96, FRAC_PI_2);
        assert_eq!(m.count_ones(), 2 * 96);
    }

    #[test]
    fn butterfly_is_half_turn_symmetric_and_row_uniform() {
        let m = butterfly_mask(3, 192, FRAC_PI_4);
        for j in 0..192 {
            assert_eq!(m.get(0, j), m.get(0, (j + 96) % 192), "column {j}");
            assert_eq!(m.get(0, j), m.get(1, j));
            assert_eq!(m.get(0, j), m.get(2, j));
        }
    }

    fn random_band(rng: &mut ChaCha8Rng, lines: usize, width: usize) -> UnwrappedIris {
        let rows = (0..lines)
            .map(|_| (0..width).map(|_| rng.gen_range(0.0f32..255.0)).collect())
            .collect();
        band_from_rows(rows)
    }

    #[test]
    fn encoding_is_deterministic() {
        let mut rng = ChaCha8Rng::seed_from_u64(16);
        let band = random_band(&mut rng, 20, 512);
        let cfg = EncoderConfig::code_768_byte();
        let a = encode_band(&band, &cfg).unwrap();
        let b = encode_band(&band, &cfg).unwrap();
        assert_eq!(a.bits.as_bytes(), b.bits.as_bytes());
        assert_eq!(a.mask.as_bytes(), b.mask.as_bytes());
    }

    #[test]
    fn identical_band_lines_give_identical_code_rows() {
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let line: Vec<f32> = (0..512).map(|_| rng.gen_range(10.0f32..240.0)).collect();
        let band = band_from_rows(vec![line; 12]);
        let code = encode_band(&band, &EncoderConfig::code_768_byte()).unwrap();
        for i in 1..code.rows() {
            for j in 0..code.cols() {
                assert_eq!(code.bits.get(i, j), code.bits.get(0, j));
                assert_eq!(code.mask.get(i, j), code.mask.get(0, j));
            }
        }
    }

    #[test]
    fn window_shift_of_band_shifts_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(18);
        let cfg = EncoderConfig {
            butterfly_half_angle: None,
            ..EncoderConfig::code_768_byte()
        };
        // Band already at code dimensions, so the resize is the identity
        // and a circular shift by one window moves whole windows.
        let rows: Vec<Vec<f32>> = (0..cfg.code_rows)
            .map(|_| {
                (0..cfg.code_cols)
                    .map(|_| rng.gen_range(0.0f32..255.0))
                    .collect()
            })
            .collect();
        let shifted: Vec<Vec<f32>> = rows
            .iter()
            .map(|r| {
                let mut s = r[cfg.window_size..].to_vec();
                s.extend_from_slice(&r[..cfg.window_size]);
                s
            })
            .collect();
        let a = encode_band(&band_from_rows(rows), &cfg).unwrap();
        let b = encode_band(&band_from_rows(shifted), &cfg).unwrap();
        for i in 0..cfg.code_rows {
            for j in 0..cfg.code_cols {
                assert_eq!(
                    b.bits.get(i, j),
                    a.bits.get(i, (j + cfg.window_size) % cfg.code_cols)
                );
            }
        }
    }

    #[test]
    fn saturated_pixels_are_masked_out() {
        let mut line: Vec<f32> = (0..96).map(|j| 50.0 + (j % 7) as f32 * 20.0).collect();
        line[10] = 255.0;
        line[11] = 255.0;
        line[40] = 0.0;
        let band = band_from_rows(vec![line; 16]);
        let cfg = EncoderConfig {
            butterfly_half_angle: None,
            ..EncoderConfig::code_192_byte()
        };
        let code = encode_band(&band, &cfg).unwrap();
        // Identity resize: saturated columns map straight through.
        assert!(!code.mask.get(0, 10));
        assert!(!code.mask.get(0, 11));
        assert!(!code.mask.get(0, 40));
        assert!(code.mask.get(0, 20));
    }

    #[test]
    fn thin_band_is_rejected() {
        let band = band_from_rows(vec![vec![100.0; 512]]);
        assert!(matches!(
            encode_band(&band, &EncoderConfig::code_768_byte()),
            Err(Error::DegenerateInput(_))
        ));
    }

    #[test]
    fn invalid_configs_are_rejected() {
        let mut cfg = EncoderConfig::code_192_byte();
        cfg.window_size = 10; // does not divide 96
        assert!(cfg.validate().is_err());
        let mut cfg = EncoderConfig::code_192_byte();
        cfg.window_size = 7;
        assert!(cfg.validate().is_err());
        let mut cfg = EncoderConfig::code_768_byte();
        cfg.butterfly_half_angle = Some(2.0);
        assert!(cfg.validate().is_err());
    }

    #[test]
    fn gcode_round_trips_bit_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(19);
        let band = random_band(&mut rng, 18, 512);
        let mut code = encode_band(&band, &EncoderConfig::code_192_byte()).unwrap();
        code.provenance = Some("unit".into());
        let bytes = code.to_bytes();
        let back = IrisCode::from_bytes(&bytes).unwrap();
        assert_eq!(back.bits.as_bytes(), code.bits.as_bytes());
        assert_eq!(back.mask.as_bytes(), code.mask.as_bytes());
        assert!(back.config.compatible(&code.config));
        assert_eq!(back.provenance, None);
        assert_eq!(back.to_bytes(), bytes);
    }

    #[test]
    fn gcode_rejects_corrupt_headers() {
        let mut rng = ChaCha8Rng::seed_from_u64(20);
        let band = random_band(&mut rng, 18, 512);
        let code = encode_band(&band, &EncoderConfig::code_192_byte()).unwrap();
        let good = code.to_bytes();

        let mut bad_magic = good.clone();
        bad_magic[0] = b'X';
        assert!(IrisCode::from_bytes(&bad_magic).is_err());

        let mut bad_version = good.clone();
        bad_version[4] = 9;
        assert!(IrisCode::from_bytes(&bad_version).is_err());

        let mut truncated = good.clone();
        truncated.pop();
        assert!(IrisCode::from_bytes(&truncated).is_err());

        let mut bad_convention = good;
        bad_convention[11] = 7;
        assert!(IrisCode::from_bytes(&bad_convention).is_err());
    }

    #[test]
    fn random_band_codes_are_half_similar_on_average() {
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        let cfg = EncoderConfig {
            butterfly_half_angle: None,
            ..EncoderConfig::code_192_byte()
        };
        let mut total = 0.0f64;
        let pairs = 1000;
        for _ in 0..pairs {
            let a = encode_band(&random_band(&mut rng, 16, 96), &cfg).unwrap();
            let b = encode_band(&random_band(&mut rng, 16, 96), &cfg).unwrap();
            let agree = cfg.code_bits() - a.bits.xor(&b.bits).unwrap().count_ones();
            total += agree as f64 / cfg.code_bits() as f64;
        }
        let mean = total / pairs as f64;
        assert!(
            (0.48..=0.52).contains(&mean),
            "mean similarity {mean} outside [0.48, 0.52]"
        );
    }
}
