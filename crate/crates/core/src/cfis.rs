//! Circular fuzzy iris segmentation: finds the limbic boundary by voting.
//!
//! The iris annulus is unwrapped into polar lines starting at the pupil
//! boundary. Averaging each line yields a radial intensity profile; the
//! profile is computed three ways (raw samples, stretched samples, and their
//! mean), each is split into three intensity classes, and a line belongs to
//! the iris band when at least two of the three indicators agree with the
//! class of the innermost iris line. The band's outer edge is the limbic
//! boundary.

use std::ops::RangeInclusive;

use crate::error::{Error, Result};
use crate::image::GrayImage;
use crate::kmeans::{self, kmeans_histogram};
use crate::pupil::{self, PupilConfig, PupilFit, PupilTrace};

/// Tuning knobs for [`segment`].
#[derive(Debug, Clone)]
pub struct SegmentConfig {
    pub pupil: PupilConfig,
    /// Width every unwrapped line is stretched to.
    pub stretched_width: usize,
    /// Radial distance between consecutive unwrapped lines, in pixels.
    pub radial_step: f64,
    /// Outer unwrapping limit as a multiple of the pupil radius (clamped to
    /// the image border).
    pub max_radius_factor: f64,
    /// Index of the line whose class seeds the iris band; skipping a couple
    /// of lines avoids pupil-boundary bleed.
    pub pupil_margin: usize,
}

impl Default for SegmentConfig {
    fn default() -> Self {
        SegmentConfig {
            pupil: PupilConfig::default(),
            stretched_width: 512,
            radial_step: 1.0,
            max_radius_factor: 3.0,
            pupil_margin: 2,
        }
    }
}

/// One unwrapped polar line.
#[derive(Debug, Clone)]
pub struct UnwrappedRow {
    /// Nearest-neighbor samples along the circle, one per unit of arc
    /// (`round(2 * pi * radius)` of them).
    pub samples: Vec<u8>,
    /// The same line resampled to the configured fixed width by circular
    /// linear interpolation.
    pub stretched: Vec<f32>,
}

/// Polar unwrapping of an annulus around the pupil center.
///
/// Row `r` corresponds to radius `start_radius + r * radial_step`. Angle 0
/// points along the positive x axis and increases counterclockwise (upward
/// in image coordinates).
#[derive(Debug, Clone)]
pub struct UnwrappedIris {
    pub rows: Vec<UnwrappedRow>,
    pub start_radius: f64,
    pub radial_step: f64,
    pub stretched_width: usize,
}

impl UnwrappedIris {
    pub fn line_count(&self) -> usize {
        self.rows.len()
    }

    pub fn radius_of_row(&self, row: usize) -> f64 {
        self.start_radius + row as f64 * self.radial_step
    }
}

/// Per-line mean intensity profiles.
#[derive(Debug, Clone)]
pub struct LineMeans {
    /// Mean of each line's raw circle samples.
    pub raw: Vec<f64>,
    /// Mean of each line's stretched samples.
    pub stretched: Vec<f64>,
    /// Elementwise mean of the two profiles above.
    pub combined: Vec<f64>,
}

/// A crisp three-class labeling of a line profile.
///
/// Labels are cluster indices in ascending-centroid order; only the
/// partition structure is meaningful, so comparisons go through
/// [`CombinedCrispIndicator::same_partition`].
#[derive(Debug, Clone)]
pub struct CombinedCrispIndicator {
    labels: Vec<u8>,
    class_count: usize,
}

impl CombinedCrispIndicator {
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Number of distinct classes actually present. A constant profile
    /// degenerates to a single class.
    pub fn class_count(&self) -> usize {
        self.class_count
    }

    /// True when the two labelings induce the same partition, i.e. they are
    /// equal up to a bijective relabeling of class symbols.
    pub fn same_partition(&self, other: &CombinedCrispIndicator) -> bool {
        if self.labels.len() != other.labels.len() {
            return false;
        }
        let mut fwd = [None::<u8>; 256];
        let mut bwd = [None::<u8>; 256];
        for (&a, &b) in self.labels.iter().zip(&other.labels) {
            match (fwd[a as usize], bwd[b as usize]) {
                (None, None) => {
                    fwd[a as usize] = Some(b);
                    bwd[b as usize] = Some(a);
                }
                (Some(fb), Some(ba)) if fb == b && ba == a => {}
                _ => return false,
            }
        }
        true
    }
}

/// Unwraps the annulus between the pupil boundary and `max_radius`.
///
/// `max_radius` is clamped so every sampled circle stays inside the image.
/// Fails when no full line fits between the pupil boundary and the limit.
pub fn unwrap(
    img: &GrayImage,
    fit: &PupilFit,
    max_radius: f64,
    width: usize,
    radial_step: f64,
) -> Result<UnwrappedIris> {
    if width < 2 {
        return Err(Error::InvalidParameter(format!(
            "stretched width must be at least 2, got {width}"
        )));
    }
    if !(radial_step > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "radial step must be positive, got {radial_step}"
        )));
    }
    let (w, h) = (img.width() as f64, img.height() as f64);
    let border = fit
        .center_x
        .min(fit.center_y)
        .min(w - fit.center_x)
        .min(h - fit.center_y)
        - 1.0;
    let max_radius = max_radius.min(border);
    if max_radius < fit.radius {
        return Err(Error::SegmentationFailure(format!(
            "pupil radius {:.1} leaves no annulus inside the image (limit {:.1})",
            fit.radius, max_radius
        )));
    }

    let mut rows = Vec::new();
    let mut row = 0usize;
    loop {
        let radius = fit.radius + row as f64 * radial_step;
        if radius > max_radius {
            break;
        }
        let n = ((std::f64::consts::TAU * radius).round() as usize).max(4);
        let mut samples = Vec::with_capacity(n);
        for i in 0..n {
            let theta = std::f64::consts::TAU * i as f64 / n as f64;
            // Counterclockwise with y growing downward means y decreases
            // with positive sin.
            let px = fit.center_x + radius * theta.cos();
            let py = fit.center_y - radius * theta.sin();
            let x = ((px - 0.5).round() as i64).clamp(0, img.width() as i64 - 1) as u32;
            let y = ((py - 0.5).round() as i64).clamp(0, img.height() as i64 - 1) as u32;
            samples.push(img.get(x, y));
        }
        let stretched = resample_circular(&samples, width);
        rows.push(UnwrappedRow { samples, stretched });
        row += 1;
    }
    if rows.is_empty() {
        return Err(Error::SegmentationFailure(
            "no unwrapped lines fit between pupil and border".into(),
        ));
    }
    Ok(UnwrappedIris {
        rows,
        start_radius: fit.radius,
        radial_step,
        stretched_width: width,
    })
}

/// Circular linear-interpolation resampling of one line to `width` samples.
fn resample_circular(samples: &[u8], width: usize) -> Vec<f32> {
    let n = samples.len();
    let mut out = Vec::with_capacity(width);
    for j in 0..width {
        let pos = j as f64 * n as f64 / width as f64;
        let i0 = pos.floor() as usize % n;
        let i1 = (i0 + 1) % n;
        let frac = pos - pos.floor();
        let a = samples[i0] as f64;
        let b = samples[i1] as f64;
        out.push((a + frac * (b - a)) as f32);
    }
    out
}

/// Computes the raw, stretched, and combined per-line mean profiles.
pub fn line_mean_vectors(u: &UnwrappedIris) -> LineMeans {
    let raw: Vec<f64> = u
        .rows
        .iter()
        .map(|r| r.samples.iter().map(|&s| s as f64).sum::<f64>() / r.samples.len() as f64)
        .collect();
    let stretched: Vec<f64> = u
        .rows
        .iter()
        .map(|r| r.stretched.iter().map(|&s| s as f64).sum::<f64>() / r.stretched.len() as f64)
        .collect();
    let combined = raw
        .iter()
        .zip(&stretched)
        .map(|(&a, &b)| (a + b) / 2.0)
        .collect();
    LineMeans {
        raw,
        stretched,
        combined,
    }
}

/// Splits a real-valued profile into three classes by histogram k-means.
///
/// Values are min-max normalized onto 256 bins first. A constant profile
/// degenerates to a single class (see
/// [`CombinedCrispIndicator::class_count`]).
pub fn three_means_indicator(values: &[f64]) -> Result<CombinedCrispIndicator> {
    if values.is_empty() {
        return Err(Error::EmptyInput);
    }
    let min = values.iter().copied().fold(f64::INFINITY, f64::min);
    let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(min.is_finite() && max.is_finite()) {
        return Err(Error::InvalidParameter(
            "profile contains non-finite values".into(),
        ));
    }
    if max == min {
        return Ok(CombinedCrispIndicator {
            labels: vec![0; values.len()],
            class_count: 1,
        });
    }
    let scale = 255.0 / (max - min);
    let bins: Vec<u8> = values
        .iter()
        .map(|&v| ((v - min) * scale).round().clamp(0.0, 255.0) as u8)
        .collect();
    let mut hist = [0u64; kmeans::BIN_COUNT];
    for &b in &bins {
        hist[b as usize] += 1;
    }
    let clustering = kmeans_histogram(&hist, 3, kmeans::DEFAULT_MAX_ITER, false)?;
    let labels: Vec<u8> = bins
        .iter()
        .map(|&b| clustering.bin_labels[b as usize])
        .collect();
    Ok(CombinedCrispIndicator {
        class_count: clustering.centroids.len(),
        labels,
    })
}

/// Votes three indicators line by line and extracts the iris band.
///
/// Each indicator nominates the class of the line at `pupil_margin` (clamped
/// to the profile length) as "iris". A line gets one vote per indicator that
/// labels it iris; the band is the maximal contiguous run of lines with at
/// least two votes around the nominating line. Anchoring the run there —
/// rather than at the first qualifying line — keeps isolated vote blips
/// inside the pupil-bleed zone (the lines the margin exists to skip) from
/// capturing the band.
pub fn vote_iris_band(
    p: &CombinedCrispIndicator,
    q: &CombinedCrispIndicator,
    r: &CombinedCrispIndicator,
    pupil_margin: usize,
) -> Result<(Vec<u8>, RangeInclusive<usize>)> {
    let n = p.len();
    if n == 0 {
        return Err(Error::EmptyInput);
    }
    if q.len() != n || r.len() != n {
        return Err(Error::ShapeMismatch(format!(
            "indicator lengths {} / {} / {}",
            p.len(),
            q.len(),
            r.len()
        )));
    }
    let margin = pupil_margin.min(n - 1);
    let mut votes = vec![0u8; n];
    for ind in [p, q, r] {
        let iris_class = ind.labels()[margin];
        for (v, &label) in votes.iter_mut().zip(ind.labels()) {
            if label == iris_class {
                *v += 1;
            }
        }
    }
    // The nominating line matches its own class in every indicator, so it
    // always carries three votes and the run around it is never empty.
    debug_assert_eq!(votes[margin], 3);
    let mut start = margin;
    while start > 0 && votes[start - 1] >= 2 {
        start -= 1;
    }
    let mut end = margin;
    while end + 1 < n && votes[end + 1] >= 2 {
        end += 1;
    }
    Ok((votes, start..=end))
}

/// A segmented iris: pupil fit, limbic boundary, and the unwrapped band
/// between them.
#[derive(Debug, Clone)]
pub struct IrisRing {
    pub pupil: PupilFit,
    /// Radius of the band's outermost line.
    pub limbic_radius: f64,
    /// The unwrapped lines of the voted iris band only.
    pub band: UnwrappedIris,
    /// Index of the band's first line within the full unwrapping.
    pub band_start_line: usize,
    /// Per-line vote counts over the full unwrapping.
    pub votes: Vec<u8>,
}

/// Intermediate stages of [`segment_traced`].
#[derive(Debug, Clone)]
pub struct SegmentTrace {
    pub pupil: PupilTrace,
    /// The full unwrapping, before band restriction.
    pub unwrapped: UnwrappedIris,
    pub means: LineMeans,
    /// Indicators over the raw, stretched, and combined profiles.
    pub indicators: [CombinedCrispIndicator; 3],
}

/// Segments an eye image with default configuration.
pub fn segment(img: &GrayImage) -> Result<IrisRing> {
    segment_with(img, &SegmentConfig::default()).map(|(ring, _)| ring)
}

/// Segments an eye image, also returning every intermediate stage.
pub fn segment_traced(img: &GrayImage) -> Result<(IrisRing, SegmentTrace)> {
    segment_with(img, &SegmentConfig::default())
}

/// Segments an eye image with explicit configuration.
pub fn segment_with(img: &GrayImage, cfg: &SegmentConfig) -> Result<(IrisRing, SegmentTrace)> {
    let (fit, pupil_trace) = pupil::find_pupil_with(img, &cfg.pupil)?;
    let unwrapped = unwrap(
        img,
        &fit,
        cfg.max_radius_factor * fit.radius,
        cfg.stretched_width,
        cfg.radial_step,
    )
    .map_err(|e| e.at_stage("iris unwrapping"))?;
    let means = line_mean_vectors(&unwrapped);
    let p = three_means_indicator(&means.raw).map_err(|e| e.at_stage("raw profile indicator"))?;
    let q = three_means_indicator(&means.stretched)
        .map_err(|e| e.at_stage("stretched profile indicator"))?;
    let r = three_means_indicator(&means.combined)
        .map_err(|e| e.at_stage("combined profile indicator"))?;
    let (votes, band_range) =
        vote_iris_band(&p, &q, &r, cfg.pupil_margin).map_err(|e| e.at_stage("iris band vote"))?;

    let (start, end) = (*band_range.start(), *band_range.end());
    let limbic_radius = unwrapped.radius_of_row(end);
    if limbic_radius <= fit.radius {
        return Err(Error::SegmentationFailure(format!(
            "iris band collapsed onto the pupil boundary (limbic {:.1} <= pupil {:.1})",
            limbic_radius, fit.radius
        )));
    }
    let band = UnwrappedIris {
        rows: unwrapped.rows[start..=end].to_vec(),
        start_radius: unwrapped.radius_of_row(start),
        radial_step: unwrapped.radial_step,
        stretched_width: unwrapped.stretched_width,
    };
    let ring = IrisRing {
        pupil: fit,
        limbic_radius,
        band,
        band_start_line: start,
        votes,
    };
    let trace = SegmentTrace {
        pupil: pupil_trace,
        unwrapped,
        means,
        indicators: [p, q, r],
    };
    Ok((ring, trace))
}
