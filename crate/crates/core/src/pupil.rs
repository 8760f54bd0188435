//! Pupil localization.
//!
//! The pupil is the darkest compact region of the eye, so the stages are:
//!
//! 1. Quantize the image into `k` intensity clusters and keep the darkest
//!    one ([`extract_pupil_cluster`]).
//! 2. Re-quantize vertical and horizontal run lengths of that mask and keep
//!    the long-run core in each direction; their intersection is the pupil
//!    indicator ([`pupil_indicator`]) — isolated dark noise has short runs
//!    and drops out.
//! 3. Flood-fill the dark cluster from the first indicator pixel
//!    ([`flood_fill_pupil`]), close interior specular holes
//!    ([`fill_specular_lights`]), and fit an ellipse by bounding box
//!    ([`fit_pupil`]).

use crate::error::{Error, Result};
use crate::image::{BinaryImage, GrayImage};
use crate::kmeans::{self, fkmq};
use crate::rle::{self, rlq_directional, Axis};

/// Tuning knobs for [`find_pupil`].
#[derive(Debug, Clone)]
pub struct PupilConfig {
    /// Cluster count for the darkness quantization.
    pub cluster_k: usize,
    /// Iteration cap for both quantization passes.
    pub max_iter: usize,
    /// Pin the lowest centroid to the darkest intensity present, widening
    /// the darkest cluster so the whole pupil lands in it.
    pub reset_first_to_min: bool,
    /// Cluster count when splitting run-length coefficients into
    /// short-run and long-run groups.
    pub indicator_k: usize,
}

impl Default for PupilConfig {
    fn default() -> Self {
        PupilConfig {
            cluster_k: 16,
            max_iter: kmeans::DEFAULT_MAX_ITER,
            reset_first_to_min: true,
            indicator_k: 2,
        }
    }
}

/// Ellipse fitted to the filled pupil mask, plus the mask itself.
#[derive(Debug, Clone)]
pub struct PupilFit {
    /// Ellipse center in pixel-center coordinates.
    pub center_x: f64,
    pub center_y: f64,
    /// Half-extent of the mask bounding box, horizontal and vertical.
    pub semi_axis_h: f64,
    pub semi_axis_v: f64,
    /// Working radius: mean of the two semi-axes.
    pub radius: f64,
    /// The filled pupil mask the ellipse was fitted to.
    pub mask: BinaryImage,
}

/// Intermediate stages of [`find_pupil`], for inspection and dumping.
#[derive(Debug, Clone)]
pub struct PupilTrace {
    /// Darkest-cluster mask.
    pub cluster: BinaryImage,
    /// Vertical run-length re-quantization of the cluster.
    pub runs_vertical: GrayImage,
    /// Horizontal run-length re-quantization of the cluster.
    pub runs_horizontal: GrayImage,
    /// Intersection of the two long-run cores.
    pub indicator: BinaryImage,
    /// Flood-filled pupil after specular holes were closed.
    pub filled: BinaryImage,
}

/// Quantizes the image and returns the cluster with the lowest centroid.
///
/// Requires the quantization to produce at least two clusters; a (near-)
/// constant image carries no darkness contrast to segment.
pub fn extract_pupil_cluster(img: &GrayImage, cfg: &PupilConfig) -> Result<BinaryImage> {
    let q = fkmq(img, cfg.cluster_k, cfg.max_iter, cfg.reset_first_to_min)?;
    if q.cluster_count() < 2 {
        return Err(Error::DegenerateInput(
            "image quantizes to a single cluster; no darkness contrast".into(),
        ));
    }
    // Centroids are ascending, so cluster 0 is the darkest.
    let bits = q.labels.iter().map(|&l| l == 0).collect();
    BinaryImage::from_bits(img.width(), img.height(), bits)
}

/// Intersects the vertical and horizontal long-run cores of a mask.
///
/// Each direction keeps the pixels whose re-quantized run length falls in
/// the highest of `indicator_k` clusters. A direction whose longest run is
/// shorter than 2 pixels carries no elongation evidence at all, and an empty
/// intersection means the mask has no two-directionally compact core; both
/// cases are reported as [`Error::NoPupilIndicator`].
pub fn pupil_indicator(pc: &BinaryImage, cfg: &PupilConfig) -> Result<BinaryImage> {
    for axis in [Axis::Vertical, Axis::Horizontal] {
        if rle::max_run_length(pc, axis) < 2 {
            return Err(Error::NoPupilIndicator(format!(
                "no {} runs of length 2 or more",
                axis_name(axis)
            )));
        }
    }
    let rlv = rlq_directional(pc, Axis::Vertical)?;
    let rlh = rlq_directional(pc, Axis::Horizontal)?;
    let core_v = long_run_core(&rlv, cfg)?;
    let core_h = long_run_core(&rlh, cfg)?;
    let pi = core_v.and(&core_h)?;
    if pi.count_ones() == 0 {
        return Err(Error::NoPupilIndicator(
            "vertical and horizontal long-run cores do not overlap".into(),
        ));
    }
    Ok(pi)
}

/// Keeps the pixels of a run-length coefficient image that fall in the
/// highest-centroid cluster. Background zeros are excluded from clustering —
/// they encode absence, not run length.
fn long_run_core(coeffs: &GrayImage, cfg: &PupilConfig) -> Result<BinaryImage> {
    let mut hist = [0u64; kmeans::BIN_COUNT];
    for &p in coeffs.pixels() {
        if p > 0 {
            hist[p as usize] += 1;
        }
    }
    let distinct = hist.iter().filter(|&&c| c > 0).count();
    let threshold = if distinct == 1 {
        // All runs share one length: every run is maximal, keep them all.
        1
    } else {
        let clustering =
            kmeans::kmeans_histogram(&hist, cfg.indicator_k, cfg.max_iter, false)?;
        let top = (clustering.centroids.len() - 1) as u8;
        let threshold = (1..kmeans::BIN_COUNT)
            .find(|&v| hist[v] > 0 && clustering.bin_labels[v] == top)
            .expect("top cluster is non-empty") as u8;
        log::debug!(
            "long-run core keeps coefficients >= {threshold} (centroids {:?})",
            clustering.centroids
        );
        threshold
    };
    Ok(BinaryImage::from_gray_where(coeffs, |p| p >= threshold))
}

fn axis_name(axis: Axis) -> &'static str {
    match axis {
        Axis::Horizontal => "horizontal",
        Axis::Vertical => "vertical",
    }
}

/// 4-connected flood fill of `mask` starting at `seed`.
///
/// The seed must be a foreground pixel inside the image.
pub fn flood_fill_pupil(mask: &BinaryImage, seed: (u32, u32)) -> Result<BinaryImage> {
    let (sx, sy) = seed;
    if sx >= mask.width() || sy >= mask.height() || !mask.get(sx, sy) {
        return Err(Error::InvalidSeed { x: sx, y: sy });
    }
    let mut out = BinaryImage::new(mask.width(), mask.height())?;
    let mut stack = vec![(sx, sy)];
    out.set(sx, sy, true);
    while let Some((x, y)) = stack.pop() {
        let push = |nx: u32, ny: u32, out: &mut BinaryImage, stack: &mut Vec<(u32, u32)>| {
            if mask.get(nx, ny) && !out.get(nx, ny) {
                out.set(nx, ny, true);
                stack.push((nx, ny));
            }
        };
        if x > 0 {
            push(x - 1, y, &mut out, &mut stack);
        }
        if x + 1 < mask.width() {
            push(x + 1, y, &mut out, &mut stack);
        }
        if y > 0 {
            push(x, y - 1, &mut out, &mut stack);
        }
        if y + 1 < mask.height() {
            push(x, y + 1, &mut out, &mut stack);
        }
    }
    Ok(out)
}

/// Closes specular holes: any maximal background run (along a row or a
/// column) bounded on both sides by foreground is converted to foreground.
/// Sweeps repeat until a fixpoint; the result is a superset of the input.
pub fn fill_specular_lights(mask: &BinaryImage) -> Result<BinaryImage> {
    let mut current = mask.clone();
    loop {
        let mut fill = Vec::new();
        collect_bounded_runs(&current, Axis::Horizontal, &mut fill);
        collect_bounded_runs(&current, Axis::Vertical, &mut fill);
        if fill.is_empty() {
            return Ok(current);
        }
        for (x, y) in fill {
            current.set(x, y, true);
        }
    }
}

/// Finds background runs bounded by foreground on both ends along `axis`.
fn collect_bounded_runs(mask: &BinaryImage, axis: Axis, fill: &mut Vec<(u32, u32)>) {
    let (outer, inner) = match axis {
        Axis::Horizontal => (mask.height(), mask.width()),
        Axis::Vertical => (mask.width(), mask.height()),
    };
    let at = |o: u32, i: u32| -> (u32, u32) {
        match axis {
            Axis::Horizontal => (i, o),
            Axis::Vertical => (o, i),
        }
    };
    for o in 0..outer {
        let mut i = 0;
        while i < inner {
            let (x, y) = at(o, i);
            if mask.get(x, y) {
                i += 1;
                continue;
            }
            let start = i;
            while i < inner && {
                let (x, y) = at(o, i);
                !mask.get(x, y)
            } {
                i += 1;
            }
            // Bounded iff the run touches neither border.
            if start > 0 && i < inner {
                for j in start..i {
                    fill.push(at(o, j));
                }
            }
        }
    }
}

/// Fits an axis-aligned ellipse to the mask's bounding box.
///
/// Center is the box center, semi-axes are the half-extents, and the working
/// radius is their mean.
pub fn fit_pupil(mask: &BinaryImage) -> Result<PupilFit> {
    let mut min_x = u32::MAX;
    let mut max_x = 0u32;
    let mut min_y = u32::MAX;
    let mut max_y = 0u32;
    let mut any = false;
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) {
                any = true;
                min_x = min_x.min(x);
                max_x = max_x.max(x);
                min_y = min_y.min(y);
                max_y = max_y.max(y);
            }
        }
    }
    if !any {
        return Err(Error::DegenerateInput("empty pupil mask".into()));
    }
    let semi_axis_h = (max_x - min_x + 1) as f64 / 2.0;
    let semi_axis_v = (max_y - min_y + 1) as f64 / 2.0;
    Ok(PupilFit {
        center_x: (min_x + max_x + 1) as f64 / 2.0,
        center_y: (min_y + max_y + 1) as f64 / 2.0,
        semi_axis_h,
        semi_axis_v,
        radius: (semi_axis_h + semi_axis_v) / 2.0,
        mask: mask.clone(),
    })
}

/// Runs the full pupil pipeline with default configuration.
pub fn find_pupil(img: &GrayImage) -> Result<PupilFit> {
    find_pupil_with(img, &PupilConfig::default()).map(|(fit, _)| fit)
}

/// Runs the full pupil pipeline, also returning every intermediate stage.
pub fn find_pupil_traced(img: &GrayImage) -> Result<(PupilFit, PupilTrace)> {
    find_pupil_with(img, &PupilConfig::default())
}

/// Runs the full pupil pipeline with explicit configuration.
pub fn find_pupil_with(img: &GrayImage, cfg: &PupilConfig) -> Result<(PupilFit, PupilTrace)> {
    let cluster =
        extract_pupil_cluster(img, cfg).map_err(|e| e.at_stage("pupil cluster extraction"))?;
    let runs_vertical = rlq_directional(&cluster, Axis::Vertical)
        .map_err(|e| e.at_stage("vertical run re-quantization"))?;
    let runs_horizontal = rlq_directional(&cluster, Axis::Horizontal)
        .map_err(|e| e.at_stage("horizontal run re-quantization"))?;
    let indicator =
        pupil_indicator(&cluster, cfg).map_err(|e| e.at_stage("pupil indicator"))?;
    let seed = indicator.first_set().expect("indicator is non-empty");
    let blob = flood_fill_pupil(&cluster, seed).map_err(|e| e.at_stage("pupil flood fill"))?;
    let filled = fill_specular_lights(&blob).map_err(|e| e.at_stage("specular fill"))?;
    let fit = fit_pupil(&filled).map_err(|e| e.at_stage("pupil ellipse fit"))?;
    Ok((
        fit,
        PupilTrace {
            cluster,
            runs_vertical,
            runs_horizontal,
            indicator,
            filled,
        },
    ))
}
