//! Fast k-means quantization over a 256-bin intensity histogram.
//!
//! Because intensities live in `0..=255`, Lloyd's algorithm only ever needs
//! the histogram: assignment and centroid updates are O(256 * k) per
//! iteration regardless of image size. The quantizer is fully deterministic —
//! Lloyd runs from two fixed starts (evenly spaced histogram-mass quantiles,
//! and values evenly spread over the occupied intensity range) and the
//! clustering with the lower within-cluster squared deviation wins, ties
//! going to the quantile start. Ties in assignment break toward the lower
//! centroid index, and empty clusters are re-seeded at the intensity
//! farthest from its current centroid.
//!
//! The second start matters when nearly all mass sits in one or two bins
//! (for example the per-line means of a flat texture): mass quantiles then
//! drop several initial centroids into the same tight clump and Lloyd
//! cannot climb out of the resulting split, while the value-spread start
//! separates the clump from its outliers. With `reset_first_to_min` the
//! quantizer intentionally departs from the squared-error optimum, so that
//! mode skips the second start and runs once from the minimum intensity
//! plus quantiles of the remaining mass.

use crate::error::{Error, Result};
use crate::image::GrayImage;

pub const BIN_COUNT: usize = 256;

/// Default iteration cap. The quantizer is used as a coarse, fast splitter;
/// a handful of Lloyd steps is enough for histogram data.
pub const DEFAULT_MAX_ITER: usize = 10;

/// Result of quantizing an image into `k` intensity clusters.
#[derive(Debug, Clone)]
pub struct KmqResult {
    /// Per-pixel cluster index, row-major, in `0..centroids.len()`.
    pub labels: Vec<u8>,
    /// Cluster centroids in strictly ascending intensity order.
    pub centroids: Vec<f64>,
    /// Lloyd iterations actually performed.
    pub iterations: usize,
    /// Per-bin cluster index for intensities `0..=255`.
    bin_labels: [u8; BIN_COUNT],
}

impl KmqResult {
    /// Number of clusters after clamping to the distinct intensity count.
    pub fn cluster_count(&self) -> usize {
        self.centroids.len()
    }

    /// Cluster index an intensity value falls into.
    pub fn bin_label(&self, intensity: u8) -> u8 {
        self.bin_labels[intensity as usize]
    }
}

/// Quantizes `img` into `k` intensity clusters via histogram k-means.
///
/// `k` is clamped to the number of distinct intensities present, so a
/// constant image yields a single cluster centered on that value. With
/// `reset_first_to_min` the lowest centroid is pinned to the darkest
/// intensity present after every update, which widens the lowest cluster —
/// useful when the darkest structure must be captured whole.
pub fn fkmq(
    img: &GrayImage,
    k: usize,
    max_iter: usize,
    reset_first_to_min: bool,
) -> Result<KmqResult> {
    if k < 2 {
        return Err(Error::InvalidParameter(format!(
            "cluster count must be at least 2, got {k}"
        )));
    }
    let mut hist = [0u64; BIN_COUNT];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let engine = kmeans_histogram(&hist, k, max_iter, reset_first_to_min)?;
    let labels = img
        .pixels()
        .iter()
        .map(|&p| engine.bin_labels[p as usize])
        .collect();
    Ok(KmqResult {
        labels,
        centroids: engine.centroids,
        iterations: engine.iterations,
        bin_labels: engine.bin_labels,
    })
}

pub(crate) struct HistogramClustering {
    pub centroids: Vec<f64>,
    pub bin_labels: [u8; BIN_COUNT],
    pub iterations: usize,
}

/// Lloyd's algorithm over a weighted histogram of `BIN_COUNT` intensity bins.
pub(crate) fn kmeans_histogram(
    hist: &[u64; BIN_COUNT],
    k: usize,
    max_iter: usize,
    reset_first_to_min: bool,
) -> Result<HistogramClustering> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "cluster count must be positive".into(),
        ));
    }
    let total: u64 = hist.iter().sum();
    if total == 0 {
        return Err(Error::EmptyInput);
    }
    let distinct: Vec<usize> = (0..BIN_COUNT).filter(|&v| hist[v] > 0).collect();
    let k = k.min(distinct.len());
    let min_value = distinct[0] as f64;

    // Pinning the first centroid deliberately trades squared error for a
    // wider lowest cluster, so squared error cannot arbitrate between starts
    // there; the pinned engine runs a single pin-aware quantile start.
    if reset_first_to_min {
        return Ok(lloyd(
            hist,
            &distinct,
            init_pinned_centroids(hist, total, &distinct, k),
            max_iter,
            true,
            min_value,
        ));
    }
    let from_quantiles = lloyd(
        hist,
        &distinct,
        init_quantile_centroids(hist, total, &distinct, k),
        max_iter,
        false,
        min_value,
    );
    let from_value_spread = lloyd(
        hist,
        &distinct,
        init_value_spread_centroids(&distinct, k),
        max_iter,
        false,
        min_value,
    );
    // Best-of-two on the weighted within-cluster squared deviation; the
    // quantile start wins ties so histograms both starts handle equally well
    // keep a single canonical clustering.
    if histogram_ss(hist, &from_value_spread) < histogram_ss(hist, &from_quantiles) {
        Ok(from_value_spread)
    } else {
        Ok(from_quantiles)
    }
}

/// Runs Lloyd iterations from `centroids` until assignments stabilize or
/// `max_iter` is reached, then labels every bin with its nearest centroid.
fn lloyd(
    hist: &[u64; BIN_COUNT],
    distinct: &[usize],
    mut centroids: Vec<f64>,
    max_iter: usize,
    reset_first_to_min: bool,
    min_value: f64,
) -> HistogramClustering {
    if reset_first_to_min {
        centroids[0] = min_value;
        centroids.sort_by(f64::total_cmp);
        centroids.dedup();
    }

    let mut prev_assignment: Option<Vec<u8>> = None;
    let mut iterations = 0usize;
    for _ in 0..max_iter {
        let assignment = assign_bins(&centroids);
        if prev_assignment.as_ref() == Some(&assignment) {
            break;
        }
        iterations += 1;

        // Centroid update: weighted mean of each cluster's bins.
        let mut sums = vec![0.0f64; centroids.len()];
        let mut weights = vec![0u64; centroids.len()];
        for &v in distinct {
            let c = assignment[v] as usize;
            sums[c] += (v as u64 * hist[v]) as f64;
            weights[c] += hist[v];
        }
        for c in 0..centroids.len() {
            if weights[c] > 0 {
                centroids[c] = sums[c] / weights[c] as f64;
            } else {
                // Re-seed an empty cluster at the intensity farthest from
                // its assigned centroid, so no cluster is ever lost.
                let far = distinct
                    .iter()
                    .copied()
                    .max_by(|&a, &b| {
                        let da = (a as f64 - centroids[assignment[a] as usize]).abs();
                        let db = (b as f64 - centroids[assignment[b] as usize]).abs();
                        da.total_cmp(&db)
                    })
                    .expect("distinct is non-empty");
                centroids[c] = far as f64;
            }
        }
        if reset_first_to_min {
            centroids[0] = min_value;
        }
        centroids.sort_by(f64::total_cmp);
        centroids.dedup();
        prev_assignment = Some(assignment);
    }

    // Final assignment so labels always point at the nearest centroid.
    let assignment = assign_bins(&centroids);
    let mut bin_labels = [0u8; BIN_COUNT];
    bin_labels.copy_from_slice(&assignment);
    HistogramClustering {
        centroids,
        bin_labels,
        iterations,
    }
}

/// Weighted within-cluster squared deviation of a clustering over `hist`.
fn histogram_ss(hist: &[u64; BIN_COUNT], clustering: &HistogramClustering) -> f64 {
    (0..BIN_COUNT)
        .filter(|&v| hist[v] > 0)
        .map(|v| {
            let centroid = clustering.centroids[clustering.bin_labels[v] as usize];
            let d = v as f64 - centroid;
            hist[v] as f64 * d * d
        })
        .sum()
}

/// Initial centroids at `k` evenly spaced quantiles of the histogram mass,
/// nudged onto distinct intensities so every cluster starts separated.
fn init_quantile_centroids(
    hist: &[u64; BIN_COUNT],
    total: u64,
    distinct: &[usize],
    k: usize,
) -> Vec<f64> {
    let n = distinct.len();
    let mut centroids = Vec::with_capacity(k);
    let mut next_min = 0usize;
    for i in 0..k {
        // Target mass for the (i + 0.5)/k quantile.
        let target = total as f64 * (2 * i + 1) as f64 / (2 * k) as f64;
        let mut cum = 0u64;
        let mut idx = n - 1;
        for (j, &v) in distinct.iter().enumerate() {
            cum += hist[v];
            if cum as f64 >= target {
                idx = j;
                break;
            }
        }
        // Keep the picks strictly increasing while leaving one distinct
        // intensity for each remaining centroid. A lopsided histogram can
        // push every quantile onto the same bin, so the raw pick is clamped
        // into the index window where both constraints stay satisfiable.
        let max_idx = n - (k - i);
        let idx = idx.clamp(next_min, max_idx);
        centroids.push(distinct[idx] as f64);
        next_min = idx + 1;
    }
    centroids
}

/// Initial centroids for the pinned engine: the minimum intensity plus
/// `k − 1` evenly spaced mass quantiles of the rest of the histogram.
///
/// The update step overwrites the first centroid with the minimum anyway,
/// so spending a quantile pick on position 0 would discard one start from
/// the set — and on histograms dominated by a single bright clump the
/// discarded pick is the only one below the clump, leaving the whole mid
/// range to the pinned cluster.
fn init_pinned_centroids(
    hist: &[u64; BIN_COUNT],
    total: u64,
    distinct: &[usize],
    k: usize,
) -> Vec<f64> {
    let mut centroids = vec![distinct[0] as f64];
    if k > 1 {
        let tail = &distinct[1..];
        let tail_total = total - hist[distinct[0]];
        centroids.extend(init_quantile_centroids(hist, tail_total, tail, k - 1));
    }
    centroids
}

/// Initial centroids at `k` midpoints evenly spread over the occupied
/// intensity range, ignoring where the mass sits. On histograms dominated by
/// one tight clump this keeps the starting centroids apart where the
/// quantile picks would crowd into the clump.
fn init_value_spread_centroids(distinct: &[usize], k: usize) -> Vec<f64> {
    let lo = distinct[0] as f64;
    let hi = distinct[distinct.len() - 1] as f64;
    (0..k)
        .map(|i| lo + (hi - lo) * (2 * i + 1) as f64 / (2 * k) as f64)
        .collect()
}

/// Assigns every intensity bin to its nearest centroid, ties toward the
/// lower centroid index. Unoccupied bins get a label too, so lookups for
/// any intensity are well-defined.
fn assign_bins(centroids: &[f64]) -> Vec<u8> {
    let mut labels = vec![0u8; BIN_COUNT];
    for (v, label) in labels.iter_mut().enumerate() {
        let mut best = 0usize;
        let mut best_d = f64::INFINITY;
        for (c, &center) in centroids.iter().enumerate() {
            let d = (v as f64 - center).abs();
            if d < best_d {
                best_d = d;
                best = c;
            }
        }
        *label = best as u8;
    }
    labels
}

/// Within-cluster sum of squared deviations for a clustering of `img`.
pub fn within_cluster_ss(img: &GrayImage, result: &KmqResult) -> f64 {
    img.pixels()
        .iter()
        .map(|&p| {
            let c = result.centroids[result.bin_label(p) as usize];
            let d = p as f64 - c;
            d * d
        })
        .sum()
}
