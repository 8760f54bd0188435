//! Score-distribution statistics and the full evaluation panel.
//!
//! Takes genuine and imposter similarity scores and produces moment
//! summaries, a binomial degrees-of-freedom fit, empirical FAR/FRR and EER,
//! theoretical tail odds under normal (optionally exact binomial) fits,
//! separability indices, and operating points at target rates and fixed
//! thresholds.

use serde::{Deserialize, Serialize};
use statrs::distribution::{Binomial, ContinuousCDF, DiscreteCDF, Normal};

use crate::error::{Error, Result};

/// Genuine and imposter similarity scores from one experiment.
#[derive(Debug, Clone)]
pub struct ScoreSet {
    genuine: Vec<f64>,
    imposter: Vec<f64>,
    code_length_bits: usize,
}

impl ScoreSet {
    /// Validates that both classes are non-empty, every score lies in
    /// [0, 1], and the code length is positive.
    pub fn new(genuine: Vec<f64>, imposter: Vec<f64>, code_length_bits: usize) -> Result<ScoreSet> {
        if genuine.is_empty() || imposter.is_empty() {
            return Err(Error::EmptyInput);
        }
        if code_length_bits == 0 {
            return Err(Error::InvalidParameter(
                "code length must be positive".into(),
            ));
        }
        for &s in genuine.iter().chain(&imposter) {
            if !(0.0..=1.0).contains(&s) {
                return Err(Error::InvalidParameter(format!(
                    "score {s} outside [0, 1]"
                )));
            }
        }
        Ok(ScoreSet {
            genuine,
            imposter,
            code_length_bits,
        })
    }

    pub fn genuine(&self) -> &[f64] {
        &self.genuine
    }

    pub fn imposter(&self) -> &[f64] {
        &self.imposter
    }

    pub fn code_length_bits(&self) -> usize {
        self.code_length_bits
    }
}

/// Moment summary of one score distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DistributionSummary {
    pub mean: f64,
    pub median: f64,
    /// Sample standard deviation (n−1 denominator).
    pub std: f64,
    /// Third standardized moment; `None` when the deviation is zero.
    pub skewness: Option<f64>,
    /// Fourth standardized moment minus 3 (normal → 0); `None` when the
    /// deviation is zero.
    pub excess_kurtosis: Option<f64>,
}

/// Plug-in normal parameters for a score class.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct NormalFit {
    pub mean: f64,
    pub std: f64,
}

impl NormalFit {
    pub fn from_summary(summary: &DistributionSummary) -> NormalFit {
        NormalFit {
            mean: summary.mean,
            std: summary.std,
        }
    }
}

/// One row of the threshold sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RocRow {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub ofa: f64,
    pub ofr: f64,
}

/// Rates at one particular threshold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OperatingPoint {
    pub threshold: f64,
    pub far: f64,
    pub frr: f64,
    pub ofa: f64,
    pub ofr: f64,
}

/// Panel assembly options.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PanelOptions {
    /// FAR level whose interpolated threshold becomes the suggested
    /// recognition threshold.
    pub target_far: f64,
    /// FRR level reported as a second operating point.
    pub target_frr: f64,
    /// Thresholds reported verbatim.
    pub fixed_thresholds: Vec<f64>,
    /// Overrides the suggested recognition threshold when set.
    pub threshold_override: Option<f64>,
    /// Compute theoretical odds from exact binomial tails at the fitted
    /// degrees of freedom instead of the normal approximation.
    pub exact_binomial_tails: bool,
}

impl Default for PanelOptions {
    fn default() -> Self {
        PanelOptions {
            target_far: 0.001,
            target_frr: 0.01,
            fixed_thresholds: vec![0.59, 0.60],
            threshold_override: None,
            exact_binomial_tails: false,
        }
    }
}

/// Everything the evaluation reports about one score set.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EvaluationPanel {
    pub imposter: DistributionSummary,
    pub genuine: DistributionSummary,
    pub imposter_fit: NormalFit,
    pub genuine_fit: NormalFit,
    /// Binomial degrees of freedom fitted to the imposter distribution.
    pub degrees_of_freedom: f64,
    pub code_length_bits: usize,
    pub decidability: f64,
    pub fisher_ratio: f64,
    pub storage_efficiency: f64,
    pub eer: f64,
    pub eer_threshold: f64,
    pub threshold_at_target_far: OperatingPoint,
    pub rates_at_target_frr: OperatingPoint,
    pub fixed_thresholds: Vec<OperatingPoint>,
    /// The override if given, otherwise the target-FAR threshold.
    pub chosen_threshold: f64,
    pub roc: Vec<RocRow>,
    pub options: PanelOptions,
}

/// Moment summary of a sample; needs at least two scores.
pub fn summarize(scores: &[f64]) -> Result<DistributionSummary> {
    if scores.len() < 2 {
        return Err(Error::InvalidParameter(format!(
            "need at least 2 scores to summarize, got {}",
            scores.len()
        )));
    }
    let n = scores.len() as f64;
    let mean = scores.iter().sum::<f64>() / n;
    let mut sorted = scores.to_vec();
    sorted.sort_by(f64::total_cmp);
    let median = if sorted.len() % 2 == 1 {
        sorted[sorted.len() / 2]
    } else {
        (sorted[sorted.len() / 2 - 1] + sorted[sorted.len() / 2]) / 2.0
    };
    let m2 = scores.iter().map(|&s| (s - mean).powi(2)).sum::<f64>() / n;
    let std = (scores.iter().map(|&s| (s - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt();
    let (skewness, excess_kurtosis) = if m2 == 0.0 {
        (None, None)
    } else {
        let m3 = scores.iter().map(|&s| (s - mean).powi(3)).sum::<f64>() / n;
        let m4 = scores.iter().map(|&s| (s - mean).powi(4)).sum::<f64>() / n;
        (Some(m3 / m2.powf(1.5)), Some(m4 / (m2 * m2) - 3.0))
    };
    Ok(DistributionSummary {
        mean,
        median,
        std,
        skewness,
        excess_kurtosis,
    })
}

/// Binomial degrees of freedom of a proportion distribution:
/// `p(1−p)/σ²`.
pub fn degrees_of_freedom(p: f64, sigma: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidParameter(format!(
            "mean {p} must lie strictly between 0 and 1"
        )));
    }
    if !(sigma > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "deviation {sigma} must be positive"
        )));
    }
    Ok(p * (1.0 - p) / (sigma * sigma))
}

/// Empirical rates at a threshold: a comparison is accepted when its score
/// strictly exceeds `t`, so FAR counts imposters above `t` and FRR counts
/// genuine scores at or below it.
pub fn empirical_rates(scores: &ScoreSet, t: f64) -> (f64, f64) {
    let far = scores.imposter.iter().filter(|&&s| s > t).count() as f64
        / scores.imposter.len() as f64;
    let frr = scores.genuine.iter().filter(|&&s| s <= t).count() as f64
        / scores.genuine.len() as f64;
    (far, frr)
}

fn standard_normal() -> Normal {
    Normal::new(0.0, 1.0).expect("unit normal")
}

/// Theoretical odds of false accept and false reject at `t` under normal
/// fits.
///
/// The false-accept side is evaluated as the reflected CDF
/// `Φ((μ_i − t)/σ_i)` so far tails keep full relative accuracy.
pub fn theoretical_odds(imposter: &NormalFit, genuine: &NormalFit, t: f64) -> (f64, f64) {
    let phi = standard_normal();
    let ofa = phi.cdf((imposter.mean - t) / imposter.std);
    let ofr = phi.cdf((t - genuine.mean) / genuine.std);
    (ofa, ofr)
}

/// Theoretical odds from exact binomial tails at the fitted degrees of
/// freedom of each class.
pub fn binomial_odds(imposter: &NormalFit, genuine: &NormalFit, t: f64) -> Result<(f64, f64)> {
    let ofa = binomial_tail(imposter, t, true)?;
    let ofr = binomial_tail(genuine, t, false)?;
    Ok((ofa, ofr))
}

fn binomial_tail(fit: &NormalFit, t: f64, upper: bool) -> Result<f64> {
    let n = degrees_of_freedom(fit.mean, fit.std)?.round().max(1.0) as u64;
    let dist = Binomial::new(fit.mean, n)
        .map_err(|e| Error::InvalidParameter(format!("binomial fit: {e}")))?;
    // The score is X/n for integer X, so "score > t" means X > floor(t n)
    // and "score <= t" means X <= floor(t n).
    let k = (t * n as f64).floor().clamp(0.0, n as f64) as u64;
    Ok(if upper { dist.sf(k) } else { dist.cdf(k) })
}

fn sorted_copy(scores: &[f64]) -> Vec<f64> {
    let mut v = scores.to_vec();
    v.sort_by(f64::total_cmp);
    v
}

/// Number of elements in the ascending slice that are `<= t`.
fn count_at_most(sorted: &[f64], t: f64) -> usize {
    sorted.partition_point(|&s| s <= t)
}

/// Equal error rate and its threshold.
///
/// Sweeps every distinct score as a candidate threshold. FAR − FRR is
/// non-increasing along the sweep; the crossing is resolved by linear
/// interpolation between the bracketing candidates, which makes the
/// interpolated FAR and FRR equal at the returned threshold.
pub fn eer(scores: &ScoreSet) -> (f64, f64) {
    let imposter = sorted_copy(&scores.imposter);
    let genuine = sorted_copy(&scores.genuine);
    let mut candidates = imposter.clone();
    candidates.extend_from_slice(&genuine);
    candidates.sort_by(f64::total_cmp);
    candidates.dedup();

    let rates = |t: f64| -> (f64, f64) {
        let far = (imposter.len() - count_at_most(&imposter, t)) as f64 / imposter.len() as f64;
        let frr = count_at_most(&genuine, t) as f64 / genuine.len() as f64;
        (far, frr)
    };

    let mut previous: Option<(f64, f64, f64)> = None;
    for &t in &candidates {
        let (far, frr) = rates(t);
        let diff = far - frr;
        if diff <= 0.0 {
            let Some((t0, far0, frr0)) = previous else {
                return ((far + frr) / 2.0, t);
            };
            let d0 = far0 - frr0;
            if d0 <= 0.0 || diff == 0.0 {
                return (far, t);
            }
            let alpha = d0 / (d0 - diff);
            let threshold = t0 + alpha * (t - t0);
            let value = far0 + alpha * (far - far0);
            return (value, threshold);
        }
        previous = Some((t, far, frr));
    }
    // FAR stayed above FRR for every candidate; the classes are inverted.
    // Report the last point.
    let t = *candidates.last().expect("score set is never empty");
    let (far, frr) = rates(t);
    ((far + frr) / 2.0, t)
}

/// Separation of the two fitted distributions in pooled-deviation units.
pub fn decidability(imposter: &DistributionSummary, genuine: &DistributionSummary) -> f64 {
    (genuine.mean - imposter.mean).abs()
        / ((genuine.std * genuine.std + imposter.std * imposter.std) / 2.0).sqrt()
}

/// Between-class separation relative to total variance; equals
/// `decidability² / 2`.
pub fn fisher_ratio(imposter: &DistributionSummary, genuine: &DistributionSummary) -> f64 {
    let d = genuine.mean - imposter.mean;
    d * d / (genuine.std * genuine.std + imposter.std * imposter.std)
}

/// Independent information per stored bit: degrees of freedom over code
/// length.
pub fn storage_efficiency(dof: f64, code_length_bits: usize) -> f64 {
    dof / code_length_bits as f64
}

/// Interpolated threshold where the step function `value(t)` crosses
/// `target`. `candidates` must be ascending and `value` monotone
/// (either direction) along them; `crossed` decides when the sweep has
/// reached the target side.
fn interpolate_crossing(
    candidates: &[f64],
    target: f64,
    value: impl Fn(f64) -> f64,
    crossed: impl Fn(f64) -> bool,
) -> f64 {
    let mut previous: Option<(f64, f64)> = None;
    for &t in candidates {
        let v = value(t);
        if crossed(v) {
            let Some((t0, v0)) = previous else {
                return t;
            };
            if v == v0 {
                return t;
            }
            let alpha = (target - v0) / (v - v0);
            return t0 + alpha.clamp(0.0, 1.0) * (t - t0);
        }
        previous = Some((t, v));
    }
    *candidates.last().expect("candidates are never empty")
}

/// Builds the full panel with default options.
pub fn build_panel(scores: &ScoreSet) -> Result<EvaluationPanel> {
    build_panel_with(scores, &PanelOptions::default())
}

/// Builds the full panel: summaries, degrees of freedom, ROC sweep, EER,
/// separability indices, storage efficiency, and operating points.
pub fn build_panel_with(scores: &ScoreSet, options: &PanelOptions) -> Result<EvaluationPanel> {
    let imposter = summarize(&scores.imposter)?;
    let genuine = summarize(&scores.genuine)?;
    let imposter_fit = NormalFit::from_summary(&imposter);
    let genuine_fit = NormalFit::from_summary(&genuine);
    let dof = degrees_of_freedom(imposter.mean, imposter.std)?;

    let odds = |t: f64| -> Result<(f64, f64)> {
        if options.exact_binomial_tails {
            binomial_odds(&imposter_fit, &genuine_fit, t)
        } else {
            Ok(theoretical_odds(&imposter_fit, &genuine_fit, t))
        }
    };

    let imposter_sorted = sorted_copy(&scores.imposter);
    let genuine_sorted = sorted_copy(&scores.genuine);
    let mut thresholds = imposter_sorted.clone();
    thresholds.extend_from_slice(&genuine_sorted);
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();

    let far_at = |t: f64| {
        (imposter_sorted.len() - count_at_most(&imposter_sorted, t)) as f64
            / imposter_sorted.len() as f64
    };
    let frr_at =
        |t: f64| count_at_most(&genuine_sorted, t) as f64 / genuine_sorted.len() as f64;

    let mut roc = Vec::with_capacity(thresholds.len());
    for &t in &thresholds {
        let (ofa, ofr) = odds(t)?;
        roc.push(RocRow {
            threshold: t,
            far: far_at(t),
            frr: frr_at(t),
            ofa,
            ofr,
        });
    }

    let point_at = |t: f64| -> Result<OperatingPoint> {
        let (ofa, ofr) = odds(t)?;
        Ok(OperatingPoint {
            threshold: t,
            far: far_at(t),
            frr: frr_at(t),
            ofa,
            ofr,
        })
    };

    let far_threshold =
        interpolate_crossing(&thresholds, options.target_far, far_at, |v| {
            v <= options.target_far
        });
    let mut threshold_at_target_far = point_at(far_threshold)?;
    threshold_at_target_far.far = options.target_far;

    let frr_threshold =
        interpolate_crossing(&thresholds, options.target_frr, frr_at, |v| {
            v >= options.target_frr
        });
    let mut rates_at_target_frr = point_at(frr_threshold)?;
    rates_at_target_frr.frr = options.target_frr;

    let fixed = options
        .fixed_thresholds
        .iter()
        .map(|&t| point_at(t))
        .collect::<Result<Vec<_>>>()?;

    let (eer_value, eer_threshold) = eer(scores);

    Ok(EvaluationPanel {
        decidability: decidability(&imposter, &genuine),
        fisher_ratio: fisher_ratio(&imposter, &genuine),
        storage_efficiency: storage_efficiency(dof, scores.code_length_bits),
        chosen_threshold: options.threshold_override.unwrap_or(far_threshold),
        imposter,
        genuine,
        imposter_fit,
        genuine_fit,
        degrees_of_freedom: dof,
        code_length_bits: scores.code_length_bits,
        eer: eer_value,
        eer_threshold,
        threshold_at_target_far,
        rates_at_target_frr,
        fixed_thresholds: fixed,
        roc,
        options: options.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::distributions::Distribution;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn summarize_constant_sample_flags_higher_moments() {
        let s = summarize(&[0.5, 0.5, 0.5, 0.5]).unwrap();
        assert_eq!(s.mean, 0.5);
        assert_eq!(s.median, 0.5);
        assert_eq!(s.std, 0.0);
        assert_eq!(s.skewness, None);
        assert_eq!(s.excess_kurtosis, None);
    }

    #[test]
    fn summarize_needs_two_scores() {
        assert!(summarize(&[0.5]).is_err());
        assert!(summarize(&[]).is_err());
    }

    #[test]
    fn summarize_two_point_symmetric_sample() {
        let scores: Vec<f64> = (0..40)
            .map(|i| if i % 2 == 0 { 0.4 } else { 0.6 })
            .collect();
        let s = summarize(&scores).unwrap();
        assert_abs_diff_eq!(s.mean, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.median, 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.skewness.unwrap(), 0.0, epsilon = 1e-12);
    }

    #[test]
    fn summarize_median_of_odd_sample() {
        let s = summarize(&[0.9, 0.1, 0.3]).unwrap();
        assert_eq!(s.median, 0.3);
    }

    #[test]
    fn normal_sample_has_negligible_skew_and_excess_kurtosis() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let normal = Normal::new(0.5, 0.05).unwrap();
        let scores: Vec<f64> = (0..100_000).map(|_| normal.sample(&mut rng)).collect();
        let s = summarize(&scores).unwrap();
        assert!(s.skewness.unwrap().abs() <= 0.05, "{:?}", s.skewness);
        assert!(
            s.excess_kurtosis.unwrap().abs() <= 0.1,
            "{:?}",
            s.excess_kurtosis
        );
    }

    #[test]
    fn degrees_of_freedom_reference_points() {
        let d = degrees_of_freedom(0.5, 0.0317).unwrap();
        assert_abs_diff_eq!(d, 248.78, epsilon = 0.05);
        assert_eq!(d.round(), 249.0);

        let d = degrees_of_freedom(0.5, 0.011).unwrap();
        assert!((2000.0..2100.0).contains(&d));
        assert_eq!(d.round(), 2066.0);

        let d = degrees_of_freedom(0.5038, 0.0193).unwrap();
        assert!((d - 669.0).abs() / 669.0 <= 0.01, "{d} not within 1% of 669");
    }

    #[test]
    fn degrees_of_freedom_rejects_boundaries() {
        assert!(degrees_of_freedom(0.0, 0.1).is_err());
        assert!(degrees_of_freedom(1.0, 0.1).is_err());
        assert!(degrees_of_freedom(0.5, 0.0).is_err());
    }

    #[test]
    fn degrees_of_freedom_inverts_to_quarter_at_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        for _ in 0..100 {
            let sigma = rng.gen_range(1e-4..0.5);
            let d = degrees_of_freedom(0.5, sigma).unwrap();
            let back = d * sigma * sigma;
            assert!((back - 0.25).abs() <= 4.0 * f64::EPSILON * 0.25, "{back}");
        }
    }

    fn fixture_scores() -> ScoreSet {
        ScoreSet::new(vec![0.7, 0.8], vec![0.4, 0.5, 0.6], 1536).unwrap()
    }

    #[test]
    fn empirical_rates_count_strict_accepts() {
        let s = fixture_scores();
        assert_eq!(empirical_rates(&s, 0.0), (1.0, 0.0));
        assert_eq!(empirical_rates(&s, 1.0), (0.0, 1.0));
        let (far, frr) = empirical_rates(&s, 0.55);
        assert_abs_diff_eq!(far, 1.0 / 3.0, epsilon = 1e-15);
        assert_eq!(frr, 0.0);
    }

    #[test]
    fn boundary_scores_do_not_accept() {
        // Accept requires strictly exceeding the threshold.
        let s = ScoreSet::new(vec![0.6], vec![0.6], 128).unwrap();
        let (far, frr) = empirical_rates(&s, 0.6);
        assert_eq!(far, 0.0);
        assert_eq!(frr, 1.0);
    }

    #[test]
    fn score_set_validation() {
        assert!(ScoreSet::new(vec![], vec![0.5], 128).is_err());
        assert!(ScoreSet::new(vec![0.5], vec![], 128).is_err());
        assert!(ScoreSet::new(vec![0.5], vec![1.2], 128).is_err());
        assert!(ScoreSet::new(vec![-0.1], vec![0.5], 128).is_err());
        assert!(ScoreSet::new(vec![0.5], vec![0.5], 0).is_err());
    }

    #[test]
    fn odds_at_the_imposter_mean_are_half() {
        let imposter = NormalFit {
            mean: 0.5,
            std: 0.02,
        };
        let genuine = NormalFit {
            mean: 0.7,
            std: 0.05,
        };
        let (ofa, _) = theoretical_odds(&imposter, &genuine, 0.5);
        assert_abs_diff_eq!(ofa, 0.5, epsilon = 1e-12);
    }

    #[test]
    fn false_accept_tail_reference_point() {
        let imposter = NormalFit {
            mean: 0.5038,
            std: 0.0193,
        };
        let genuine = NormalFit {
            mean: 0.6718,
            std: 0.0550,
        };
        let (ofa, _) = theoretical_odds(&imposter, &genuine, 0.59);
        assert!(
            (3.5e-6..=4.5e-6).contains(&ofa),
            "tail {ofa} not of order 4e-6"
        );
    }

    #[test]
    fn false_reject_tail_reference_point() {
        let imposter = NormalFit {
            mean: 0.5038,
            std: 0.0193,
        };
        let genuine = NormalFit {
            mean: 0.6718,
            std: 0.0550,
        };
        let (_, ofr) = theoretical_odds(&imposter, &genuine, 0.54231);
        assert!(
            (0.0092 * 0.8..=0.0092 * 1.2).contains(&ofr),
            "tail {ofr} not within 20% of 0.0092"
        );
    }

    #[test]
    fn false_accept_complements_the_imposter_cdf() {
        let mut rng = ChaCha8Rng::seed_from_u64(53);
        let phi = Normal::new(0.0, 1.0).unwrap();
        for _ in 0..200 {
            let imposter = NormalFit {
                mean: rng.gen_range(0.3..0.7),
                std: rng.gen_range(0.005..0.1),
            };
            let genuine = NormalFit {
                mean: 0.7,
                std: 0.05,
            };
            let t = rng.gen_range(0.0..1.0);
            let (ofa, _) = theoretical_odds(&imposter, &genuine, t);
            let cdf = phi.cdf((t - imposter.mean) / imposter.std);
            assert_abs_diff_eq!(ofa + cdf, 1.0, epsilon = 1e-12);
        }
    }

    #[test]
    fn eer_of_separated_classes_is_zero() {
        let s = ScoreSet::new(vec![0.8, 0.85, 0.9], vec![0.2, 0.25, 0.3], 128).unwrap();
        let (value, threshold) = eer(&s);
        assert_eq!(value, 0.0);
        let (far, frr) = empirical_rates(&s, threshold);
        assert_eq!((far, frr), (0.0, 0.0));
    }

    #[test]
    fn eer_of_identical_distributions_is_one_half() {
        let mut rng = ChaCha8Rng::seed_from_u64(54);
        let normal = Normal::new(0.5, 0.08).unwrap();
        let mut draw = |n: usize| -> Vec<f64> {
            (0..n)
                .map(|_| normal.sample(&mut rng).clamp(0.0, 1.0))
                .collect()
        };
        let s = ScoreSet::new(draw(2000), draw(2000), 128).unwrap();
        let (value, _) = eer(&s);
        assert!((0.45..=0.55).contains(&value), "eer {value}");
    }

    #[test]
    fn eer_interpolates_between_candidate_thresholds() {
        // The sign of FAR - FRR flips between candidates 0.42 (+0.25) and
        // 0.5 (-0.25) without touching zero (0.5 appears in both classes, so
        // FAR drops and FRR rises at once), forcing linear interpolation:
        // alpha = 0.5, threshold 0.46, and both rates meet at 0.375.
        let s = ScoreSet::new(
            vec![0.42, 0.5, 0.8, 0.9],
            vec![0.2, 0.3, 0.5, 0.6],
            128,
        )
        .unwrap();
        let (value, threshold) = eer(&s);
        assert_abs_diff_eq!(threshold, 0.46, epsilon = 1e-12);
        assert_abs_diff_eq!(value, 0.375, epsilon = 1e-12);
    }

    #[test]
    fn separability_reference_points() {
        // Each reference value is paired with the moment set it is
        // arithmetically consistent with (cross-checked through the
        // fisher == decidability^2 / 2 identity).
        let cases = [
            (0.5038, 0.0193, 0.6718, 0.0550, 4.0794, 8.3208),
            (0.5031, 0.0152, 0.6993, 0.0467, 5.6495, 15.958),
            (0.5049, 0.0169, 0.7039, 0.0464, 5.6943, 16.212),
        ];
        for (mi, si, mg, sg, expected_d, expected_f) in cases {
            let imposter = DistributionSummary {
                mean: mi,
                median: mi,
                std: si,
                skewness: None,
                excess_kurtosis: None,
            };
            let genuine = DistributionSummary {
                mean: mg,
                median: mg,
                std: sg,
                skewness: None,
                excess_kurtosis: None,
            };
            let d = decidability(&imposter, &genuine);
            let f = fisher_ratio(&imposter, &genuine);
            assert!(
                (d - expected_d).abs() / expected_d <= 0.005,
                "decidability {d} not within 0.5% of {expected_d}"
            );
            assert!(
                (f - expected_f).abs() / expected_f <= 0.005,
                "fisher {f} not within 0.5% of {expected_f}"
            );
        }
    }

    #[test]
    fn fisher_is_half_squared_decidability() {
        let mut rng = ChaCha8Rng::seed_from_u64(55);
        for _ in 0..200 {
            let imposter = DistributionSummary {
                mean: rng.gen_range(0.2..0.8),
                median: 0.5,
                std: rng.gen_range(0.001..0.2),
                skewness: None,
                excess_kurtosis: None,
            };
            let genuine = DistributionSummary {
                mean: rng.gen_range(0.2..0.8),
                median: 0.7,
                std: rng.gen_range(0.001..0.2),
                skewness: None,
                excess_kurtosis: None,
            };
            let d = decidability(&imposter, &genuine);
            let f = fisher_ratio(&imposter, &genuine);
            assert!((f - d * d / 2.0).abs() <= 1e-12 * f.max(1.0), "{f} vs {d}");
        }
    }

    #[test]
    fn equal_means_have_zero_separation() {
        let s = DistributionSummary {
            mean: 0.5,
            median: 0.5,
            std: 0.1,
            skewness: None,
            excess_kurtosis: None,
        };
        assert_eq!(decidability(&s, &s), 0.0);
        assert_eq!(fisher_ratio(&s, &s), 0.0);
    }

    #[test]
    fn storage_efficiency_reference_points() {
        assert_abs_diff_eq!(storage_efficiency(669.0, 1536), 0.4355, epsilon = 5e-5);
        assert_abs_diff_eq!(storage_efficiency(908.0, 6144), 0.1478, epsilon = 5e-5);
        assert_eq!(storage_efficiency(1536.0, 1536), 1.0);
    }

    #[test]
    fn binomial_proportions_recover_their_degrees_of_freedom() {
        let mut rng = ChaCha8Rng::seed_from_u64(56);
        let n = 1536u64;
        let binomial = Binomial::new(0.5, n).unwrap();
        let scores: Vec<f64> = (0..100_000)
            .map(|_| binomial.sample(&mut rng) / n as f64)
            .collect();
        let s = summarize(&scores).unwrap();
        let fitted = degrees_of_freedom(s.mean, s.std).unwrap();
        assert!(
            (fitted - n as f64).abs() / n as f64 <= 0.05,
            "fitted {fitted} not within 5% of {n}"
        );
    }

    fn synthetic_panel_scores(rng: &mut ChaCha8Rng) -> ScoreSet {
        let genuine_gen = Normal::new(0.70, 0.05).unwrap();
        let imposter_gen = Normal::new(0.50, 0.02).unwrap();
        let genuine: Vec<f64> = (0..5000)
            .map(|_| genuine_gen.sample(rng).clamp(0.0, 1.0))
            .collect();
        let imposter: Vec<f64> = (0..5000)
            .map(|_| imposter_gen.sample(rng).clamp(0.0, 1.0))
            .collect();
        ScoreSet::new(genuine, imposter, 1536).unwrap()
    }

    #[test]
    fn panel_rates_are_monotone_in_threshold() {
        let mut rng = ChaCha8Rng::seed_from_u64(57);
        let panel = build_panel(&synthetic_panel_scores(&mut rng)).unwrap();
        for pair in panel.roc.windows(2) {
            assert!(pair[1].threshold > pair[0].threshold);
            assert!(pair[1].far <= pair[0].far, "FAR increased");
            assert!(pair[1].frr >= pair[0].frr, "FRR decreased");
            assert!(pair[1].ofa <= pair[0].ofa, "OFA increased");
            assert!(pair[1].ofr >= pair[0].ofr, "OFR decreased");
        }
    }

    #[test]
    fn panel_assembles_consistent_operating_points() {
        let mut rng = ChaCha8Rng::seed_from_u64(58);
        let scores = synthetic_panel_scores(&mut rng);
        let panel = build_panel(&scores).unwrap();

        assert!((0.0..=1.0).contains(&panel.eer));
        assert!(panel.eer <= 0.05, "eer {}", panel.eer);
        assert_eq!(panel.chosen_threshold, panel.threshold_at_target_far.threshold);
        // The empirical FAR just above the interpolated threshold must sit
        // at or below the target.
        let (far, _) = empirical_rates(&scores, panel.threshold_at_target_far.threshold);
        assert!(far <= panel.options.target_far + 1e-9, "far {far}");
        let (_, frr_below) = empirical_rates(
            &scores,
            panel.rates_at_target_frr.threshold - 1e-9,
        );
        assert!(frr_below <= panel.options.target_frr + 1e-9);

        assert_eq!(panel.fixed_thresholds.len(), 2);
        assert_eq!(panel.fixed_thresholds[0].threshold, 0.59);
        assert_eq!(panel.fixed_thresholds[1].threshold, 0.60);
        let dof_direct =
            degrees_of_freedom(panel.imposter.mean, panel.imposter.std).unwrap();
        assert_eq!(panel.degrees_of_freedom, dof_direct);
        assert_eq!(
            panel.storage_efficiency,
            storage_efficiency(dof_direct, 1536)
        );
    }

    #[test]
    fn panel_threshold_override_wins() {
        let mut rng = ChaCha8Rng::seed_from_u64(59);
        let options = PanelOptions {
            threshold_override: Some(0.62),
            ..PanelOptions::default()
        };
        let panel = build_panel_with(&synthetic_panel_scores(&mut rng), &options).unwrap();
        assert_eq!(panel.chosen_threshold, 0.62);
    }

    #[test]
    fn panel_binomial_tails_match_normal_at_moderate_depth() {
        let mut rng = ChaCha8Rng::seed_from_u64(60);
        let scores = synthetic_panel_scores(&mut rng);
        let normal_panel = build_panel(&scores).unwrap();
        let options = PanelOptions {
            exact_binomial_tails: true,
            ..PanelOptions::default()
        };
        let binomial_panel = build_panel_with(&scores, &options).unwrap();
        // At the imposter mean both models put half the mass above.
        let (ofa_b, _) = binomial_odds(
            &binomial_panel.imposter_fit,
            &binomial_panel.genuine_fit,
            binomial_panel.imposter_fit.mean,
        )
        .unwrap();
        assert_abs_diff_eq!(ofa_b, 0.5, epsilon = 0.03);
        // In the moderate tail the binomial and normal odds agree in order
        // of magnitude.
        let t = normal_panel.fixed_thresholds[0].threshold;
        let ofa_n = normal_panel.fixed_thresholds[0].ofa;
        let (ofa_b, _) =
            binomial_odds(&binomial_panel.imposter_fit, &binomial_panel.genuine_fit, t).unwrap();
        if ofa_n > 1e-12 && ofa_b > 1e-12 {
            let ratio = (ofa_b / ofa_n).log10().abs();
            assert!(ratio <= 1.5, "binomial {ofa_b} vs normal {ofa_n}");
        }
    }

    #[test]
    fn panel_serializes_to_json_and_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(61);
        let panel = build_panel(&synthetic_panel_scores(&mut rng)).unwrap();
        let json = serde_json::to_string_pretty(&panel).unwrap();
        let back: EvaluationPanel = serde_json::from_str(&json).unwrap();
        assert_eq!(back.degrees_of_freedom, panel.degrees_of_freedom);
        assert_eq!(back.eer, panel.eer);
        assert_eq!(back.roc.len(), panel.roc.len());
        assert_eq!(back.imposter, panel.imposter);
    }

    #[test]
    fn panel_rejects_degenerate_input() {
        assert!(ScoreSet::new(vec![], vec![0.5, 0.5], 128).is_err());
        // Constant imposter scores leave the degrees of freedom undefined.
        let s = ScoreSet::new(vec![0.7, 0.8], vec![0.5, 0.5], 128).unwrap();
        assert!(build_panel(&s).is_err());
    }
}
