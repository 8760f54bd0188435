//! Report writing: panel JSON, score and ROC CSVs, SVG figures, and a
//! plain-text summary.
//!
//! Every file is deterministic for identical inputs except `summary.txt`,
//! whose first line carries the generation timestamp; reruns differ in that
//! line only.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use iris_core::{EvaluationPanel, ScoreKind, ScoreRecord};

use crate::svg::{Chart, Series};

/// Extra context lines for the summary.
#[derive(Debug, Default, Clone)]
pub struct ReportMeta {
    pub scenario: String,
    /// Images that failed segmentation or encoding.
    pub failed_images: usize,
    /// Score pairs skipped for lack of comparable bits.
    pub skipped_pairs: usize,
    /// Mean-deviation scores clamped into [0, 1] (enroll-identify only).
    pub clamped_scores: usize,
}

/// Writes the full report into `outdir` and returns the file paths.
///
/// `records` feeds `scores.csv` and the score histograms; when absent (a
/// report rebuilt from a bare panel), `scores.csv` is skipped and the
/// distribution figure falls back to the fitted normal curves.
pub fn write_report(
    outdir: &Path,
    panel: &EvaluationPanel,
    records: Option<&[ScoreRecord]>,
    meta: &ReportMeta,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir)
        .with_context(|| format!("creating report directory {}", outdir.display()))?;
    let mut written = Vec::new();
    let mut emit = |name: &str, content: String| -> Result<()> {
        let path = outdir.join(name);
        fs::write(&path, content).with_context(|| format!("writing {}", path.display()))?;
        written.push(path);
        Ok(())
    };

    let mut json = serde_json::to_string_pretty(panel)?;
    json.push('\n');
    emit("panel.json", json)?;
    emit("roc.csv", roc_csv(panel))?;
    if let Some(records) = records {
        emit("scores.csv", scores_csv(records))?;
    }
    emit("distributions.svg", distributions_svg(panel, records))?;
    emit("far_frr.svg", far_frr_svg(panel))?;
    emit("summary.txt", summary_text(panel, meta))?;
    Ok(written)
}

fn roc_csv(panel: &EvaluationPanel) -> String {
    let mut out = String::from("threshold,far,frr,ofa,ofr\n");
    for row in &panel.roc {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            row.threshold, row.far, row.frr, row.ofa, row.ofr
        );
    }
    out
}

fn scores_csv(records: &[ScoreRecord]) -> String {
    let mut out = String::from("probe_id,gallery_id,kind,similarity,compared_bits\n");
    for r in records {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            r.probe_id, r.gallery_id, r.kind, r.similarity, r.compared_bits
        );
    }
    out
}

/// Score distributions on a log count axis: histograms when records are
/// available, fitted normal curves otherwise.
fn distributions_svg(panel: &EvaluationPanel, records: Option<&[ScoreRecord]>) -> String {
    let series = match records {
        Some(records) => {
            let genuine: Vec<f64> = records
                .iter()
                .filter(|r| r.kind == ScoreKind::Genuine)
                .map(|r| r.similarity)
                .collect();
            let imposter: Vec<f64> = records
                .iter()
                .filter(|r| r.kind == ScoreKind::Imposter)
                .map(|r| r.similarity)
                .collect();
            vec![
                Series {
                    label: "imposter".into(),
                    color: "#b2433e",
                    points: histogram(&imposter, 40),
                },
                Series {
                    label: "genuine".into(),
                    color: "#3e6fb2",
                    points: histogram(&genuine, 40),
                },
            ]
        }
        None => vec![
            Series {
                label: "imposter fit".into(),
                color: "#b2433e",
                points: normal_curve(panel.imposter_fit.mean, panel.imposter_fit.std),
            },
            Series {
                label: "genuine fit".into(),
                color: "#3e6fb2",
                points: normal_curve(panel.genuine_fit.mean, panel.genuine_fit.std),
            },
        ],
    };
    Chart {
        title: "Score distributions".into(),
        x_label: "similarity".into(),
        y_label: if records.is_some() {
            "count".into()
        } else {
            "density".into()
        },
        log_y: true,
        log_floor: 0.5,
        series,
    }
    .render()
}

fn far_frr_svg(panel: &EvaluationPanel) -> String {
    let far: Vec<(f64, f64)> = panel.roc.iter().map(|r| (r.threshold, r.far)).collect();
    let frr: Vec<(f64, f64)> = panel.roc.iter().map(|r| (r.threshold, r.frr)).collect();
    Chart {
        title: "Empirical error rates".into(),
        x_label: "threshold".into(),
        y_label: "rate".into(),
        log_y: true,
        log_floor: 1e-6,
        series: vec![
            Series {
                label: "FAR".into(),
                color: "#b2433e",
                points: far,
            },
            Series {
                label: "FRR".into(),
                color: "#3e6fb2",
                points: frr,
            },
        ],
    }
    .render()
}

/// Counts per bin over [0, 1]; empty bins are kept so log plots show gaps
/// at the floor rather than interpolating across them.
fn histogram(values: &[f64], bins: usize) -> Vec<(f64, f64)> {
    let mut counts = vec![0usize; bins];
    for &v in values {
        let b = ((v * bins as f64) as usize).min(bins - 1);
        counts[b] += 1;
    }
    counts
        .iter()
        .enumerate()
        .map(|(b, &c)| ((b as f64 + 0.5) / bins as f64, c as f64))
        .collect()
}

fn normal_curve(mean: f64, std: f64) -> Vec<(f64, f64)> {
    let std = std.max(1e-9);
    (0..=200)
        .map(|k| {
            let x = k as f64 / 200.0;
            let z = (x - mean) / std;
            (x, (-0.5 * z * z).exp() / (std * (2.0 * std::f64::consts::PI).sqrt()))
        })
        .collect()
}

fn summary_text(panel: &EvaluationPanel, meta: &ReportMeta) -> String {
    let mut out = String::new();
    // The one and only timestamp in the report, isolated on line 1.
    let _ = writeln!(out, "generated: {}", chrono::Utc::now().to_rfc3339());
    let _ = writeln!(out, "scenario: {}", meta.scenario);
    let _ = writeln!(out, "code length: {} bits", panel.code_length_bits);
    let _ = writeln!(out, "images failed: {}", meta.failed_images);
    let _ = writeln!(out, "pairs skipped: {}", meta.skipped_pairs);
    if meta.clamped_scores > 0 {
        let _ = writeln!(out, "scores clamped: {}", meta.clamped_scores);
    }
    out.push('\n');
    for (name, s) in [("imposter", &panel.imposter), ("genuine", &panel.genuine)] {
        let _ = writeln!(
            out,
            "{name}: mean {:.6}  median {:.6}  std {:.6}  skewness {}  excess kurtosis {}",
            s.mean,
            s.median,
            s.std,
            opt(s.skewness),
            opt(s.excess_kurtosis)
        );
    }
    out.push('\n');
    let _ = writeln!(out, "degrees of freedom: {:.2}", panel.degrees_of_freedom);
    let _ = writeln!(out, "decidability: {:.4}", panel.decidability);
    let _ = writeln!(out, "fisher ratio: {:.4}", panel.fisher_ratio);
    let _ = writeln!(out, "storage efficiency: {:.4}", panel.storage_efficiency);
    let _ = writeln!(
        out,
        "EER: {:.6} at threshold {:.6}",
        panel.eer, panel.eer_threshold
    );
    out.push('\n');
    let t = &panel.threshold_at_target_far;
    let _ = writeln!(
        out,
        "suggested threshold (FAR = {}): {:.6} with FRR {:.6}",
        panel.options.target_far, t.threshold, t.frr
    );
    let r = &panel.rates_at_target_frr;
    let _ = writeln!(
        out,
        "at FRR = {}: threshold {:.6}, FAR {:.6}, OFA {:.3e}, OFR {:.3e}",
        panel.options.target_frr, r.threshold, r.far, r.ofa, r.ofr
    );
    for p in &panel.fixed_thresholds {
        let _ = writeln!(
            out,
            "at threshold {:.2}: FAR {:.6}, FRR {:.6}, OFA {:.3e}, OFR {:.3e}",
            p.threshold, p.far, p.frr, p.ofa, p.ofr
        );
    }
    let _ = writeln!(out, "chosen threshold: {:.6}", panel.chosen_threshold);
    out
}

fn opt(v: Option<f64>) -> String {
    match v {
        Some(v) => format!("{v:.4}"),
        None => "undefined".into(),
    }
}
