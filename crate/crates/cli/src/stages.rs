//! `--dump-stages` artifacts: every intermediate of a segmentation run,
//! written as PGM/PNG images and a vote-trace CSV.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{Context, Result};
use iris_core::{GrayImage, IrisRing, SegmentTrace};

/// Writes all segmentation stages into `outdir` and returns the paths:
///
/// * `pupil_cluster.pgm` — darkest k-means cluster mask
/// * `runs_vertical.pgm` / `runs_horizontal.pgm` — directional run-length
///   re-quantizations of that mask
/// * `pupil_indicator.pgm` — intersection of the two long-run cores
/// * `pupil_filled.pgm` — flood-filled pupil with specular holes closed
/// * `unwrapped.pgm` — polar unwrapping, one circle per row (right-padded)
/// * `unwrapped_stretched.pgm` — the same rows resampled to a fixed width
/// * `vote_trace.csv` — per-line indicator labels and iris votes
/// * `boundary_overlay.png` — source image with pupil and limbic circles
pub fn dump_stages(
    outdir: &Path,
    img: &GrayImage,
    ring: &IrisRing,
    trace: &SegmentTrace,
) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(outdir)
        .with_context(|| format!("creating stage directory {}", outdir.display()))?;
    let mut written = Vec::new();
    let mut save = |name: &str, image: &GrayImage| -> Result<()> {
        let path = outdir.join(name);
        image.save(&path)?;
        written.push(path);
        Ok(())
    };

    let pupil = &trace.pupil;
    save("pupil_cluster.pgm", &pupil.cluster.to_gray())?;
    save("runs_vertical.pgm", &pupil.runs_vertical)?;
    save("runs_horizontal.pgm", &pupil.runs_horizontal)?;
    save("pupil_indicator.pgm", &pupil.indicator.to_gray())?;
    save("pupil_filled.pgm", &pupil.filled.to_gray())?;
    save("unwrapped.pgm", &unwrapped_image(trace)?)?;
    save("unwrapped_stretched.pgm", &stretched_image(trace)?)?;

    let trace_path = outdir.join("vote_trace.csv");
    fs::write(&trace_path, vote_trace_csv(ring, trace))?;
    written.push(trace_path);

    let overlay_path = outdir.join("boundary_overlay.png");
    boundary_overlay(img, ring).save(&overlay_path)?;
    written.push(overlay_path);
    Ok(written)
}

/// The raw unwrapping as an image: line i on row i, right-padded with 0
/// (inner circles carry fewer samples than outer ones).
fn unwrapped_image(trace: &SegmentTrace) -> Result<GrayImage> {
    let u = &trace.unwrapped;
    let width = u.rows.iter().map(|r| r.samples.len()).max().unwrap_or(1);
    let mut pixels = vec![0u8; width * u.line_count()];
    for (i, row) in u.rows.iter().enumerate() {
        pixels[i * width..i * width + row.samples.len()].copy_from_slice(&row.samples);
    }
    Ok(GrayImage::from_pixels(
        width as u32,
        u.line_count() as u32,
        pixels,
    )?)
}

fn stretched_image(trace: &SegmentTrace) -> Result<GrayImage> {
    let u = &trace.unwrapped;
    let width = u.stretched_width;
    let mut pixels = Vec::with_capacity(width * u.line_count());
    for row in &u.rows {
        pixels.extend(row.stretched.iter().map(|&v| v.round().clamp(0.0, 255.0) as u8));
    }
    Ok(GrayImage::from_pixels(
        width as u32,
        u.line_count() as u32,
        pixels,
    )?)
}

/// One CSV row per unwrapped line: its three indicator labels and how many
/// of them voted it into the iris.
fn vote_trace_csv(ring: &IrisRing, trace: &SegmentTrace) -> String {
    let [raw, stretched, combined] = &trace.indicators;
    let mut out = String::from("line,raw,stretched,combined,votes\n");
    for i in 0..trace.unwrapped.line_count() {
        let _ = writeln!(
            out,
            "{i},{},{},{},{}",
            raw.labels()[i],
            stretched.labels()[i],
            combined.labels()[i],
            ring.votes[i]
        );
    }
    out
}

/// The source image with white pupil and limbic circles drawn over it.
fn boundary_overlay(img: &GrayImage, ring: &IrisRing) -> GrayImage {
    let mut out = img.clone();
    let (cx, cy) = (ring.pupil.center_x, ring.pupil.center_y);
    for radius in [ring.pupil.radius, ring.limbic_radius] {
        let steps = (radius * std::f64::consts::TAU * 4.0).ceil() as usize;
        for k in 0..steps {
            let theta = k as f64 / steps as f64 * std::f64::consts::TAU;
            let x = cx + radius * theta.cos() - 0.5;
            let y = cy - radius * theta.sin() - 0.5;
            let (px, py) = (x.round(), y.round());
            if px >= 0.0 && py >= 0.0 && (px as u32) < out.width() && (py as u32) < out.height() {
                out.set(px as u32, py as u32, 255);
            }
        }
    }
    out
}
