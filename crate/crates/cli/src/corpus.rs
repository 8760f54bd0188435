//! Corpus loading and synthetic corpus generation.
//!
//! A corpus is a directory of eye images divided into classes. Two layouts
//! are understood:
//!
//! * a `manifest.csv` at the root with columns
//!   `path,class,eye,center_x,center_y,pupil_radius,iris_radius` (the four
//!   ground-truth columns may be empty), paths relative to the manifest;
//! * bare directories following a `class/eye/capture.png` convention
//!   (`.pgm` works too), discovered when no manifest exists.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use iris_core::{synth_eye, SynthEyeParams};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Known segmentation answers for one image, when the corpus carries them.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub center_x: f64,
    pub center_y: f64,
    pub pupil_radius: f64,
    pub iris_radius: f64,
}

/// One image in a corpus.
#[derive(Debug, Clone)]
pub struct CorpusEntry {
    /// Absolute path to the image.
    pub path: PathBuf,
    /// Stable identifier used in score records: the path relative to the
    /// corpus root, with `/` separators.
    pub id: String,
    pub class_id: String,
    pub eye: String,
    pub truth: Option<GroundTruth>,
}

/// An ordered collection of eye images divided into classes.
#[derive(Debug, Clone)]
pub struct Corpus {
    pub root: PathBuf,
    pub entries: Vec<CorpusEntry>,
}

impl Corpus {
    /// Loads `root/manifest.csv` when present, otherwise discovers a
    /// `class/eye/capture` directory layout.
    pub fn load(root: &Path) -> Result<Corpus> {
        let manifest = root.join("manifest.csv");
        if manifest.is_file() {
            Corpus::from_manifest(&manifest)
        } else {
            Corpus::discover(root)
        }
    }

    /// Reads a manifest CSV. Paths are resolved against the manifest's
    /// directory; the four ground-truth columns may be empty or absent.
    pub fn from_manifest(manifest: &Path) -> Result<Corpus> {
        let root = manifest
            .parent()
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from("."));
        let mut reader = csv::ReaderBuilder::new()
            .trim(csv::Trim::All)
            .flexible(true)
            .from_path(manifest)
            .with_context(|| format!("reading manifest {}", manifest.display()))?;
        let headers = reader.headers()?.clone();
        let col = |name: &str| headers.iter().position(|h| h == name);
        let (Some(path_col), Some(class_col)) = (col("path"), col("class")) else {
            bail!(
                "manifest {} must have at least `path` and `class` columns",
                manifest.display()
            );
        };
        let eye_col = col("eye");
        let truth_cols = [
            col("center_x"),
            col("center_y"),
            col("pupil_radius"),
            col("iris_radius"),
        ];

        let mut entries = Vec::new();
        for (line, record) in reader.records().enumerate() {
            let record = record?;
            let rel = record
                .get(path_col)
                .filter(|p| !p.is_empty())
                .with_context(|| format!("manifest row {}: empty path", line + 2))?;
            let class_id = record.get(class_col).unwrap_or("").to_string();
            if class_id.is_empty() {
                bail!("manifest row {}: empty class id", line + 2);
            }
            let eye = eye_col
                .and_then(|c| record.get(c))
                .filter(|e| !e.is_empty())
                .unwrap_or("unknown")
                .to_string();
            let truth = parse_truth(&record, &truth_cols)
                .with_context(|| format!("manifest row {}", line + 2))?;
            entries.push(CorpusEntry {
                path: root.join(rel),
                id: rel.replace('\\', "/"),
                class_id,
                eye,
                truth,
            });
        }
        if entries.is_empty() {
            bail!("manifest {} lists no images", manifest.display());
        }
        Ok(Corpus {
            root,
            entries,
        })
    }

    /// Walks `root/class/eye/capture.(png|pgm)`, with a flat
    /// `root/class/capture.(png|pgm)` fallback (eye recorded as `unknown`).
    /// Entries come back sorted by relative path.
    pub fn discover(root: &Path) -> Result<Corpus> {
        let mut entries = Vec::new();
        for item in walkdir::WalkDir::new(root)
            .min_depth(2)
            .max_depth(3)
            .sort_by_file_name()
        {
            let item = item?;
            if !item.file_type().is_file() || !is_image(item.path()) {
                continue;
            }
            let rel = item
                .path()
                .strip_prefix(root)
                .expect("walkdir stays under root");
            let parts: Vec<String> = rel
                .components()
                .map(|c| c.as_os_str().to_string_lossy().into_owned())
                .collect();
            let (class_id, eye) = match parts.len() {
                2 => (parts[0].clone(), "unknown".to_string()),
                3 => (parts[0].clone(), parts[1].clone()),
                _ => continue,
            };
            entries.push(CorpusEntry {
                path: item.path().to_path_buf(),
                id: parts.join("/"),
                class_id,
                eye,
                truth: None,
            });
        }
        if entries.is_empty() {
            bail!(
                "no corpus found under {} (no manifest.csv, no class/eye/capture images)",
                root.display()
            );
        }
        entries.sort_by(|a, b| a.id.cmp(&b.id));
        Ok(Corpus {
            root: root.to_path_buf(),
            entries,
        })
    }

    /// Capture counts keyed by class id, in class order.
    pub fn captures_per_class(&self) -> BTreeMap<&str, usize> {
        let mut counts = BTreeMap::new();
        for e in &self.entries {
            *counts.entry(e.class_id.as_str()).or_insert(0) += 1;
        }
        counts
    }
}

fn parse_truth(record: &csv::StringRecord, cols: &[Option<usize>; 4]) -> Result<Option<GroundTruth>> {
    let mut values = [0.0f64; 4];
    for (slot, col) in values.iter_mut().zip(cols) {
        match col.and_then(|c| record.get(c)).filter(|v| !v.is_empty()) {
            Some(text) => *slot = text.parse().context("bad ground-truth number")?,
            None => return Ok(None),
        }
    }
    Ok(Some(GroundTruth {
        center_x: values[0],
        center_y: values[1],
        pupil_radius: values[2],
        iris_radius: values[3],
    }))
}

fn is_image(path: &Path) -> bool {
    matches!(
        path.extension().and_then(|e| e.to_str()),
        Some("png") | Some("pgm")
    )
}

/// Parameters for [`generate_synthetic_corpus`].
#[derive(Debug, Clone)]
pub struct SynthCorpusParams {
    pub identities: usize,
    pub captures_per_identity: usize,
    pub width: u32,
    pub height: u32,
    /// Fraction of captures rendered with eyelid occlusion.
    pub occlusion_fraction: f64,
    /// Per-capture gamma drawn uniformly from this range.
    pub gamma_range: (f64, f64),
    pub noise_sigma: f64,
    pub seed: u64,
}

impl Default for SynthCorpusParams {
    fn default() -> Self {
        SynthCorpusParams {
            identities: 20,
            captures_per_identity: 10,
            width: 320,
            height: 240,
            occlusion_fraction: 0.25,
            gamma_range: (0.9, 1.1),
            // Benchmark-grade sensor noise: enough that a single-enrollment
            // matcher leaves a small genuine tail under strict thresholds,
            // so multi-enrollment gains stay measurable.
            noise_sigma: 5.0,
            seed: 7,
        }
    }
}

/// Renders a synthetic corpus under `out` as
/// `class_###/left/cap_###.png` plus a `manifest.csv` with ground truth.
///
/// Fully determined by `params`; rerunning into a fresh directory writes
/// byte-identical files.
pub fn generate_synthetic_corpus(out: &Path, params: &SynthCorpusParams) -> Result<Corpus> {
    if params.identities == 0 || params.captures_per_identity == 0 {
        bail!("need at least one identity and one capture");
    }
    if !(0.0..=1.0).contains(&params.occlusion_fraction) {
        bail!("occlusion fraction must lie in [0, 1]");
    }
    let (glo, ghi) = params.gamma_range;
    if !(glo > 0.0 && ghi >= glo) {
        bail!("gamma range must satisfy 0 < low <= high");
    }

    fs::create_dir_all(out)?;
    let mut manifest = String::from("path,class,eye,center_x,center_y,pupil_radius,iris_radius\n");
    let mut entries = Vec::new();
    for i in 0..params.identities {
        let class = format!("class_{i:03}");
        let dir = out.join(&class).join("left");
        fs::create_dir_all(&dir)?;
        for j in 0..params.captures_per_identity {
            // One derived stream per capture decides occlusion and gamma;
            // the eye renderer gets its own independent seeds.
            let mut capture_rng =
                ChaCha8Rng::seed_from_u64(mix(params.seed, [i as u64, j as u64, 0]));
            let occlusion = capture_rng.gen_bool(params.occlusion_fraction);
            let gamma = if ghi > glo {
                capture_rng.gen_range(glo..ghi)
            } else {
                glo
            };
            let eye_params = SynthEyeParams {
                width: params.width,
                height: params.height,
                identity_seed: mix(params.seed, [i as u64, 0, 1]),
                capture_seed: mix(params.seed, [i as u64, j as u64, 2]),
                occlusion,
                gamma,
                noise_sigma: params.noise_sigma,
                ..SynthEyeParams::default()
            };
            let (img, truth) = synth_eye(&eye_params)?;
            let rel = format!("{class}/left/cap_{j:03}.png");
            img.save(&out.join(&rel))?;
            manifest.push_str(&format!(
                "{rel},{class},left,{},{},{},{}\n",
                truth.center_x, truth.center_y, truth.pupil_radius, truth.iris_radius
            ));
            entries.push(CorpusEntry {
                path: out.join(&rel),
                id: rel,
                class_id: class.clone(),
                eye: "left".into(),
                truth: Some(GroundTruth {
                    center_x: truth.center_x,
                    center_y: truth.center_y,
                    pupil_radius: truth.pupil_radius,
                    iris_radius: truth.iris_radius,
                }),
            });
        }
    }
    fs::write(out.join("manifest.csv"), manifest)?;
    Ok(Corpus {
        root: out.to_path_buf(),
        entries,
    })
}

/// SplitMix64-style mixer turning (seed, words) into an independent seed.
fn mix(seed: u64, words: [u64; 3]) -> u64 {
    let mut z = seed;
    for w in words {
        z = z.wrapping_add(0x9E3779B97F4A7C15).wrapping_add(w);
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58476D1CE4E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D049BB133111EB);
        z ^= z >> 31;
    }
    z
}
