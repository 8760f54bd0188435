//! The batch workflows: corpus encoding, all-to-all calibration, and
//! multi-enrollment identification.
//!
//! Per-image pipeline stages run in a parallel map over the corpus; score
//! aggregation is a sequential, ordered reduction, so results are identical
//! for any worker count.

use std::collections::BTreeMap;

use anyhow::{bail, Context, Result};
use iris_core::{
    encode, hamming_similarity_shifted, mds_of, EncoderConfig, Error as CoreError, EvaluationPanel,
    GrayImage, Identity, IrisCode, PanelOptions, ScoreKind, ScoreRecord, ScoreSet,
};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::config::{RunConfig, SelectionRule};
use crate::corpus::{Corpus, CorpusEntry};

/// One successfully encoded corpus image.
#[derive(Debug, Clone)]
pub struct EncodedEntry {
    pub entry: CorpusEntry,
    pub code: IrisCode,
}

/// Outcome of encoding a whole corpus: codes in corpus order plus the
/// images that failed somewhere in the pipeline.
#[derive(Debug)]
pub struct EncodeOutcome {
    pub encoded: Vec<EncodedEntry>,
    /// (entry id, error message) per failed image, in corpus order.
    pub failures: Vec<(String, String)>,
}

/// Segments and encodes every corpus image in a parallel map.
///
/// `jobs` bounds the worker count (`None` uses the default pool). Output
/// order follows corpus order regardless of `jobs`.
pub fn encode_corpus(
    corpus: &Corpus,
    encoder: &EncoderConfig,
    jobs: Option<usize>,
) -> Result<EncodeOutcome> {
    let results: Vec<std::result::Result<IrisCode, CoreError>> = match jobs {
        Some(n) => {
            let pool = rayon::ThreadPoolBuilder::new()
                .num_threads(n)
                .build()
                .context("building worker pool")?;
            pool.install(|| encode_all(corpus, encoder))
        }
        None => encode_all(corpus, encoder),
    };

    let mut encoded = Vec::with_capacity(corpus.entries.len());
    let mut failures = Vec::new();
    for (entry, result) in corpus.entries.iter().zip(results) {
        match result {
            Ok(code) => encoded.push(EncodedEntry {
                entry: entry.clone(),
                code,
            }),
            Err(e) => {
                log::warn!("{}: {e}", entry.id);
                failures.push((entry.id.clone(), e.to_string()));
            }
        }
    }
    Ok(EncodeOutcome { encoded, failures })
}

fn encode_all(
    corpus: &Corpus,
    encoder: &EncoderConfig,
) -> Vec<std::result::Result<IrisCode, CoreError>> {
    corpus
        .entries
        .par_iter()
        .map(|entry| {
            let img = GrayImage::load(&entry.path)?;
            let (ring, _) = iris_core::cfis::segment_traced(&img)?;
            let mut code = encode(&ring, encoder)?;
            code.provenance = Some(entry.id.clone());
            Ok(code)
        })
        .collect()
}

/// Result of [`run_calibration`].
#[derive(Debug)]
pub struct CalibrationRun {
    pub panel: EvaluationPanel,
    /// One record per comparable pair, in pair order (outer index, then
    /// inner), genuine and imposter interleaved.
    pub records: Vec<ScoreRecord>,
    pub failures: Vec<(String, String)>,
    /// Pairs whose joint mask was empty, skipped with a warning.
    pub skipped_pairs: usize,
}

/// All-to-all scenario: every image pair is scored with Hamming similarity,
/// labeled genuine (same class) or imposter, and summarized in a panel.
pub fn run_calibration(
    corpus: &Corpus,
    cfg: &RunConfig,
    jobs: Option<usize>,
) -> Result<CalibrationRun> {
    require_calibration_shape(corpus)?;
    let encoder = cfg.encoder()?;
    let EncodeOutcome { encoded, failures } = encode_corpus(corpus, &encoder, jobs)?;

    let mut records = Vec::new();
    let mut skipped_pairs = 0usize;
    for i in 0..encoded.len() {
        for j in i + 1..encoded.len() {
            let (a, b) = (&encoded[i], &encoded[j]);
            match hamming_similarity_shifted(&a.code, &b.code, cfg.max_shift) {
                Ok(score) => records.push(ScoreRecord {
                    probe_id: a.entry.id.clone(),
                    gallery_id: b.entry.id.clone(),
                    kind: if a.entry.class_id == b.entry.class_id {
                        ScoreKind::Genuine
                    } else {
                        ScoreKind::Imposter
                    },
                    similarity: score.similarity,
                    compared_bits: score.compared_bits,
                }),
                Err(CoreError::IncomparableCodes) => {
                    log::warn!("{} vs {}: no comparable bits", a.entry.id, b.entry.id);
                    skipped_pairs += 1;
                }
                Err(e) => return Err(e).context("scoring pair"),
            }
        }
    }

    let panel = panel_from_records(&records, &encoder, cfg)?;
    Ok(CalibrationRun {
        panel,
        records,
        failures,
        skipped_pairs,
    })
}

/// Result of [`run_enroll_identify`].
#[derive(Debug)]
pub struct EnrollRun {
    pub panel: EvaluationPanel,
    /// One record per (probe, identity) pair: probe order outer, identity
    /// order inner. `similarity` holds the mean-deviation score.
    pub records: Vec<ScoreRecord>,
    pub failures: Vec<(String, String)>,
    /// (probe, identity) pairs with no comparable template, skipped.
    pub skipped_pairs: usize,
    /// Imposter standard deviation from the single-enrollment pass over the
    /// enrolled templates; feeds the mean-deviation score.
    pub imposter_sigma: f64,
    /// Mean-deviation scores clamped into [0, 1] for the panel.
    pub clamped_scores: usize,
}

/// Multi-enrollment scenario: n templates per class are enrolled, the
/// remaining captures are scored against every identity with the
/// mean-deviation similarity score, and the panel summarizes those scores.
pub fn run_enroll_identify(
    corpus: &Corpus,
    cfg: &RunConfig,
    jobs: Option<usize>,
) -> Result<EnrollRun> {
    let encoder = cfg.encoder()?;
    let n = cfg.templates_per_identity;
    let EncodeOutcome { encoded, failures } = encode_corpus(corpus, &encoder, jobs)?;

    // Group encoded captures by class, preserving corpus order.
    let mut by_class: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for (idx, e) in encoded.iter().enumerate() {
        by_class.entry(e.entry.class_id.as_str()).or_default().push(idx);
    }
    if by_class.len() < 2 {
        bail!("enroll-identify needs at least 2 classes, found {}", by_class.len());
    }
    for (class, members) in &by_class {
        if members.len() <= n {
            bail!(
                "class {class} has {} usable captures; enrolling {n} templates leaves no probes",
                members.len()
            );
        }
    }

    // Split each class into enrolled templates and probes.
    let mut gallery = Vec::new();
    let mut probe_indices = Vec::new();
    let mut enrolled_indices = Vec::new();
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    for (class, members) in &by_class {
        let chosen = select_templates(&encoded, members, n, cfg, &mut rng)?;
        let templates: Vec<IrisCode> = chosen.iter().map(|&i| encoded[i].code.clone()).collect();
        gallery.push(Identity::new(class.to_string(), templates)?);
        enrolled_indices.extend_from_slice(&chosen);
        probe_indices.extend(members.iter().copied().filter(|i| !chosen.contains(i)));
    }
    probe_indices.sort_unstable();

    // Single-enrollment calibration pass over the enrolled set: the
    // inter-class Hamming similarities among enrolled templates give the
    // imposter sigma the mean-deviation score needs.
    let mut enrolled_imposter = Vec::new();
    for (a, b) in pairs(&enrolled_indices) {
        if encoded[a].entry.class_id != encoded[b].entry.class_id {
            if let Ok(s) =
                hamming_similarity_shifted(&encoded[a].code, &encoded[b].code, cfg.max_shift)
            {
                enrolled_imposter.push(s.similarity);
            }
        }
    }
    if enrolled_imposter.len() < 2 {
        bail!("not enough comparable enrolled template pairs to estimate imposter sigma");
    }
    let imposter_sigma = std_n1(&enrolled_imposter);

    // Score every probe against every identity.
    let mut records = Vec::new();
    let mut skipped_pairs = 0usize;
    let mut clamped_scores = 0usize;
    for &p in &probe_indices {
        let probe = &encoded[p];
        for identity in &gallery {
            let mut similarities = Vec::with_capacity(identity.templates.len());
            let mut compared = usize::MAX;
            for template in &identity.templates {
                match hamming_similarity_shifted(&probe.code, template, cfg.max_shift) {
                    Ok(s) => {
                        similarities.push(s.similarity);
                        compared = compared.min(s.compared_bits);
                    }
                    Err(CoreError::IncomparableCodes) => {}
                    Err(e) => return Err(e).context("scoring probe"),
                }
            }
            if similarities.is_empty() {
                log::warn!(
                    "{} vs identity {}: no comparable template",
                    probe.entry.id,
                    identity.id
                );
                skipped_pairs += 1;
                continue;
            }
            let raw = mds_of(&similarities, imposter_sigma)?;
            let score = raw.clamp(0.0, 1.0);
            if score != raw {
                clamped_scores += 1;
            }
            records.push(ScoreRecord {
                probe_id: probe.entry.id.clone(),
                gallery_id: identity.id.clone(),
                kind: if probe.entry.class_id == identity.id {
                    ScoreKind::Genuine
                } else {
                    ScoreKind::Imposter
                },
                similarity: score,
                compared_bits: compared,
            });
        }
    }
    if clamped_scores > 0 {
        log::warn!("{clamped_scores} mean-deviation scores clamped into [0, 1]");
    }

    let panel = panel_from_records(&records, &encoder, cfg)?;
    Ok(EnrollRun {
        panel,
        records,
        failures,
        skipped_pairs,
        imposter_sigma,
        clamped_scores,
    })
}

/// Chooses `n` of `members` (indices into `encoded`) under the configured
/// selection rule. Returns indices in ascending (capture) order.
fn select_templates(
    encoded: &[EncodedEntry],
    members: &[usize],
    n: usize,
    cfg: &RunConfig,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<usize>> {
    let mut chosen: Vec<usize> = match cfg.selection {
        SelectionRule::First => members[..n].to_vec(),
        SelectionRule::Random => rand::seq::index::sample(rng, members.len(), n)
            .into_iter()
            .map(|i| members[i])
            .collect(),
        SelectionRule::MaxInterclass => {
            // Most separated: smallest mean similarity to other classes.
            rank_by(members, n, |t| {
                let class = encoded[t].entry.class_id.as_str();
                let others: Vec<usize> = (0..encoded.len())
                    .filter(|&u| encoded[u].entry.class_id != class)
                    .collect();
                mean_similarity(encoded, t, &others, cfg.max_shift)
            })
        }
        SelectionRule::MinIntraclass => {
            // Tightest cluster: largest mean similarity to classmates, i.e.
            // smallest negated mean.
            rank_by(members, n, |t| {
                let mates: Vec<usize> = members.iter().copied().filter(|&u| u != t).collect();
                -mean_similarity(encoded, t, &mates, cfg.max_shift)
            })
        }
    };
    chosen.sort_unstable();
    Ok(chosen)
}

/// Takes the `n` members with the smallest key, ties broken by corpus order.
fn rank_by(members: &[usize], n: usize, key: impl Fn(usize) -> f64) -> Vec<usize> {
    let mut keyed: Vec<(f64, usize)> = members.iter().map(|&t| (key(t), t)).collect();
    keyed.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    keyed.into_iter().take(n).map(|(_, t)| t).collect()
}

fn mean_similarity(encoded: &[EncodedEntry], t: usize, others: &[usize], max_shift: usize) -> f64 {
    let mut sum = 0.0;
    let mut count = 0usize;
    for &u in others {
        if let Ok(s) = hamming_similarity_shifted(&encoded[t].code, &encoded[u].code, max_shift) {
            sum += s.similarity;
            count += 1;
        }
    }
    if count == 0 {
        // A template comparable with nothing ranks last.
        f64::INFINITY
    } else {
        sum / count as f64
    }
}

fn pairs(indices: &[usize]) -> impl Iterator<Item = (usize, usize)> + '_ {
    indices
        .iter()
        .enumerate()
        .flat_map(move |(k, &a)| indices[k + 1..].iter().map(move |&b| (a, b)))
}

fn std_n1(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    (values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)).sqrt()
}

fn require_calibration_shape(corpus: &Corpus) -> Result<()> {
    let counts = corpus.captures_per_class();
    if counts.len() < 2 {
        bail!("calibration needs at least 2 classes, found {}", counts.len());
    }
    for (class, count) in counts {
        if count < 2 {
            bail!("calibration needs at least 2 images per class; class {class} has {count}");
        }
    }
    Ok(())
}

fn panel_from_records(
    records: &[ScoreRecord],
    encoder: &EncoderConfig,
    cfg: &RunConfig,
) -> Result<EvaluationPanel> {
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
    let scores = ScoreSet::new(genuine, imposter, encoder.code_rows * encoder.code_cols)?;
    let options = PanelOptions {
        threshold_override: cfg.threshold,
        ..PanelOptions::default()
    };
    Ok(iris_core::stats::build_panel_with(&scores, &options)?)
}
