//! Masked code comparison and multi-enrollment scoring.
//!
//! Two codes are compared only where both masks are set; similarity is the
//! fraction of those positions whose bits agree. Against an identity
//! enrolled with several templates, the mean-deviation score rewards
//! consistently high per-template similarity.

use serde::{Deserialize, Serialize};

use crate::bits::BitMatrix;
use crate::encoder::IrisCode;
use crate::error::{Error, Result};

/// Result of comparing two codes.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore {
    /// Fraction of jointly unmasked bits that agree, in [0, 1].
    pub similarity: f64,
    /// Number of jointly unmasked bit positions.
    pub compared_bits: usize,
    pub probe_id: Option<String>,
    pub gallery_id: Option<String>,
}

/// An enrolled identity: one or more templates under a single code
/// geometry.
#[derive(Debug, Clone)]
pub struct Identity {
    pub id: String,
    pub templates: Vec<IrisCode>,
}

impl Identity {
    pub fn new(id: impl Into<String>, templates: Vec<IrisCode>) -> Result<Identity> {
        if templates.is_empty() {
            return Err(Error::InvalidParameter(
                "an identity needs at least one template".into(),
            ));
        }
        let first = templates[0].config;
        if templates.iter().any(|t| !t.config.compatible(&first)) {
            return Err(Error::InvalidParameter(
                "identity templates mix incompatible code geometries".into(),
            ));
        }
        Ok(Identity {
            id: id.into(),
            templates,
        })
    }
}

/// Whether a comparison crossed class boundaries.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScoreKind {
    Genuine,
    Imposter,
}

impl std::fmt::Display for ScoreKind {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            ScoreKind::Genuine => write!(f, "genuine"),
            ScoreKind::Imposter => write!(f, "imposter"),
        }
    }
}

/// One comparison, as dumped to score CSVs.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub probe_id: String,
    pub gallery_id: String,
    pub kind: ScoreKind,
    pub similarity: f64,
    pub compared_bits: usize,
}

/// Fraction of jointly unmasked bits on which the two codes agree.
///
/// Fails when shapes or code geometries differ, or when the joint mask is
/// empty (nothing to compare).
pub fn hamming_similarity(a: &IrisCode, b: &IrisCode) -> Result<MatchScore> {
    if !a.bits.same_shape(&b.bits) {
        return Err(Error::ShapeMismatch(format!(
            "code shapes {}x{} vs {}x{}",
            a.rows(),
            a.cols(),
            b.rows(),
            b.cols()
        )));
    }
    if !a.config.compatible(&b.config) {
        return Err(Error::ShapeMismatch(
            "codes come from incompatible encoder configurations".into(),
        ));
    }
    let joint = a.mask.and(&b.mask)?;
    let compared = joint.count_ones();
    if compared == 0 {
        return Err(Error::IncomparableCodes);
    }
    let disagree = a.bits.xor(&b.bits)?.and(&joint)?.count_ones();
    Ok(MatchScore {
        similarity: (compared - disagree) as f64 / compared as f64,
        compared_bits: compared,
        probe_id: a.provenance.clone(),
        gallery_id: b.provenance.clone(),
    })
}

/// Hamming similarity maximized over circular column shifts of `b` in
/// `-max_shift..=max_shift`.
///
/// `max_shift = 0` reproduces [`hamming_similarity`]; a small window
/// compensates in-plane eye rotation between captures. Ties keep the
/// smallest shift magnitude, and shifts that slide the masks out of overlap
/// simply do not compete (all-incomparable still fails).
pub fn hamming_similarity_shifted(
    a: &IrisCode,
    b: &IrisCode,
    max_shift: usize,
) -> Result<MatchScore> {
    let mut best: Option<MatchScore> = None;
    for magnitude in 0..=max_shift as isize {
        let signs: &[isize] = if magnitude == 0 { &[1] } else { &[1, -1] };
        for sign in signs {
            let result = if magnitude == 0 {
                hamming_similarity(a, b)
            } else {
                hamming_similarity(a, &rotate_columns(b, sign * magnitude))
            };
            match result {
                Ok(score) => {
                    if best
                        .as_ref()
                        .map_or(true, |cur| score.similarity > cur.similarity)
                    {
                        best = Some(score);
                    }
                }
                Err(Error::IncomparableCodes) => {}
                Err(e) => return Err(e),
            }
        }
    }
    best.ok_or(Error::IncomparableCodes)
}

/// Copy of `code` with bits and mask circularly shifted `shift` columns to
/// the right (negative = left).
fn rotate_columns(code: &IrisCode, shift: isize) -> IrisCode {
    let (rows, cols) = (code.rows(), code.cols());
    let mut bits = BitMatrix::new(rows, cols);
    let mut mask = BitMatrix::new(rows, cols);
    let span = cols as isize;
    for r in 0..rows {
        for c in 0..cols {
            let src = ((c as isize - shift).rem_euclid(span)) as usize;
            bits.set(r, c, code.bits.get(r, src));
            mask.set(r, c, code.mask.get(r, src));
        }
    }
    IrisCode {
        bits,
        mask,
        config: code.config.clone(),
        provenance: code.provenance.clone(),
    }
}

/// Mean-deviation similarity of precomputed per-template similarities:
/// `mean + std - imposter_sigma / 2` with the sample (n−1) deviation, 0 for
/// a single value.
///
/// [`mds_score`] computes the similarities itself; this entry point serves
/// callers that already have them (for example, scored under a column-shift
/// window).
pub fn mds_of(similarities: &[f64], imposter_sigma: f64) -> Result<f64> {
    if similarities.is_empty() {
        return Err(Error::EmptyInput);
    }
    if !(imposter_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "imposter sigma must be non-negative, got {imposter_sigma}"
        )));
    }
    Ok(mds_from_similarities(similarities, imposter_sigma))
}

/// Mean-deviation similarity over a set of per-template similarities.
pub(crate) fn mds_from_similarities(similarities: &[f64], imposter_sigma: f64) -> f64 {
    let n = similarities.len();
    let mean = similarities.iter().sum::<f64>() / n as f64;
    let std = if n > 1 {
        let ss = similarities
            .iter()
            .map(|&s| (s - mean) * (s - mean))
            .sum::<f64>();
        (ss / (n - 1) as f64).sqrt()
    } else {
        0.0
    };
    mean + std - imposter_sigma / 2.0
}

/// Mean-deviation similarity of a probe against a multi-enrolled identity.
///
/// Scores the probe against every template, then returns
/// `mean + std - imposter_sigma / 2`, where `std` is the sample standard
/// deviation (n−1 denominator, 0 for a single template) and
/// `imposter_sigma` is the single-enrollment imposter standard deviation
/// obtained from calibration.
pub fn mds_score(probe: &IrisCode, identity: &Identity, imposter_sigma: f64) -> Result<f64> {
    if identity.templates.is_empty() {
        return Err(Error::InvalidParameter(
            "identity has no templates".into(),
        ));
    }
    if !(imposter_sigma >= 0.0) {
        return Err(Error::InvalidParameter(format!(
            "imposter sigma must be non-negative, got {imposter_sigma}"
        )));
    }
    let mut similarities = Vec::with_capacity(identity.templates.len());
    for template in &identity.templates {
        similarities.push(hamming_similarity(probe, template)?.similarity);
    }
    Ok(mds_from_similarities(&similarities, imposter_sigma))
}

/// Scores a probe against every identity and ranks them.
///
/// Returns `(identity id, score)` pairs sorted by descending score, ties
/// broken by ascending id. Identities with no comparable bits against the
/// probe are skipped with a warning; other failures abort.
pub fn identify(
    probe: &IrisCode,
    gallery: &[Identity],
    imposter_sigma: f64,
) -> Result<Vec<(String, f64)>> {
    if gallery.is_empty() {
        return Err(Error::EmptyInput);
    }
    let mut ranking = Vec::with_capacity(gallery.len());
    for identity in gallery {
        match mds_score(probe, identity, imposter_sigma) {
            Ok(score) => ranking.push((identity.id.clone(), score)),
            Err(Error::IncomparableCodes) => {
                log::warn!(
                    "identity {} shares no comparable bits with the probe; skipped",
                    identity.id
                );
            }
            Err(e) => return Err(e),
        }
    }
    ranking.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    Ok(ranking)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bits::BitMatrix;
    use crate::encoder::{EncoderConfig, PhaseConvention};
    use approx::assert_abs_diff_eq;
    use rand::prelude::*;
    use rand_chacha::ChaCha8Rng;

    fn config_16x96() -> EncoderConfig {
        EncoderConfig {
            butterfly_half_angle: None,
            ..EncoderConfig::code_192_byte()
        }
    }

    fn code_from_bytes(bytes: Vec<u8>, mask_bytes: Vec<u8>) -> IrisCode {
        let cfg = config_16x96();
        IrisCode {
            bits: BitMatrix::from_bytes(cfg.code_rows, cfg.code_cols, bytes).unwrap(),
            mask: BitMatrix::from_bytes(cfg.code_rows, cfg.code_cols, mask_bytes).unwrap(),
            config: cfg,
            provenance: None,
        }
    }

    fn random_code(rng: &mut ChaCha8Rng) -> IrisCode {
        let mut bytes = vec![0u8; 192];
        rng.fill_bytes(&mut bytes);
        code_from_bytes(bytes, vec![0xFF; 192])
    }

    fn complement(code: &IrisCode) -> IrisCode {
        let bytes: Vec<u8> = code.bits.as_bytes().iter().map(|b| !b).collect();
        code_from_bytes(bytes, code.mask.as_bytes().to_vec())
    }

    #[test]
    fn identical_codes_score_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let a = random_code(&mut rng);
        let s = hamming_similarity(&a, &a).unwrap();
        assert_eq!(s.similarity, 1.0);
        assert_eq!(s.compared_bits, 1536);
    }

    #[test]
    fn complementary_codes_score_zero() {
        let mut rng = ChaCha8Rng::seed_from_u64(32);
        let a = random_code(&mut rng);
        let b = complement(&a);
        assert_eq!(hamming_similarity(&a, &b).unwrap().similarity, 0.0);
    }

    #[test]
    fn similarity_is_symmetric() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for _ in 0..20 {
            let a = random_code(&mut rng);
            let b = random_code(&mut rng);
            let ab = hamming_similarity(&a, &b).unwrap();
            let ba = hamming_similarity(&b, &a).unwrap();
            assert_eq!(ab.similarity, ba.similarity);
            assert_eq!(ab.compared_bits, ba.compared_bits);
        }
    }

    #[test]
    fn masked_positions_are_ignored() {
        let mut rng = ChaCha8Rng::seed_from_u64(34);
        let a = random_code(&mut rng);
        let mut b = complement(&a);
        // Unmask only the first byte row of b: 8 compared bits, all
        // disagreeing.
        let mut mask = vec![0u8; 192];
        mask[0] = 0xFF;
        b.mask = BitMatrix::from_bytes(16, 96, mask).unwrap();
        let s = hamming_similarity(&a, &b).unwrap();
        assert_eq!(s.compared_bits, 8);
        assert_eq!(s.similarity, 0.0);
    }

    #[test]
    fn shrinking_a_mask_never_adds_compared_bits() {
        let mut rng = ChaCha8Rng::seed_from_u64(35);
        for _ in 0..30 {
            let a = random_code(&mut rng);
            let mut b = random_code(&mut rng);
            let mut mask: Vec<u8> = (0..192).map(|_| rng.gen()).collect();
            b.mask = BitMatrix::from_bytes(16, 96, mask.clone()).unwrap();
            let full = hamming_similarity(&a, &b).unwrap().compared_bits;
            // Clear a random byte.
            let k = rng.gen_range(0..192);
            mask[k] = 0;
            let mut shrunk = b.clone();
            shrunk.mask = BitMatrix::from_bytes(16, 96, mask).unwrap();
            match hamming_similarity(&a, &shrunk) {
                Ok(s) => assert!(s.compared_bits <= full),
                Err(Error::IncomparableCodes) => {}
                Err(e) => panic!("unexpected error {e}"),
            }
        }
    }

    #[test]
    fn disjoint_masks_are_incomparable() {
        let mut rng = ChaCha8Rng::seed_from_u64(36);
        let mut a = random_code(&mut rng);
        let mut b = random_code(&mut rng);
        let mut low = vec![0u8; 192];
        let mut high = vec![0u8; 192];
        low[..96].fill(0xFF);
        high[96..].fill(0xFF);
        a.mask = BitMatrix::from_bytes(16, 96, low).unwrap();
        b.mask = BitMatrix::from_bytes(16, 96, high).unwrap();
        assert!(matches!(
            hamming_similarity(&a, &b),
            Err(Error::IncomparableCodes)
        ));
    }

    #[test]
    fn incompatible_geometries_are_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(37);
        let a = random_code(&mut rng);
        let mut b = random_code(&mut rng);
        b.config.phase_convention = PhaseConvention::SingleArgument;
        assert!(matches!(
            hamming_similarity(&a, &b),
            Err(Error::ShapeMismatch(_))
        ));
    }

    #[test]
    fn random_code_similarity_matches_binomial_statistics() {
        let mut rng = ChaCha8Rng::seed_from_u64(38);
        let pairs = 10_000;
        let mut scores = Vec::with_capacity(pairs);
        for _ in 0..pairs {
            let a = random_code(&mut rng);
            let b = random_code(&mut rng);
            scores.push(hamming_similarity(&a, &b).unwrap().similarity);
        }
        let mean = scores.iter().sum::<f64>() / pairs as f64;
        let var = scores.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>()
            / (pairs - 1) as f64;
        let std = var.sqrt();
        assert!((0.49..=0.51).contains(&mean), "mean {mean}");
        let expected_std = 0.5 / (1536.0f64).sqrt();
        assert!(
            (std - expected_std).abs() <= 0.1 * expected_std,
            "std {std} vs expected {expected_std}"
        );
    }

    #[test]
    fn mds_matches_direct_arithmetic() {
        let s = [0.70, 0.72, 0.74, 0.70, 0.74];
        assert_abs_diff_eq!(
            mds_from_similarities(&s, 0.0193),
            0.73035,
            epsilon = 1e-12
        );
    }

    #[test]
    fn mds_single_template_drops_the_deviation_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(39);
        let probe = random_code(&mut rng);
        let template = random_code(&mut rng);
        let hs = hamming_similarity(&probe, &template).unwrap().similarity;
        let identity = Identity::new("a", vec![template]).unwrap();
        let score = mds_score(&probe, &identity, 0.02).unwrap();
        assert_abs_diff_eq!(score, hs - 0.01, epsilon = 1e-15);
    }

    #[test]
    fn mds_of_probe_equal_to_all_templates_is_one() {
        let mut rng = ChaCha8Rng::seed_from_u64(40);
        let probe = random_code(&mut rng);
        let identity = Identity::new("a", vec![probe.clone(), probe.clone()]).unwrap();
        assert_eq!(mds_score(&probe, &identity, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn mds_rejects_negative_sigma() {
        let mut rng = ChaCha8Rng::seed_from_u64(41);
        let probe = random_code(&mut rng);
        let identity = Identity::new("a", vec![random_code(&mut rng)]).unwrap();
        assert!(mds_score(&probe, &identity, -0.1).is_err());
    }

    #[test]
    fn mds_is_monotone_when_raising_an_above_mean_similarity() {
        // The score is not monotone in below-mean members (raising a far
        // outlier toward the mean shrinks the deviation term faster than it
        // lifts the mean), so the property is asserted on at-or-above-mean
        // members only.
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..200 {
            let n = rng.gen_range(2..8);
            let mut s: Vec<f64> = (0..n).map(|_| rng.gen_range(0.3..0.9)).collect();
            let base = mds_from_similarities(&s, 0.02);
            let mean = s.iter().sum::<f64>() / n as f64;
            let Some(i) = (0..n).find(|&i| s[i] >= mean) else {
                continue;
            };
            s[i] = (s[i] + rng.gen_range(0.0..0.1)).min(1.0);
            assert!(mds_from_similarities(&s, 0.02) >= base - 1e-12);
        }
    }

    #[test]
    fn identity_constructor_validates_templates() {
        assert!(Identity::new("x", vec![]).is_err());
        let mut rng = ChaCha8Rng::seed_from_u64(43);
        let a = random_code(&mut rng);
        let mut b = random_code(&mut rng);
        b.config.phase_convention = PhaseConvention::SingleArgument;
        assert!(Identity::new("x", vec![a, b]).is_err());
    }

    /// Flips the first `flips` bits of a fully-masked code.
    fn perturbed(base: &IrisCode, flips: usize, rng: &mut ChaCha8Rng) -> IrisCode {
        let mut bytes = base.bits.as_bytes().to_vec();
        let mut flipped = std::collections::HashSet::new();
        while flipped.len() < flips {
            let bit = rng.gen_range(0..1536);
            if flipped.insert(bit) {
                bytes[bit / 8] ^= 0x80 >> (bit % 8);
            }
        }
        code_from_bytes(bytes, vec![0xFF; 192])
    }

    #[test]
    fn identify_ranks_the_true_identity_first() {
        let mut rng = ChaCha8Rng::seed_from_u64(44);
        let bases: Vec<IrisCode> = (0..3).map(|_| random_code(&mut rng)).collect();
        let gallery: Vec<Identity> = bases
            .iter()
            .enumerate()
            .map(|(i, base)| {
                let templates = (0..4).map(|_| perturbed(base, 150, &mut rng)).collect();
                Identity::new(format!("id-{i}"), templates).unwrap()
            })
            .collect();
        for (i, base) in bases.iter().enumerate() {
            let probe = perturbed(base, 150, &mut rng);
            let ranking = identify(&probe, &gallery, 0.0128).unwrap();
            assert_eq!(ranking[0].0, format!("id-{i}"));
            assert!(ranking[0].1 > ranking[1].1);
        }
    }

    #[test]
    fn identify_skips_incomparable_identities() {
        let mut rng = ChaCha8Rng::seed_from_u64(45);
        let mut probe = random_code(&mut rng);
        let mut probe_mask = vec![0u8; 192];
        probe_mask[..96].fill(0xFF);
        probe.mask = BitMatrix::from_bytes(16, 96, probe_mask).unwrap();

        let mut hidden = random_code(&mut rng);
        let mut hidden_mask = vec![0u8; 192];
        hidden_mask[96..].fill(0xFF);
        hidden.mask = BitMatrix::from_bytes(16, 96, hidden_mask).unwrap();

        let gallery = vec![
            Identity::new("visible", vec![random_code(&mut rng)]).unwrap(),
            Identity::new("hidden", vec![hidden]).unwrap(),
        ];
        let ranking = identify(&probe, &gallery, 0.0).unwrap();
        assert_eq!(ranking.len(), 1);
        assert_eq!(ranking[0].0, "visible");
    }

    #[test]
    fn identify_breaks_ties_by_id() {
        let mut rng = ChaCha8Rng::seed_from_u64(46);
        let probe = random_code(&mut rng);
        let template = random_code(&mut rng);
        let gallery = vec![
            Identity::new("b", vec![template.clone()]).unwrap(),
            Identity::new("a", vec![template]).unwrap(),
        ];
        let ranking = identify(&probe, &gallery, 0.0).unwrap();
        assert_eq!(ranking[0].0, "a");
        assert_eq!(ranking[1].0, "b");
        assert_eq!(ranking[0].1, ranking[1].1);
    }

    #[test]
    fn identify_rejects_empty_gallery() {
        let mut rng = ChaCha8Rng::seed_from_u64(47);
        let probe = random_code(&mut rng);
        assert!(matches!(identify(&probe, &[], 0.0), Err(Error::EmptyInput)));
    }

    #[test]
    fn mds_of_matches_the_full_scorer() {
        let mut rng = ChaCha8Rng::seed_from_u64(52);
        let probe = random_code(&mut rng);
        let templates: Vec<IrisCode> = (0..4).map(|_| random_code(&mut rng)).collect();
        let similarities: Vec<f64> = templates
            .iter()
            .map(|t| hamming_similarity(&probe, t).unwrap().similarity)
            .collect();
        let identity = Identity::new("x", templates).unwrap();
        assert_eq!(
            mds_of(&similarities, 0.02).unwrap(),
            mds_score(&probe, &identity, 0.02).unwrap()
        );
        assert!(matches!(mds_of(&[], 0.0), Err(Error::EmptyInput)));
        assert!(mds_of(&[0.5], -0.1).is_err());
    }

    #[test]
    fn zero_shift_window_matches_plain_similarity() {
        let mut rng = ChaCha8Rng::seed_from_u64(48);
        let a = random_code(&mut rng);
        let b = random_code(&mut rng);
        let plain = hamming_similarity(&a, &b).unwrap();
        let windowed = hamming_similarity_shifted(&a, &b, 0).unwrap();
        assert_eq!(plain.similarity, windowed.similarity);
        assert_eq!(plain.compared_bits, windowed.compared_bits);
    }

    #[test]
    fn shift_window_recovers_a_rotated_code() {
        let mut rng = ChaCha8Rng::seed_from_u64(49);
        let a = random_code(&mut rng);
        let rotated = rotate_columns(&a, 3);
        // A wide enough window finds the alignment exactly.
        let found = hamming_similarity_shifted(&a, &rotated, 3).unwrap();
        assert_eq!(found.similarity, 1.0);
        // A narrower window cannot, and never beats the exact alignment.
        let near = hamming_similarity_shifted(&a, &rotated, 2).unwrap();
        assert!(near.similarity < 1.0);
        let plain = hamming_similarity(&a, &rotated).unwrap();
        assert!(near.similarity >= plain.similarity);
    }

    #[test]
    fn shift_window_never_lowers_the_plain_score() {
        let mut rng = ChaCha8Rng::seed_from_u64(50);
        for _ in 0..50 {
            let a = random_code(&mut rng);
            let b = random_code(&mut rng);
            let plain = hamming_similarity(&a, &b).unwrap().similarity;
            let windowed = hamming_similarity_shifted(&a, &b, 4).unwrap().similarity;
            assert!(windowed >= plain);
        }
    }

    #[test]
    fn column_rotation_round_trips() {
        let mut rng = ChaCha8Rng::seed_from_u64(51);
        let a = random_code(&mut rng);
        let back = rotate_columns(&rotate_columns(&a, 5), -5);
        assert_eq!(back.bits.as_bytes(), a.bits.as_bytes());
        assert_eq!(back.mask.as_bytes(), a.mask.as_bytes());
    }
}
