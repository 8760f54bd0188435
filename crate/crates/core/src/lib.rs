//! Iris recognition pipeline: segmentation, phase-based encoding, matching,
//! and evaluation statistics.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`rle`] / [`kmeans`] — raster primitives: run-length coding with
//!    re-quantization, and fast histogram k-means quantization.
//! 2. [`pupil`] — locates the pupil from clustered darkness and directional
//!    run-length evidence, then fits an ellipse.
//! 3. [`cfis`] — unwraps the iris into polar lines and votes three crisp
//!    indicators to find the limbic boundary.
//! 4. [`encoder`] — Hilbert-transform instantaneous phase over the unwrapped
//!    band, packed into a binary code with an occlusion mask.
//! 5. [`matcher`] — Hamming similarity, multi-enrollment scoring, and
//!    identification.
//! 6. [`stats`] — score-set statistics: degrees of freedom, ROC, EER,
//!    decidability, and full evaluation panels.
//! 7. [`synth`] — seeded synthetic eye generator with ground truth, for
//!    calibration and tests.

pub mod cfis;
pub mod encoder;
pub mod error;
pub mod image;
pub mod kmeans;
pub mod matcher;
pub mod pupil;
pub mod rle;
pub mod stats;
pub mod synth;

mod bits;

pub use bits::BitMatrix;
pub use cfis::{
    segment, segment_traced, CombinedCrispIndicator, IrisRing, SegmentConfig, SegmentTrace,
    UnwrappedIris,
};
pub use encoder::{
    butterfly_mask, encode, hilbert_window, instant_phase, AnalyticRow, AnalyticTransform,
    EncoderConfig, IrisCode, PhaseConvention,
};
pub use error::{Error, Result};
pub use image::{BinaryImage, GrayImage};
pub use kmeans::{fkmq, KmqResult};
pub use matcher::{
    hamming_similarity, hamming_similarity_shifted, identify, mds_of, mds_score, Identity,
    MatchScore, ScoreKind, ScoreRecord,
};
pub use pupil::{find_pupil, find_pupil_traced, fit_pupil, PupilConfig, PupilFit, PupilTrace};
pub use rle::{rle_decode, rle_encode, rlq_directional, rqf, Axis, RleRun};
pub use stats::{
    build_panel, decidability, degrees_of_freedom, eer, empirical_rates, fisher_ratio,
    storage_efficiency, summarize, theoretical_odds, DistributionSummary, EvaluationPanel,
    NormalFit, OperatingPoint, PanelOptions, RocRow, ScoreSet,
};
pub use synth::{synth_eye, EyeGroundTruth, SynthEyeParams};
