//! Batch workbench around the iris pipeline: corpus handling, synthetic
//! corpus generation, the calibration and enrollment/identification
//! workflows, and report writing.
//!
//! Everything here is deterministic for a fixed seed: corpus entries are
//! sorted, parallel maps collect in input order, and report files contain no
//! timestamps outside the first line of `summary.txt`.

pub mod config;
pub mod corpus;
pub mod pipeline;
pub mod report;
pub mod stages;
mod svg;

pub use config::{RunConfig, Scenario, SelectionRule};
pub use corpus::{generate_synthetic_corpus, Corpus, CorpusEntry, GroundTruth, SynthCorpusParams};
pub use pipeline::{run_calibration, run_enroll_identify, CalibrationRun, EnrollRun};
pub use report::{write_report, ReportMeta};
pub use stages::dump_stages;
