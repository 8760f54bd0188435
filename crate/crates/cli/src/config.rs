//! Run configuration: defaults, TOML config files, and the encoder preset
//! lookup.

use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use iris_core::EncoderConfig;
use serde::{Deserialize, Serialize};

/// Which workflow a run executes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Scenario {
    /// All-to-all Hamming similarity over every image pair.
    Calibration,
    /// Multi-enrollment identification with mean-deviation scores.
    EnrollIdentify,
}

/// How enrollment templates are chosen from a class's captures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SelectionRule {
    /// First n captures in corpus order.
    First,
    /// n captures drawn with the run seed.
    Random,
    /// The n captures least similar to other classes' captures.
    MaxInterclass,
    /// The n captures most similar to their own class's captures.
    MinIntraclass,
}

impl std::str::FromStr for SelectionRule {
    type Err = anyhow::Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "first" => Ok(SelectionRule::First),
            "random" => Ok(SelectionRule::Random),
            "max_interclass" | "max-interclass" => Ok(SelectionRule::MaxInterclass),
            "min_intraclass" | "min-intraclass" => Ok(SelectionRule::MinIntraclass),
            other => bail!(
                "unknown selection rule {other:?} \
                 (expected first | random | max-interclass | min-intraclass)"
            ),
        }
    }
}

/// Everything a batch run needs beyond the corpus itself.
///
/// A TOML config file may set any subset of these keys; command-line flags
/// override the file.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    /// Iris code size in bytes; 192 and 768 are the shipped presets.
    pub code_bytes: usize,
    pub scenario: Scenario,
    /// Templates enrolled per identity in the enroll-identify scenario.
    pub templates_per_identity: usize,
    pub selection: SelectionRule,
    /// Overrides the suggested recognition threshold in reports.
    pub threshold: Option<f64>,
    /// Half-width of the circular column-shift search during matching;
    /// 0 compares codes in place.
    pub max_shift: usize,
    /// Report output directory.
    pub outdir: PathBuf,
    pub seed: u64,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            code_bytes: 192,
            scenario: Scenario::Calibration,
            templates_per_identity: 5,
            selection: SelectionRule::First,
            threshold: None,
            max_shift: 0,
            outdir: PathBuf::from("report"),
            seed: 7,
        }
    }
}

impl RunConfig {
    /// Reads a TOML config file; keys not present keep their defaults.
    pub fn load(path: &Path) -> Result<RunConfig> {
        let text = fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        let cfg: RunConfig =
            toml::from_str(&text).with_context(|| format!("parsing config {}", path.display()))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.templates_per_identity == 0 {
            bail!("templates_per_identity must be at least 1");
        }
        self.encoder()?;
        Ok(())
    }

    /// The encoder preset for `code_bytes`.
    pub fn encoder(&self) -> Result<EncoderConfig> {
        match self.code_bytes {
            192 => Ok(EncoderConfig::code_192_byte()),
            768 => Ok(EncoderConfig::code_768_byte()),
            other => bail!("unsupported code size {other} bytes (presets: 192, 768)"),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn defaults_are_valid() {
        let cfg = RunConfig::default();
        cfg.validate().unwrap();
        assert_eq!(cfg.encoder().unwrap().code_rows, 16);
    }

    #[test]
    fn config_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(
            &path,
            "code_bytes = 768\nscenario = \"enroll_identify\"\nselection = \"random\"\nseed = 99\n",
        )
        .unwrap();
        let cfg = RunConfig::load(&path).unwrap();
        assert_eq!(cfg.code_bytes, 768);
        assert_eq!(cfg.scenario, Scenario::EnrollIdentify);
        assert_eq!(cfg.selection, SelectionRule::Random);
        assert_eq!(cfg.seed, 99);
        // Unset keys keep defaults.
        assert_eq!(cfg.templates_per_identity, 5);
    }

    #[test]
    fn unknown_keys_and_bad_sizes_are_rejected() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("run.toml");
        std::fs::write(&path, "code_bytes = 100\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
        std::fs::write(&path, "no_such_key = 1\n").unwrap();
        assert!(RunConfig::load(&path).is_err());
    }
}
