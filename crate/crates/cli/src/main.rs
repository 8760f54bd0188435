//! `iris-workbench`: command-line front end for the iris pipeline.
//!
//! Exit codes: 0 on success, 2 when some corpus images failed and were
//! excluded, 1 on fatal errors.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use iris_workbench::{
    dump_stages, generate_synthetic_corpus, run_calibration, run_enroll_identify, write_report,
    Corpus, ReportMeta, RunConfig, Scenario, SelectionRule, SynthCorpusParams,
};

use iris_core::cfis::segment_traced;
use iris_core::{encode, hamming_similarity_shifted, EvaluationPanel, GrayImage, IrisCode};

#[derive(Parser)]
#[command(
    name = "iris-workbench",
    about = "Iris recognition workbench: segmentation, encoding, matching, and evaluation",
    version
)]
struct Cli {
    /// Seed for every randomized choice in the run.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Worker threads for per-image stages (default: one per CPU).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    /// TOML config file; command-line flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Write every intermediate stage next to the main output.
    #[arg(long, global = true)]
    dump_stages: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Generate a synthetic eye corpus with ground truth.
    Synth {
        /// Corpus output directory.
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 20)]
        identities: usize,
        #[arg(long, default_value_t = 10)]
        captures: usize,
        #[arg(long, default_value_t = 320)]
        width: u32,
        #[arg(long, default_value_t = 240)]
        height: u32,
        /// Fraction of captures rendered with eyelid occlusion.
        #[arg(long, default_value_t = 0.25)]
        occlusion_fraction: f64,
        /// Lower bound of the per-capture gamma draw.
        #[arg(long, default_value_t = 0.9)]
        gamma_min: f64,
        /// Upper bound of the per-capture gamma draw.
        #[arg(long, default_value_t = 1.1)]
        gamma_max: f64,
        /// Additive sensor noise standard deviation.
        #[arg(long, default_value_t = 5.0)]
        noise_sigma: f64,
    },

    /// Segment one image: pupil fit and limbic boundary.
    Segment {
        image: PathBuf,
        /// Stage dump directory (default: `<image>.stages`).
        #[arg(long)]
        out: Option<PathBuf>,
    },

    /// Segment and encode one image into a .gcode file.
    Encode {
        image: PathBuf,
        /// Output code path (default: image path with .gcode extension).
        #[arg(long)]
        out: Option<PathBuf>,
        /// Code size in bytes (192 or 768).
        #[arg(long)]
        bytes: Option<usize>,
    },

    /// Compare a probe code against one or more gallery codes.
    Match {
        probe: PathBuf,
        #[arg(required = true)]
        gallery: Vec<PathBuf>,
        /// Circular column-shift search half-width.
        #[arg(long)]
        max_shift: Option<usize>,
    },

    /// All-to-all scoring over a corpus; writes a full report.
    Calibrate {
        corpus: PathBuf,
        /// Report directory (default from config: `report`).
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        bytes: Option<usize>,
        /// Recognition threshold override for the report.
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        max_shift: Option<usize>,
    },

    /// Enroll n templates per class, identify the remaining captures.
    EnrollIdentify {
        corpus: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        bytes: Option<usize>,
        /// Templates enrolled per identity.
        #[arg(long, short = 'n')]
        templates: Option<usize>,
        /// first | random | max-interclass | min-intraclass
        #[arg(long)]
        rule: Option<SelectionRule>,
        #[arg(long)]
        threshold: Option<f64>,
        #[arg(long)]
        max_shift: Option<usize>,
    },

    /// Rebuild report files from an existing panel.json.
    Report {
        panel: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<ExitCode> {
    // defaults <- config file <- command-line flags.
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }

    match cli.command {
        Command::Synth {
            out,
            identities,
            captures,
            width,
            height,
            occlusion_fraction,
            gamma_min,
            gamma_max,
            noise_sigma,
        } => {
            let corpus = generate_synthetic_corpus(
                &out,
                &SynthCorpusParams {
                    identities,
                    captures_per_identity: captures,
                    width,
                    height,
                    occlusion_fraction,
                    gamma_range: (gamma_min, gamma_max),
                    noise_sigma,
                    seed: cfg.seed,
                },
            )?;
            println!(
                "wrote {} images in {} classes under {}",
                corpus.entries.len(),
                corpus.captures_per_class().len(),
                out.display()
            );
            Ok(ExitCode::SUCCESS)
        }

        Command::Segment { image, out } => {
            let img = GrayImage::load(&image)?;
            let (ring, trace) = segment_traced(&img)?;
            println!(
                "{}",
                serde_json::json!({
                    "center_x": ring.pupil.center_x,
                    "center_y": ring.pupil.center_y,
                    "pupil_radius": ring.pupil.radius,
                    "limbic_radius": ring.limbic_radius,
                    "band_lines": ring.band.line_count(),
                })
            );
            if cli.dump_stages {
                let dir = out.unwrap_or_else(|| stage_dir(&image));
                let files = dump_stages(&dir, &img, &ring, &trace)?;
                eprintln!("wrote {} stage files to {}", files.len(), dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Encode { image, out, bytes } => {
            if let Some(bytes) = bytes {
                cfg.code_bytes = bytes;
            }
            let encoder = cfg.encoder()?;
            let img = GrayImage::load(&image)?;
            let (ring, trace) = segment_traced(&img)?;
            let mut code = encode(&ring, &encoder)?;
            code.provenance = Some(image.display().to_string());
            let out = out.unwrap_or_else(|| image.with_extension("gcode"));
            code.save(&out)?;
            println!(
                "{} -> {} ({}x{} bits, {:.1}% masked)",
                image.display(),
                out.display(),
                code.rows(),
                code.cols(),
                100.0 * (1.0 - code.mask.count_ones() as f64 / code.bits.bit_len() as f64)
            );
            if cli.dump_stages {
                let dir = stage_dir(&image);
                dump_stages(&dir, &img, &ring, &trace)?;
                eprintln!("stage files in {}", dir.display());
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Match {
            probe,
            gallery,
            max_shift,
        } => {
            let shift = max_shift.unwrap_or(cfg.max_shift);
            let probe_code = IrisCode::load(&probe)?;
            println!("gallery,similarity,compared_bits");
            for path in &gallery {
                let code = IrisCode::load(path)?;
                let score = hamming_similarity_shifted(&probe_code, &code, shift)?;
                println!("{},{},{}", path.display(), score.similarity, score.compared_bits);
            }
            Ok(ExitCode::SUCCESS)
        }

        Command::Calibrate {
            corpus,
            out,
            bytes,
            threshold,
            max_shift,
        } => {
            apply_overrides(&mut cfg, bytes, threshold, max_shift);
            cfg.scenario = Scenario::Calibration;
            if let Some(out) = out {
                cfg.outdir = out;
            }
            let corpus = Corpus::load(&corpus)?;
            let run = run_calibration(&corpus, &cfg, cli.jobs)?;
            let meta = ReportMeta {
                scenario: "calibration".into(),
                failed_images: run.failures.len(),
                skipped_pairs: run.skipped_pairs,
                clamped_scores: 0,
            };
            write_report(&cfg.outdir, &run.panel, Some(&run.records), &meta)?;
            print_panel_lines(&run.panel);
            println!("report: {}", cfg.outdir.display());
            Ok(partial_exit(run.failures.len()))
        }

        Command::EnrollIdentify {
            corpus,
            out,
            bytes,
            templates,
            rule,
            threshold,
            max_shift,
        } => {
            apply_overrides(&mut cfg, bytes, threshold, max_shift);
            cfg.scenario = Scenario::EnrollIdentify;
            if let Some(out) = out {
                cfg.outdir = out;
            }
            if let Some(n) = templates {
                cfg.templates_per_identity = n;
            }
            if let Some(rule) = rule {
                cfg.selection = rule;
            }
            cfg.validate()?;
            let corpus = Corpus::load(&corpus)?;
            let run = run_enroll_identify(&corpus, &cfg, cli.jobs)?;
            let meta = ReportMeta {
                scenario: "enroll-identify".into(),
                failed_images: run.failures.len(),
                skipped_pairs: run.skipped_pairs,
                clamped_scores: run.clamped_scores,
            };
            write_report(&cfg.outdir, &run.panel, Some(&run.records), &meta)?;
            println!("imposter sigma (single enrollment): {:.6}", run.imposter_sigma);
            print_panel_lines(&run.panel);
            println!("report: {}", cfg.outdir.display());
            Ok(partial_exit(run.failures.len()))
        }

        Command::Report { panel, out } => {
            let text = std::fs::read_to_string(&panel)
                .with_context(|| format!("reading {}", panel.display()))?;
            let panel: EvaluationPanel = serde_json::from_str(&text)
                .with_context(|| "parsing panel JSON")?;
            write_report(&out, &panel, None, &ReportMeta::default())?;
            println!("report: {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn apply_overrides(
    cfg: &mut RunConfig,
    bytes: Option<usize>,
    threshold: Option<f64>,
    max_shift: Option<usize>,
) {
    if let Some(bytes) = bytes {
        cfg.code_bytes = bytes;
    }
    if threshold.is_some() {
        cfg.threshold = threshold;
    }
    if let Some(shift) = max_shift {
        cfg.max_shift = shift;
    }
}

fn stage_dir(image: &Path) -> PathBuf {
    let mut name = image.file_name().unwrap_or_default().to_os_string();
    name.push(".stages");
    image.with_file_name(name)
}

fn print_panel_lines(panel: &EvaluationPanel) {
    println!(
        "imposter: mean {:.6} std {:.6} | genuine: mean {:.6} std {:.6}",
        panel.imposter.mean, panel.imposter.std, panel.genuine.mean, panel.genuine.std
    );
    println!(
        "decidability {:.4} | EER {:.6} | DoF {:.1} | suggested threshold {:.6}",
        panel.decidability,
        panel.eer,
        panel.degrees_of_freedom,
        panel.threshold_at_target_far.threshold
    );
}

fn partial_exit(failures: usize) -> ExitCode {
    if failures > 0 {
        ExitCode::from(2)
    } else {
        ExitCode::SUCCESS
    }
}
