//! Synthetic eye images with known ground truth.
//!
//! Renders a dark pupil disk, an iris annulus whose texture varies only with
//! angle, a bright sclera, and optional eyelids and specular highlights,
//! then applies gamma and sensor noise. Texture is derived from an identity
//! seed and capture conditions from a capture seed, so one identity can be
//! rendered under many captures. Every capture aspect (geometry, noise,
//! speculars, eyelids) draws from its own sub-generator, which keeps the
//! other aspects byte-identical when one is toggled.

use rand::distributions::Distribution;
use rand::prelude::*;
use rand_chacha::ChaCha8Rng;
use statrs::distribution::Normal;

use crate::error::Result;
use crate::image::GrayImage;

const PUPIL_LEVEL: f64 = 20.0;
const SCLERA_LEVEL: f64 = 230.0;
// In near-infrared eye imagery skin reflects far less than the sclera and
// lands in the same gray range as the iris; keeping the lids there means
// partial occlusion flattens iris texture without brightening the line
// means, which is what real capture rigs produce.
const EYELID_LEVEL: f64 = 120.0;

/// Controls for one rendered capture.
#[derive(Debug, Clone)]
pub struct SynthEyeParams {
    pub width: u32,
    pub height: u32,
    /// Chooses the iris texture and limbic ratio.
    pub identity_seed: u64,
    /// Chooses capture conditions: pupil dilation, center jitter, noise
    /// pattern, specular placement, eyelid shape.
    pub capture_seed: u64,
    /// Pupil radius before per-capture dilation.
    pub base_pupil_radius: f64,
    /// Draw eyelids over the top and bottom of the iris.
    pub occlusion: bool,
    /// Intensity gamma; 1.0 leaves levels unchanged.
    pub gamma: f64,
    /// Standard deviation of additive sensor noise.
    pub noise_sigma: f64,
    /// Number of bright specular disks inside the pupil.
    pub specular_count: usize,
}

impl Default for SynthEyeParams {
    fn default() -> Self {
        SynthEyeParams {
            width: 320,
            height: 240,
            identity_seed: 1,
            capture_seed: 1,
            base_pupil_radius: 20.0,
            occlusion: false,
            gamma: 1.0,
            noise_sigma: 3.0,
            specular_count: 2,
        }
    }
}

/// True geometry behind a rendered capture.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EyeGroundTruth {
    pub center_x: f64,
    pub center_y: f64,
    /// Pupil radius after dilation.
    pub pupil_radius: f64,
    /// Limbic (iris/sclera) boundary radius.
    pub iris_radius: f64,
}

// Sub-generator tags, one per capture aspect.
const TAG_TEXTURE: u64 = 0;
const TAG_GEOMETRY: u64 = 1;
const TAG_NOISE: u64 = 2;
const TAG_SPECULAR: u64 = 3;
const TAG_EYELID: u64 = 4;

/// Derives an independent stream from a seed and an aspect tag
/// (splitmix-style finalizer).
fn derive_rng(seed: u64, tag: u64) -> ChaCha8Rng {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^= z >> 31;
    ChaCha8Rng::seed_from_u64(z)
}

/// Angular iris texture: a base level plus a handful of whole-number
/// harmonics, so the pattern is continuous across the wrap and independent
/// of radius.
struct IrisTexture {
    base: f64,
    harmonics: Vec<(f64, f64, f64)>, // (frequency, amplitude, phase)
}

impl IrisTexture {
    fn from_identity(identity_seed: u64) -> (IrisTexture, f64) {
        let mut rng = derive_rng(identity_seed, TAG_TEXTURE);
        let base = rng.gen_range(100.0..120.0);
        let total_amplitude = rng.gen_range(30.0..45.0);
        let weights: Vec<f64> = (0..5).map(|_| rng.gen_range(0.4..1.0)).collect();
        let weight_sum: f64 = weights.iter().sum();
        let harmonics = weights
            .iter()
            .map(|w| {
                let frequency = rng.gen_range(3..13) as f64;
                let phase = rng.gen_range(0.0..std::f64::consts::TAU);
                (frequency, total_amplitude * w / weight_sum, phase)
            })
            .collect();
        let iris_ratio = rng.gen_range(2.2..2.5);
        (IrisTexture { base, harmonics }, iris_ratio)
    }

    fn value(&self, theta: f64) -> f64 {
        self.base
            + self
                .harmonics
                .iter()
                .map(|&(k, a, p)| a * (k * theta + p).cos())
                .sum::<f64>()
    }
}

/// Renders one capture and returns the image with its ground truth.
pub fn synth_eye(params: &SynthEyeParams) -> Result<(GrayImage, EyeGroundTruth)> {
    let (w, h) = (params.width, params.height);
    let (texture, iris_ratio) = IrisTexture::from_identity(params.identity_seed);

    let mut geometry = derive_rng(params.capture_seed, TAG_GEOMETRY);
    let dilation = geometry.gen_range(0.92..1.12);
    let pupil_radius = params.base_pupil_radius * dilation;
    let iris_radius = params.base_pupil_radius * iris_ratio;
    let center_x = w as f64 / 2.0 + geometry.gen_range(-1.5..1.5);
    let center_y = h as f64 / 2.0 + geometry.gen_range(-1.5..1.5);

    // Lid depths model a deliberately opened eye: the upper lid crosses the
    // top fifth of the iris at most, the lower lid grazes the limbus or stays
    // below it, matching captures where subjects are asked to open wide.
    let mut lid_rng = derive_rng(params.capture_seed, TAG_EYELID);
    let upper_depth = iris_radius * lid_rng.gen_range(0.84..0.92);
    // Curvature stays shallow enough that the lid clears the horizontal
    // diameter out past the limbic boundary for every drawn depth.
    let upper_curve = lid_rng.gen_range(0.2..0.35);
    let lower_depth = iris_radius * lid_rng.gen_range(0.95..1.05);

    let mut canvas = vec![0.0f64; (w * h) as usize];
    for y in 0..h {
        for x in 0..w {
            let px = x as f64 + 0.5;
            let py = y as f64 + 0.5;
            let dx = px - center_x;
            let dy = py - center_y;
            let dist = (dx * dx + dy * dy).sqrt();
            let mut v = if dist <= pupil_radius {
                PUPIL_LEVEL
            } else if dist <= iris_radius {
                // Angle grows counterclockwise with y pointing down.
                texture.value((-dy).atan2(dx))
            } else {
                SCLERA_LEVEL
            };
            if params.occlusion && dist > pupil_radius {
                let upper_edge = center_y - upper_depth + upper_curve * dx * dx / iris_radius;
                let lower_edge = center_y + lower_depth;
                if py < upper_edge || py > lower_edge {
                    v = EYELID_LEVEL;
                }
            }
            canvas[(y * w + x) as usize] = v;
        }
    }

    let mut speculars = derive_rng(params.capture_seed, TAG_SPECULAR);
    for _ in 0..params.specular_count {
        let angle = speculars.gen_range(0.0..std::f64::consts::TAU);
        let offset = speculars.gen_range(0.0..0.55 * pupil_radius);
        let radius: f64 = speculars.gen_range(1.0..2.2);
        let sx = center_x + offset * angle.cos();
        let sy = center_y - offset * angle.sin();
        let reach = radius.ceil() as i64 + 1;
        for oy in -reach..=reach {
            for ox in -reach..=reach {
                let x = (sx - 0.5).round() as i64 + ox;
                let y = (sy - 0.5).round() as i64 + oy;
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    continue;
                }
                let ddx = x as f64 + 0.5 - sx;
                let ddy = y as f64 + 0.5 - sy;
                if ddx * ddx + ddy * ddy <= radius * radius {
                    canvas[(y as u64 * w as u64 + x as u64) as usize] = 255.0;
                }
            }
        }
    }

    let noise_dist = Normal::new(0.0, params.noise_sigma.max(f64::MIN_POSITIVE)).unwrap();
    let mut noise_rng = derive_rng(params.capture_seed, TAG_NOISE);
    let mut pixels = Vec::with_capacity(canvas.len());
    for &v in &canvas {
        let graded = 255.0 * (v / 255.0).max(0.0).powf(params.gamma);
        let noise = if params.noise_sigma > 0.0 {
            noise_dist.sample(&mut noise_rng)
        } else {
            0.0
        };
        pixels.push((graded + noise).round().clamp(0.0, 255.0) as u8);
    }

    let image = GrayImage::from_pixels(w, h, pixels)?;
    let truth = EyeGroundTruth {
        center_x,
        center_y,
        pupil_radius,
        iris_radius,
    };
    Ok((image, truth))
}
