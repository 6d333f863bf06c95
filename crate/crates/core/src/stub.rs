//! Configurable perception simulator: converts ground-truth annotations
//! into noisy detections so the rest of the pipeline can be exercised
//! without a learned front end.
//!
//! Noise is applied per (brick, view) independently. A detection's
//! confidence follows the mask-overlap rule `IoU(perturbed, gt) *
//! visible_ratio`, which couples confidence to occlusion the same way the
//! ground-truth annotation does; with all noise at zero, `perturb` is the
//! identity on every compared field and confidences equal the visible
//! ratios.

use crate::model::{Library, PredictedBrick, PredictedView, PredictionSet, RleMask, Scene, TAU};
use rand::Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

fn default_seed() -> u64 {
    0
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct NoiseConfig {
    /// Isotropic Gaussian keypoint noise (normalized image units).
    #[serde(default)]
    pub keypoint_sigma: f64,
    /// Probability of re-labeling shape (and, independently, texture) to a
    /// uniformly random other class.
    #[serde(default)]
    pub label_flip_prob: f64,
    /// Gaussian jitter on the per-view rotation angle (radians).
    #[serde(default)]
    pub rotation_sigma: f64,
    /// Probability of flipping a view rotation to a random other quarter
    /// turn (stud-grid scenes).
    #[serde(default)]
    pub rotation_flip_prob: f64,
    /// Maximum per-axis mask translation in cells.
    #[serde(default)]
    pub mask_shift_px: u32,
    /// Probability that the predicted brick count is off by one.
    #[serde(default)]
    pub count_error_prob: f64,
    /// Probability that a (brick, view) detection is dropped entirely.
    #[serde(default)]
    pub drop_detection_prob: f64,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

impl NoiseConfig {
    pub fn noiseless(seed: u64) -> Self {
        NoiseConfig {
            keypoint_sigma: 0.0,
            label_flip_prob: 0.0,
            rotation_sigma: 0.0,
            rotation_flip_prob: 0.0,
            mask_shift_px: 0,
            count_error_prob: 0.0,
            drop_detection_prob: 0.0,
            seed,
        }
    }
}

/// Corrupt an annotated scene into a `PredictionSet`.
///
/// Draw order is fixed (bricks in placement order; per brick: shape flip,
/// texture flip, then per view: drop, keypoint, rotation, mask shift;
/// finally the count error), so a given `(scene, config, rng seed)` always
/// produces the same output.
pub fn perturb<R: Rng + ?Sized>(
    library: &Library,
    scene: &Scene,
    cfg: &NoiseConfig,
    rng: &mut R,
) -> PredictionSet {
    let annotations = scene.annotations.as_ref().expect("perturb requires an annotated scene");
    let normal_kp = Normal::new(0.0, cfg.keypoint_sigma.max(1e-300)).unwrap();
    let normal_rot = Normal::new(0.0, cfg.rotation_sigma.max(1e-300)).unwrap();

    let mut bricks: Vec<PredictedBrick> = Vec::with_capacity(scene.bricks.len());
    for (i, brick) in scene.bricks.iter().enumerate() {
        let shape_id = maybe_flip_label(
            brick.shape_id,
            library.shapes.iter().map(|s| s.id),
            cfg.label_flip_prob,
            rng,
        );
        let texture_id = maybe_flip_label(
            brick.texture_id,
            library.textures.iter().map(|t| t.id),
            cfg.label_flip_prob,
            rng,
        );
        let mut views = Vec::with_capacity(scene.cameras.len());
        for ann in &annotations[i] {
            if cfg.drop_detection_prob > 0.0 && rng.random::<f64>() < cfg.drop_detection_prob {
                views.push(PredictedView {
                    keypoint: None,
                    rot_sincos: [0.0, 1.0],
                    mask: RleMask::empty(ann.mask.width, ann.mask.height),
                    confidence: 0.0,
                });
                continue;
            }
            let keypoint = ann.keypoint.map(|[u, v]| {
                if cfg.keypoint_sigma > 0.0 {
                    [
                        (u + normal_kp.sample(rng)).clamp(0.0, 1.0),
                        (v + normal_kp.sample(rng)).clamp(0.0, 1.0),
                    ]
                } else {
                    [u, v]
                }
            });
            let mut rot = ann.view_rotation;
            if cfg.rotation_sigma > 0.0 {
                rot += normal_rot.sample(rng);
            }
            if cfg.rotation_flip_prob > 0.0 && rng.random::<f64>() < cfg.rotation_flip_prob {
                let quarter = TAU / 4.0;
                let class = ((rot / quarter).round() as i64).rem_euclid(4);
                let other = (class + rng.random_range(1..4)) % 4;
                rot = other as f64 * quarter;
            }
            rot = rot.rem_euclid(TAU);
            let mask = if cfg.mask_shift_px > 0 {
                let m = cfg.mask_shift_px as i32;
                let dx = rng.random_range(-m..=m);
                let dy = rng.random_range(-m..=m);
                ann.mask.shifted(dx, dy)
            } else {
                ann.mask.clone()
            };
            let confidence = mask.iou(&ann.mask) * ann.visible_ratio;
            views.push(PredictedView { keypoint, rot_sincos: [rot.sin(), rot.cos()], mask, confidence });
        }
        bricks.push(PredictedBrick { shape_id, texture_id, views, pose: None });
    }

    if cfg.count_error_prob > 0.0 && rng.random::<f64>() < cfg.count_error_prob && !bricks.is_empty() {
        if rng.random::<bool>() && bricks.len() > 1 {
            let victim = rng.random_range(0..bricks.len());
            bricks.remove(victim);
        } else {
            let copied = bricks[rng.random_range(0..bricks.len())].clone();
            bricks.push(copied);
        }
    }

    PredictionSet { predicted_count: bricks.len(), bricks }
}

fn maybe_flip_label<R: Rng + ?Sized>(
    current: u32,
    pool: impl Iterator<Item = u32>,
    prob: f64,
    rng: &mut R,
) -> u32 {
    if prob <= 0.0 {
        return current;
    }
    let flip = rng.random::<f64>() < prob;
    if !flip {
        return current;
    }
    let others: Vec<u32> = pool.filter(|&id| id != current).collect();
    if others.is_empty() {
        current
    } else {
        others[rng.random_range(0..others.len())]
    }
}
