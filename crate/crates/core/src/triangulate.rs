//! Multi-view pose recovery.
//!
//! Position is the minimizer of the summed point-to-ray distance
//! `h(Z) = sum_i d(Z, R_i)` over the confidence-selected views, found by
//! gradient descent from a linear least-squares start. The distance is
//! non-differentiable on a ray, so gradients use a Huber-smoothed variant
//! (delta = 1e-6); reported residuals always use the true distance.
//!
//! Yaw is merged across views either as a confidence-weighted circular mean
//! (continuous shapes) or by per-class confidence voting over the four
//! quarter-turn classes (stud-grid shapes).

use crate::geometry::{keypoint_ray, Ray};
use crate::model::{BrickShape, Camera, TAU};
use crate::scenegen::{feasible_poses, AssemblyState, DiscretePose};
use nalgebra::{Matrix3, Vector3};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum TriangulateError {
    #[error("need at least two rays to triangulate")]
    InsufficientViews,
    #[error("all ray pairs are closer than the minimum separation angle")]
    DegenerateGeometry,
    #[error("every view confidence is zero")]
    NoVisibleViews,
    #[error("no feasible connected pose")]
    NoFeasiblePose,
}

#[derive(Debug, Clone)]
pub struct TriangulateOptions {
    /// Reject geometry where no ray pair is separated by at least this angle.
    pub min_angle_deg: f64,
    /// Huber smoothing width used for gradients only.
    pub huber_delta: f64,
    /// First-order stopping tolerance on the smoothed gradient.
    pub grad_tol: f64,
    pub max_iters: usize,
    /// Backtracking line search: initial step, shrink factor, and the Armijo
    /// sufficient-decrease constant.
    pub init_step: f64,
    pub shrink: f64,
    pub armijo_c: f64,
    /// Center of the working volume, used by the single-ray fallback.
    pub volume_center: Vector3<f64>,
}

impl Default for TriangulateOptions {
    fn default() -> Self {
        TriangulateOptions {
            min_angle_deg: 5.0,
            huber_delta: 1e-6,
            grad_tol: 1e-8,
            max_iters: 200,
            init_step: 1.0,
            shrink: 0.5,
            armijo_c: 1e-4,
            volume_center: Vector3::new(0.0, 0.0, 1.5),
        }
    }
}

/// Shortest distance from a point to a ray's supporting line.
pub fn point_ray_distance(point: Vector3<f64>, ray: &Ray) -> f64 {
    let w = point - ray.origin;
    (w - ray.direction * w.dot(&ray.direction)).norm()
}

/// Indices of views whose confidence is strictly greater than `theta`.
pub fn select_views(confidences: &[f64], theta: f64) -> Vec<usize> {
    confidences
        .iter()
        .enumerate()
        .filter(|(_, &c)| c > theta)
        .map(|(i, _)| i)
        .collect()
}

/// Default confidence gate for view selection.
pub const DEFAULT_CONFIDENCE_THRESHOLD: f64 = 0.66;

fn objective(rays: &[Ray], z: &Vector3<f64>) -> f64 {
    rays.iter().map(|r| point_ray_distance(*z, r)).sum()
}

/// Gradient of the Huber-smoothed objective: `r_perp / max(d, delta)` per ray.
fn smoothed_gradient(rays: &[Ray], z: &Vector3<f64>, delta: f64) -> Vector3<f64> {
    let mut g = Vector3::zeros();
    for r in rays {
        let w = z - r.origin;
        let perp = w - r.direction * w.dot(&r.direction);
        let d = perp.norm();
        g += perp / d.max(delta);
    }
    g
}

/// Closed-form minimizer of the summed squared point-to-ray distance.
fn least_squares_init(rays: &[Ray]) -> Vector3<f64> {
    let mut a = Matrix3::zeros();
    let mut b = Vector3::zeros();
    for r in rays {
        let p = Matrix3::identity() - r.direction * r.direction.transpose();
        a += p;
        b += p * r.origin;
    }
    a.lu().solve(&b).unwrap_or_else(|| {
        let sum: Vector3<f64> = rays.iter().map(|r| r.origin).sum();
        sum / rays.len() as f64
    })
}

/// Minimize `h(Z) = sum_i d(Z, R_i)` and return the position with its
/// true-distance residual. Descent starts from the least-squares point and
/// only ever accepts steps that decrease the true objective, so the result
/// never exceeds the initializer's value.
pub fn triangulate(rays: &[Ray], opts: &TriangulateOptions) -> Result<(Vector3<f64>, f64), TriangulateError> {
    if rays.len() < 2 {
        return Err(TriangulateError::InsufficientViews);
    }
    let min_angle = opts.min_angle_deg.to_radians();
    let separated = (0..rays.len()).any(|i| {
        (i + 1..rays.len()).any(|j| {
            let c = rays[i].direction.dot(&rays[j].direction).abs().min(1.0);
            c.acos() >= min_angle
        })
    });
    if !separated {
        return Err(TriangulateError::DegenerateGeometry);
    }

    let mut z = least_squares_init(rays);
    let mut hz = objective(rays, &z);
    for _ in 0..opts.max_iters {
        let g = smoothed_gradient(rays, &z, opts.huber_delta);
        let gn2 = g.norm_squared();
        if gn2.sqrt() < opts.grad_tol {
            break;
        }
        let mut step = opts.init_step;
        let mut accepted = false;
        while step > 1e-18 {
            let cand = z - g * step;
            let hc = objective(rays, &cand);
            if hc <= hz - opts.armijo_c * step * gn2 {
                z = cand;
                hz = hc;
                accepted = true;
                break;
            }
            step *= opts.shrink;
        }
        if !accepted {
            break;
        }
    }
    Ok((z, objective(rays, &z)))
}

/// Result of [`recover_position`]. `low_quality` marks the single-ray
/// fallback (fewer than two usable views, or degenerate geometry).
#[derive(Debug, Clone, Copy)]
pub struct RecoveredPosition {
    pub position: Vector3<f64>,
    pub residual: f64,
    pub low_quality: bool,
}

/// Recover a brick's 3D position from per-view keypoints and confidences.
///
/// Views are gated at `theta`; selected keypoints become rays that feed
/// [`triangulate`]. With fewer than two usable rays the best-confidence
/// ray's closest point to the working-volume center is returned instead,
/// flagged low quality.
pub fn recover_position(
    keypoints: &[Option<[f64; 2]>],
    confidences: &[f64],
    cameras: &[Camera],
    theta: f64,
    opts: &TriangulateOptions,
) -> Result<RecoveredPosition, TriangulateError> {
    assert_eq!(keypoints.len(), cameras.len());
    assert_eq!(confidences.len(), cameras.len());
    if confidences.iter().all(|&c| c == 0.0) {
        return Err(TriangulateError::NoVisibleViews);
    }
    let rays: Vec<Ray> = select_views(confidences, theta)
        .into_iter()
        .filter_map(|v| keypoints[v].map(|kp| keypoint_ray(&cameras[v], kp)))
        .collect();

    let fallback = |err: TriangulateError| -> Result<RecoveredPosition, TriangulateError> {
        let best = confidences
            .iter()
            .enumerate()
            .filter(|(v, &c)| c > 0.0 && keypoints[*v].is_some())
            .max_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(v, _)| v)
            .ok_or(err)?;
        let ray = keypoint_ray(&cameras[best], keypoints[best].unwrap());
        let w = opts.volume_center - ray.origin;
        let position = ray.origin + ray.direction * w.dot(&ray.direction);
        Ok(RecoveredPosition {
            position,
            residual: point_ray_distance(position, &ray),
            low_quality: true,
        })
    };

    match triangulate(&rays, opts) {
        Ok((position, residual)) => Ok(RecoveredPosition { position, residual, low_quality: false }),
        Err(e @ (TriangulateError::InsufficientViews | TriangulateError::DegenerateGeometry)) => fallback(e),
        Err(other) => Err(other),
    }
}

fn selected_world_yaws(
    view_rotations: &[[f64; 2]],
    confidences: &[f64],
    cameras: &[Camera],
    theta: f64,
) -> Result<Vec<(f64, f64)>, TriangulateError> {
    let selected = select_views(confidences, theta);
    if selected.is_empty() {
        return Err(TriangulateError::NoVisibleViews);
    }
    Ok(selected
        .into_iter()
        .map(|v| {
            let [s, c] = view_rotations[v];
            let norm = (s * s + c * c).sqrt().max(1e-12);
            let view_rot = (s / norm).atan2(c / norm);
            ((view_rot + cameras[v].azimuth()).rem_euclid(TAU), confidences[v])
        })
        .collect())
}

/// Confidence-weighted circular mean of the per-view world yaws.
pub fn merge_rotation_continuous(
    view_rotations: &[[f64; 2]],
    confidences: &[f64],
    cameras: &[Camera],
    theta: f64,
) -> Result<f64, TriangulateError> {
    let yaws = selected_world_yaws(view_rotations, confidences, cameras, theta)?;
    let (mut sin_acc, mut cos_acc) = (0.0, 0.0);
    for (yaw, conf) in yaws {
        sin_acc += conf * yaw.sin();
        cos_acc += conf * yaw.cos();
    }
    Ok(sin_acc.atan2(cos_acc).rem_euclid(TAU))
}

/// Quarter-turn voting: each selected view's world yaw is snapped to the
/// nearest of {0, 90, 180, 270} degrees, then the class with the greatest
/// summed confidence wins (ties: greater vote count, then lower angle).
pub fn merge_rotation_discrete(
    view_rotations: &[[f64; 2]],
    confidences: &[f64],
    cameras: &[Camera],
    theta: f64,
) -> Result<f64, TriangulateError> {
    let yaws = selected_world_yaws(view_rotations, confidences, cameras, theta)?;
    let quarter = TAU / 4.0;
    let mut weight = [0.0f64; 4];
    let mut count = [0usize; 4];
    for (yaw, conf) in yaws {
        let class = ((yaw / quarter).round() as usize) % 4;
        weight[class] += conf;
        count[class] += 1;
    }
    let best = (0..4)
        .max_by(|&a, &b| {
            weight[a]
                .partial_cmp(&weight[b])
                .unwrap()
                .then(count[a].cmp(&count[b]))
                .then(b.cmp(&a)) // lower angle wins ties
        })
        .unwrap();
    Ok(best as f64 * quarter)
}

/// Snap a recovered (position, yaw) to the nearest feasible stud-grid pose:
/// candidates are ranked by position distance, then by angular distance to
/// `yaw` modulo the shape's symmetry.
pub fn snap_to_connection(
    position: Vector3<f64>,
    yaw: f64,
    state: &AssemblyState,
    shape: &BrickShape,
) -> Result<DiscretePose, TriangulateError> {
    let poses = feasible_poses(state, shape);
    poses
        .into_iter()
        .map(|p| {
            let c = p.center();
            let dp = (Vector3::new(c[0], c[1], c[2]) - position).norm();
            let da = shape.symmetry_order.yaw_distance(p.yaw(), yaw);
            (dp, da, p)
        })
        .min_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.partial_cmp(&b.1).unwrap()))
        .map(|(_, _, p)| p)
        .ok_or(TriangulateError::NoFeasiblePose)
}
