//! Pinhole projection, keypoint-ray unprojection, camera sampling, and mask
//! rasterization.
//!
//! Conventions: world frame has z up and the ground plane at z = 0; camera
//! frame has x right, y down, z forward (`p_cam = R p_world + t`). Image
//! coordinates are normalized to [0,1] x [0,1] with (0,0) at the top-left.

mod raster;

pub use raster::{rasterize_scene, BrickRaster};

use crate::model::{Camera, TAU};
use nalgebra::{Matrix3, Vector3};
use rand::Rng;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum GeometryError {
    #[error("point is behind the camera")]
    BehindCamera,
}

/// Half-line in world space. `direction` is kept at unit length.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Ray {
    pub origin: Vector3<f64>,
    pub direction: Vector3<f64>,
}

impl Ray {
    pub fn new(origin: Vector3<f64>, direction: Vector3<f64>) -> Self {
        Ray { origin, direction: direction.normalize() }
    }
}

/// Default annotation raster side (square images).
pub const DEFAULT_RESOLUTION: u32 = 224;
/// Default normalized focal length; keeps the whole working area in frame
/// for cameras at the sampling distance below.
pub const DEFAULT_FOCAL: f64 = 0.6;
/// Default camera ring distance from the origin.
pub const DEFAULT_CAMERA_DISTANCE: f64 = 12.0;
/// Default radius of the per-camera position jitter ball.
pub const DEFAULT_CAMERA_JITTER: f64 = 1.5;

impl Camera {
    pub fn rotation_matrix(&self) -> Matrix3<f64> {
        Matrix3::from_fn(|i, j| self.rotation[i][j])
    }

    pub fn translation_vector(&self) -> Vector3<f64> {
        Vector3::from_column_slice(&self.translation)
    }

    /// Camera center in world coordinates.
    pub fn position(&self) -> Vector3<f64> {
        -(self.rotation_matrix().transpose() * self.translation_vector())
    }

    /// Azimuth of the camera center about the world z axis, in [0, 2pi).
    /// This is the reference angle for per-view rotations.
    pub fn azimuth(&self) -> f64 {
        let p = self.position();
        p.y.atan2(p.x).rem_euclid(TAU)
    }
}

/// Project a world point through a camera.
///
/// Returns normalized image coordinates and the camera-frame depth; fails
/// with [`GeometryError::BehindCamera`] when the depth is non-positive.
pub fn project(camera: &Camera, point: Vector3<f64>) -> Result<(f64, f64, f64), GeometryError> {
    let pc = camera.rotation_matrix() * point + camera.translation_vector();
    if pc.z <= 0.0 {
        return Err(GeometryError::BehindCamera);
    }
    let u = camera.cx + camera.fx * pc.x / pc.z;
    let v = camera.cy + camera.fy * pc.y / pc.z;
    Ok((u, v, pc.z))
}

/// Back-project a normalized keypoint into a world ray.
///
/// The ray passes through the world images of the pixel's camera-frame
/// back-projections at depths -1 and +1, oriented toward positive depth.
pub fn keypoint_ray(camera: &Camera, keypoint: [f64; 2]) -> Ray {
    let dx = (keypoint[0] - camera.cx) / camera.fx;
    let dy = (keypoint[1] - camera.cy) / camera.fy;
    let rt = camera.rotation_matrix().transpose();
    let t = camera.translation_vector();
    let near = rt * (Vector3::new(-dx, -dy, -1.0) - t);
    let far = rt * (Vector3::new(dx, dy, 1.0) - t);
    Ray::new(near, far - near)
}

/// Map world yaw to the per-view rotation annotation for this camera:
/// `(yaw - azimuth) mod 2pi`.
pub fn view_rotation(camera: &Camera, yaw: f64) -> f64 {
    (yaw - camera.azimuth()).rem_euclid(TAU)
}

/// Build a camera at `position` looking at `target` with world-up roll.
pub fn look_at_camera(position: Vector3<f64>, target: Vector3<f64>, resolution: u32) -> Camera {
    let forward = (target - position).normalize();
    let up = Vector3::new(0.0, 0.0, 1.0);
    let mut right = forward.cross(&up);
    if right.norm() < 1e-9 {
        // Looking straight up/down: pick an arbitrary horizontal right axis.
        right = Vector3::new(1.0, 0.0, 0.0);
    }
    let right = right.normalize();
    let down = forward.cross(&right);
    let r = Matrix3::from_rows(&[right.transpose(), down.transpose(), forward.transpose()]);
    let t = -(r * position);
    Camera {
        rotation: [
            [r[(0, 0)], r[(0, 1)], r[(0, 2)]],
            [r[(1, 0)], r[(1, 1)], r[(1, 2)]],
            [r[(2, 0)], r[(2, 1)], r[(2, 2)]],
        ],
        translation: [t.x, t.y, t.z],
        fx: DEFAULT_FOCAL,
        fy: DEFAULT_FOCAL,
        cx: 0.5,
        cy: 0.5,
        width: resolution,
        height: resolution,
    }
}

/// Sample `k` ring cameras around the origin.
///
/// Camera `i` sits near azimuth `90 * (i+1)` degrees (uniform +/-30 degree
/// band) at elevation 45 +/- 15 degrees and the given distance, with its
/// position jittered inside a ball of `jitter_radius`. Every camera looks
/// at the origin.
pub fn sample_cameras<R: Rng + ?Sized>(
    rng: &mut R,
    k: usize,
    distance: f64,
    jitter_radius: f64,
) -> Vec<Camera> {
    (0..k)
        .map(|i| {
            let az = (90.0 * (i as f64 + 1.0) + rng.random_range(-30.0..30.0)).to_radians();
            let el = (45.0 + rng.random_range(-15.0f64..15.0)).to_radians();
            let base = Vector3::new(
                distance * el.cos() * az.cos(),
                distance * el.cos() * az.sin(),
                distance * el.sin(),
            );
            let jitter = if jitter_radius > 0.0 {
                loop {
                    let v = Vector3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    );
                    if v.norm_squared() <= 1.0 {
                        break v * jitter_radius;
                    }
                }
            } else {
                Vector3::zeros()
            };
            look_at_camera(base + jitter, Vector3::zeros(), DEFAULT_RESOLUTION)
        })
        .collect()
}
