//! Point-splat rasterization with a global z-buffer.
//!
//! Each transformed point-cloud point covers exactly one raster cell. A
//! brick's full mask is its own splat ignoring every other brick; its
//! visible mask is the set of cells it wins in the shared depth buffer.
//! Ties are broken deterministically by (depth, brick index, point index).

use crate::model::{Camera, Library, RleMask, Scene};
use crate::geometry;
use nalgebra::Vector3;

/// Per-brick rasterization result for one view.
#[derive(Debug, Clone)]
pub struct BrickRaster {
    /// Occlusion-aware visible mask.
    pub mask: RleMask,
    /// |visible cells| / |full-splat cells|; 0 when the full splat is empty.
    pub visible_ratio: f64,
}

/// Splat every brick of `scene` into `camera` at `(height, width)` cells.
pub fn rasterize_scene(
    library: &Library,
    scene: &Scene,
    camera: &Camera,
    resolution: (u32, u32),
) -> Vec<BrickRaster> {
    let (h, w) = resolution;
    let cells = (h * w) as usize;
    let n = scene.bricks.len();

    // Global winner per cell: (depth, brick, point).
    let mut winner: Vec<Option<(f64, usize, usize)>> = vec![None; cells];
    let mut full: Vec<Vec<bool>> = vec![vec![false; cells]; n];

    for (b, brick) in scene.bricks.iter().enumerate() {
        let Some(shape) = library.shape(brick.shape_id) else { continue };
        let (s, c) = brick.pose.yaw.sin_cos();
        let [px, py, pz] = brick.pose.position;
        for (p, pt) in shape.point_cloud.iter().enumerate() {
            let world = Vector3::new(
                c * pt[0] - s * pt[1] + px,
                s * pt[0] + c * pt[1] + py,
                pt[2] + pz,
            );
            let Ok((u, v, depth)) = geometry::project(camera, world) else { continue };
            if !(0.0..1.0).contains(&u) || !(0.0..1.0).contains(&v) {
                continue;
            }
            let col = ((u * w as f64) as u32).min(w - 1) as usize;
            let row = ((v * h as f64) as u32).min(h - 1) as usize;
            let cell = row * w as usize + col;
            full[b][cell] = true;
            let cand = (depth, b, p);
            let better = match winner[cell] {
                None => true,
                Some(cur) => cand.0 < cur.0 || (cand.0 == cur.0 && (cand.1, cand.2) < (cur.1, cur.2)),
            };
            if better {
                winner[cell] = Some(cand);
            }
        }
    }

    let mut visible: Vec<Vec<bool>> = vec![vec![false; cells]; n];
    for (cell, win) in winner.iter().enumerate() {
        if let Some((_, b, _)) = win {
            visible[*b][cell] = true;
        }
    }

    (0..n)
        .map(|b| {
            let full_count = full[b].iter().filter(|&&x| x).count();
            let vis_count = visible[b].iter().filter(|&&x| x).count();
            let ratio = if full_count == 0 { 0.0 } else { vis_count as f64 / full_count as f64 };
            BrickRaster { mask: RleMask::encode(w, h, &visible[b]), visible_ratio: ratio }
        })
        .collect()
}
