//! Ground-truth annotation and dataset statistics.

use super::GenError;
use crate::geometry::{project, rasterize_scene, view_rotation};
use crate::model::{Library, Scene, ViewAnnotation};
use nalgebra::Vector3;
use serde::{Deserialize, Serialize};

/// Fill the per-(brick, view) annotation table: keypoints from center
/// projection (absent when behind the camera or out of frame), visible
/// masks and visibility from rasterization, per-view rotations from the
/// camera azimuth convention, and `gt_confidence = visible_ratio`.
///
/// The cameras' raster-size metadata is rewritten to `resolution` so masks
/// and cameras stay consistent.
pub fn annotate(library: &Library, scene: &Scene, resolution: (u32, u32)) -> Scene {
    let mut scene = scene.clone();
    for cam in &mut scene.cameras {
        cam.height = resolution.0;
        cam.width = resolution.1;
    }
    let scene = scene;
    let mut table: Vec<Vec<ViewAnnotation>> = vec![Vec::with_capacity(scene.cameras.len()); scene.bricks.len()];
    for camera in &scene.cameras {
        let rasters = rasterize_scene(library, &scene, camera, resolution);
        for (i, brick) in scene.bricks.iter().enumerate() {
            let center = Vector3::from_column_slice(&brick.pose.position);
            let keypoint = project(camera, center)
                .ok()
                .map(|(u, v, _)| [u, v])
                .filter(|[u, v]| (0.0..=1.0).contains(u) && (0.0..=1.0).contains(v));
            table[i].push(ViewAnnotation {
                keypoint,
                view_rotation: view_rotation(camera, brick.pose.yaw),
                mask: rasters[i].mask.clone(),
                visible_ratio: rasters[i].visible_ratio,
                gt_confidence: rasters[i].visible_ratio,
            });
        }
    }
    Scene { annotations: Some(table), ..scene }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct DatasetStats {
    pub scenes: usize,
    pub mean_brick_count: f64,
    /// Mean visible ratio over every (scene, brick, view).
    pub mean_visibility: f64,
    /// Mean over scenes of the vertex count of the longest support path.
    pub mean_graph_depth: f64,
}

/// Aggregate statistics over an annotated dataset.
pub fn dataset_stats(scenes: &[Scene]) -> Result<DatasetStats, GenError> {
    if scenes.is_empty() {
        return Err(GenError::EmptyDataset);
    }
    let mut brick_sum = 0usize;
    let mut vis_sum = 0.0;
    let mut vis_count = 0usize;
    let mut depth_sum = 0usize;
    for (idx, scene) in scenes.iter().enumerate() {
        brick_sum += scene.bricks.len();
        let table = scene.annotations.as_ref().ok_or(GenError::MissingAnnotations { scene: idx })?;
        for row in table {
            for ann in row {
                vis_sum += ann.visible_ratio;
                vis_count += 1;
            }
        }
        depth_sum += graph_depth(scene.bricks.len(), &scene.support_edges);
    }
    Ok(DatasetStats {
        scenes: scenes.len(),
        mean_brick_count: brick_sum as f64 / scenes.len() as f64,
        mean_visibility: if vis_count == 0 { 0.0 } else { vis_sum / vis_count as f64 },
        mean_graph_depth: depth_sum as f64 / scenes.len() as f64,
    })
}

/// Number of vertices on the longest directed path of the support DAG
/// (1 for an edgeless scene). Edges always point from earlier to later
/// placement indices, so a single forward sweep suffices.
pub fn graph_depth(n: usize, edges: &[[usize; 2]]) -> usize {
    if n == 0 {
        return 0;
    }
    let mut depth = vec![1usize; n];
    let mut sorted: Vec<[usize; 2]> = edges.to_vec();
    sorted.sort_unstable();
    for &[i, j] in &sorted {
        if i < n && j < n {
            depth[j] = depth[j].max(depth[i] + 1);
        }
    }
    depth.into_iter().max().unwrap_or(0)
}
