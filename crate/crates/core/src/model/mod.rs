//! Core domain types shared by every stage of the pipeline.
//!
//! All types serialize to plain JSON (documented field-by-field under
//! `docs/formats/`) and are immutable values after construction, so they can
//! be shared freely across parallel scene workers.

mod library;
mod rle;
mod validate;

pub use library::{clevr_library, lego_library, resolve_library};
pub use rle::RleMask;
pub use validate::{validate_library, validate_scene, Violation};

use serde::{Deserialize, Serialize};

pub const TAU: f64 = std::f64::consts::TAU;

/// Yaw symmetry of a brick shape about the vertical axis.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SymmetryOrder {
    #[serde(rename = "1")]
    One,
    #[serde(rename = "2")]
    Two,
    #[serde(rename = "4")]
    Four,
    Continuous,
}

impl SymmetryOrder {
    /// The size of the fundamental yaw interval, or `None` for continuous
    /// symmetry (every yaw is equivalent).
    pub fn period(self) -> Option<f64> {
        match self {
            SymmetryOrder::One => Some(TAU),
            SymmetryOrder::Two => Some(TAU / 2.0),
            SymmetryOrder::Four => Some(TAU / 4.0),
            SymmetryOrder::Continuous => None,
        }
    }

    /// Smallest angular distance between two yaws modulo this symmetry.
    pub fn yaw_distance(self, a: f64, b: f64) -> f64 {
        match self.period() {
            None => 0.0,
            Some(p) => {
                let d = (a - b).rem_euclid(p);
                d.min(p - d)
            }
        }
    }
}

/// One shape from the brick library. The point cloud samples the surface of
/// the solid in the brick-local frame (origin at the bounding-volume center);
/// the footprint is the horizontal cross-section used for contact, collision,
/// and stability tests.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrickShape {
    pub id: u32,
    pub name: String,
    pub footprint: Vec<[f64; 2]>,
    pub height: f64,
    pub point_cloud: Vec<[f64; 3]>,
    pub symmetry_order: SymmetryOrder,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stud_top: Option<Vec<[i32; 2]>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub socket_bottom: Option<Vec<[i32; 2]>>,
}

pub const POINT_CLOUD_SIZE: usize = 1024;

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrickTexture {
    pub id: u32,
    pub name: String,
    pub rgb: [f64; 3],
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Library {
    pub shapes: Vec<BrickShape>,
    pub textures: Vec<BrickTexture>,
}

impl Library {
    pub fn shape(&self, id: u32) -> Option<&BrickShape> {
        self.shapes.iter().find(|s| s.id == id)
    }

    pub fn texture(&self, id: u32) -> Option<&BrickTexture> {
        self.textures.iter().find(|t| t.id == id)
    }

    /// Index of a shape id within `shapes` (used for one-hot features).
    pub fn shape_index(&self, id: u32) -> Option<usize> {
        self.shapes.iter().position(|s| s.id == id)
    }

    pub fn texture_index(&self, id: u32) -> Option<usize> {
        self.textures.iter().position(|t| t.id == id)
    }

    /// Number of distinct brick categories (shape x texture).
    pub fn category_count(&self) -> usize {
        self.shapes.len() * self.textures.len()
    }
}

/// World pose: position of the bounding-volume center plus yaw about +z.
/// The world frame has z up with the ground plane at z = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Pose3 {
    pub position: [f64; 3],
    pub yaw: f64,
}

impl Pose3 {
    pub fn new(position: [f64; 3], yaw: f64) -> Self {
        Pose3 { position, yaw: yaw.rem_euclid(TAU) }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BrickInstance {
    pub shape_id: u32,
    pub texture_id: u32,
    pub pose: Pose3,
}

/// Pinhole camera. `rotation` is the world-to-camera rotation (row-major),
/// `translation` the world-to-camera offset: `p_cam = R p_world + t`.
/// Intrinsics are expressed in normalized image coordinates, so a projected
/// point lands in [0,1]^2 when visible; `width`/`height` give the raster
/// size used for mask annotations.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Camera {
    pub rotation: [[f64; 3]; 3],
    pub translation: [f64; 3],
    pub fx: f64,
    pub fy: f64,
    pub cx: f64,
    pub cy: f64,
    pub width: u32,
    pub height: u32,
}

/// Per (brick, view) ground-truth annotation. `keypoint` is the projection
/// of the brick center (absent when behind the camera); `mask` is the
/// occlusion-aware visible mask at the camera's raster size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewAnnotation {
    pub keypoint: Option<[f64; 2]>,
    pub view_rotation: f64,
    pub mask: RleMask,
    pub visible_ratio: f64,
    pub gt_confidence: f64,
}

/// A generated scene: bricks in placement order, the direct-support DAG,
/// cameras, and (once annotated) the per-brick per-view annotation table
/// indexed `annotations[brick][view]`.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Scene {
    pub library_ref: String,
    pub bricks: Vec<BrickInstance>,
    pub support_edges: Vec<[usize; 2]>,
    pub cameras: Vec<Camera>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub annotations: Option<Vec<Vec<ViewAnnotation>>>,
}

impl Scene {
    pub fn brick_count(&self) -> usize {
        self.bricks.len()
    }
}

/// Relation graph over `n` bricks: the full edge-probability matrix
/// (row-major, `probs[i * n + j]` for edge i -> j, diagonal ignored) plus
/// the set of accepted directed edges.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct RelationGraph {
    pub n: usize,
    pub probs: Vec<f64>,
    pub accepted: Vec<[usize; 2]>,
}

impl RelationGraph {
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.probs[i * self.n + j]
    }
}

/// One detected brick with its per-view evidence and, once solved, the
/// recovered world pose.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedBrick {
    pub shape_id: u32,
    pub texture_id: u32,
    pub views: Vec<PredictedView>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pose: Option<Pose3>,
}

/// Per-view detection: keypoint, in-view rotation as a (sin, cos) pair,
/// mask, and confidence. The pair is normalized to unit length before any
/// angle is extracted from it.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictedView {
    pub keypoint: Option<[f64; 2]>,
    pub rot_sincos: [f64; 2],
    pub mask: RleMask,
    pub confidence: f64,
}

impl PredictedView {
    /// View rotation angle in [0, 2pi), from the normalized (sin, cos) pair.
    pub fn view_rotation(&self) -> f64 {
        let [s, c] = self.rot_sincos;
        let norm = (s * s + c * c).sqrt();
        if norm < 1e-12 {
            return 0.0;
        }
        (s / norm).atan2(c / norm).rem_euclid(TAU)
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PredictionSet {
    pub predicted_count: usize,
    pub bricks: Vec<PredictedBrick>,
}

/// Aggregated evaluation results. Rates are in [0,1]; `kps_mse` is reported
/// in units of 1e-3 x normalized squared error (see `docs/formats/report.md`);
/// `cca_histogram[k]` is the probability that a run places exactly `k`
/// leading bricks correctly.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct MetricsReport {
    pub complete_rate: f64,
    pub per_scene_acc: f64,
    pub count_acc: f64,
    pub order_cr: f64,
    pub per_step_acc: f64,
    pub pos_acc: f64,
    pub rot_acc: f64,
    pub shape_acc: f64,
    pub texture_acc: f64,
    pub miou: f64,
    pub kps_mse: f64,
    pub edge_f1: f64,
    pub cca_histogram: Vec<f64>,
}
