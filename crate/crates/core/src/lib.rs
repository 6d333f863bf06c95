//! Multi-view brick-assembly toolkit.
//!
//! The crate covers the full synthetic pipeline for brick-assembly scenes:
//!
//! 1. [`scenegen`] builds CLEVR-style (gravity-settled) and LEGO-style
//!    (stud-connected) scenes with ground-truth support graphs, then
//!    annotates them with per-view keypoints, masks, and visibility.
//! 2. [`stub`] converts annotations into noisy detections, standing in for
//!    a learned perception front end.
//! 3. [`triangulate`] recovers each brick's 3D position and yaw from
//!    confidence-gated multi-view detections by minimizing the summed
//!    point-to-ray distance.
//! 4. [`relgcn`] is a small trainable message-passing network (manual
//!    gradients) that predicts the brick relation graph.
//! 5. [`planner`] turns edge probabilities into a DAG and an executable
//!    assembly order.
//! 6. [`metrics`] matches predictions to ground truth (Hungarian) and
//!    computes the per-step / per-scene metric suite including the CCA
//!    distribution.
//!
//! All randomness flows through explicit seeded RNGs; identical seeds give
//! bit-identical artifacts.

pub mod geometry;
pub mod metrics;
pub mod model;
pub mod planner;
pub mod relgcn;
pub mod scenegen;
pub mod stub;
pub mod triangulate;

mod poly;

pub use model::{
    BrickInstance, BrickShape, BrickTexture, Camera, Library, MetricsReport, Pose3, PredictionSet,
    RelationGraph, Scene, ViewAnnotation,
};
