//! Invariant checks over libraries and scenes. Violations are data, not
//! errors: an empty list means the value is well-formed.

use super::{Library, Scene, POINT_CLOUD_SIZE};
use crate::poly;
use std::collections::HashSet;
use std::fmt;

/// One broken invariant, naming the offending entity.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub subject: String,
    pub rule: String,
}

impl Violation {
    fn new(subject: impl Into<String>, rule: impl Into<String>) -> Self {
        Violation { subject: subject.into(), rule: rule.into() }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: {}", self.subject, self.rule)
    }
}

pub fn validate_library(library: &Library) -> Vec<Violation> {
    let mut out = Vec::new();
    let mut shape_ids = HashSet::new();
    for shape in &library.shapes {
        let subject = format!("shape {} ({})", shape.id, shape.name);
        if !shape_ids.insert(shape.id) {
            out.push(Violation::new(&subject, "duplicate shape id"));
        }
        if shape.point_cloud.len() != POINT_CLOUD_SIZE {
            out.push(Violation::new(
                &subject,
                format!("point cloud has {} points, expected {}", shape.point_cloud.len(), POINT_CLOUD_SIZE),
            ));
        }
        if !(shape.height > 0.0) {
            out.push(Violation::new(&subject, "height must be positive"));
        }
        if !poly::is_simple(&shape.footprint) {
            out.push(Violation::new(&subject, "footprint is not a simple polygon"));
        } else if poly::area(&shape.footprint) <= 0.0 {
            out.push(Violation::new(&subject, "footprint has zero area"));
        }
    }
    let mut texture_ids = HashSet::new();
    for tex in &library.textures {
        if !texture_ids.insert(tex.id) {
            out.push(Violation::new(format!("texture {}", tex.id), "duplicate texture id"));
        }
        if tex.rgb.iter().any(|c| !(0.0..=1.0).contains(c)) {
            out.push(Violation::new(format!("texture {}", tex.id), "rgb outside [0,1]"));
        }
    }
    out
}

/// Check every scene-level invariant: id resolution, support-edge ordering
/// and acyclicity, ground support, camera orthonormality, and annotation
/// well-formedness. Library invariants are checked too, so an empty result
/// means the pair is fully consistent.
pub fn validate_scene(scene: &Scene, library: &Library) -> Vec<Violation> {
    let mut out = validate_library(library);
    let n = scene.bricks.len();

    for (i, brick) in scene.bricks.iter().enumerate() {
        if library.shape(brick.shape_id).is_none() {
            out.push(Violation::new(format!("brick {i}"), format!("unknown shape id {}", brick.shape_id)));
        }
        if library.texture(brick.texture_id).is_none() {
            out.push(Violation::new(format!("brick {i}"), format!("unknown texture id {}", brick.texture_id)));
        }
        if !(0.0..crate::model::TAU).contains(&brick.pose.yaw) {
            out.push(Violation::new(format!("brick {i}"), "yaw outside [0, 2pi)"));
        }
    }

    let mut has_incoming = vec![false; n];
    for &[i, j] in &scene.support_edges {
        let subject = format!("edge ({i},{j})");
        if i >= n || j >= n {
            out.push(Violation::new(&subject, "endpoint out of range"));
            continue;
        }
        if i >= j {
            out.push(Violation::new(&subject, "support must precede supported brick in placement order"));
        }
        has_incoming[j] = true;
    }
    if has_cycle(n, &scene.support_edges) {
        out.push(Violation::new("support graph", "support edges form a cycle"));
    }

    for (i, brick) in scene.bricks.iter().enumerate() {
        let Some(shape) = library.shape(brick.shape_id) else { continue };
        let bottom = brick.pose.position[2] - shape.height / 2.0;
        if bottom.abs() > 1e-6 && !has_incoming[i] {
            out.push(Violation::new(
                format!("brick {i}"),
                format!("floating: bottom z = {bottom:.6}, no incoming support edge"),
            ));
        }
    }

    for (k, cam) in scene.cameras.iter().enumerate() {
        let r = nalgebra::Matrix3::from_fn(|i, j| cam.rotation[i][j]);
        let err = (r * r.transpose() - nalgebra::Matrix3::identity()).norm();
        if err > 1e-9 {
            out.push(Violation::new(format!("camera {k}"), "rotation is not orthonormal"));
        } else if (r.determinant() - 1.0).abs() > 1e-9 {
            out.push(Violation::new(format!("camera {k}"), "rotation determinant is not +1"));
        }
    }

    if let Some(table) = &scene.annotations {
        if table.len() != n {
            out.push(Violation::new("annotations", "row count differs from brick count"));
        }
        for (i, row) in table.iter().enumerate() {
            if row.len() != scene.cameras.len() {
                out.push(Violation::new(format!("annotations[{i}]"), "column count differs from camera count"));
            }
            for (v, ann) in row.iter().enumerate() {
                let subject = format!("annotation ({i},{v})");
                let expected = scene.cameras.get(v).map(|c| (c.width, c.height));
                if let Some((w, h)) = expected {
                    if ann.mask.width != w || ann.mask.height != h || ann.mask.decode().is_err() {
                        out.push(Violation::new(&subject, "mask does not decode to the camera raster size"));
                    }
                }
                if !(0.0..=1.0).contains(&ann.visible_ratio) {
                    out.push(Violation::new(&subject, "visible_ratio outside [0,1]"));
                }
                if !(0.0..=1.0).contains(&ann.gt_confidence) {
                    out.push(Violation::new(&subject, "gt_confidence outside [0,1]"));
                }
            }
        }
    }

    out
}

fn has_cycle(n: usize, edges: &[[usize; 2]]) -> bool {
    let mut adj = vec![Vec::new(); n];
    let mut indeg = vec![0usize; n];
    for &[i, j] in edges {
        if i < n && j < n {
            adj[i].push(j);
            indeg[j] += 1;
        }
    }
    let mut queue: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
    let mut seen = 0;
    while let Some(v) = queue.pop() {
        seen += 1;
        for &w in &adj[v] {
            indeg[w] -= 1;
            if indeg[w] == 0 {
                queue.push(w);
            }
        }
    }
    seen != n
}
