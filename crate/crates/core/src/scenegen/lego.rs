//! Stud-grid assembly: occupancy state, connection-feasible pose
//! enumeration, and LEGO-style scene generation.
//!
//! Grid conventions: cell `(x, y)` covers the unit square `[x, x+1] x
//! [y, y+1]` in world units with `x, y` in `[-half, half)`; layer `L`
//! spans `z` in `[L, L+1]`. A pose at layer `L >= 1` must mate at least one
//! bottom socket with an exposed stud of the layer below.

use super::{GenConfig, GenError};
use crate::geometry::{sample_cameras, DEFAULT_CAMERA_DISTANCE, DEFAULT_CAMERA_JITTER};
use crate::model::{BrickInstance, BrickShape, Library, Pose3, Scene, SymmetryOrder, TAU};
use rand::Rng;
use std::collections::HashMap;

/// Occupancy of a partially built stud-grid model.
#[derive(Debug, Clone)]
pub struct AssemblyState {
    half: i32,
    occupied: HashMap<(i32, i32, u32), usize>,
    max_layer: u32,
    brick_count: usize,
}

impl AssemblyState {
    pub fn new(area_half_extent: f64) -> Self {
        AssemblyState {
            half: area_half_extent.floor() as i32,
            occupied: HashMap::new(),
            max_layer: 0,
            brick_count: 0,
        }
    }

    pub fn is_empty(&self) -> bool {
        self.brick_count == 0
    }

    pub fn occupant(&self, x: i32, y: i32, layer: u32) -> Option<usize> {
        self.occupied.get(&(x, y, layer)).copied()
    }

    fn is_free(&self, x: i32, y: i32, layer: u32) -> bool {
        !self.occupied.contains_key(&(x, y, layer))
    }

    /// Claim `cells` for brick `idx`. Panics on collision, which placement
    /// code rules out beforehand.
    pub fn place(&mut self, cells: &[(i32, i32, u32)], idx: usize) {
        for &(x, y, layer) in cells {
            let prev = self.occupied.insert((x, y, layer), idx);
            assert!(prev.is_none(), "cell collision at ({x},{y},{layer})");
            self.max_layer = self.max_layer.max(layer);
        }
        self.brick_count += 1;
    }

    /// Rebuild state from a scene prefix (bricks `0..upto`).
    pub fn from_scene(library: &Library, scene: &Scene, upto: usize) -> Self {
        let mut state = AssemblyState::new(3.0);
        for (i, brick) in scene.bricks.iter().take(upto).enumerate() {
            let shape = library.shape(brick.shape_id).expect("shape id resolves");
            if let Some(pose) = DiscretePose::from_pose(shape, &brick.pose) {
                state.place(&pose.cells(), i);
            }
        }
        state
    }
}

/// A discrete stud-grid pose: anchor corner cell, layer, and quarter turns.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct DiscretePose {
    pub anchor: [i32; 2],
    pub layer: u32,
    pub quarter_turns: u8,
    /// Rotated footprint size in cells.
    pub dims: [u32; 2],
}

impl DiscretePose {
    pub fn yaw(&self) -> f64 {
        f64::from(self.quarter_turns) * TAU / 4.0
    }

    /// World position of the bounding-volume center (unit cell, unit height).
    pub fn center(&self) -> [f64; 3] {
        [
            self.anchor[0] as f64 + self.dims[0] as f64 / 2.0,
            self.anchor[1] as f64 + self.dims[1] as f64 / 2.0,
            self.layer as f64 + 0.5,
        ]
    }

    pub fn cells(&self) -> Vec<(i32, i32, u32)> {
        let mut cells = Vec::with_capacity((self.dims[0] * self.dims[1]) as usize);
        for dx in 0..self.dims[0] as i32 {
            for dy in 0..self.dims[1] as i32 {
                cells.push((self.anchor[0] + dx, self.anchor[1] + dy, self.layer));
            }
        }
        cells
    }

    /// Recover the discrete pose of a placed stud brick from its world pose.
    /// Returns `None` for poses that are off-grid beyond tolerance.
    pub fn from_pose(shape: &BrickShape, pose: &Pose3) -> Option<DiscretePose> {
        let (w, l) = grid_dims(shape)?;
        let quarter = (pose.yaw / (TAU / 4.0)).round() as i64;
        if (pose.yaw - quarter as f64 * TAU / 4.0).abs() > 1e-6 {
            return None;
        }
        let q = (quarter.rem_euclid(4)) as u8;
        let (rw, rl) = if q % 2 == 1 { (l, w) } else { (w, l) };
        let ax = pose.position[0] - rw as f64 / 2.0;
        let ay = pose.position[1] - rl as f64 / 2.0;
        let lz = pose.position[2] - 0.5;
        if (ax - ax.round()).abs() > 1e-6 || (ay - ay.round()).abs() > 1e-6 || (lz - lz.round()).abs() > 1e-6 {
            return None;
        }
        Some(DiscretePose {
            anchor: [ax.round() as i32, ay.round() as i32],
            layer: lz.round() as u32,
            quarter_turns: q,
            dims: [rw, rl],
        })
    }
}

/// Footprint size in cells, from the stud grid.
fn grid_dims(shape: &BrickShape) -> Option<(u32, u32)> {
    let studs = shape.stud_top.as_ref()?;
    let w = studs.iter().map(|s| s[0]).max()? + 1;
    let l = studs.iter().map(|s| s[1]).max()? + 1;
    Some((w as u32, l as u32))
}

/// Rotations that produce distinct cell sets under the shape's symmetry.
fn unique_quarter_turns(shape: &BrickShape) -> &'static [u8] {
    match shape.symmetry_order {
        SymmetryOrder::Four | SymmetryOrder::Continuous => &[0],
        SymmetryOrder::Two => &[0, 1],
        SymmetryOrder::One => &[0, 1, 2, 3],
    }
}

/// Enumerate every connection-feasible pose for `shape`: all (anchor, layer,
/// rotation) triples where at least one bottom socket sits on an exposed
/// stud and no cell collides. Poses equivalent under the shape's symmetry
/// appear once. An empty state yields no poses (non-base bricks must
/// connect), as does a state whose studs are all covered.
pub fn feasible_poses(state: &AssemblyState, shape: &BrickShape) -> Vec<DiscretePose> {
    let mut out = Vec::new();
    if state.is_empty() || shape.socket_bottom.is_none() {
        return out;
    }
    let Some((w, l)) = grid_dims(shape) else { return out };
    for &q in unique_quarter_turns(shape) {
        let (rw, rl) = if q % 2 == 1 { (l, w) } else { (w, l) };
        for layer in 1..=state.max_layer + 1 {
            for ax in -state.half..=(state.half - rw as i32) {
                for ay in -state.half..=(state.half - rl as i32) {
                    let mut collision = false;
                    let mut connected = false;
                    'cells: for dx in 0..rw as i32 {
                        for dy in 0..rl as i32 {
                            let (cx, cy) = (ax + dx, ay + dy);
                            if !state.is_free(cx, cy, layer) {
                                collision = true;
                                break 'cells;
                            }
                            if state.occupant(cx, cy, layer - 1).is_some() {
                                connected = true;
                            }
                        }
                    }
                    if !collision && connected {
                        out.push(DiscretePose { anchor: [ax, ay], layer, quarter_turns: q, dims: [rw, rl] });
                    }
                }
            }
        }
    }
    out
}

/// Connection-constrained generation: a random base brick, then every
/// subsequent brick drawn uniformly from its feasible pose set.
pub fn generate_lego_scene<R: Rng + ?Sized>(
    library: &Library,
    config: &GenConfig,
    rng: &mut R,
) -> Result<Scene, GenError> {
    let (lo, hi) = config.brick_count_range;
    let count = rng.random_range(lo..=hi);
    let mut state = AssemblyState::new(config.area_half_extent);
    let mut bricks = Vec::with_capacity(count);
    let mut support_edges = Vec::new();

    for step in 0..count {
        let mut ok = false;
        for _ in 0..config.max_retries {
            let shape = &library.shapes[rng.random_range(0..library.shapes.len())];
            let texture_id = library.textures[rng.random_range(0..library.textures.len())].id;
            let pose = if step == 0 {
                let Some((w, l)) = grid_dims(shape) else { continue };
                let turns = unique_quarter_turns(shape);
                let q = turns[rng.random_range(0..turns.len())];
                let (rw, rl) = if q % 2 == 1 { (l, w) } else { (w, l) };
                if rw as i32 > 2 * state.half || rl as i32 > 2 * state.half {
                    continue;
                }
                let ax = rng.random_range(-state.half..=(state.half - rw as i32));
                let ay = rng.random_range(-state.half..=(state.half - rl as i32));
                DiscretePose { anchor: [ax, ay], layer: 0, quarter_turns: q, dims: [rw, rl] }
            } else {
                let poses = feasible_poses(&state, shape);
                if poses.is_empty() {
                    continue;
                }
                poses[rng.random_range(0..poses.len())]
            };

            let cells = pose.cells();
            if step > 0 {
                let mut below: Vec<usize> = cells
                    .iter()
                    .filter_map(|&(x, y, layer)| state.occupant(x, y, layer - 1))
                    .collect();
                below.sort_unstable();
                below.dedup();
                support_edges.extend(below.into_iter().map(|b| [b, step]));
            }
            state.place(&cells, step);
            bricks.push(BrickInstance {
                shape_id: shape.id,
                texture_id,
                pose: Pose3::new(pose.center(), pose.yaw()),
            });
            ok = true;
            break;
        }
        if !ok {
            return Err(GenError::GenerationExhausted { step, retries: config.max_retries });
        }
    }

    let cameras = sample_cameras(rng, config.camera_count, DEFAULT_CAMERA_DISTANCE, DEFAULT_CAMERA_JITTER);
    Ok(Scene { library_ref: "lego".into(), bricks, support_edges, cameras, annotations: None })
}
