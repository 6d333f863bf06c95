//! From edge probabilities to an executable assembly plan.
//!
//! [`build_plan`] walks the directed edges of the complete graph in
//! descending probability order and accepts every edge above the 0.5
//! decision boundary that does not close a directed cycle. Vertices are
//! grounded through an implicit root: anything without an accepted
//! incoming edge counts as resting on the ground, so processing can stop at
//! the decision boundary even when the model is a forest of towers.
//! [`topological_order`] then linearizes the accepted DAG, placing the most
//! confidently supported brick first among simultaneously placeable ones.

use crate::model::{Library, PredictionSet, RelationGraph, Scene};
use crate::scenegen::{settled_bricks, CONTACT_TOL};
use crate::poly;
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum PlanError {
    #[error("graph contains a directed cycle")]
    CyclicGraph,
}

/// Probability above which an edge counts as predicted present.
pub const EDGE_DECISION_THRESHOLD: f64 = 0.5;

/// Reconstruct the ground-truth support graph from scene geometry: edge
/// `(i, j)` whenever brick `j`'s bottom face rests on brick `i`'s top face
/// with positive overlap. Generated scenes store the same edges, so this
/// doubles as an independent check of the generator.
pub fn gt_graph_from_supports(library: &Library, scene: &Scene) -> Vec<[usize; 2]> {
    let settled = settled_bricks(library, scene);
    let mut edges = Vec::new();
    for j in 0..settled.len() {
        if settled[j].z_bottom < CONTACT_TOL {
            continue; // ground brick
        }
        for i in 0..settled.len() {
            if i == j {
                continue;
            }
            if (settled[i].z_top - settled[j].z_bottom).abs() < CONTACT_TOL
                && poly::intersection_area(&settled[i].footprint, &settled[j].footprint) > 1e-9
            {
                edges.push([i, j]);
            }
        }
    }
    edges.sort_unstable();
    edges
}

/// Indicator probability matrix of an edge set (1.0 on edges, 0.0 elsewhere).
pub fn indicator_probs(n: usize, edges: &[[usize; 2]]) -> Vec<f64> {
    let mut probs = vec![0.0; n * n];
    for &[i, j] in edges {
        probs[i * n + j] = 1.0;
    }
    probs
}

/// Greedy DAG extraction from an n x n probability matrix (row-major).
///
/// Edges are processed in descending probability (ties by lexicographic
/// pair order); an edge is accepted iff it is above
/// [`EDGE_DECISION_THRESHOLD`] and creates no directed cycle with the
/// previously accepted edges. Edges at or below the threshold are the
/// model saying "absent", so processing stops there; with the implicit
/// ground root every vertex is already reachable at that point.
pub fn build_plan(probs: &[f64], n: usize) -> RelationGraph {
    assert_eq!(probs.len(), n * n);
    let mut candidates: Vec<(usize, usize)> = Vec::with_capacity(n.saturating_sub(1) * n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                candidates.push((i, j));
            }
        }
    }
    // Stable sort keeps lexicographic order among equal probabilities.
    candidates.sort_by(|&(ia, ja), &(ib, jb)| probs[ib * n + jb].partial_cmp(&probs[ia * n + ja]).unwrap());

    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut accepted = Vec::new();
    for (i, j) in candidates {
        if probs[i * n + j] <= EDGE_DECISION_THRESHOLD {
            break;
        }
        // Cycle iff j already reaches i.
        let creates_cycle = {
            let mut seen = vec![false; n];
            let mut stack = vec![j];
            seen[j] = true;
            let mut hit = false;
            while let Some(v) = stack.pop() {
                if v == i {
                    hit = true;
                    break;
                }
                for &w in &adj[v] {
                    if !seen[w] {
                        seen[w] = true;
                        stack.push(w);
                    }
                }
            }
            hit
        };
        if !creates_cycle {
            adj[i].push(j);
            accepted.push([i, j]);
        }
    }
    RelationGraph { n, probs: probs.to_vec(), accepted }
}

/// Deterministic topological order of the accepted edges. Among bricks
/// whose accepted predecessors are all placed, the one with the highest
/// maximum accepted incoming-edge probability goes first (ground bricks
/// score 0); remaining ties break by index.
pub fn topological_order(graph: &RelationGraph) -> Result<Vec<usize>, PlanError> {
    let n = graph.n;
    let mut indeg = vec![0usize; n];
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    let mut key = vec![0.0f64; n];
    for &[i, j] in &graph.accepted {
        indeg[j] += 1;
        adj[i].push(j);
        key[j] = key[j].max(graph.prob(i, j));
    }
    let mut placed = vec![false; n];
    let mut order = Vec::with_capacity(n);
    for _ in 0..n {
        let mut best: Option<usize> = None;
        for v in 0..n {
            if placed[v] || indeg[v] > 0 {
                continue;
            }
            best = match best {
                None => Some(v),
                Some(b) if key[v] > key[b] => Some(v),
                keep => keep,
            };
        }
        let Some(v) = best else { return Err(PlanError::CyclicGraph) };
        placed[v] = true;
        order.push(v);
        for &w in &adj[v] {
            indeg[w] -= 1;
        }
    }
    Ok(order)
}

/// Pose tolerances for step correctness.
#[derive(Debug, Clone, Copy)]
pub struct StepTolerances {
    /// Maximum position error in world units.
    pub pos: f64,
    /// Maximum yaw error in radians, modulo the shape's symmetry.
    pub rot: f64,
    /// Exact cell/rotation matching (stud-grid scenes).
    pub exact: bool,
}

impl Default for StepTolerances {
    fn default() -> Self {
        StepTolerances { pos: 0.25, rot: 15f64.to_radians(), exact: false }
    }
}

impl StepTolerances {
    pub fn lego() -> Self {
        StepTolerances { pos: 1e-6, rot: 1e-6, exact: true }
    }
}

/// Outcome of one plan step.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct StepFlags {
    /// Shape, texture, pose, and all support predecessors correct.
    pub full: bool,
    /// Shape, texture, and predecessors correct (pose ignored).
    pub type_only: bool,
}

/// Execute a plan against ground truth: step `s` (placing predicted brick
/// `order[s]`) is correct iff its matched ground-truth brick exists, labels
/// match, the recovered pose is within tolerance (rotation modulo the
/// shape's symmetry), and every ground-truth support predecessor was placed
/// at an earlier correct step. `pred_to_gt` maps prediction indices to
/// their matched ground-truth bricks.
pub fn execute_plan(
    order: &[usize],
    preds: &PredictionSet,
    scene: &Scene,
    library: &Library,
    pred_to_gt: &[Option<usize>],
    tol: &StepTolerances,
) -> Vec<StepFlags> {
    let n_gt = scene.bricks.len();
    let mut gt_preds: Vec<Vec<usize>> = vec![Vec::new(); n_gt];
    for &[i, j] in &scene.support_edges {
        gt_preds[j].push(i);
    }
    let mut placed_full = vec![false; n_gt];
    let mut placed_type = vec![false; n_gt];
    let mut flags = Vec::with_capacity(order.len());
    for &p in order {
        let pred = &preds.bricks[p];
        let matched = pred_to_gt.get(p).copied().flatten();
        let (full, type_only) = match matched {
            None => (false, false),
            Some(g) => {
                let gt = &scene.bricks[g];
                let labels_ok = pred.shape_id == gt.shape_id && pred.texture_id == gt.texture_id;
                let pose_ok = match (&pred.pose, library.shape(gt.shape_id)) {
                    (Some(pose), Some(shape)) => {
                        let dp = ((pose.position[0] - gt.pose.position[0]).powi(2)
                            + (pose.position[1] - gt.pose.position[1]).powi(2)
                            + (pose.position[2] - gt.pose.position[2]).powi(2))
                        .sqrt();
                        let dr = shape.symmetry_order.yaw_distance(pose.yaw, gt.pose.yaw);
                        if tol.exact {
                            dp < 1e-6 && dr < 1e-6
                        } else {
                            dp < tol.pos && dr < tol.rot
                        }
                    }
                    _ => false,
                };
                let preds_full = gt_preds[g].iter().all(|&q| placed_full[q]);
                let preds_type = gt_preds[g].iter().all(|&q| placed_type[q]);
                let full = labels_ok && pose_ok && preds_full;
                let type_only = labels_ok && preds_type;
                if full {
                    placed_full[g] = true;
                }
                if type_only {
                    placed_type[g] = true;
                }
                (full, type_only)
            }
        };
        flags.push(StepFlags { full, type_only });
    }
    flags
}

/// Length of the correct prefix: steps before the first failure.
pub fn prefix_len(flags: &[StepFlags], full: bool) -> usize {
    flags
        .iter()
        .take_while(|f| if full { f.full } else { f.type_only })
        .count()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    /// Independent straight-line simulation of the greedy extraction rule,
    /// with its own sorting and cycle test (Floyd-Warshall reachability).
    fn oracle_build(probs: &[f64], n: usize) -> Vec<[usize; 2]> {
        let mut edges: Vec<(f64, usize, usize)> = Vec::new();
        for i in 0..n {
            for j in 0..n {
                if i != j {
                    edges.push((probs[i * n + j], i, j));
                }
            }
        }
        edges.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then((a.1, a.2).cmp(&(b.1, b.2))));
        let mut reach = vec![vec![false; n]; n];
        let mut accepted = Vec::new();
        for (p, i, j) in edges {
            if p <= 0.5 {
                break;
            }
            if reach[j][i] || i == j {
                continue;
            }
            accepted.push([i, j]);
            // Recompute full transitive closure from scratch.
            for r in reach.iter_mut() {
                for c in r.iter_mut() {
                    *c = false;
                }
            }
            for &[a, b] in &accepted {
                reach[a][b] = true;
            }
            for k in 0..n {
                for a in 0..n {
                    for b in 0..n {
                        if reach[a][k] && reach[k][b] {
                            reach[a][b] = true;
                        }
                    }
                }
            }
        }
        accepted
    }

    fn is_acyclic(n: usize, edges: &[[usize; 2]]) -> bool {
        let mut indeg = vec![0usize; n];
        let mut adj = vec![Vec::new(); n];
        for &[i, j] in edges {
            indeg[j] += 1;
            adj[i].push(j);
        }
        let mut stack: Vec<usize> = (0..n).filter(|&v| indeg[v] == 0).collect();
        let mut seen = 0;
        while let Some(v) = stack.pop() {
            seen += 1;
            for &w in &adj[v] {
                indeg[w] -= 1;
                if indeg[w] == 0 {
                    stack.push(w);
                }
            }
        }
        seen == n
    }

    #[test]
    fn worked_three_brick_example() {
        // p(0,1)=0.9, p(1,0)=0.8, p(1,2)=0.7, everything else 0.1:
        // (0,1) accepted, (1,0) rejected as a cycle, (1,2) accepted, then
        // the remaining candidates are below the decision boundary.
        let n = 3;
        let mut probs = vec![0.1; 9];
        for i in 0..3 {
            probs[i * 3 + i] = 0.0;
        }
        probs[1] = 0.9;
        probs[3] = 0.8;
        probs[5] = 0.7;
        let graph = build_plan(&probs, n);
        assert_eq!(graph.accepted, vec![[0, 1], [1, 2]]);
        assert_eq!(oracle_build(&probs, n), vec![[0, 1], [1, 2]]);
    }

    #[test]
    fn single_vertex_plan_is_empty() {
        let graph = build_plan(&[0.0], 1);
        assert!(graph.accepted.is_empty());
        assert_eq!(topological_order(&graph).unwrap(), vec![0]);
    }

    #[test]
    fn greedy_trace_matches_oracle_on_random_matrices() {
        let mut rng = ChaCha8Rng::seed_from_u64(2718);
        for _ in 0..1000 {
            let n = rng.random_range(1..=8);
            let mut probs = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        probs[i * n + j] = rng.random::<f64>();
                    }
                }
            }
            let graph = build_plan(&probs, n);
            assert!(is_acyclic(n, &graph.accepted));
            assert_eq!(graph.accepted, oracle_build(&probs, n), "n={n}");
        }
    }

    #[test]
    fn indicator_of_gt_dag_is_recovered_exactly() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..200 {
            let n = rng.random_range(2..=8);
            // Random forest-ish DAG with edges i < j.
            let mut edges = Vec::new();
            for j in 1..n {
                if rng.random::<f64>() < 0.7 {
                    edges.push([rng.random_range(0..j), j]);
                    if rng.random::<f64>() < 0.3 {
                        let other = rng.random_range(0..j);
                        if !edges.contains(&[other, j]) {
                            edges.push([other, j]);
                        }
                    }
                }
            }
            let probs = indicator_probs(n, &edges);
            let graph = build_plan(&probs, n);
            let mut got = graph.accepted.clone();
            got.sort_unstable();
            let mut want = edges.clone();
            want.sort_unstable();
            assert_eq!(got, want);
            // And the emitted order respects the gt DAG.
            let order = topological_order(&graph).unwrap();
            let mut rank = vec![0usize; n];
            for (r, &v) in order.iter().enumerate() {
                rank[v] = r;
            }
            for &[i, j] in &edges {
                assert!(rank[i] < rank[j]);
            }
        }
    }

    #[test]
    fn order_prefers_confident_support_then_index() {
        // Diamond 0 -> {1,2} -> 3 with p(0,1) > p(0,2).
        let n = 4;
        let mut probs = vec![0.0; 16];
        probs[1] = 0.9; // (0,1)
        probs[2] = 0.8; // (0,2)
        probs[7] = 0.9; // (1,3)
        probs[11] = 0.9; // (2,3)
        let graph = build_plan(&probs, n);
        assert_eq!(topological_order(&graph).unwrap(), vec![0, 1, 2, 3]);
        // No edges: index order.
        let empty = build_plan(&vec![0.0; 9], 3);
        assert_eq!(topological_order(&empty).unwrap(), vec![0, 1, 2]);
    }

    #[test]
    fn emitted_orders_are_valid_topological_orders_exhaustively() {
        // For n <= 6, compare against the full set of valid topological
        // orders enumerated by backtracking.
        fn all_orders(n: usize, edges: &[[usize; 2]]) -> Vec<Vec<usize>> {
            let mut adj = vec![Vec::new(); n];
            let mut indeg = vec![0usize; n];
            for &[i, j] in edges {
                adj[i].push(j);
                indeg[j] += 1;
            }
            let mut out = Vec::new();
            let mut current = Vec::new();
            let mut used = vec![false; n];
            fn rec(
                n: usize,
                adj: &[Vec<usize>],
                indeg: &mut [usize],
                used: &mut [bool],
                current: &mut Vec<usize>,
                out: &mut Vec<Vec<usize>>,
            ) {
                if current.len() == n {
                    out.push(current.clone());
                    return;
                }
                for v in 0..n {
                    if !used[v] && indeg[v] == 0 {
                        used[v] = true;
                        for &w in &adj[v] {
                            indeg[w] -= 1;
                        }
                        current.push(v);
                        rec(n, adj, indeg, used, current, out);
                        current.pop();
                        for &w in &adj[v] {
                            indeg[w] += 1;
                        }
                        used[v] = false;
                    }
                }
            }
            rec(n, &adj, &mut indeg, &mut used, &mut current, &mut out);
            out
        }

        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..60 {
            let n = rng.random_range(2..=6);
            let mut probs = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        probs[i * n + j] = rng.random::<f64>();
                    }
                }
            }
            let graph = build_plan(&probs, n);
            let order = topological_order(&graph).unwrap();
            let valid = all_orders(n, &graph.accepted);
            assert!(valid.contains(&order), "order {order:?} invalid for {:?}", graph.accepted);
        }
    }

    proptest! {
        #[test]
        fn build_plan_output_is_always_a_dag(
            n in 1usize..8,
            values in proptest::collection::vec(0.0f64..1.0, 64),
        ) {
            let mut probs = vec![0.0; n * n];
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        probs[i * n + j] = values[i * 8 + j];
                    }
                }
            }
            let graph = build_plan(&probs, n);
            prop_assert!(is_acyclic(n, &graph.accepted));
            prop_assert!(topological_order(&graph).is_ok());
        }
    }

    #[test]
    fn cyclic_graph_is_rejected_defensively() {
        let graph = RelationGraph { n: 2, probs: vec![0.0, 0.9, 0.9, 0.0], accepted: vec![[0, 1], [1, 0]] };
        assert_eq!(topological_order(&graph), Err(PlanError::CyclicGraph));
    }

    mod execution {
        use super::super::*;
        use crate::model::{clevr_library, BrickInstance, Pose3, PredictedBrick, PredictionSet};

        /// Three-brick tower (cube, cube, 2x2x0.5 slab bridging nothing).
        fn tower_scene() -> (Library, Scene) {
            let lib = clevr_library();
            let scene = Scene {
                library_ref: "clevr".into(),
                bricks: vec![
                    BrickInstance { shape_id: 0, texture_id: 0, pose: Pose3::new([0.0, 0.0, 0.5], 0.0) },
                    BrickInstance { shape_id: 0, texture_id: 1, pose: Pose3::new([0.0, 0.0, 1.5], 0.3) },
                    BrickInstance { shape_id: 2, texture_id: 2, pose: Pose3::new([2.0, 2.0, 0.25], 0.0) },
                ],
                support_edges: vec![[0, 1]],
                cameras: vec![],
                annotations: None,
            };
            (lib, scene)
        }

        fn perfect_preds(scene: &Scene) -> PredictionSet {
            let bricks = scene
                .bricks
                .iter()
                .map(|b| PredictedBrick {
                    shape_id: b.shape_id,
                    texture_id: b.texture_id,
                    views: vec![],
                    pose: Some(b.pose),
                })
                .collect::<Vec<_>>();
            PredictionSet { predicted_count: bricks.len(), bricks }
        }

        #[test]
        fn gt_graph_reconstruction() {
            let (lib, scene) = tower_scene();
            assert_eq!(gt_graph_from_supports(&lib, &scene), vec![[0, 1]]);
            // Bridging brick resting on two supports gets both edges.
            let mut bridge = scene.clone();
            bridge.bricks = vec![
                BrickInstance { shape_id: 0, texture_id: 0, pose: Pose3::new([-0.6, 0.0, 0.5], 0.0) },
                BrickInstance { shape_id: 0, texture_id: 0, pose: Pose3::new([0.6, 0.0, 0.5], 0.0) },
                BrickInstance { shape_id: 3, texture_id: 1, pose: Pose3::new([0.0, 0.0, 1.25], 0.0) },
            ];
            assert_eq!(gt_graph_from_supports(&lib, &bridge), vec![[0, 2], [1, 2]]);
            // Bricks all on the ground: no edges.
            let mut flat = scene.clone();
            flat.bricks.truncate(1);
            flat.support_edges.clear();
            assert!(gt_graph_from_supports(&lib, &flat).is_empty());
        }

        #[test]
        fn perfect_prediction_executes_cleanly() {
            let (lib, scene) = tower_scene();
            let preds = perfect_preds(&scene);
            let map = vec![Some(0), Some(1), Some(2)];
            let flags = execute_plan(&[0, 1, 2], &preds, &scene, &lib, &map, &StepTolerances::default());
            assert!(flags.iter().all(|f| f.full && f.type_only));
            assert_eq!(prefix_len(&flags, true), 3);
        }

        #[test]
        fn top_brick_before_its_support_fails_that_step() {
            let (lib, scene) = tower_scene();
            let preds = perfect_preds(&scene);
            let map = vec![Some(0), Some(1), Some(2)];
            let flags = execute_plan(&[1, 0, 2], &preds, &scene, &lib, &map, &StepTolerances::default());
            assert!(!flags[0].full && !flags[0].type_only); // support not yet placed
            assert!(flags[1].full);
            assert_eq!(prefix_len(&flags, true), 0);
        }

        #[test]
        fn quarter_turn_counts_under_fourfold_symmetry() {
            let (lib, scene) = tower_scene();
            let mut preds = perfect_preds(&scene);
            // Cube (symmetry 4) rotated by exactly 90 degrees.
            let pose = preds.bricks[0].pose.as_mut().unwrap();
            pose.yaw = std::f64::consts::FRAC_PI_2;
            let map = vec![Some(0), Some(1), Some(2)];
            let flags = execute_plan(&[0, 1, 2], &preds, &scene, &lib, &map, &StepTolerances::default());
            assert!(flags[0].full);
        }

        #[test]
        fn unmatched_prediction_fails_both_modes() {
            let (lib, scene) = tower_scene();
            let preds = perfect_preds(&scene);
            let map = vec![None, Some(1), Some(2)];
            let flags = execute_plan(&[0, 1, 2], &preds, &scene, &lib, &map, &StepTolerances::default());
            assert!(!flags[0].full && !flags[0].type_only);
        }
    }
}
