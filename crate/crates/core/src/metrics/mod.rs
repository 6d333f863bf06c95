//! Prediction-to-ground-truth matching and the evaluation metric suite.
//!
//! Per-step rates use the ground-truth brick count as denominator, so
//! unmatched predictions (count errors) register as failures. `kps_mse` is
//! reported in units of 1e-3 x normalized squared error. Per-scene rates
//! derive from the correct prefix of each executed plan; CCA is the
//! distribution of those prefix lengths.

mod hungarian;

pub use hungarian::{hungarian, Assignment};

use crate::model::{
    BrickInstance, Library, MetricsReport, PredictedBrick, PredictionSet, RelationGraph, Scene,
    ViewAnnotation,
};
use crate::planner::{execute_plan, prefix_len, StepTolerances};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("assignment does not cover the prediction set")]
    MissingAssignment,
    #[error("no data to aggregate")]
    EmptyInput,
}

/// Matching cost between one predicted brick and one ground-truth brick:
/// label mismatches cost 1 each, plus the mean per-view keypoint distance
/// (views where the ground truth has a keypoint; a missing predicted
/// keypoint costs the unit-square diagonal), plus 0.1 x position error
/// when a pose was recovered.
pub fn match_cost(pred: &PredictedBrick, gt: &BrickInstance, gt_views: &[ViewAnnotation]) -> f64 {
    let mut cost = 0.0;
    if pred.shape_id != gt.shape_id {
        cost += 1.0;
    }
    if pred.texture_id != gt.texture_id {
        cost += 1.0;
    }
    let mut kp_sum = 0.0;
    let mut kp_terms = 0usize;
    for (v, ann) in gt_views.iter().enumerate() {
        let Some([gu, gv]) = ann.keypoint else { continue };
        kp_terms += 1;
        match pred.views.get(v).and_then(|pv| pv.keypoint) {
            Some([pu, pvv]) => kp_sum += ((pu - gu).powi(2) + (pvv - gv).powi(2)).sqrt(),
            None => kp_sum += std::f64::consts::SQRT_2,
        }
    }
    if kp_terms > 0 {
        cost += kp_sum / kp_terms as f64;
    }
    if let Some(pose) = &pred.pose {
        let d = ((pose.position[0] - gt.pose.position[0]).powi(2)
            + (pose.position[1] - gt.pose.position[1]).powi(2)
            + (pose.position[2] - gt.pose.position[2]).powi(2))
        .sqrt();
        cost += 0.1 * d;
    }
    cost
}

/// Hungarian matching of a prediction set against an annotated scene.
pub fn match_predictions(preds: &PredictionSet, scene: &Scene) -> Assignment {
    let table = scene.annotations.as_ref().expect("matching requires an annotated scene");
    let cost: Vec<Vec<f64>> = preds
        .bricks
        .iter()
        .map(|p| {
            scene
                .bricks
                .iter()
                .zip(table)
                .map(|(g, views)| match_cost(p, g, views))
                .collect()
        })
        .collect();
    hungarian(&cost)
}

/// Micro-aggregable per-step counters for one scene.
#[derive(Debug, Clone, Default)]
pub struct StepTally {
    pub gt_bricks: usize,
    pub pos_pass: usize,
    pub rot_pass: usize,
    pub shape_pass: usize,
    pub texture_pass: usize,
    pub all_pass: usize,
    pub kps_se_sum: f64,
    pub kps_terms: usize,
    pub iou_sum: f64,
    pub iou_terms: usize,
    pub edge_tp: usize,
    pub edge_fp: usize,
    pub edge_fn: usize,
}

impl StepTally {
    pub fn merge(&mut self, other: &StepTally) {
        self.gt_bricks += other.gt_bricks;
        self.pos_pass += other.pos_pass;
        self.rot_pass += other.rot_pass;
        self.shape_pass += other.shape_pass;
        self.texture_pass += other.texture_pass;
        self.all_pass += other.all_pass;
        self.kps_se_sum += other.kps_se_sum;
        self.kps_terms += other.kps_terms;
        self.iou_sum += other.iou_sum;
        self.iou_terms += other.iou_terms;
        self.edge_tp += other.edge_tp;
        self.edge_fp += other.edge_fp;
        self.edge_fn += other.edge_fn;
    }

    pub fn edge_f1(&self) -> f64 {
        let denom = 2 * self.edge_tp + self.edge_fp + self.edge_fn;
        if denom == 0 {
            1.0 // both graphs empty
        } else {
            2.0 * self.edge_tp as f64 / denom as f64
        }
    }

    /// Kps MSE in units of 1e-3 (normalized squared error x 1000).
    pub fn kps_mse(&self) -> f64 {
        if self.kps_terms == 0 {
            0.0
        } else {
            self.kps_se_sum / self.kps_terms as f64 * 1000.0
        }
    }

    pub fn miou(&self) -> f64 {
        if self.iou_terms == 0 {
            1.0
        } else {
            self.iou_sum / self.iou_terms as f64
        }
    }
}

const WORST_KEYPOINT_SE: f64 = 2.0; // squared unit-square diagonal

/// Per-step metrics for one scene given a matching and the predicted
/// relation graph. Pose checks run modulo each shape's symmetry; unmatched
/// ground-truth bricks count as failures everywhere (worst-case keypoint
/// error, zero mask overlap).
pub fn per_step_metrics(
    preds: &PredictionSet,
    scene: &Scene,
    library: &Library,
    assignment: &Assignment,
    graph: &RelationGraph,
    tol: &StepTolerances,
) -> Result<StepTally, MetricsError> {
    if assignment.row_to_col.len() != preds.bricks.len()
        || assignment.col_to_row.len() != scene.bricks.len()
    {
        return Err(MetricsError::MissingAssignment);
    }
    let table = scene.annotations.as_ref().ok_or(MetricsError::MissingAssignment)?;
    let mut tally = StepTally { gt_bricks: scene.bricks.len(), ..StepTally::default() };

    for (g, gt) in scene.bricks.iter().enumerate() {
        let visible_views: Vec<usize> =
            (0..scene.cameras.len()).filter(|&v| table[g][v].visible_ratio > 0.0).collect();
        match assignment.col_to_row[g] {
            Some(p) => {
                let pred = &preds.bricks[p];
                let shape_ok = pred.shape_id == gt.shape_id;
                let texture_ok = pred.texture_id == gt.texture_id;
                let (pos_ok, rot_ok) = match (&pred.pose, library.shape(gt.shape_id)) {
                    (Some(pose), Some(shape)) => {
                        let dp = ((pose.position[0] - gt.pose.position[0]).powi(2)
                            + (pose.position[1] - gt.pose.position[1]).powi(2)
                            + (pose.position[2] - gt.pose.position[2]).powi(2))
                        .sqrt();
                        let dr = shape.symmetry_order.yaw_distance(pose.yaw, gt.pose.yaw);
                        if tol.exact {
                            (dp < 1e-6, dr < 1e-6)
                        } else {
                            (dp < tol.pos, dr < tol.rot)
                        }
                    }
                    _ => (false, false),
                };
                tally.pos_pass += usize::from(pos_ok);
                tally.rot_pass += usize::from(rot_ok);
                tally.shape_pass += usize::from(shape_ok);
                tally.texture_pass += usize::from(texture_ok);
                tally.all_pass += usize::from(pos_ok && rot_ok && shape_ok && texture_ok);
                for &v in &visible_views {
                    if let Some([gu, gv]) = table[g][v].keypoint {
                        tally.kps_terms += 1;
                        match pred.views.get(v).and_then(|pv| pv.keypoint) {
                            Some([pu, pvv]) => {
                                tally.kps_se_sum += (pu - gu).powi(2) + (pvv - gv).powi(2)
                            }
                            None => tally.kps_se_sum += WORST_KEYPOINT_SE,
                        }
                    }
                    tally.iou_terms += 1;
                    if let Some(pv) = pred.views.get(v) {
                        tally.iou_sum += pv.mask.iou(&table[g][v].mask);
                    }
                }
            }
            None => {
                // Unmatched ground-truth brick: worst case everywhere.
                for &v in &visible_views {
                    if table[g][v].keypoint.is_some() {
                        tally.kps_terms += 1;
                        tally.kps_se_sum += WORST_KEYPOINT_SE;
                    }
                    tally.iou_terms += 1;
                }
            }
        }
    }

    // Edge F1: predicted edges mapped through the matching.
    let gt_edges: std::collections::HashSet<[usize; 2]> = scene.support_edges.iter().copied().collect();
    let mut tp = 0usize;
    let mut fp = 0usize;
    for &[a, b] in &graph.accepted {
        match (assignment.row_to_col.get(a).copied().flatten(), assignment.row_to_col.get(b).copied().flatten()) {
            (Some(ga), Some(gb)) if gt_edges.contains(&[ga, gb]) => tp += 1,
            _ => fp += 1,
        }
    }
    tally.edge_tp = tp;
    tally.edge_fp = fp;
    tally.edge_fn = gt_edges.len() - tp;
    Ok(tally)
}

/// Per-scene execution summary.
#[derive(Debug, Clone, Copy)]
pub struct SceneExecution {
    pub n_gt: usize,
    pub predicted_count: usize,
    /// Correct steps before the first failure (full correctness).
    pub prefix_full: usize,
    /// Same prefix rule under type-only correctness.
    pub prefix_type: usize,
}

#[derive(Debug, Clone, Copy)]
pub struct PerSceneMetrics {
    pub complete_rate: f64,
    pub per_scene_acc: f64,
    pub count_acc: f64,
    pub order_cr: f64,
}

/// Aggregate per-scene rates from plan executions.
pub fn per_scene_metrics(execs: &[SceneExecution]) -> Result<PerSceneMetrics, MetricsError> {
    if execs.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let n = execs.len() as f64;
    let complete_rate = execs.iter().map(|e| e.prefix_full as f64 / e.n_gt as f64).sum::<f64>() / n;
    let per_scene_acc = execs.iter().filter(|e| e.prefix_full == e.n_gt).count() as f64 / n;
    let count_acc = execs.iter().filter(|e| e.predicted_count == e.n_gt).count() as f64 / n;
    let order_cr = execs.iter().map(|e| e.prefix_type as f64 / e.n_gt as f64).sum::<f64>() / n;
    Ok(PerSceneMetrics { complete_rate, per_scene_acc, count_acc, order_cr })
}

/// Normalized histogram of consecutive-correct prefix lengths over
/// `{0..n_max}`.
pub fn cca_distribution(prefixes: &[usize], n_max: usize) -> Result<Vec<f64>, MetricsError> {
    if prefixes.is_empty() {
        return Err(MetricsError::EmptyInput);
    }
    let mut hist = vec![0.0; n_max + 1];
    for &p in prefixes {
        hist[p.min(n_max)] += 1.0;
    }
    let total = prefixes.len() as f64;
    for h in &mut hist {
        *h /= total;
    }
    Ok(hist)
}

/// Evaluate one scene end to end: match, execute the plan, tally per-step
/// metrics. Returns the tally plus the execution summary.
pub fn evaluate_scene(
    library: &Library,
    scene: &Scene,
    preds: &PredictionSet,
    graph: &RelationGraph,
    order: &[usize],
    tol: &StepTolerances,
) -> Result<(StepTally, SceneExecution), MetricsError> {
    let assignment = match_predictions(preds, scene);
    let tally = per_step_metrics(preds, scene, library, &assignment, graph, tol)?;
    let flags = execute_plan(order, preds, scene, library, &assignment.row_to_col, tol);
    let exec = SceneExecution {
        n_gt: scene.bricks.len(),
        predicted_count: preds.predicted_count,
        prefix_full: prefix_len(&flags, true),
        prefix_type: prefix_len(&flags, false),
    };
    Ok((tally, exec))
}

/// Assemble the final report from per-scene results.
pub fn build_report(tallies: &[StepTally], execs: &[SceneExecution]) -> Result<MetricsReport, MetricsError> {
    if tallies.is_empty() || execs.len() != tallies.len() {
        return Err(MetricsError::EmptyInput);
    }
    let mut total = StepTally::default();
    for t in tallies {
        total.merge(t);
    }
    let scene = per_scene_metrics(execs)?;
    let n_max = execs.iter().map(|e| e.n_gt).max().unwrap_or(0);
    let prefixes: Vec<usize> = execs.iter().map(|e| e.prefix_full).collect();
    let cca = cca_distribution(&prefixes, n_max)?;
    let denom = total.gt_bricks.max(1) as f64;
    Ok(MetricsReport {
        complete_rate: scene.complete_rate,
        per_scene_acc: scene.per_scene_acc,
        count_acc: scene.count_acc,
        order_cr: scene.order_cr,
        per_step_acc: total.all_pass as f64 / denom,
        pos_acc: total.pos_pass as f64 / denom,
        rot_acc: total.rot_pass as f64 / denom,
        shape_acc: total.shape_pass as f64 / denom,
        texture_acc: total.texture_pass as f64 / denom,
        miou: total.miou(),
        kps_mse: total.kps_mse(),
        edge_f1: total.edge_f1(),
        cca_histogram: cca,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{clevr_library, Pose3, PredictedView, RleMask};
    use crate::planner::build_plan;
    use crate::scenegen::{annotate, generate_clevr_scene, GenConfig, Style};
    use crate::stub::{perturb, NoiseConfig};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn match_cost_cases() {
        let lib = clevr_library();
        let gt = BrickInstance { shape_id: 0, texture_id: 0, pose: Pose3::new([1.0, 0.0, 0.5], 0.0) };
        let ann = vec![ViewAnnotation {
            keypoint: Some([0.4, 0.6]),
            view_rotation: 0.0,
            mask: RleMask::empty(4, 4),
            visible_ratio: 1.0,
            gt_confidence: 1.0,
        }];
        let ident = PredictedBrick {
            shape_id: 0,
            texture_id: 0,
            views: vec![PredictedView {
                keypoint: Some([0.4, 0.6]),
                rot_sincos: [0.0, 1.0],
                mask: RleMask::empty(4, 4),
                confidence: 1.0,
            }],
            pose: Some(gt.pose),
        };
        assert_eq!(match_cost(&ident, &gt, &ann), 0.0);

        let mut tex_diff = ident.clone();
        tex_diff.texture_id = 3;
        assert_eq!(match_cost(&tex_diff, &gt, &ann), 1.0);

        // Crafted: shape+texture wrong, keypoint off by (0.3, 0.4),
        // position off by 2 -> 1 + 1 + 0.5 + 0.1*2 = 2.7.
        let mut crafted = ident.clone();
        crafted.shape_id = 1;
        crafted.texture_id = 2;
        crafted.views[0].keypoint = Some([0.7, 1.0]);
        crafted.pose = Some(Pose3::new([3.0, 0.0, 0.5], 0.0));
        assert!((match_cost(&crafted, &gt, &ann) - 2.7).abs() < 1e-12);
        let _ = lib;
    }

    #[test]
    fn cca_histogram_cases() {
        assert_eq!(cca_distribution(&[3, 3, 3], 4).unwrap(), vec![0.0, 0.0, 0.0, 1.0, 0.0]);
        let h = cca_distribution(&[0, 0, 2, 2], 3).unwrap();
        assert_eq!(h, vec![0.5, 0.0, 0.5, 0.0]);
        assert_eq!(cca_distribution(&[], 3), Err(MetricsError::EmptyInput));
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for _ in 0..20 {
            use rand::Rng;
            let prefixes: Vec<usize> = (0..30).map(|_| rng.random_range(0..9)).collect();
            let h = cca_distribution(&prefixes, 8).unwrap();
            assert!((h.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn per_scene_rates_from_prefixes() {
        // Prefixes 5/5, 2/4, 0/6.
        let execs = vec![
            SceneExecution { n_gt: 5, predicted_count: 5, prefix_full: 5, prefix_type: 5 },
            SceneExecution { n_gt: 4, predicted_count: 4, prefix_full: 2, prefix_type: 3 },
            SceneExecution { n_gt: 6, predicted_count: 5, prefix_full: 0, prefix_type: 0 },
        ];
        let m = per_scene_metrics(&execs).unwrap();
        assert!((m.complete_rate - 0.5).abs() < 1e-12);
        assert!((m.per_scene_acc - 1.0 / 3.0).abs() < 1e-12);
        assert!((m.count_acc - 2.0 / 3.0).abs() < 1e-12);
        assert!((m.order_cr - (1.0 + 0.75 + 0.0) / 3.0).abs() < 1e-12);
    }

    #[test]
    fn noiseless_scene_scores_perfectly() {
        let lib = clevr_library();
        let cfg = GenConfig::new(Style::Clevr, 31);
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        let scene = annotate(&lib, &generate_clevr_scene(&lib, &cfg, &mut rng).unwrap(), (96, 96));
        let mut nrng = ChaCha8Rng::seed_from_u64(0);
        let mut preds = perturb(&lib, &scene, &NoiseConfig::noiseless(0), &mut nrng);
        // Copy ground-truth poses (position recovery is exercised elsewhere).
        for (p, g) in preds.bricks.iter_mut().zip(&scene.bricks) {
            p.pose = Some(g.pose);
        }
        let n = scene.bricks.len();
        let graph = build_plan(&crate::planner::indicator_probs(n, &scene.support_edges), n);
        let order = crate::planner::topological_order(&graph).unwrap();
        let (tally, exec) =
            evaluate_scene(&lib, &scene, &preds, &graph, &order, &StepTolerances::default()).unwrap();
        assert_eq!(exec.prefix_full, n);
        assert_eq!(tally.all_pass, n);
        assert_eq!(tally.kps_mse(), 0.0);
        assert_eq!(tally.miou(), 1.0);
        assert_eq!(tally.edge_f1(), 1.0);
        let report = build_report(&[tally], &[exec]).unwrap();
        assert_eq!(report.complete_rate, 1.0);
        assert_eq!(report.per_step_acc, 1.0);
        // Step accuracy bound: per-step <= each component accuracy.
        assert!(report.per_step_acc <= report.pos_acc.min(report.rot_acc).min(report.shape_acc));
    }

    #[test]
    fn empty_predicted_graph_on_nonempty_gt_scores_zero_f1() {
        let tally = StepTally { edge_fn: 3, ..StepTally::default() };
        assert_eq!(tally.edge_f1(), 0.0);
    }
}
