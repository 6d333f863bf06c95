//! Graph loss: cross-entropy over every directed edge of the complete
//! graph, plus the averaged top-k head that re-weights the most confident
//! predictions.
//!
//! With `K = count_gt + 1`, the total is
//! `L = L_all + (1/K) * sum_{k=1..K} L_topk`, where `L_topk` restricts the
//! per-edge cross-entropy to the k edges of highest predicted probability
//! (ties broken by lexicographic pair order, `k` capped at the edge count).
//! An edge at descending rank r therefore carries the extra weight
//! `max(0, K - r + 1) / K` on top of its base contribution.

use super::edge_pairs;

const CLAMP: f64 = 1e-12;

/// Compute the loss and its gradient with respect to the probability
/// matrix. `probs` is row-major n x n with the diagonal ignored; the
/// returned gradient has the same layout with a zero diagonal. `count_gt`
/// is the ground-truth brick count; `pos_weight` scales the cross-entropy
/// of ground-truth-positive edges (1.0 = unbalanced).
pub fn graph_loss(
    n: usize,
    probs: &[f64],
    gt_edges: &[[usize; 2]],
    count_gt: usize,
    pos_weight: f64,
) -> (f64, Vec<f64>) {
    assert_eq!(probs.len(), n * n);
    let pairs = edge_pairs(n);
    let mut label = vec![false; n * n];
    for &[i, j] in gt_edges {
        label[i * n + j] = true;
    }

    // Descending-probability ranks; stable sort keeps lexicographic pair
    // order on ties.
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        let (ia, ja) = pairs[a];
        let (ib, jb) = pairs[b];
        probs[ib * n + jb].partial_cmp(&probs[ia * n + ja]).unwrap()
    });

    let k_e = count_gt + 1;
    let mut loss = 0.0;
    let mut grad = vec![0.0; n * n];
    for (rank0, &pair_idx) in order.iter().enumerate() {
        let (i, j) = pairs[pair_idx];
        let flat = i * n + j;
        let extra = k_e.saturating_sub(rank0) as f64 / k_e as f64; // (K - rank + 1)/K
        let class_w = if label[flat] { pos_weight } else { 1.0 };
        let w = (1.0 + extra) * class_w;
        let p = probs[flat];
        let pc = p.clamp(CLAMP, 1.0 - CLAMP);
        if label[flat] {
            loss += w * (-pc.ln());
            if p > CLAMP && p < 1.0 - CLAMP {
                grad[flat] = w * (-1.0 / pc);
            }
        } else {
            loss += w * (-(1.0 - pc).ln());
            if p > CLAMP && p < 1.0 - CLAMP {
                grad[flat] = w * (1.0 / (1.0 - pc));
            }
        }
    }
    (loss, grad)
}
