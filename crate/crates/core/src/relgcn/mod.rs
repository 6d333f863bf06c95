//! Trainable relation-graph predictor.
//!
//! Message passing runs on the complete directed graph over bricks: each
//! round computes an edge feature from the concatenated endpoint features
//! through a two-linear-layer MLP with ReLU, then updates every node to the
//! mean of its incoming edge features. A scoring MLP turns the final edge
//! features into edge probabilities through a sigmoid.
//!
//! Gradients are hand-derived (plain reverse accumulation over the cached
//! forward intermediates); no autodiff anywhere. [`train`] runs Adam with
//! decoupled weight decay over the graph loss in [`loss`].

mod loss;
mod params;
mod train;

pub use loss::graph_loss;
pub use params::{GcnParams, MlpBlock};
pub use train::{train, NodeFeatures, TrainConfig, TrainError, TrainSample};

use nalgebra::{DMatrix, DVector};

/// Enumeration order of the directed edges of the complete graph on `n`
/// vertices: row-major over ordered pairs `(i, j)`, diagonal skipped. This
/// is also the lexicographic tie-break order used by the loss.
pub fn edge_pairs(n: usize) -> Vec<(usize, usize)> {
    let mut pairs = Vec::with_capacity(n.saturating_sub(1) * n);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                pairs.push((i, j));
            }
        }
    }
    pairs
}

/// Index of the ordered pair `(i, j)` within [`edge_pairs`].
pub fn pair_index(n: usize, i: usize, j: usize) -> usize {
    debug_assert!(i != j);
    i * (n - 1) + j - usize::from(j > i)
}

/// Cached intermediates of one full forward pass over a scene.
pub struct Forward {
    pub n: usize,
    /// Node features before each round: `trajectory[t]` is F x n.
    pub trajectory: Vec<DMatrix<f64>>,
    /// Edge features after each round: F x E.
    pub edge_features: Vec<DMatrix<f64>>,
    /// Per-round MLP caches: concatenated inputs (2F x E) and post-ReLU
    /// hidden activations (H x E).
    inputs: Vec<DMatrix<f64>>,
    hidden: Vec<DMatrix<f64>>,
    /// Scorer caches.
    scorer_hidden: DMatrix<f64>,
    pub logits: DVector<f64>,
    /// Edge probabilities in pair order.
    pub probs: DVector<f64>,
}

fn relu_in_place(m: &mut DMatrix<f64>) {
    m.apply(|x| *x = x.max(0.0));
}

fn mlp_forward(block: &MlpBlock, input: &DMatrix<f64>) -> (DMatrix<f64>, DMatrix<f64>) {
    let mut hidden = block.w1.clone() * input;
    for mut col in hidden.column_iter_mut() {
        col += &block.b1;
    }
    relu_in_place(&mut hidden);
    let mut out = &block.w2 * &hidden;
    for mut col in out.column_iter_mut() {
        col += &block.b2;
    }
    (hidden, out)
}

/// Run the message-passing rounds, producing per-round edge features and the
/// node trajectory. With a single brick there are no edges and the node
/// features pass through unchanged.
pub fn message_pass(params: &GcnParams, features: &DMatrix<f64>) -> Forward {
    let n = features.ncols();
    let f = params.feature_width;
    assert_eq!(features.nrows(), f, "feature width mismatch");
    let pairs = edge_pairs(n);
    let e = pairs.len();

    let mut trajectory = vec![features.clone()];
    let mut edge_features = Vec::with_capacity(params.layers.len());
    let mut inputs = Vec::with_capacity(params.layers.len());
    let mut hidden = Vec::with_capacity(params.layers.len());

    for block in &params.layers {
        let p = trajectory.last().unwrap();
        let mut x = DMatrix::zeros(2 * f, e);
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            x.view_mut((0, idx), (f, 1)).copy_from(&p.column(i));
            x.view_mut((f, idx), (f, 1)).copy_from(&p.column(j));
        }
        let (h, edge) = mlp_forward(block, &x);
        // Node update: mean over incoming edges (u, i).
        let next = if n > 1 {
            let mut next = DMatrix::zeros(f, n);
            for (idx, &(_, j)) in pairs.iter().enumerate() {
                let col = edge.column(idx) / (n - 1) as f64;
                let mut dst = next.column_mut(j);
                dst += col;
            }
            next
        } else {
            p.clone()
        };
        trajectory.push(next);
        edge_features.push(edge);
        inputs.push(x);
        hidden.push(h);
    }

    let (scorer_hidden, logits_mat) = if e > 0 {
        mlp_forward(&params.scorer, edge_features.last().unwrap())
    } else {
        (DMatrix::zeros(params.hidden, 0), DMatrix::zeros(1, 0))
    };
    let logits = DVector::from_iterator(e, logits_mat.iter().copied());
    let probs = logits.map(|x| 1.0 / (1.0 + (-x).exp()));

    Forward { n, trajectory, edge_features, inputs, hidden, scorer_hidden, logits, probs }
}

/// Full forward pass to an n x n probability matrix (row-major, zero
/// diagonal). Requires `n >= 2`.
pub fn edge_probabilities(params: &GcnParams, features: &DMatrix<f64>) -> Vec<f64> {
    let n = features.ncols();
    assert!(n >= 2, "edge probabilities need at least two bricks");
    let fwd = message_pass(params, features);
    probs_to_matrix(&fwd)
}

/// Expand pair-ordered probabilities to a dense row-major n x n matrix.
pub fn probs_to_matrix(fwd: &Forward) -> Vec<f64> {
    let n = fwd.n;
    let mut m = vec![0.0; n * n];
    for (idx, &(i, j)) in edge_pairs(n).iter().enumerate() {
        m[i * n + j] = fwd.probs[idx];
    }
    m
}

/// Gradients with the same layout as [`GcnParams`].
pub struct GcnGrads {
    pub layers: Vec<MlpBlock>,
    pub scorer: MlpBlock,
}

/// Reverse pass: given dL/dprob per edge (pair order), accumulate gradients
/// for every parameter tensor.
pub fn backward(params: &GcnParams, fwd: &Forward, dprobs: &DVector<f64>) -> GcnGrads {
    let n = fwd.n;
    let f = params.feature_width;
    let pairs = edge_pairs(n);
    let e = pairs.len();
    assert_eq!(dprobs.len(), e);

    let mut grads = GcnGrads {
        layers: params.layers.iter().map(MlpBlock::zeros_like).collect(),
        scorer: MlpBlock::zeros_like(&params.scorer),
    };
    if e == 0 {
        return grads;
    }

    // Through the sigmoid.
    let dlogits = DMatrix::from_fn(1, e, |_, idx| {
        let p = fwd.probs[idx];
        dprobs[idx] * p * (1.0 - p)
    });

    // Scorer backward.
    let z = fwd.edge_features.last().unwrap();
    let mut d_edge_top = {
        let g = &mut grads.scorer;
        let h = &fwd.scorer_hidden;
        g.w2 += &dlogits * h.transpose();
        g.b2 += dlogits.column_sum();
        let mut dh = params.scorer.w2.transpose() * &dlogits;
        dh.zip_apply(h, |d, hv| {
            if hv <= 0.0 {
                *d = 0.0;
            }
        });
        g.w1 += &dh * z.transpose();
        g.b1 += dh.column_sum();
        params.scorer.w1.transpose() * dh
    };

    // Message-passing layers, top down.
    for t in (0..params.layers.len()).rev() {
        let block = &params.layers[t];
        let g = &mut grads.layers[t];
        let x = &fwd.inputs[t];
        let h = &fwd.hidden[t];

        let d_edge = d_edge_top;
        g.w2 += &d_edge * h.transpose();
        g.b2 += d_edge.column_sum();
        let mut dh = block.w2.transpose() * &d_edge;
        dh.zip_apply(h, |d, hv| {
            if hv <= 0.0 {
                *d = 0.0;
            }
        });
        g.w1 += &dh * x.transpose();
        g.b1 += dh.column_sum();
        let dx = block.w1.transpose() * dh; // 2F x E

        // Scatter back into node gradients.
        let mut d_nodes = DMatrix::zeros(f, n);
        for (idx, &(i, j)) in pairs.iter().enumerate() {
            {
                let mut ci = d_nodes.column_mut(i);
                ci += dx.view((0, idx), (f, 1));
            }
            let mut cj = d_nodes.column_mut(j);
            cj += dx.view((f, idx), (f, 1));
        }

        if t > 0 {
            // Nodes at round t are means of round-t edge features.
            let mut d_lower = DMatrix::zeros(f, e);
            for (idx, &(_, j)) in pairs.iter().enumerate() {
                let mut col = d_lower.column_mut(idx);
                col += d_nodes.column(j) / (n - 1) as f64;
            }
            d_edge_top = d_lower;
        } else {
            d_edge_top = DMatrix::zeros(f, e);
        }
    }

    grads
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn tiny_params(f: usize, hidden: usize, seed: u64) -> GcnParams {
        GcnParams::init(f, hidden, 2, seed)
    }

    #[test]
    fn single_brick_has_no_edges_and_passthrough_nodes() {
        let params = tiny_params(4, 8, 1);
        let features = DMatrix::from_column_slice(4, 1, &[0.1, 0.2, 0.3, 0.4]);
        let fwd = message_pass(&params, &features);
        assert_eq!(fwd.probs.len(), 0);
        for p in &fwd.trajectory {
            assert_eq!(p, &features);
        }
    }

    #[test]
    fn zero_params_give_zero_edges_and_half_probs() {
        let mut params = tiny_params(3, 4, 2);
        for b in params.layers.iter_mut().chain(std::iter::once(&mut params.scorer)) {
            b.w1.fill(0.0);
            b.b1.fill(0.0);
            b.w2.fill(0.0);
            b.b2.fill(0.0);
        }
        let features = DMatrix::from_fn(3, 2, |i, j| (i + j) as f64 * 0.1);
        let fwd = message_pass(&params, &features);
        for e in &fwd.edge_features {
            assert!(e.iter().all(|&x| x == 0.0));
        }
        assert!(fwd.probs.iter().all(|&p| p == 0.5));
    }

    /// Straight-line re-evaluation of the forward rules with plain loops and
    /// `Vec<f64>`, sharing nothing with the implementation above.
    fn oracle_forward(params: &GcnParams, features: &[Vec<f64>]) -> Vec<Vec<f64>> {
        let n = features.len();
        let f = params.feature_width;
        let mlp = |block: &MlpBlock, x: &[f64]| -> Vec<f64> {
            let hid = block.w1.nrows();
            let out_dim = block.w2.nrows();
            let mut h = vec![0.0; hid];
            for r in 0..hid {
                let mut acc = block.b1[r];
                for (c, xv) in x.iter().enumerate() {
                    acc += block.w1[(r, c)] * xv;
                }
                h[r] = acc.max(0.0);
            }
            let mut o = vec![0.0; out_dim];
            for r in 0..out_dim {
                let mut acc = block.b2[r];
                for (c, hv) in h.iter().enumerate() {
                    acc += block.w2[(r, c)] * hv;
                }
                o[r] = acc;
            }
            o
        };
        let mut nodes: Vec<Vec<f64>> = features.to_vec();
        let mut edges: Vec<Vec<Vec<f64>>> = vec![vec![vec![]; n]; n];
        for block in &params.layers {
            for i in 0..n {
                for j in 0..n {
                    if i == j {
                        continue;
                    }
                    let mut x = nodes[i].clone();
                    x.extend_from_slice(&nodes[j]);
                    edges[i][j] = mlp(block, &x);
                }
            }
            let mut next = vec![vec![0.0; f]; n];
            for i in 0..n {
                for u in 0..n {
                    if u == i {
                        continue;
                    }
                    for k in 0..f {
                        next[i][k] += edges[u][i][k] / (n - 1) as f64;
                    }
                }
            }
            nodes = next;
        }
        let mut probs = vec![vec![0.0; n]; n];
        for i in 0..n {
            for j in 0..n {
                if i == j {
                    continue;
                }
                let logit = mlp(&params.scorer, &edges[i][j])[0];
                probs[i][j] = 1.0 / (1.0 + (-logit).exp());
            }
        }
        probs
    }

    #[test]
    fn forward_matches_straight_line_oracle() {
        let mut rng = ChaCha8Rng::seed_from_u64(33);
        for n in [3usize, 4] {
            let f = 5;
            let params = tiny_params(f, 7, rng.random());
            let cols: Vec<Vec<f64>> =
                (0..n).map(|_| (0..f).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
            let features = DMatrix::from_fn(f, n, |r, c| cols[c][r]);
            let got = edge_probabilities(&params, &features);
            let want = oracle_forward(&params, &cols);
            for i in 0..n {
                for j in 0..n {
                    if i != j {
                        assert!(
                            (got[i * n + j] - want[i][j]).abs() < 1e-12,
                            "edge ({i},{j}): {} vs {}",
                            got[i * n + j],
                            want[i][j]
                        );
                    }
                }
            }
        }
    }

    #[test]
    fn permutation_equivariance_is_exact() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let f = 6;
        let n = 4;
        let params = tiny_params(f, 8, 9);
        let features = DMatrix::from_fn(f, n, |_, _| rng.random_range(-1.0..1.0));
        let base = edge_probabilities(&params, &features);
        let perm = [2usize, 0, 3, 1];
        let mut permuted = DMatrix::zeros(f, n);
        for (new_col, &old_col) in perm.iter().enumerate() {
            permuted.set_column(new_col, &features.column(old_col));
        }
        let got = edge_probabilities(&params, &permuted);
        for a in 0..n {
            for b in 0..n {
                if a != b {
                    // Row/col a of the permuted matrix holds original brick perm[a].
                    assert_eq!(got[a * n + b], base[perm[a] * n + perm[b]]);
                }
            }
        }
    }

    #[test]
    fn backward_matches_finite_differences_on_every_tensor() {
        let f = 8;
        let n = 3;
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let mut params = tiny_params(f, 8, 13);
        let features = DMatrix::from_fn(f, n, |_, _| rng.random_range(-1.0..1.0));
        let gt_edges = vec![[0usize, 1], [1, 2]];

        let loss_of = |p: &GcnParams| -> f64 {
            let fwd = message_pass(p, &features);
            let probs = probs_to_matrix(&fwd);
            graph_loss(n, &probs, &gt_edges, n, 1.0).0
        };

        let fwd = message_pass(&params, &features);
        let probs = probs_to_matrix(&fwd);
        let (_, dmat) = graph_loss(n, &probs, &gt_edges, n, 1.0);
        let pairs = edge_pairs(n);
        let dprobs = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(i, j)| dmat[i * n + j]));
        let grads = backward(&params, &fwd, &dprobs);

        let eps = 1e-6;
        let mut max_rel: f64 = 0.0;
        let tensors = params.layers.len() * 4 + 4;
        for t in 0..tensors {
            let numel = params.tensor(t).len();
            for k in 0..numel {
                let orig = params.tensor(t)[k];
                params.tensor_mut(t)[k] = orig + eps;
                let hi = loss_of(&params);
                params.tensor_mut(t)[k] = orig - eps;
                let lo = loss_of(&params);
                params.tensor_mut(t)[k] = orig;
                let fd = (hi - lo) / (2.0 * eps);
                let an = grads.tensor(t)[k];
                let rel = (fd - an).abs() / fd.abs().max(an.abs()).max(1e-6);
                max_rel = max_rel.max(rel);
            }
        }
        assert!(max_rel < 1e-4, "max relative error {max_rel}");
    }
}
