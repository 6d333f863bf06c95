//! Training loop: Adam with decoupled weight decay over the graph loss.

use super::{backward, edge_pairs, graph_loss, message_pass, probs_to_matrix, GcnParams};
use crate::model::{Library, Pose3};
use nalgebra::{DMatrix, DVector};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("non-finite loss at epoch {epoch}, step {step} (loss = {loss})")]
    NonFiniteLoss { epoch: usize, step: usize, loss: f64 },
    #[error("training dataset is empty")]
    EmptyDataset,
}

/// Engineered per-brick features: shape one-hot, texture one-hot,
/// position / 3, and (sin yaw, cos yaw). Width is
/// `|shapes| + |textures| + 5`.
pub struct NodeFeatures;

impl NodeFeatures {
    pub fn width(library: &Library) -> usize {
        library.shapes.len() + library.textures.len() + 5
    }

    /// Feature matrix (width x n), one column per brick.
    pub fn build(library: &Library, bricks: &[(u32, u32, Pose3)]) -> DMatrix<f64> {
        let s = library.shapes.len();
        let t = library.textures.len();
        let f = Self::width(library);
        let mut m = DMatrix::zeros(f, bricks.len());
        for (col, &(shape_id, texture_id, pose)) in bricks.iter().enumerate() {
            if let Some(si) = library.shape_index(shape_id) {
                m[(si, col)] = 1.0;
            }
            if let Some(ti) = library.texture_index(texture_id) {
                m[(s + ti, col)] = 1.0;
            }
            m[(s + t, col)] = pose.position[0] / 3.0;
            m[(s + t + 1, col)] = pose.position[1] / 3.0;
            m[(s + t + 2, col)] = pose.position[2] / 3.0;
            m[(s + t + 3, col)] = pose.yaw.sin();
            m[(s + t + 4, col)] = pose.yaw.cos();
        }
        m
    }
}

#[derive(Debug, Clone)]
pub struct TrainSample {
    /// Feature matrix, width x n.
    pub features: DMatrix<f64>,
    pub gt_edges: Vec<[usize; 2]>,
    /// Ground-truth brick count (drives the top-k horizon).
    pub count_gt: usize,
}

#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub hidden: usize,
    pub rounds: usize,
    pub lr: f64,
    pub lr_decay: f64,
    pub weight_decay: f64,
    pub batch_size: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Cross-entropy weight on ground-truth-positive edges.
    pub pos_weight: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            hidden: 64,
            rounds: 2,
            lr: 5e-4,
            lr_decay: 0.8,
            weight_decay: 1e-3,
            batch_size: 8,
            epochs: 10,
            seed: 0,
            pos_weight: 1.0,
        }
    }
}

const BETA1: f64 = 0.9;
const BETA2: f64 = 0.999;
const ADAM_EPS: f64 = 1e-8;

/// Train on (features, gt_edges) pairs and return the parameters together
/// with the per-epoch mean loss trace. Fully deterministic for a fixed
/// config: initialization, shuffling, and updates all come from the seed.
pub fn train(dataset: &[TrainSample], cfg: &TrainConfig) -> Result<(GcnParams, Vec<f64>), TrainError> {
    if dataset.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let feature_width = dataset[0].features.nrows();
    let mut params = GcnParams::init(feature_width, cfg.hidden, cfg.rounds, cfg.seed);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x7261_6E64_5F73_6875); // distinct shuffle stream

    let tensors = params.tensor_count();
    let mut m: Vec<Vec<f64>> = (0..tensors).map(|t| vec![0.0; params.tensor(t).len()]).collect();
    let mut v = m.clone();
    let mut adam_t = 0u32;

    let mut epoch_losses = Vec::with_capacity(cfg.epochs);
    for epoch in 0..cfg.epochs {
        let lr = cfg.lr * cfg.lr_decay.powi(epoch as i32);
        let mut order: Vec<usize> = (0..dataset.len()).collect();
        order.shuffle(&mut rng);

        let mut loss_sum = 0.0;
        let mut loss_count = 0usize;
        for (step, batch) in order.chunks(cfg.batch_size.max(1)).enumerate() {
            let mut acc: Vec<Vec<f64>> = (0..tensors).map(|t| vec![0.0; params.tensor(t).len()]).collect();
            for &si in batch {
                let sample = &dataset[si];
                let n = sample.features.ncols();
                let fwd = message_pass(&params, &sample.features);
                let probs = probs_to_matrix(&fwd);
                let (loss, dmat) = graph_loss(n, &probs, &sample.gt_edges, sample.count_gt, cfg.pos_weight);
                if !loss.is_finite() {
                    return Err(TrainError::NonFiniteLoss { epoch, step, loss });
                }
                loss_sum += loss;
                loss_count += 1;
                let pairs = edge_pairs(n);
                let dprobs = DVector::from_iterator(pairs.len(), pairs.iter().map(|&(i, j)| dmat[i * n + j]));
                let grads = backward(&params, &fwd, &dprobs);
                for t in 0..tensors {
                    for (a, g) in acc[t].iter_mut().zip(grads.tensor(t)) {
                        *a += g;
                    }
                }
            }
            let scale = 1.0 / batch.len() as f64;
            adam_t += 1;
            let bc1 = 1.0 - BETA1.powi(adam_t as i32);
            let bc2 = 1.0 - BETA2.powi(adam_t as i32);
            for t in 0..tensors {
                let theta = params.tensor_mut(t);
                for k in 0..theta.len() {
                    let g = acc[t][k] * scale;
                    m[t][k] = BETA1 * m[t][k] + (1.0 - BETA1) * g;
                    v[t][k] = BETA2 * v[t][k] + (1.0 - BETA2) * g * g;
                    let m_hat = m[t][k] / bc1;
                    let v_hat = v[t][k] / bc2;
                    theta[k] -= lr * (m_hat / (v_hat.sqrt() + ADAM_EPS)) + lr * cfg.weight_decay * theta[k];
                }
            }
        }
        epoch_losses.push(loss_sum / loss_count as f64);
    }
    Ok((params, epoch_losses))
}
