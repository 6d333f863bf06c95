//! Parameter container and its versioned JSON form.

use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// One linear -> ReLU -> linear block.
#[derive(Debug, Clone, PartialEq)]
pub struct MlpBlock {
    pub w1: DMatrix<f64>,
    pub b1: DVector<f64>,
    pub w2: DMatrix<f64>,
    pub b2: DVector<f64>,
}

impl MlpBlock {
    pub fn zeros_like(other: &MlpBlock) -> MlpBlock {
        MlpBlock {
            w1: DMatrix::zeros(other.w1.nrows(), other.w1.ncols()),
            b1: DVector::zeros(other.b1.len()),
            w2: DMatrix::zeros(other.w2.nrows(), other.w2.ncols()),
            b2: DVector::zeros(other.b2.len()),
        }
    }

    fn init<R: Rng + ?Sized>(input: usize, hidden: usize, output: usize, rng: &mut R) -> MlpBlock {
        let bound1 = 1.0 / (input as f64).sqrt();
        let bound2 = 1.0 / (hidden as f64).sqrt();
        MlpBlock {
            w1: DMatrix::from_fn(hidden, input, |_, _| rng.random_range(-bound1..bound1)),
            b1: DVector::from_fn(hidden, |_, _| rng.random_range(-bound1..bound1)),
            w2: DMatrix::from_fn(output, hidden, |_, _| rng.random_range(-bound2..bound2)),
            b2: DVector::from_fn(output, |_, _| rng.random_range(-bound2..bound2)),
        }
    }

    fn tensor(&self, which: usize) -> &[f64] {
        match which {
            0 => self.w1.as_slice(),
            1 => self.b1.as_slice(),
            2 => self.w2.as_slice(),
            _ => self.b2.as_slice(),
        }
    }

    fn tensor_mut(&mut self, which: usize) -> &mut [f64] {
        match which {
            0 => self.w1.as_mut_slice(),
            1 => self.b1.as_mut_slice(),
            2 => self.w2.as_mut_slice(),
            _ => self.b2.as_mut_slice(),
        }
    }
}

/// All trainable parameters: `layers.len()` message-passing blocks
/// (input 2F -> hidden -> F) plus the scoring block (F -> hidden -> 1).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(into = "GcnParamsFile", try_from = "GcnParamsFile")]
pub struct GcnParams {
    pub feature_width: usize,
    pub hidden: usize,
    pub layers: Vec<MlpBlock>,
    pub scorer: MlpBlock,
}

impl GcnParams {
    /// Seeded uniform(-1/sqrt(fan_in), 1/sqrt(fan_in)) initialization.
    pub fn init(feature_width: usize, hidden: usize, rounds: usize, seed: u64) -> GcnParams {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = (0..rounds)
            .map(|_| MlpBlock::init(2 * feature_width, hidden, feature_width, &mut rng))
            .collect();
        let scorer = MlpBlock::init(feature_width, hidden, 1, &mut rng);
        GcnParams { feature_width, hidden, layers, scorer }
    }

    /// Number of addressable parameter tensors (4 per block).
    pub fn tensor_count(&self) -> usize {
        self.layers.len() * 4 + 4
    }

    pub fn tensor(&self, idx: usize) -> &[f64] {
        let blocks = self.layers.len() * 4;
        if idx < blocks {
            self.layers[idx / 4].tensor(idx % 4)
        } else {
            self.scorer.tensor(idx - blocks)
        }
    }

    pub fn tensor_mut(&mut self, idx: usize) -> &mut [f64] {
        let blocks = self.layers.len() * 4;
        if idx < blocks {
            self.layers[idx / 4].tensor_mut(idx % 4)
        } else {
            self.scorer.tensor_mut(idx - blocks)
        }
    }
}

impl super::GcnGrads {
    pub fn tensor(&self, idx: usize) -> &[f64] {
        let blocks = self.layers.len() * 4;
        if idx < blocks {
            self.layers[idx / 4].tensor(idx % 4)
        } else {
            self.scorer.tensor(idx - blocks)
        }
    }
}

// --- wire format ---------------------------------------------------------

pub const PARAMS_FORMAT_VERSION: u32 = 1;

#[derive(Serialize, Deserialize)]
struct MatrixDef {
    rows: usize,
    cols: usize,
    /// Row-major entries.
    data: Vec<f64>,
}

impl From<&DMatrix<f64>> for MatrixDef {
    fn from(m: &DMatrix<f64>) -> Self {
        let mut data = Vec::with_capacity(m.len());
        for r in 0..m.nrows() {
            for c in 0..m.ncols() {
                data.push(m[(r, c)]);
            }
        }
        MatrixDef { rows: m.nrows(), cols: m.ncols(), data }
    }
}

impl TryFrom<MatrixDef> for DMatrix<f64> {
    type Error = String;
    fn try_from(d: MatrixDef) -> Result<Self, String> {
        if d.data.len() != d.rows * d.cols {
            return Err(format!("matrix data length {} != {}x{}", d.data.len(), d.rows, d.cols));
        }
        Ok(DMatrix::from_fn(d.rows, d.cols, |r, c| d.data[r * d.cols + c]))
    }
}

#[derive(Serialize, Deserialize)]
struct MlpBlockDef {
    w1: MatrixDef,
    b1: Vec<f64>,
    w2: MatrixDef,
    b2: Vec<f64>,
}

impl From<&MlpBlock> for MlpBlockDef {
    fn from(b: &MlpBlock) -> Self {
        MlpBlockDef {
            w1: (&b.w1).into(),
            b1: b.b1.as_slice().to_vec(),
            w2: (&b.w2).into(),
            b2: b.b2.as_slice().to_vec(),
        }
    }
}

impl TryFrom<MlpBlockDef> for MlpBlock {
    type Error = String;
    fn try_from(d: MlpBlockDef) -> Result<Self, String> {
        Ok(MlpBlock {
            w1: d.w1.try_into()?,
            b1: DVector::from_vec(d.b1),
            w2: d.w2.try_into()?,
            b2: DVector::from_vec(d.b2),
        })
    }
}

#[derive(Serialize, Deserialize)]
pub struct GcnParamsFile {
    version: u32,
    feature_width: usize,
    hidden: usize,
    layers: Vec<MlpBlockDef>,
    scorer: MlpBlockDef,
}

impl From<GcnParams> for GcnParamsFile {
    fn from(p: GcnParams) -> Self {
        GcnParamsFile {
            version: PARAMS_FORMAT_VERSION,
            feature_width: p.feature_width,
            hidden: p.hidden,
            layers: p.layers.iter().map(Into::into).collect(),
            scorer: (&p.scorer).into(),
        }
    }
}

impl TryFrom<GcnParamsFile> for GcnParams {
    type Error = String;
    fn try_from(f: GcnParamsFile) -> Result<Self, String> {
        if f.version != PARAMS_FORMAT_VERSION {
            return Err(format!("unsupported params version {}", f.version));
        }
        Ok(GcnParams {
            feature_width: f.feature_width,
            hidden: f.hidden,
            layers: f.layers.into_iter().map(TryInto::try_into).collect::<Result<_, _>>()?,
            scorer: f.scorer.try_into()?,
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn init_is_seeded_and_bounded() {
        let a = GcnParams::init(10, 16, 2, 42);
        let b = GcnParams::init(10, 16, 2, 42);
        assert_eq!(a, b);
        let c = GcnParams::init(10, 16, 2, 43);
        assert_ne!(a, c);
        let bound = 1.0 / (20f64).sqrt();
        assert!(a.layers[0].w1.iter().all(|x| x.abs() <= bound));
    }

    #[test]
    fn json_roundtrip_is_exact() {
        let p = GcnParams::init(7, 12, 2, 9);
        let text = serde_json::to_string(&p).unwrap();
        let back: GcnParams = serde_json::from_str(&text).unwrap();
        assert_eq!(p, back);
    }
}
