//! Run-length-encoded binary masks.
//!
//! Row-major encoding: `runs` holds alternating run lengths, starting with
//! the number of leading zeros (which may itself be zero). The run lengths
//! must sum to `width * height`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum RleError {
    #[error("run lengths sum to {got}, expected {expected}")]
    LengthMismatch { got: usize, expected: usize },
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RleMask {
    pub width: u32,
    pub height: u32,
    pub runs: Vec<u32>,
}

impl RleMask {
    pub fn empty(width: u32, height: u32) -> Self {
        RleMask { width, height, runs: vec![width * height] }
    }

    /// Encode a row-major bit vector of length `width * height`.
    pub fn encode(width: u32, height: u32, bits: &[bool]) -> Self {
        debug_assert_eq!(bits.len(), (width * height) as usize);
        let mut runs = Vec::new();
        let mut current = false; // encoding starts with the zero run
        let mut len: u32 = 0;
        for &b in bits {
            if b == current {
                len += 1;
            } else {
                runs.push(len);
                current = b;
                len = 1;
            }
        }
        runs.push(len);
        RleMask { width, height, runs }
    }

    pub fn decode(&self) -> Result<Vec<bool>, RleError> {
        let expected = (self.width * self.height) as usize;
        let total: usize = self.runs.iter().map(|&r| r as usize).sum();
        if total != expected {
            return Err(RleError::LengthMismatch { got: total, expected });
        }
        let mut bits = Vec::with_capacity(expected);
        let mut value = false;
        for &run in &self.runs {
            bits.extend(std::iter::repeat(value).take(run as usize));
            value = !value;
        }
        Ok(bits)
    }

    /// Number of set cells.
    pub fn count_ones(&self) -> usize {
        // Odd-indexed runs are the one runs.
        self.runs.iter().skip(1).step_by(2).map(|&r| r as usize).sum()
    }

    pub fn is_empty(&self) -> bool {
        self.count_ones() == 0
    }

    /// Intersection-over-union with another mask of the same size.
    /// Defined as 1.0 when both masks are empty.
    pub fn iou(&self, other: &RleMask) -> f64 {
        let a = self.decode().unwrap_or_default();
        let b = other.decode().unwrap_or_default();
        if a.len() != b.len() {
            return 0.0;
        }
        let mut inter = 0usize;
        let mut union = 0usize;
        for (&x, &y) in a.iter().zip(&b) {
            inter += (x && y) as usize;
            union += (x || y) as usize;
        }
        if union == 0 {
            1.0
        } else {
            inter as f64 / union as f64
        }
    }

    /// Translate the mask by whole cells; content shifted off the raster is
    /// dropped, vacated cells become zero.
    pub fn shifted(&self, dx: i32, dy: i32) -> RleMask {
        let (w, h) = (self.width as i32, self.height as i32);
        let bits = self.decode().unwrap_or_else(|_| vec![false; (w * h) as usize]);
        let mut out = vec![false; (w * h) as usize];
        for y in 0..h {
            for x in 0..w {
                if bits[(y * w + x) as usize] {
                    let (nx, ny) = (x + dx, y + dy);
                    if nx >= 0 && nx < w && ny >= 0 && ny < h {
                        out[(ny * w + nx) as usize] = true;
                    }
                }
            }
        }
        RleMask::encode(self.width, self.height, &out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn empty_and_full() {
        let m = RleMask::empty(3, 2);
        assert_eq!(m.count_ones(), 0);
        assert_eq!(m.decode().unwrap(), vec![false; 6]);
        let full = RleMask::encode(3, 2, &[true; 6]);
        assert_eq!(full.runs, vec![0, 6]);
        assert!((full.iou(&full) - 1.0).abs() < 1e-12);
        assert!((full.iou(&m) - 0.0).abs() < 1e-12);
        assert!((m.iou(&m) - 1.0).abs() < 1e-12); // both empty
    }

    #[test]
    fn decode_rejects_bad_total() {
        let m = RleMask { width: 2, height: 2, runs: vec![3] };
        assert!(matches!(m.decode(), Err(RleError::LengthMismatch { got: 3, expected: 4 })));
    }

    #[test]
    fn shift_drops_offscreen() {
        let bits = [true, false, false, false]; // single cell at (0,0) of 2x2
        let m = RleMask::encode(2, 2, &bits);
        let s = m.shifted(1, 1);
        assert_eq!(s.decode().unwrap(), vec![false, false, false, true]);
        let gone = m.shifted(-1, 0);
        assert!(gone.is_empty());
    }

    proptest! {
        #[test]
        fn roundtrip_is_identity(bits in proptest::collection::vec(any::<bool>(), 24)) {
            let m = RleMask::encode(6, 4, &bits);
            prop_assert_eq!(m.decode().unwrap(), bits);
            // Re-encoding the decoded bits is bit-exact.
            let m2 = RleMask::encode(6, 4, &m.decode().unwrap());
            prop_assert_eq!(m, m2);
        }
    }
}
