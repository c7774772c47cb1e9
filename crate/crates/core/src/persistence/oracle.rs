//! Brute-force Betti numbers by rank–nullity over GF(2).
//!
//! This path shares nothing with the reduction engine: it rebuilds face
//! lookups from vertex lists, fills dense bit matrices for every boundary
//! map of the sub-complex at a fixed scale, and ranks them by Gaussian
//! elimination. It is slow on purpose and only meant for small complexes.

use std::collections::HashMap;

use super::BettiNumbers;
use crate::error::{Error, Result};
use crate::filtration::RipsFiltration;

/// Largest sub-complex the oracle accepts.
pub const ORACLE_MAX_SIMPLICES: usize = 512;

/// `b_k = dim ker ∂_k − dim im ∂_{k+1}` for `k ≤ max_dim` on the sub-complex
/// of simplices with diameter `≤ t`.
pub fn oracle_betti(filt: &RipsFiltration, t: f64) -> Result<BettiNumbers> {
    let mut by_dim: Vec<Vec<Vec<u32>>> = vec![Vec::new(); filt.max_dim + 2];
    let mut total = 0;
    for s in &filt.simplices {
        if s.diameter() <= t && s.dim() < by_dim.len() {
            total += 1;
            if total > ORACLE_MAX_SIMPLICES {
                return Err(Error::Capacity {
                    what: "oracle sub-complex size".into(),
                    cap: ORACLE_MAX_SIMPLICES,
                });
            }
            by_dim[s.dim()].push(s.vertices().to_vec());
        }
    }

    // rank_of[k] = rank of ∂_k : C_k → C_{k-1}; ∂_0 = 0.
    let mut rank_of = vec![0usize; by_dim.len()];
    for k in 1..by_dim.len() {
        let rows: HashMap<&[u32], usize> = by_dim[k - 1]
            .iter()
            .enumerate()
            .map(|(i, v)| (v.as_slice(), i))
            .collect();
        let mut matrix = BitMatrix::new(by_dim[k].len(), rows.len());
        for (c, simplex) in by_dim[k].iter().enumerate() {
            for skip in 0..simplex.len() {
                let face: Vec<u32> = simplex
                    .iter()
                    .enumerate()
                    .filter(|&(i, _)| i != skip)
                    .map(|(_, &v)| v)
                    .collect();
                let r = rows.get(face.as_slice()).ok_or_else(|| {
                    Error::CorruptFiltration(format!("face {face:?} absent at scale {t}"))
                })?;
                matrix.flip(c, *r);
            }
        }
        rank_of[k] = matrix.rank();
    }

    let betti = (0..=filt.max_dim)
        .map(|k| by_dim[k].len() - rank_of[k] - rank_of[k + 1])
        .collect();
    Ok(BettiNumbers { scale: t, betti })
}

/// Dense GF(2) matrix, one bit-packed row per boundary column (the rank of a
/// matrix equals that of its transpose).
struct BitMatrix {
    rows: Vec<Vec<u64>>,
}

impl BitMatrix {
    fn new(n_rows: usize, n_cols: usize) -> Self {
        let words = n_cols.div_ceil(64);
        Self {
            rows: vec![vec![0; words]; n_rows],
        }
    }

    fn flip(&mut self, r: usize, c: usize) {
        self.rows[r][c / 64] ^= 1 << (c % 64);
    }

    fn rank(mut self) -> usize {
        let n_cols = self.rows.first().map_or(0, |r| r.len() * 64);
        let mut rank = 0;
        for col in 0..n_cols {
            let (w, bit) = (col / 64, 1u64 << (col % 64));
            let Some(p) = (rank..self.rows.len()).find(|&r| self.rows[r][w] & bit != 0) else {
                continue;
            };
            self.rows.swap(rank, p);
            let pivot = self.rows[rank].clone();
            for r in 0..self.rows.len() {
                if r != rank && self.rows[r][w] & bit != 0 {
                    for (x, y) in self.rows[r].iter_mut().zip(&pivot) {
                        *x ^= y;
                    }
                }
            }
            rank += 1;
        }
        rank
    }
}
