//! Column reduction over GF(2).
//!
//! [`reduce`] is the standard left-to-right reduction of the boundary matrix
//! with clearing: dimensions are processed from the top down, and once a
//! column of dimension `k + 1` claims pivot `i`, column `i` is known to reduce
//! to zero and is skipped. [`reduce_cohomology`] reduces the coboundary
//! matrix instead (simplices in reverse order, lowest dimension first, pivots
//! at the earliest cofacet). Both produce the same pairing, which is fixed
//! by the filtration order alone; the coboundary route avoids reducing the
//! very many top-dimensional columns a dense Rips complex carries.

use serde::{Deserialize, Serialize};

use super::BoundaryMatrix;

const UNOWNED: u32 = u32::MAX;

/// Which reduction produces the pairing.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Algorithm {
    /// Boundary-matrix reduction with clearing.
    Standard,
    /// Coboundary-matrix reduction with clearing.
    #[default]
    Cohomology,
}

/// Birth/death indices into the filtration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Pairing {
    /// `(birth, death)`, sorted by birth.
    pub pairs: Vec<(usize, usize)>,
    /// Simplices that are neither paired births nor deaths, ascending.
    pub essential: Vec<usize>,
}

impl Pairing {
    fn from_deaths(death_of: &[u32]) -> Self {
        let n = death_of.len();
        let mut is_death = vec![false; n];
        let mut pairs = Vec::new();
        for (b, &d) in death_of.iter().enumerate() {
            if d != UNOWNED {
                pairs.push((b, d as usize));
                is_death[d as usize] = true;
            }
        }
        let essential = (0..n)
            .filter(|&i| death_of[i] == UNOWNED && !is_death[i])
            .collect();
        Pairing { pairs, essential }
    }

    /// True when every one of `n_simplices` simplices is exactly one of a
    /// paired birth, a death, or essential.
    pub fn accounts_for(&self, n_simplices: usize) -> bool {
        let mut seen = vec![false; n_simplices];
        let mut mark = |i: usize| -> bool {
            if i >= n_simplices || seen[i] {
                return false;
            }
            seen[i] = true;
            true
        };
        for &(b, d) in &self.pairs {
            if b >= d || !mark(b) || !mark(d) {
                return false;
            }
        }
        for &e in &self.essential {
            if !mark(e) {
                return false;
            }
        }
        seen.into_iter().all(|s| s)
    }
}

/// Output of the standard reduction.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Reduction {
    /// Reduced column per simplex (empty for zero or cleared columns).
    pub columns: Vec<Vec<u32>>,
    pub pairing: Pairing,
}

/// Symmetric difference of two increasing index lists.
pub(crate) fn add_columns(a: &[u32], b: &[u32], out: &mut Vec<u32>) {
    out.clear();
    out.reserve(a.len() + b.len());
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => {
                out.push(a[i]);
                i += 1;
            }
            std::cmp::Ordering::Greater => {
                out.push(b[j]);
                j += 1;
            }
            std::cmp::Ordering::Equal => {
                i += 1;
                j += 1;
            }
        }
    }
    out.extend_from_slice(&a[i..]);
    out.extend_from_slice(&b[j..]);
}

fn indices_by_dim(matrix: &BoundaryMatrix) -> Vec<Vec<u32>> {
    let mut by_dim = vec![Vec::new(); matrix.max_dim() + 1];
    for j in 0..matrix.n_columns() {
        by_dim[matrix.dim(j)].push(j as u32);
    }
    by_dim
}

/// Standard reduction with clearing. Each nonzero reduced column has a
/// unique lowest row; `low(j) = i` pairs birth `i` with death `j`.
pub fn reduce(matrix: &BoundaryMatrix) -> Reduction {
    let n = matrix.n_columns();
    let mut columns: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut owner = vec![UNOWNED; n];
    let mut cleared = vec![false; n];
    let mut scratch = Vec::new();
    let by_dim = indices_by_dim(matrix);
    for dim in (1..by_dim.len()).rev() {
        for &j in &by_dim[dim] {
            let j = j as usize;
            if cleared[j] {
                continue;
            }
            let mut col = matrix.column(j).to_vec();
            while let Some(&low) = col.last() {
                let o = owner[low as usize];
                if o == UNOWNED {
                    break;
                }
                add_columns(&col, &columns[o as usize], &mut scratch);
                std::mem::swap(&mut col, &mut scratch);
            }
            if let Some(&low) = col.last() {
                owner[low as usize] = j as u32;
                cleared[low as usize] = true;
                columns[j] = col;
            }
        }
    }
    // owner maps a birth row to the column that kills it.
    Reduction {
        columns,
        pairing: Pairing::from_deaths(&owner),
    }
}

/// Coboundary reduction with clearing; returns the same pairing as [`reduce`].
pub fn reduce_cohomology(matrix: &BoundaryMatrix) -> Pairing {
    let n = matrix.n_columns();
    let (offsets, entries) = matrix.coboundary();
    let cob = |i: usize| &entries[offsets[i]..offsets[i + 1]];
    // owner[τ] = the simplex whose reduced coboundary column has pivot τ.
    let mut owner = vec![UNOWNED; n];
    let mut death_of = vec![UNOWNED; n];
    let mut reduced: Vec<Vec<u32>> = vec![Vec::new(); n];
    let mut scratch = Vec::new();
    let by_dim = indices_by_dim(matrix);
    for cohort in &by_dim {
        for &s in cohort.iter().rev() {
            let s = s as usize;
            // A death of the previous dimension: its column reduces to zero.
            if owner[s] != UNOWNED {
                continue;
            }
            let base = cob(s);
            if base.is_empty() {
                continue;
            }
            let mut col = base.to_vec();
            while let Some(&pivot) = col.first() {
                let o = owner[pivot as usize];
                if o == UNOWNED {
                    break;
                }
                add_columns(&col, &reduced[o as usize], &mut scratch);
                std::mem::swap(&mut col, &mut scratch);
            }
            if let Some(&pivot) = col.first() {
                owner[pivot as usize] = s as u32;
                death_of[s] = pivot;
                reduced[s] = col;
            }
        }
    }
    Pairing::from_deaths(&death_of)
}

/// The pairing by the chosen algorithm.
pub fn pairing(matrix: &BoundaryMatrix, algorithm: Algorithm) -> Pairing {
    match algorithm {
        Algorithm::Standard => reduce(matrix).pairing,
        Algorithm::Cohomology => reduce_cohomology(matrix),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(cols: &[(usize, &[u32])]) -> BoundaryMatrix {
        BoundaryMatrix::from_columns(cols.iter().map(|(d, c)| (*d, c.to_vec())).collect()).unwrap()
    }

    #[test]
    fn symmetric_difference() {
        let mut out = Vec::new();
        add_columns(&[1, 3, 5], &[3, 4], &mut out);
        assert_eq!(out, vec![1, 4, 5]);
        add_columns(&[2], &[2], &mut out);
        assert!(out.is_empty());
    }

    #[test]
    fn single_edge_kills_younger_vertex() {
        let m = matrix(&[(0, &[]), (0, &[]), (1, &[0, 1])]);
        let r = reduce(&m);
        assert_eq!(r.pairing.pairs, vec![(1, 2)]);
        assert_eq!(r.pairing.essential, vec![0]);
        assert_eq!(reduce_cohomology(&m), r.pairing);
    }

    #[test]
    fn triangle_reduction() {
        // vertices 0,1,2; edges 3=01, 4=02, 5=12; triangle 6
        let m = matrix(&[
            (0, &[]),
            (0, &[]),
            (0, &[]),
            (1, &[0, 1]),
            (1, &[0, 2]),
            (1, &[1, 2]),
            (2, &[3, 4, 5]),
        ]);
        let r = reduce(&m);
        assert_eq!(r.pairing.pairs, vec![(1, 3), (2, 4), (5, 6)]);
        assert_eq!(r.pairing.essential, vec![0]);
        // every nonzero reduced column has a distinct low
        let mut lows: Vec<u32> = r.columns.iter().filter_map(|c| c.last().copied()).collect();
        let count = lows.len();
        lows.sort_unstable();
        lows.dedup();
        assert_eq!(lows.len(), count);
        assert!(r.pairing.accounts_for(7));
        assert_eq!(reduce_cohomology(&m), r.pairing);
    }

    #[test]
    fn accounting_detects_gaps_and_duplicates() {
        let p = Pairing {
            pairs: vec![(1, 2)],
            essential: vec![0],
        };
        assert!(p.accounts_for(3));
        assert!(!p.accounts_for(4));
        let dup = Pairing {
            pairs: vec![(1, 2)],
            essential: vec![0, 2],
        };
        assert!(!dup.accounts_for(3));
    }
}
