//! Persistent homology over GF(2) for Vietoris–Rips filtrations.

mod boundary;
pub mod oracle;
mod reduce;

use std::io::{Read, Write};

use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};
use crate::filtration::{build_distance_matrix, rips_filtration, RipsFiltration, RipsOptions};

pub use boundary::{build_boundary_matrix, BoundaryMatrix};
pub use oracle::oracle_betti;
pub use reduce::{pairing, reduce, reduce_cohomology, Algorithm, Pairing, Reduction};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PersistencePair {
    pub dim: usize,
    pub birth: f64,
    /// `f64::INFINITY` for an essential class.
    pub death: f64,
}

impl PersistencePair {
    pub fn persistence(&self) -> f64 {
        self.death - self.birth
    }

    pub fn is_essential(&self) -> bool {
        self.death.is_infinite()
    }

    /// Born and killed at the same scale: invisible, but part of the accounting.
    pub fn is_zero_persistence(&self) -> bool {
        self.death == self.birth
    }

    pub fn alive_at(&self, t: f64) -> bool {
        self.birth <= t && t < self.death
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PersistenceDiagram {
    /// Ordered by the filtration index of the birth simplex.
    pub pairs: Vec<PersistencePair>,
    pub max_dim: usize,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BettiNumbers {
    pub scale: f64,
    /// `b_0 ..= b_max_dim`.
    pub betti: Vec<usize>,
}

/// Turns index pairs into `(dim, birth, death)` triples for dimensions up to
/// the filtration's `max_dim`. Unpaired top-dimensional simplices are only
/// bookkeeping and are left out.
pub fn extract_diagram(filt: &RipsFiltration, pairing: &Pairing) -> PersistenceDiagram {
    let mut pairs: Vec<(usize, PersistencePair)> = Vec::new();
    for &(b, d) in &pairing.pairs {
        let s = &filt.simplices[b];
        if s.dim() <= filt.max_dim {
            pairs.push((
                b,
                PersistencePair {
                    dim: s.dim(),
                    birth: s.diameter(),
                    death: filt.simplices[d].diameter(),
                },
            ));
        }
    }
    for &e in &pairing.essential {
        let s = &filt.simplices[e];
        if s.dim() <= filt.max_dim {
            pairs.push((
                e,
                PersistencePair {
                    dim: s.dim(),
                    birth: s.diameter(),
                    death: f64::INFINITY,
                },
            ));
        }
    }
    pairs.sort_unstable_by_key(|&(idx, _)| idx);
    PersistenceDiagram {
        pairs: pairs.into_iter().map(|(_, p)| p).collect(),
        max_dim: filt.max_dim,
        threshold: filt.threshold,
    }
}

impl PersistenceDiagram {
    pub fn in_dim(&self, dim: usize) -> impl Iterator<Item = &PersistencePair> + '_ {
        self.pairs.iter().filter(move |p| p.dim == dim)
    }

    pub fn essential_count(&self, dim: usize) -> usize {
        self.in_dim(dim).filter(|p| p.is_essential()).count()
    }

    /// Pairs alive at `t` per dimension.
    pub fn betti_at(&self, t: f64) -> Result<BettiNumbers> {
        betti_at(self, t)
    }

    /// `dim,birth,death` with `inf` for essential classes. Zero-persistence
    /// pairs are written only when asked for.
    pub fn write_csv<W: Write>(&self, writer: W, include_zero_persistence: bool) -> Result<()> {
        let mut w = csv::Writer::from_writer(writer);
        w.write_record(["dim", "birth", "death"])?;
        for p in &self.pairs {
            if p.is_zero_persistence() && !include_zero_persistence {
                continue;
            }
            let death = if p.is_essential() {
                "inf".to_string()
            } else {
                p.death.to_string()
            };
            w.write_record([p.dim.to_string(), p.birth.to_string(), death])?;
        }
        w.flush()?;
        Ok(())
    }

    /// Reads `dim,birth,death` rows; `max_dim` is taken from the data.
    pub fn read_csv<R: Read>(reader: R, threshold: f64) -> Result<Self> {
        let mut r = csv::Reader::from_reader(reader);
        let mut pairs = Vec::new();
        for (row, rec) in r.records().enumerate() {
            let rec = rec?;
            let bad = || Error::Parse(format!("diagram row {row}"));
            if rec.len() != 3 {
                return Err(bad());
            }
            let dim: usize = rec[0].trim().parse().map_err(|_| bad())?;
            let birth: f64 = rec[1].trim().parse().map_err(|_| bad())?;
            let death: f64 = match rec[2].trim() {
                "inf" => f64::INFINITY,
                s => s.parse().map_err(|_| bad())?,
            };
            if death < birth {
                return Err(bad());
            }
            pairs.push(PersistencePair { dim, birth, death });
        }
        let max_dim = pairs.iter().map(|p| p.dim).max().unwrap_or(0);
        Ok(Self {
            pairs,
            max_dim,
            threshold,
        })
    }
}

/// `b_k(t)` = number of dimension-`k` pairs with `birth ≤ t < death`.
pub fn betti_at(diagram: &PersistenceDiagram, t: f64) -> Result<BettiNumbers> {
    if !(t >= 0.0 && t <= diagram.threshold) {
        return Err(Error::domain(format!(
            "scale {t} outside [0, {}]",
            diagram.threshold
        )));
    }
    let mut betti = vec![0; diagram.max_dim + 1];
    for p in &diagram.pairs {
        if p.alive_at(t) {
            betti[p.dim] += 1;
        }
    }
    Ok(BettiNumbers { scale: t, betti })
}

/// The `k` longest bars of dimension `dim`; essential bars rank first and
/// ties go to the earlier birth.
pub fn dominant_features(
    diagram: &PersistenceDiagram,
    dim: usize,
    k: usize,
) -> Vec<PersistencePair> {
    let mut bars: Vec<PersistencePair> = diagram.in_dim(dim).copied().collect();
    bars.sort_by(|a, b| {
        b.persistence()
            .total_cmp(&a.persistence())
            .then(a.birth.total_cmp(&b.birth))
    });
    bars.truncate(k);
    bars
}

/// A diagram together with the index pairing and filtration size it came from.
#[derive(Debug, Clone)]
pub struct PersistenceResult {
    pub diagram: PersistenceDiagram,
    pub pairing: Pairing,
    pub n_simplices: usize,
}

impl PersistenceResult {
    /// Every simplex is exactly one of: birth, death, essential.
    pub fn conserves_simplices(&self) -> bool {
        self.pairing.accounts_for(self.n_simplices)
    }
}

pub fn compute_persistence(
    filt: &RipsFiltration,
    algorithm: Algorithm,
) -> Result<PersistenceResult> {
    let matrix = build_boundary_matrix(filt)?;
    let pairing = pairing(&matrix, algorithm);
    Ok(PersistenceResult {
        diagram: extract_diagram(filt, &pairing),
        pairing,
        n_simplices: filt.len(),
    })
}

/// Distance matrix, Rips filtration and reduction in one call.
pub fn cloud_persistence(
    cloud: &PointCloud,
    options: &RipsOptions,
    algorithm: Algorithm,
) -> Result<PersistenceResult> {
    let dm = build_distance_matrix(cloud);
    let filt = rips_filtration(&dm, options)?;
    compute_persistence(&filt, algorithm)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pair(dim: usize, birth: f64, death: f64) -> PersistencePair {
        PersistencePair { dim, birth, death }
    }

    fn rips(rows: &[[f64; 2]], threshold: f64) -> RipsFiltration {
        let cloud = PointCloud::from_rows(rows).unwrap();
        rips_filtration(
            &build_distance_matrix(&cloud),
            &RipsOptions {
                threshold,
                ..Default::default()
            },
        )
        .unwrap()
    }

    #[test]
    fn single_point_diagram() {
        let f = rips(&[[0.0, 0.0]], f64::INFINITY);
        for alg in [Algorithm::Standard, Algorithm::Cohomology] {
            let r = compute_persistence(&f, alg).unwrap();
            assert_eq!(r.diagram.pairs, vec![pair(0, 0.0, f64::INFINITY)]);
        }
    }

    #[test]
    fn two_points_one_merge() {
        let f = rips(&[[0.0, 0.0], [2.0, 0.0]], f64::INFINITY);
        let r = compute_persistence(&f, Algorithm::Standard).unwrap();
        assert_eq!(
            r.diagram.pairs,
            vec![pair(0, 0.0, f64::INFINITY), pair(0, 0.0, 2.0)]
        );
    }

    #[test]
    fn equilateral_triangle_has_zero_persistence_loop() {
        let h = 3f64.sqrt() / 2.0;
        let f = rips(&[[0.0, 0.0], [1.0, 0.0], [0.5, h]], f64::INFINITY);
        let r = compute_persistence(&f, Algorithm::Standard).unwrap();
        let h1: Vec<_> = r.diagram.in_dim(1).collect();
        assert_eq!(h1.len(), 1);
        assert!(h1[0].is_zero_persistence());
        assert!((h1[0].birth - 1.0).abs() < 1e-12);
        assert!(r.conserves_simplices());
    }

    #[test]
    fn unit_square_loop() {
        let f = rips(&[[0.0, 0.0], [1.0, 0.0], [1.0, 1.0], [0.0, 1.0]], 1.5);
        for alg in [Algorithm::Standard, Algorithm::Cohomology] {
            let r = compute_persistence(&f, alg).unwrap();
            let h1: Vec<_> = r
                .diagram
                .in_dim(1)
                .filter(|p| !p.is_zero_persistence())
                .collect();
            assert_eq!(h1.len(), 1);
            assert_eq!(h1[0].birth, 1.0);
            assert_eq!(h1[0].death, 2f64.sqrt());
        }
    }

    #[test]
    fn far_clusters_stay_disconnected() {
        let f = rips(&[[0.0, 0.0], [0.1, 0.0], [10.0, 0.0], [10.1, 0.0]], 1.0);
        let r = compute_persistence(&f, Algorithm::Cohomology).unwrap();
        assert_eq!(r.diagram.essential_count(0), 2);
        assert_eq!(r.diagram.betti_at(0.5).unwrap().betti, vec![2, 0]);
    }

    #[test]
    fn betti_domain() {
        let f = rips(&[[0.0, 0.0], [1.0, 0.0], [5.0, 0.0]], 2.0);
        let d = compute_persistence(&f, Algorithm::Standard)
            .unwrap()
            .diagram;
        assert_eq!(betti_at(&d, 0.0).unwrap().betti, vec![3, 0]);
        assert!(betti_at(&d, 2.5).is_err());
        assert!(betti_at(&d, -0.1).is_err());
        assert!(betti_at(&d, f64::NAN).is_err());
    }

    #[test]
    fn dominant_ordering() {
        let d = PersistenceDiagram {
            pairs: vec![
                pair(1, 1.0, 1.1),
                pair(1, 0.5, f64::INFINITY),
                pair(1, 2.0, 7.0),
                pair(1, 0.0, 5.0),
                pair(0, 0.0, 100.0),
            ],
            max_dim: 1,
            threshold: 10.0,
        };
        let top = dominant_features(&d, 1, 2);
        assert!(top[0].is_essential());
        // persistence 5 twice: the earlier birth wins
        assert_eq!(top[1], pair(1, 0.0, 5.0));
        assert_eq!(dominant_features(&d, 1, 10).len(), 4);
        assert_eq!(dominant_features(&d, 0, 10).len(), 1);
    }

    #[test]
    fn csv_hides_zero_persistence_by_default() {
        let d = PersistenceDiagram {
            pairs: vec![
                pair(0, 0.0, f64::INFINITY),
                pair(1, 1.0, 1.0),
                pair(1, 0.5, 0.75),
            ],
            max_dim: 1,
            threshold: 2.0,
        };
        let mut buf = Vec::new();
        d.write_csv(&mut buf, false).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert_eq!(text, "dim,birth,death\n0,0,inf\n1,0.5,0.75\n");
        let back = PersistenceDiagram::read_csv(&buf[..], 2.0).unwrap();
        assert_eq!(back.pairs, vec![d.pairs[0], d.pairs[2]]);

        let mut all = Vec::new();
        d.write_csv(&mut all, true).unwrap();
        assert_eq!(String::from_utf8(all).unwrap().lines().count(), 4);
    }
}
