//! Vietoris–Rips filtrations over Euclidean point clouds.
//!
//! A simplex enters the filtration at its diameter, the largest pairwise
//! distance between its vertices. Simplices are enumerated as cliques of the
//! threshold graph and sorted by `(diameter, dimension, vertices)`, which
//! places every face before its cofaces and makes the order total.

use std::cmp::Ordering;
use std::io::{BufRead, Write};
use std::sync::atomic::{AtomicUsize, Ordering as AtomicOrdering};

use rand::Rng as _;
use rayon::prelude::*;

use crate::cloud::{euclidean, PointCloud};
use crate::error::{Error, Result};
use crate::rng::seeded;

/// Largest homology dimension the filtration supports.
pub const MAX_HOMOLOGY_DIM: usize = 3;
const MAX_VERTICES: usize = MAX_HOMOLOGY_DIM + 2;
/// Vertex ids are packed 16 bits apiece, offset by one, into face keys.
pub const MAX_POINTS: usize = (1 << 16) - 1;

#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    n: usize,
    data: Vec<f64>,
}

impl DistanceMatrix {
    /// Wraps a full row-major `n × n` matrix after checking it is a valid
    /// dissimilarity: finite, non-negative, zero diagonal, symmetric to 1e-12.
    pub fn from_full(n: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != n * n {
            return Err(Error::shape(format!(
                "{} entries for a {n}x{n} matrix",
                data.len()
            )));
        }
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::domain(format!("diagonal entry {i} is not zero")));
            }
            for j in 0..i {
                let (a, b) = (data[i * n + j], data[j * n + i]);
                if !(a.is_finite() && a >= 0.0) || (a - b).abs() > 1e-12 {
                    return Err(Error::domain(format!(
                        "entries ({i},{j}) and ({j},{i}) are not a valid distance"
                    )));
                }
            }
        }
        Ok(Self { n, data })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.n..(i + 1) * self.n]
    }

    /// `min_i max_j d(i, j)`: past this scale the complex is a cone.
    pub fn enclosing_radius(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        (0..self.n)
            .map(|i| self.row(i).iter().copied().fold(0.0, f64::max))
            .fold(f64::INFINITY, f64::min)
    }
}

pub fn build_distance_matrix(cloud: &PointCloud) -> DistanceMatrix {
    let n = cloud.len();
    let mut data = vec![0.0; n * n];
    data.par_chunks_mut(n.max(1))
        .take(n)
        .enumerate()
        .for_each(|(i, row)| {
            let p = cloud.point(i);
            for (j, d) in row.iter_mut().enumerate() {
                if j != i {
                    *d = euclidean(p, cloud.point(j));
                }
            }
        });
    // Mirror the upper triangle so the matrix is exactly symmetric.
    for i in 0..n {
        for j in 0..i {
            data[i * n + j] = data[j * n + i];
        }
    }
    DistanceMatrix { n, data }
}

#[derive(Debug, Clone, Copy)]
pub struct Simplex {
    verts: [u32; MAX_VERTICES],
    len: u8,
    diameter: f64,
}

impl Simplex {
    /// `vertices` must be strictly increasing.
    pub fn new(vertices: &[u32], diameter: f64) -> Result<Self> {
        if vertices.is_empty() || vertices.len() > MAX_VERTICES {
            return Err(Error::domain(format!(
                "a simplex needs 1 to {MAX_VERTICES} vertices, got {}",
                vertices.len()
            )));
        }
        if vertices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::domain(
                "simplex vertices must be strictly increasing",
            ));
        }
        let mut verts = [0; MAX_VERTICES];
        verts[..vertices.len()].copy_from_slice(vertices);
        Ok(Self {
            verts,
            len: vertices.len() as u8,
            diameter,
        })
    }

    pub fn vertices(&self) -> &[u32] {
        &self.verts[..self.len as usize]
    }

    pub fn dim(&self) -> usize {
        self.len as usize - 1
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Packs the vertex list into a lookup key (faces have at most four vertices).
    pub(crate) fn key(&self) -> u64 {
        pack_key(self.vertices())
    }

    /// The filtration order: diameter, then dimension, then vertices.
    pub fn filtration_cmp(&self, other: &Self) -> Ordering {
        self.diameter
            .total_cmp(&other.diameter)
            .then(self.len.cmp(&other.len))
            .then_with(|| self.vertices().cmp(other.vertices()))
    }
}

impl PartialEq for Simplex {
    fn eq(&self, other: &Self) -> bool {
        self.vertices() == other.vertices() && self.diameter == other.diameter
    }
}

/// Each vertex is stored as `v + 1`, so an empty slot (zero) never looks
/// like vertex 0 and keys of different lengths cannot collide.
pub(crate) fn pack_key(vertices: &[u32]) -> u64 {
    debug_assert!(vertices.len() <= 4);
    vertices
        .iter()
        .fold(0, |k, &v| (k << 16) | (u64::from(v) + 1))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RipsOptions {
    pub max_dim: usize,
    /// Largest diameter admitted; `f64::INFINITY` admits everything.
    pub threshold: f64,
    /// Enumeration stops with a capacity error beyond this many simplices.
    pub max_simplices: usize,
}

impl Default for RipsOptions {
    fn default() -> Self {
        Self {
            max_dim: 1,
            threshold: f64::INFINITY,
            max_simplices: 40_000_000,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RipsFiltration {
    pub simplices: Vec<Simplex>,
    /// Highest homology dimension of interest; simplices go one dimension higher.
    pub max_dim: usize,
    pub threshold: f64,
    pub n_vertices: usize,
}

impl RipsFiltration {
    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    /// Number of simplices of each dimension `0..=max_dim + 1`.
    pub fn counts_by_dim(&self) -> Vec<usize> {
        let mut counts = vec![0; self.max_dim + 2];
        for s in &self.simplices {
            counts[s.dim()] += 1;
        }
        counts
    }

    /// One simplex per line: `dim; v0,v1,...; diameter`.
    pub fn write_text<W: Write>(&self, mut w: W) -> Result<()> {
        for s in &self.simplices {
            let verts: Vec<String> = s.vertices().iter().map(u32::to_string).collect();
            writeln!(w, "{}; {}; {}", s.dim(), verts.join(","), s.diameter())?;
        }
        Ok(())
    }

    /// Parses the text format back. Order and closure are checked, not repaired.
    pub fn read_text<R: BufRead>(reader: R, max_dim: usize, threshold: f64) -> Result<Self> {
        let mut simplices = Vec::new();
        let mut n_vertices = 0;
        for (lineno, line) in reader.lines().enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || Error::Parse(format!("line {}: `{line}`", lineno + 1));
            let mut parts = line.split(';').map(str::trim);
            let dim: usize = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
            let verts: Vec<u32> = parts
                .next()
                .ok_or_else(bad)?
                .split(',')
                .map(|v| v.trim().parse().map_err(|_| bad()))
                .collect::<Result<_>>()?;
            let diameter: f64 = parts.next().and_then(|p| p.parse().ok()).ok_or_else(bad)?;
            if parts.next().is_some() || verts.len() != dim + 1 {
                return Err(bad());
            }
            if dim == 0 {
                n_vertices += 1;
            }
            simplices.push(Simplex::new(&verts, diameter)?);
        }
        let filt = Self {
            simplices,
            max_dim,
            threshold,
            n_vertices,
        };
        filt.check_order()?;
        Ok(filt)
    }

    /// Verifies sort order and that every face precedes its cofaces with a
    /// diameter no larger.
    pub fn check_order(&self) -> Result<()> {
        let mut position: rustc_hash::FxHashMap<u64, usize> = rustc_hash::FxHashMap::default();
        for (i, s) in self.simplices.iter().enumerate() {
            if i > 0 && self.simplices[i - 1].filtration_cmp(s) != Ordering::Less {
                return Err(Error::CorruptFiltration(format!(
                    "simplex {i} is out of order"
                )));
            }
            if s.dim() > 0 {
                let verts = s.vertices();
                for skip in 0..verts.len() {
                    let face: Vec<u32> = verts
                        .iter()
                        .enumerate()
                        .filter(|&(k, _)| k != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    match position.get(&pack_key(&face)) {
                        Some(&j) if self.simplices[j].diameter() <= s.diameter() => {}
                        _ => {
                            return Err(Error::CorruptFiltration(format!(
                                "face {face:?} of simplex {i} is missing or late"
                            )))
                        }
                    }
                }
            }
            if s.dim() <= MAX_HOMOLOGY_DIM {
                position.insert(s.key(), i);
            }
        }
        Ok(())
    }
}

/// All simplices of dimension `≤ max_dim + 1` with diameter `≤ threshold`.
pub fn rips_filtration(dm: &DistanceMatrix, options: &RipsOptions) -> Result<RipsFiltration> {
    let RipsOptions {
        max_dim,
        threshold,
        max_simplices,
    } = *options;
    if max_dim > MAX_HOMOLOGY_DIM {
        return Err(Error::domain(format!(
            "max_dim {max_dim} exceeds the supported {MAX_HOMOLOGY_DIM}"
        )));
    }
    if threshold.is_nan() || threshold <= 0.0 {
        return Err(Error::domain(format!(
            "threshold must be positive, got {threshold}"
        )));
    }
    let n = dm.len();
    if n > MAX_POINTS {
        return Err(Error::domain(format!(
            "{n} points exceed the limit of {MAX_POINTS}"
        )));
    }

    let upper_neighbors: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            (i + 1..n)
                .filter(|&j| dm.get(i, j) <= threshold)
                .map(|j| j as u32)
                .collect()
        })
        .collect();

    let emitted = AtomicUsize::new(0);
    let enumerator = CliqueEnumerator {
        dm,
        upper_neighbors: &upper_neighbors,
        top_len: max_dim + 2,
        cap: max_simplices,
        emitted: &emitted,
    };
    let chunks: Vec<Vec<Simplex>> = (0..n)
        .into_par_iter()
        .map(|u| {
            let mut out = Vec::new();
            let mut tau = Vec::with_capacity(MAX_VERTICES);
            tau.push(u as u32);
            enumerator.expand(&mut tau, 0.0, &upper_neighbors[u], &mut out)?;
            Ok(out)
        })
        .collect::<Result<_>>()?;

    let mut simplices = Vec::with_capacity(chunks.iter().map(Vec::len).sum());
    for chunk in chunks {
        simplices.extend(chunk);
    }
    simplices.par_sort_unstable_by(Simplex::filtration_cmp);
    Ok(RipsFiltration {
        simplices,
        max_dim,
        threshold,
        n_vertices: n,
    })
}

struct CliqueEnumerator<'a> {
    dm: &'a DistanceMatrix,
    upper_neighbors: &'a [Vec<u32>],
    top_len: usize,
    cap: usize,
    emitted: &'a AtomicUsize,
}

impl CliqueEnumerator<'_> {
    /// Emits `tau` and every extension of it by increasing vertices drawn
    /// from `candidates`, which are adjacent to all of `tau`.
    fn expand(
        &self,
        tau: &mut Vec<u32>,
        diameter: f64,
        candidates: &[u32],
        out: &mut Vec<Simplex>,
    ) -> Result<()> {
        if self.emitted.fetch_add(1, AtomicOrdering::Relaxed) >= self.cap {
            return Err(Error::Capacity {
                what: "Rips simplex count".into(),
                cap: self.cap,
            });
        }
        out.push(Simplex::new(tau, diameter)?);
        if tau.len() == self.top_len {
            return Ok(());
        }
        for (idx, &v) in candidates.iter().enumerate() {
            let vi = v as usize;
            let grown = tau
                .iter()
                .map(|&u| self.dm.get(u as usize, vi))
                .fold(diameter, f64::max);
            let next = intersect_sorted(&candidates[idx + 1..], &self.upper_neighbors[vi]);
            tau.push(v);
            self.expand(tau, grown, &next, out)?;
            tau.pop();
        }
        Ok(())
    }
}

fn intersect_sorted(a: &[u32], b: &[u32]) -> Vec<u32> {
    let mut out = Vec::with_capacity(a.len().min(b.len()));
    let (mut i, mut j) = (0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            Ordering::Less => i += 1,
            Ordering::Greater => j += 1,
            Ordering::Equal => {
                out.push(a[i]);
                i += 1;
                j += 1;
            }
        }
    }
    out
}

/// Greedy farthest-point selection of `k` landmarks starting from `start`.
///
/// Each new landmark maximizes its distance to the nearest chosen landmark;
/// ties go to the lowest index.
pub fn maxmin_landmarks(cloud: &PointCloud, k: usize, start: usize) -> Result<Vec<usize>> {
    let n = cloud.len();
    if k == 0 || k > n {
        return Err(Error::domain(format!(
            "cannot choose {k} landmarks from {n} points"
        )));
    }
    if start >= n {
        return Err(Error::domain(format!("start index {start} out of range")));
    }
    let mut chosen = Vec::with_capacity(k);
    let mut nearest = vec![f64::INFINITY; n];
    let mut current = start;
    for _ in 0..k {
        chosen.push(current);
        let p = cloud.point(current);
        nearest
            .par_iter_mut()
            .enumerate()
            .for_each(|(i, d)| *d = d.min(euclidean(p, cloud.point(i))));
        let mut best = (f64::NEG_INFINITY, 0);
        for (i, &d) in nearest.iter().enumerate() {
            if d > best.0 {
                best = (d, i);
            }
        }
        current = best.1;
    }
    Ok(chosen)
}

/// Maxmin landmarks with a seeded start point.
pub fn landmark_subsample(
    cloud: &PointCloud,
    k: usize,
    seed: u64,
) -> Result<(PointCloud, Vec<usize>)> {
    if k == 0 || k > cloud.len() {
        return Err(Error::domain(format!(
            "cannot choose {k} landmarks from {} points",
            cloud.len()
        )));
    }
    let start = seeded(seed).gen_range(0..cloud.len());
    let indices = maxmin_landmarks(cloud, k, start)?;
    Ok((cloud.select(&indices), indices))
}

/// Largest distance from any point to its nearest landmark.
pub fn covering_radius(cloud: &PointCloud, landmarks: &[usize]) -> f64 {
    cloud
        .points()
        .map(|p| {
            landmarks
                .iter()
                .map(|&l| euclidean(p, cloud.point(l)))
                .fold(f64::INFINITY, f64::min)
        })
        .fold(0.0, f64::max)
}
