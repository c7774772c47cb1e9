use rustc_hash::FxHashMap;

use crate::error::{Error, Result};
use crate::filtration::RipsFiltration;

/// Sparse GF(2) boundary matrix: column `j` lists, in increasing order, the
/// filtration indices of the codimension-one faces of simplex `j`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BoundaryMatrix {
    offsets: Vec<usize>,
    entries: Vec<u32>,
    dims: Vec<u8>,
}

impl BoundaryMatrix {
    /// Builds a matrix from explicit columns; each column must be strictly
    /// increasing with entries below its own index.
    pub fn from_columns(columns: Vec<(usize, Vec<u32>)>) -> Result<Self> {
        let mut m = BoundaryMatrix {
            offsets: vec![0],
            entries: Vec::new(),
            dims: Vec::with_capacity(columns.len()),
        };
        for (j, (dim, col)) in columns.into_iter().enumerate() {
            if col.windows(2).any(|w| w[0] >= w[1]) || col.last().is_some_and(|&l| l as usize >= j)
            {
                return Err(Error::CorruptFiltration(format!(
                    "column {j} is not a valid boundary column"
                )));
            }
            m.entries.extend(col);
            m.offsets.push(m.entries.len());
            m.dims.push(dim as u8);
        }
        Ok(m)
    }

    pub fn n_columns(&self) -> usize {
        self.dims.len()
    }

    pub fn column(&self, j: usize) -> &[u32] {
        &self.entries[self.offsets[j]..self.offsets[j + 1]]
    }

    pub fn dim(&self, j: usize) -> usize {
        self.dims[j] as usize
    }

    pub fn max_dim(&self) -> usize {
        self.dims.iter().copied().max().unwrap_or(0) as usize
    }

    pub fn nnz(&self) -> usize {
        self.entries.len()
    }

    /// The transpose: column `i` lists the cofacets of simplex `i`, increasing.
    pub(crate) fn coboundary(&self) -> (Vec<usize>, Vec<u32>) {
        let n = self.n_columns();
        let mut counts = vec![0usize; n + 1];
        for &e in &self.entries {
            counts[e as usize + 1] += 1;
        }
        for i in 0..n {
            counts[i + 1] += counts[i];
        }
        let offsets = counts.clone();
        let mut cursor = counts;
        let mut entries = vec![0u32; self.entries.len()];
        for j in 0..n {
            for &face in self.column(j) {
                let slot = &mut cursor[face as usize];
                entries[*slot] = j as u32;
                *slot += 1;
            }
        }
        (offsets, entries)
    }
}

/// Locates every face of every simplex by its filtration index.
pub fn build_boundary_matrix(filt: &RipsFiltration) -> Result<BoundaryMatrix> {
    let n = filt.len();
    if n > u32::MAX as usize {
        return Err(Error::Capacity {
            what: "filtration length".into(),
            cap: u32::MAX as usize,
        });
    }
    let mut index: FxHashMap<u64, u32> = FxHashMap::default();
    index.reserve(
        filt.simplices
            .iter()
            .filter(|s| s.dim() <= filt.max_dim)
            .count(),
    );
    let mut m = BoundaryMatrix {
        offsets: Vec::with_capacity(n + 1),
        entries: Vec::new(),
        dims: Vec::with_capacity(n),
    };
    m.offsets.push(0);
    let mut face = [0u32; 4];
    for (j, s) in filt.simplices.iter().enumerate() {
        let verts = s.vertices();
        let start = m.entries.len();
        if s.dim() > 0 {
            for skip in 0..verts.len() {
                let mut len = 0;
                for (k, &v) in verts.iter().enumerate() {
                    if k != skip {
                        face[len] = v;
                        len += 1;
                    }
                }
                let key = crate::filtration::pack_key(&face[..len]);
                match index.get(&key) {
                    Some(&i) => m.entries.push(i),
                    None => {
                        return Err(Error::CorruptFiltration(format!(
                            "face {:?} of simplex {j} does not precede it",
                            &face[..len]
                        )))
                    }
                }
            }
            m.entries[start..].sort_unstable();
        }
        if s.dim() <= filt.max_dim {
            index.insert(s.key(), j as u32);
        }
        m.offsets.push(m.entries.len());
        m.dims.push(s.dim() as u8);
    }
    Ok(m)
}
