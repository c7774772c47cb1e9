use nalgebra::{DMatrix, DVector, SymmetricEigen};
use serde::{Deserialize, Serialize};

use crate::cloud::PointCloud;
use crate::error::{Error, Result};

/// Principal axes of a cloud; `components` is `q × d` with orthonormal rows.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn input_dim(&self) -> usize {
        self.mean.len()
    }

    pub fn output_dim(&self) -> usize {
        self.components.len()
    }

    /// Maps projected coordinates back to the input space.
    pub fn reconstruct(&self, projected: &PointCloud) -> Result<PointCloud> {
        if projected.dim() != self.output_dim() {
            return Err(Error::shape(format!(
                "expected {}-dimensional scores, got {}",
                self.output_dim(),
                projected.dim()
            )));
        }
        let mut out = Vec::with_capacity(projected.len() * self.input_dim());
        for p in projected.points() {
            let mut x = self.mean.clone();
            for (score, comp) in p.iter().zip(&self.components) {
                for (xi, ci) in x.iter_mut().zip(comp) {
                    *xi += score * ci;
                }
            }
            out.extend(x);
        }
        PointCloud::from_flat(self.input_dim(), out)
    }
}

/// Exact eigendecomposition of the sample covariance (divisor `n − 1`).
pub fn pca_fit(cloud: &PointCloud, q: usize) -> Result<PcaModel> {
    let (n, d) = (cloud.len(), cloud.dim());
    if q == 0 || q > d {
        return Err(Error::domain(format!("need 1 <= q <= {d}, got q = {q}")));
    }
    if n < 2 {
        return Err(Error::domain(format!("need at least 2 points, got {n}")));
    }
    let x = DMatrix::from_row_slice(n, d, cloud.as_flat());
    let mean: DVector<f64> = x.row_mean().transpose();
    let mut centered = x;
    for mut row in centered.row_iter_mut() {
        row -= mean.transpose();
    }
    let cov = (centered.transpose() * &centered) / (n - 1) as f64;
    let eig = SymmetricEigen::new(cov);

    let mut order: Vec<usize> = (0..d).collect();
    order.sort_by(|&a, &b| {
        eig.eigenvalues[b]
            .total_cmp(&eig.eigenvalues[a])
            .then(a.cmp(&b))
    });
    let mut components = Vec::with_capacity(q);
    let mut explained_variance = Vec::with_capacity(q);
    for &i in order.iter().take(q) {
        let mut v: Vec<f64> = eig.eigenvectors.column(i).iter().copied().collect();
        let lead = v.iter().enumerate().fold(
            0,
            |best, (j, x)| if x.abs() > v[best].abs() { j } else { best },
        );
        if v[lead] < 0.0 {
            v.iter_mut().for_each(|x| *x = -*x);
        }
        components.push(v);
        explained_variance.push(eig.eigenvalues[i].max(0.0));
    }
    Ok(PcaModel {
        mean: mean.iter().copied().collect(),
        components,
        explained_variance,
    })
}

/// `(x − mean) · componentsᵀ` for every point.
pub fn pca_project(model: &PcaModel, cloud: &PointCloud) -> Result<PointCloud> {
    if cloud.dim() != model.input_dim() {
        return Err(Error::shape(format!(
            "model expects dimension {}, cloud has {}",
            model.input_dim(),
            cloud.dim()
        )));
    }
    let mut out = Vec::with_capacity(cloud.len() * model.output_dim());
    let mut centered = vec![0.0; model.input_dim()];
    for p in cloud.points() {
        for ((c, x), m) in centered.iter_mut().zip(p).zip(&model.mean) {
            *c = x - m;
        }
        out.extend(
            model
                .components
                .iter()
                .map(|comp| comp.iter().zip(&centered).map(|(a, b)| a * b).sum::<f64>()),
        );
    }
    PointCloud::from_flat(model.output_dim(), out)
}
