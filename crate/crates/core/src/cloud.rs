//! Point clouds and their CSV encoding.

use std::io::{Read, Write};

use crate::error::{Error, Result};

/// `n` points in `d`-dimensional Euclidean space, stored row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    dim: usize,
    data: Vec<f64>,
}

impl PointCloud {
    /// An empty cloud of ambient dimension `dim`.
    pub fn empty(dim: usize) -> Self {
        assert!(dim >= 1, "ambient dimension must be at least 1");
        Self {
            dim,
            data: Vec::new(),
        }
    }

    pub fn from_flat(dim: usize, data: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::domain("ambient dimension must be at least 1"));
        }
        if !data.len().is_multiple_of(dim) {
            return Err(Error::shape(format!(
                "{} coordinates do not divide into rows of width {dim}",
                data.len()
            )));
        }
        if let Some(pos) = data.iter().position(|v| !v.is_finite()) {
            return Err(Error::domain(format!(
                "non-finite coordinate at row {}, column {}",
                pos / dim,
                pos % dim
            )));
        }
        Ok(Self { dim, data })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let Some(first) = rows.first() else {
            return Err(Error::domain(
                "cannot infer the dimension of an empty row list",
            ));
        };
        let dim = first.as_ref().len();
        let mut data = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(Error::shape(format!(
                    "row {i} has {} coordinates, expected {dim}",
                    row.len()
                )));
            }
            data.extend_from_slice(row);
        }
        Self::from_flat(dim, data)
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.data.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.data[i * self.dim..(i + 1) * self.dim]
    }

    pub fn points(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.data.chunks_exact(self.dim)
    }

    pub fn as_flat(&self) -> &[f64] {
        &self.data
    }

    /// Appends a point. Panics if the width differs or a coordinate is not finite.
    pub fn push(&mut self, point: &[f64]) {
        assert_eq!(point.len(), self.dim, "point width mismatch");
        assert!(point.iter().all(|v| v.is_finite()), "non-finite coordinate");
        self.data.extend_from_slice(point);
    }

    /// The sub-cloud of the given rows, in the given order.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let mut data = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            data.extend_from_slice(self.point(i));
        }
        PointCloud {
            dim: self.dim,
            data,
        }
    }

    pub fn scaled(&self, factor: f64) -> PointCloud {
        PointCloud {
            dim: self.dim,
            data: self.data.iter().map(|v| v * factor).collect(),
        }
    }

    /// Per-dimension `(min, max)` over all points, or `None` for an empty cloud.
    pub fn bounds(&self) -> Option<Vec<(f64, f64)>> {
        if self.is_empty() {
            return None;
        }
        let mut out = vec![(f64::INFINITY, f64::NEG_INFINITY); self.dim];
        for p in self.points() {
            for (b, &v) in out.iter_mut().zip(p) {
                b.0 = b.0.min(v);
                b.1 = b.1.max(v);
            }
        }
        Some(out)
    }

    pub fn write_csv<W: Write>(&self, writer: W) -> Result<()> {
        write_points_csv(self, None, writer)
    }

    pub fn read_csv<R: Read>(reader: R) -> Result<Self> {
        Ok(read_points_csv(reader)?.0)
    }
}

pub(crate) fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    squared_euclidean(a, b).sqrt()
}

pub(crate) fn squared_euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Writes `x0,x1,...` rows, with a trailing `label` column when labels are given.
pub fn write_points_csv<W: Write>(
    cloud: &PointCloud,
    labels: Option<&[u8]>,
    writer: W,
) -> Result<()> {
    if let Some(labels) = labels {
        if labels.len() != cloud.len() {
            return Err(Error::shape(format!(
                "{} labels for {} points",
                labels.len(),
                cloud.len()
            )));
        }
    }
    let mut w = csv::Writer::from_writer(writer);
    let mut header: Vec<String> = (0..cloud.dim()).map(|i| format!("x{i}")).collect();
    if labels.is_some() {
        header.push("label".into());
    }
    w.write_record(&header)?;
    let mut record = Vec::with_capacity(header.len());
    for (i, p) in cloud.points().enumerate() {
        record.clear();
        record.extend(p.iter().map(|v| v.to_string()));
        if let Some(labels) = labels {
            record.push(labels[i].to_string());
        }
        w.write_record(&record)?;
    }
    w.flush()?;
    Ok(())
}

/// Reads a point CSV; a final `label` column, if present, is returned separately.
pub fn read_points_csv<R: Read>(reader: R) -> Result<(PointCloud, Option<Vec<u8>>)> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let has_label = headers.iter().next_back() == Some("label");
    let dim = headers.len() - usize::from(has_label);
    if dim == 0 {
        return Err(Error::Parse("point CSV has no coordinate columns".into()));
    }
    for (i, h) in headers.iter().take(dim).enumerate() {
        if h != format!("x{i}") {
            return Err(Error::Parse(format!("unexpected column header `{h}`")));
        }
    }
    let mut data = Vec::new();
    let mut labels = has_label.then(Vec::new);
    for (row, rec) in r.records().enumerate() {
        let rec = rec?;
        for field in rec.iter().take(dim) {
            let v: f64 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad coordinate `{field}`")))?;
            data.push(v);
        }
        if let Some(labels) = labels.as_mut() {
            let field = &rec[dim];
            let l: u8 = field
                .trim()
                .parse()
                .map_err(|_| Error::Parse(format!("row {row}: bad label `{field}`")))?;
            labels.push(l);
        }
    }
    Ok((PointCloud::from_flat(dim, data)?, labels))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite() {
        assert!(PointCloud::from_flat(2, vec![0.0, f64::NAN]).is_err());
        assert!(PointCloud::from_rows(&[[1.0, 2.0], [f64::INFINITY, 0.0]]).is_err());
    }

    #[test]
    fn ragged_rows_are_a_shape_error() {
        let rows = vec![vec![1.0, 2.0], vec![3.0]];
        assert!(matches!(PointCloud::from_rows(&rows), Err(Error::Shape(_))));
    }

    #[test]
    fn csv_keeps_labels_and_exact_values() {
        let cloud = PointCloud::from_rows(&[[0.1, -2.5], [1e-17, 3.0]]).unwrap();
        let mut buf = Vec::new();
        write_points_csv(&cloud, Some(&[1, 0]), &mut buf).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("x0,x1,label\n"));
        let (back, labels) = read_points_csv(&buf[..]).unwrap();
        assert_eq!(back, cloud);
        assert_eq!(labels, Some(vec![1, 0]));
    }

    #[test]
    fn empty_cloud_round_trips_with_width() {
        let cloud = PointCloud::empty(4);
        let mut buf = Vec::new();
        cloud.write_csv(&mut buf).unwrap();
        let back = PointCloud::read_csv(&buf[..]).unwrap();
        assert_eq!(back.dim(), 4);
        assert!(back.is_empty());
    }
}
