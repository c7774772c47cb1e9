use std::collections::VecDeque;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cloud::{squared_euclidean, PointCloud};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DbscanParams {
    pub eps: f64,
    /// Neighbors within `eps` (the point itself included) that make a core point.
    pub min_pts: usize,
}

impl DbscanParams {
    pub fn new(eps: f64, min_pts: usize) -> Result<Self> {
        let p = DbscanParams { eps, min_pts };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.eps > 0.0 && self.eps.is_finite()) {
            return Err(Error::domain(format!(
                "eps must be positive, got {}",
                self.eps
            )));
        }
        if self.min_pts == 0 {
            return Err(Error::domain("min_pts must be at least 1"));
        }
        Ok(())
    }
}

/// How `eps` is chosen for a given cloud.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum EpsPolicy {
    Fixed {
        eps: f64,
    },
    /// Quantile of the nearest-neighbor distances.
    NearestNeighborQuantile {
        quantile: f64,
    },
    /// Quantile of the core distances, i.e. the distance at which each point
    /// would become a core point for the given `min_pts`. A quantile `q`
    /// makes roughly a fraction `q` of the points core points.
    CoreDistanceQuantile {
        quantile: f64,
    },
}

impl Default for EpsPolicy {
    fn default() -> Self {
        EpsPolicy::CoreDistanceQuantile { quantile: 0.5 }
    }
}

impl EpsPolicy {
    pub fn validate(&self) -> Result<()> {
        match *self {
            EpsPolicy::Fixed { eps } => DbscanParams { eps, min_pts: 1 }.validate(),
            EpsPolicy::NearestNeighborQuantile { quantile }
            | EpsPolicy::CoreDistanceQuantile { quantile } => {
                if (0.0..=1.0).contains(&quantile) {
                    Ok(())
                } else {
                    Err(Error::domain(format!("quantile {quantile} outside [0, 1]")))
                }
            }
        }
    }
}

/// Distance from each point to its `k`-th nearest other point (clamped to the
/// farthest one when the cloud is small).
fn kth_neighbor_distances(cloud: &PointCloud, k: usize) -> Vec<f64> {
    let n = cloud.len();
    (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            let mut d: Vec<f64> = (0..n)
                .filter(|&j| j != i)
                .map(|j| squared_euclidean(p, cloud.point(j)))
                .collect();
            if d.is_empty() {
                return 0.0;
            }
            let at = k.clamp(1, d.len()) - 1;
            let (_, v, _) = d.select_nth_unstable_by(at, f64::total_cmp);
            v.sqrt()
        })
        .collect()
}

/// Nearest-rank quantile of `values`, ignoring zeros when positive values
/// exist so that duplicate points cannot force `eps = 0`.
fn positive_quantile(mut values: Vec<f64>, q: f64) -> f64 {
    values.sort_by(f64::total_cmp);
    let rank = ((q * values.len() as f64).ceil() as usize).clamp(1, values.len().max(1)) - 1;
    match values.get(rank) {
        Some(&v) if v > 0.0 => v,
        _ => values.iter().copied().find(|&v| v > 0.0).unwrap_or(1.0),
    }
}

/// Concrete DBSCAN parameters for `cloud` under `policy`.
pub fn resolve_eps(cloud: &PointCloud, policy: EpsPolicy, min_pts: usize) -> Result<DbscanParams> {
    policy.validate()?;
    let eps = match policy {
        EpsPolicy::Fixed { eps } => eps,
        EpsPolicy::NearestNeighborQuantile { quantile } => {
            positive_quantile(kth_neighbor_distances(cloud, 1), quantile)
        }
        EpsPolicy::CoreDistanceQuantile { quantile } => positive_quantile(
            kth_neighbor_distances(cloud, min_pts.saturating_sub(1).max(1)),
            quantile,
        ),
    };
    DbscanParams::new(eps, min_pts)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClusterAssignment {
    /// `-1` for noise, otherwise a cluster id in `0..k`.
    pub labels: Vec<i64>,
    pub k: usize,
}

impl ClusterAssignment {
    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn noise_count(&self) -> usize {
        self.labels.iter().filter(|&&l| l < 0).count()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k];
        for &l in &self.labels {
            if l >= 0 {
                sizes[l as usize] += 1;
            }
        }
        sizes
    }

    pub fn members(&self, cluster: usize) -> Vec<usize> {
        (0..self.labels.len())
            .filter(|&i| self.labels[i] == cluster as i64)
            .collect()
    }
}

/// Density-based clustering. Clusters are numbered in order of their first
/// core point; a border point reachable from several clusters joins the
/// lowest-numbered one.
pub fn dbscan(cloud: &PointCloud, params: &DbscanParams) -> Result<ClusterAssignment> {
    params.validate()?;
    let n = cloud.len();
    let eps2 = params.eps * params.eps;
    let neighbors: Vec<Vec<u32>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let p = cloud.point(i);
            (0..n as u32)
                .filter(|&j| squared_euclidean(p, cloud.point(j as usize)) <= eps2)
                .collect()
        })
        .collect();
    let core: Vec<bool> = neighbors
        .iter()
        .map(|nb| nb.len() >= params.min_pts)
        .collect();

    let mut labels = vec![-1i64; n];
    let mut queued = vec![false; n];
    let mut k = 0usize;
    let mut queue = VecDeque::new();
    for seed in 0..n {
        if !core[seed] || labels[seed] >= 0 {
            continue;
        }
        let id = k as i64;
        k += 1;
        labels[seed] = id;
        queued[seed] = true;
        queue.push_back(seed);
        while let Some(p) = queue.pop_front() {
            for &q in &neighbors[p] {
                let q = q as usize;
                if labels[q] < 0 {
                    labels[q] = id;
                }
                if core[q] && !queued[q] {
                    queued[q] = true;
                    queue.push_back(q);
                }
            }
        }
    }
    Ok(ClusterAssignment { labels, k })
}

/// One cluster mapped back to the points it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusterCloud {
    pub label: usize,
    /// Row indices into the original cloud.
    pub indices: Vec<usize>,
    pub cloud: PointCloud,
}

/// Splits `original` by cluster membership; noise is dropped.
pub fn project_clusters_to_data(
    assignment: &ClusterAssignment,
    original: &PointCloud,
) -> Result<Vec<ClusterCloud>> {
    if assignment.len() != original.len() {
        return Err(Error::shape(format!(
            "{} labels for {} points",
            assignment.len(),
            original.len()
        )));
    }
    Ok((0..assignment.k)
        .map(|c| {
            let indices = assignment.members(c);
            let cloud = original.select(&indices);
            ClusterCloud {
                label: c,
                indices,
                cloud,
            }
        })
        .collect())
}

/// `index,label` rows.
pub fn write_assignment_csv<W: Write>(assignment: &ClusterAssignment, writer: W) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    w.write_record(["index", "label"])?;
    for (i, l) in assignment.labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn blob(center: [f64; 2], n: usize, spread: f64) -> Vec<[f64; 2]> {
        (0..n)
            .map(|i| {
                let a = i as f64 * 2.399963;
                let r = spread * ((i + 1) as f64 / n as f64).sqrt();
                [center[0] + r * a.cos(), center[1] + r * a.sin()]
            })
            .collect()
    }

    #[test]
    fn two_separated_blobs() {
        let mut rows = blob([0.0, 0.0], 30, 1.0);
        rows.extend(blob([20.0, 0.0], 30, 1.0));
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let a = dbscan(&cloud, &DbscanParams::new(2.0, 4).unwrap()).unwrap();
        assert_eq!(a.k, 2);
        assert_eq!(a.noise_count(), 0);
        assert_eq!(a.sizes(), vec![30, 30]);
        assert!(a.labels[..30].iter().all(|&l| l == 0));
    }

    #[test]
    fn sparse_points_are_noise() {
        let rows: Vec<[f64; 2]> = (0..5).map(|i| [i as f64 * 10.0, 0.0]).collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let a = dbscan(&cloud, &DbscanParams::new(1.0, 10).unwrap()).unwrap();
        assert_eq!(a.k, 0);
        assert_eq!(a.noise_count(), 5);
    }

    #[test]
    fn grid_is_one_cluster() {
        // spacing 1, eps 1.1: every interior point sees 5 incl. itself,
        // corners see 3 and are border points of a connected core.
        let rows: Vec<[f64; 2]> = (0..100)
            .map(|i| [(i % 10) as f64, (i / 10) as f64])
            .collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let a = dbscan(&cloud, &DbscanParams::new(1.1, 4).unwrap()).unwrap();
        assert_eq!(a.k, 1);
        assert_eq!(a.noise_count(), 0);
    }

    #[test]
    fn border_point_joins_lower_cluster() {
        // two chains of core points with a shared border point in the middle
        let mut rows: Vec<[f64; 1]> = (0..5).map(|i| [i as f64 * 0.25]).collect();
        // border point, exactly eps from both chain ends
        rows.push([2.0]);
        rows.extend((0..5).map(|i| [3.0 + i as f64 * 0.25]));
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let a = dbscan(&cloud, &DbscanParams::new(1.0, 4).unwrap()).unwrap();
        assert_eq!(a.k, 2);
        assert_eq!(a.labels, vec![0, 0, 0, 0, 0, 0, 1, 1, 1, 1, 1]);
    }

    #[test]
    fn invalid_params() {
        assert!(DbscanParams::new(0.0, 3).is_err());
        assert!(DbscanParams::new(1.0, 0).is_err());
        assert!(EpsPolicy::CoreDistanceQuantile { quantile: 1.5 }
            .validate()
            .is_err());
    }

    #[test]
    fn projection_partitions() {
        let rows: Vec<[f64; 1]> = (0..6).map(|i| [i as f64]).collect();
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let a = ClusterAssignment {
            labels: vec![0, 1, -1, 0, 1, 1],
            k: 2,
        };
        let parts = project_clusters_to_data(&a, &cloud).unwrap();
        assert_eq!(parts[0].indices, vec![0, 3]);
        assert_eq!(parts[1].cloud.as_flat(), &[1.0, 4.0, 5.0]);
        let short = ClusterAssignment {
            labels: vec![0],
            k: 1,
        };
        assert!(project_clusters_to_data(&short, &cloud).is_err());
    }

    #[test]
    fn eps_from_duplicates_stays_positive() {
        let rows = vec![[0.0, 0.0]; 20];
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let p = resolve_eps(&cloud, EpsPolicy::default(), 10).unwrap();
        assert!(p.eps > 0.0);
        let a = dbscan(&cloud, &p).unwrap();
        assert_eq!(a.k, 1);
    }

    #[test]
    fn assignment_csv() {
        let a = ClusterAssignment {
            labels: vec![0, -1],
            k: 1,
        };
        let mut buf = Vec::new();
        write_assignment_csv(&a, &mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap(), "index,label\n0,0\n1,-1\n");
    }
}
