use std::collections::HashMap;

use proptest::prelude::*;

use topoprobe::analysis::{
    dbscan, pca_fit, pca_project, project_clusters_to_data, resolve_eps, DbscanParams, EpsPolicy,
};
use topoprobe::PointCloud;

fn cloud(max_n: usize, dim: usize) -> impl Strategy<Value = PointCloud> {
    prop::collection::vec(-3.0f64..3.0, dim..=max_n * dim).prop_map(move |mut flat| {
        flat.truncate(flat.len() / dim * dim);
        PointCloud::from_flat(dim, flat).unwrap()
    })
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

fn core_points(c: &PointCloud, p: &DbscanParams) -> Vec<bool> {
    (0..c.len())
        .map(|i| {
            (0..c.len())
                .filter(|&j| dist(c.point(i), c.point(j)) <= p.eps)
                .count()
                >= p.min_pts
        })
        .collect()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(96))]

    #[test]
    fn clusters_partition_the_points(c in cloud(60, 2), eps in 0.1f64..1.5, min_pts in 1usize..6) {
        let p = DbscanParams::new(eps, min_pts).unwrap();
        let a = dbscan(&c, &p).unwrap();
        prop_assert_eq!(a.len(), c.len());
        prop_assert!(a.labels.iter().all(|&l| l >= -1 && l < a.k as i64));
        let sizes = a.sizes();
        prop_assert!(sizes.iter().all(|&s| s > 0));
        prop_assert_eq!(sizes.iter().sum::<usize>() + a.noise_count(), c.len());

        let core = core_points(&c, &p);
        for i in 0..c.len() {
            let near_core = (0..c.len())
                .any(|j| core[j] && dist(c.point(i), c.point(j)) <= eps);
            // noise exactly when no core point is within reach
            prop_assert_eq!(a.labels[i] < 0, !near_core);
            // core points within eps of each other share a cluster
            if core[i] {
                for (j, &is_core) in core.iter().enumerate() {
                    if is_core && dist(c.point(i), c.point(j)) <= eps {
                        prop_assert_eq!(a.labels[i], a.labels[j]);
                    }
                }
            }
        }

        let parts = project_clusters_to_data(&a, &c).unwrap();
        let mut seen = vec![false; c.len()];
        for part in &parts {
            prop_assert_eq!(part.cloud.len(), part.indices.len());
            for (k, &i) in part.indices.iter().enumerate() {
                prop_assert!(!seen[i]);
                seen[i] = true;
                prop_assert_eq!(part.cloud.point(k), c.point(i));
                prop_assert_eq!(a.labels[i], part.label as i64);
            }
        }
    }

    #[test]
    fn shuffling_rows_relabels_clusters(
        c in cloud(50, 2),
        keys in prop::collection::vec(any::<u32>(), 50),
        eps in 0.2f64..1.2,
    ) {
        let p = DbscanParams::new(eps, 3).unwrap();
        let mut order: Vec<usize> = (0..c.len()).collect();
        order.sort_by_key(|&i| (keys[i], i));
        let a = dbscan(&c, &p).unwrap();
        let b = dbscan(&c.select(&order), &p).unwrap();
        prop_assert_eq!(a.k, b.k);
        // Core points and noise are order-independent; a border point that
        // touches two clusters may legitimately switch between them.
        let core = core_points(&c, &p);
        let mut map: HashMap<i64, i64> = HashMap::new();
        for (new, &old) in order.iter().enumerate() {
            prop_assert_eq!(a.labels[old] < 0, b.labels[new] < 0);
            if core[old] {
                let m = *map.entry(a.labels[old]).or_insert(b.labels[new]);
                prop_assert_eq!(m, b.labels[new]);
            }
        }
        let mut targets: Vec<i64> = map.values().copied().collect();
        targets.sort_unstable();
        targets.dedup();
        prop_assert_eq!(targets.len(), map.len());
    }

    #[test]
    fn resolved_eps_is_valid(c in cloud(40, 3), q in 0.0f64..=1.0, min_pts in 1usize..12) {
        for policy in [
            EpsPolicy::NearestNeighborQuantile { quantile: q },
            EpsPolicy::CoreDistanceQuantile { quantile: q },
        ] {
            let p = resolve_eps(&c, policy, min_pts).unwrap();
            prop_assert!(p.eps > 0.0 && p.eps.is_finite());
            prop_assert_eq!(p.min_pts, min_pts);
        }
    }

    #[test]
    fn pca_axes_are_orthonormal_and_sorted(c in cloud(40, 5), q in 1usize..=5) {
        prop_assume!(c.len() >= 2);
        let m = pca_fit(&c, q).unwrap();
        prop_assert_eq!(m.components.len(), q);
        for i in 0..q {
            for j in 0..q {
                let dot: f64 = m.components[i].iter().zip(&m.components[j]).map(|(a, b)| a * b).sum();
                let want = if i == j { 1.0 } else { 0.0 };
                prop_assert!((dot - want).abs() < 1e-8);
            }
            let lead = m.components[i]
                .iter()
                .copied()
                .fold(0.0f64, |best, x| if x.abs() > best.abs() { x } else { best });
            prop_assert!(lead > 0.0);
        }
        prop_assert!(m.explained_variance.iter().all(|&v| v >= 0.0));
        prop_assert!(m.explained_variance.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn projection_matches_variance_and_shrinks_distances(c in cloud(40, 4), q in 1usize..=4) {
        prop_assume!(c.len() >= 2);
        let m = pca_fit(&c, q).unwrap();
        let y = pca_project(&m, &c).unwrap();
        let n = y.len() as f64;
        for k in 0..q {
            let mean = y.points().map(|p| p[k]).sum::<f64>() / n;
            prop_assert!(mean.abs() < 1e-9);
            let var = y.points().map(|p| (p[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            prop_assert!((var - m.explained_variance[k]).abs() < 1e-8 * (1.0 + var));
        }
        for i in 0..c.len() {
            for j in 0..i {
                prop_assert!(dist(y.point(i), y.point(j)) <= dist(c.point(i), c.point(j)) + 1e-9);
            }
        }
    }
}

#[test]
fn isotropic_data_has_unit_variances() {
    use rand::SeedableRng;
    use rand_distr::{Distribution, StandardNormal};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
    let flat: Vec<f64> = (0..10_000 * 3)
        .map(|_| StandardNormal.sample(&mut rng))
        .collect();
    let m = pca_fit(&PointCloud::from_flat(3, flat).unwrap(), 3).unwrap();
    for v in m.explained_variance {
        assert!((v - 1.0).abs() < 0.2, "variance {v}");
    }
}
