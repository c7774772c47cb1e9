use proptest::prelude::*;

use topoprobe::filtration::{covering_radius, maxmin_landmarks};
use topoprobe::geometry::{
    assemble_dataset, sample_twisted_torus, sample_uniform_noise, NoiseParams, Sampling,
    TwistedTorusParams,
};
use topoprobe::mlp::{
    architecture, extract_representations, train, Activation, NetworkParams, TrainConfig,
};
use topoprobe::PointCloud;

fn activation() -> impl Strategy<Value = Activation> {
    prop_oneof![
        Just(Activation::Relu),
        Just(Activation::Tanh),
        Just(Activation::Sigmoid)
    ]
}

fn rows_sorted(c: &PointCloud) -> Vec<Vec<u64>> {
    let mut v: Vec<Vec<u64>> = c
        .points()
        .map(|p| p.iter().map(|x| x.to_bits()).collect())
        .collect();
    v.sort();
    v
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn torus_points_satisfy_the_parametrization(
        r in 2.5f64..8.0,
        p in 0.2f64..1.2,
        n in 1usize..300,
        seed in any::<u64>(),
    ) {
        let params = TwistedTorusParams {
            major_radius: r,
            tube_scale: p,
            n_points: n,
            sampling: Sampling::UniformRandom { seed },
        };
        let cloud = sample_twisted_torus(&params).unwrap();
        prop_assert_eq!(cloud.len(), n);
        for q in cloud.points() {
            let radial = (q[0] * q[0] + q[1] * q[1]).sqrt() - r;
            let vertical = q[2] * q[2] + q[3] * q[3];
            // radial = 2P cos θ and vertical = (2P sin θ)²
            prop_assert!((radial * radial + vertical - 4.0 * p * p).abs() < 1e-9 * (1.0 + r * r));
        }
        prop_assert_eq!(sample_twisted_torus(&params).unwrap(), cloud);
    }

    #[test]
    fn assembling_keeps_every_row_and_label(n_m in 1usize..80, n_n in 1usize..80, seed in any::<u64>()) {
        let manifold = sample_twisted_torus(&TwistedTorusParams {
            n_points: n_m,
            sampling: Sampling::UniformRandom { seed },
            ..Default::default()
        })
        .unwrap();
        let noise = sample_uniform_noise(&NoiseParams {
            n_points: n_n,
            bounds: vec![(-1.0, 1.0); 4],
            seed: seed ^ 1,
        })
        .unwrap();
        let d = assemble_dataset(&manifold, &noise, seed).unwrap();
        prop_assert_eq!(d.len(), n_m + n_n);
        prop_assert_eq!(d.positives(), n_m);
        let ones = d.cloud.select(&d.indices_with_label(1));
        let zeros = d.cloud.select(&d.indices_with_label(0));
        prop_assert_eq!(rows_sorted(&ones), rows_sorted(&manifold));
        prop_assert_eq!(rows_sorted(&zeros), rows_sorted(&noise));
    }

    #[test]
    fn representations_stay_in_their_codomain(
        act in activation(),
        hidden in prop::collection::vec(1usize..12, 1..4),
        seed in any::<u64>(),
        flat in prop::collection::vec(-5.0f64..5.0, 4..=64),
    ) {
        let flat = flat[..flat.len() / 4 * 4].to_vec();
        let input = PointCloud::from_flat(4, flat).unwrap();
        let params = NetworkParams::init(&architecture(4, &hidden, act), seed).unwrap();
        let reps = extract_representations(&params, &input).unwrap();
        prop_assert_eq!(reps.len(), hidden.len() + 1);
        for rep in &reps {
            prop_assert_eq!(rep.values.len(), input.len());
            let ok = |v: f64| match rep.activation {
                Activation::Relu => v >= 0.0,
                Activation::Tanh => v > -1.0 && v < 1.0,
                Activation::Sigmoid => v > 0.0 && v < 1.0,
            };
            prop_assert!(rep.values.as_flat().iter().all(|&v| ok(v)));
        }
        prop_assert_eq!(reps.last().unwrap().activation, Activation::Sigmoid);
    }

    #[test]
    fn landmark_cover_tightens_with_more_landmarks(
        rows in prop::collection::vec(prop::array::uniform2(-1.0f64..1.0), 10..60),
        start in any::<prop::sample::Index>(),
    ) {
        let cloud = PointCloud::from_rows(&rows).unwrap();
        let start = start.index(cloud.len());
        let mut last = f64::INFINITY;
        for k in 1..=cloud.len().min(20) {
            let l = maxmin_landmarks(&cloud, k, start).unwrap();
            let r = covering_radius(&cloud, &l);
            prop_assert!(r <= last);
            last = r;
        }
    }
}

#[test]
fn training_is_reproducible() {
    let manifold = sample_twisted_torus(&TwistedTorusParams {
        n_points: 150,
        ..Default::default()
    })
    .unwrap();
    let noise = sample_uniform_noise(&NoiseParams {
        n_points: 150,
        bounds: vec![(-6.0, 6.0); 4],
        seed: 3,
    })
    .unwrap();
    let data = assemble_dataset(&manifold, &noise, 4).unwrap();
    let arch = architecture(4, &[6, 4], Activation::Tanh);
    let cfg = TrainConfig {
        epochs: 5,
        seed: 11,
        ..Default::default()
    };
    let a = train(&data, &arch, &cfg).unwrap();
    let b = train(&data, &arch, &cfg).unwrap();
    assert_eq!(a.params, b.params);
    assert_eq!(a.history, b.history);
    assert!(a.history.last().unwrap().loss < a.history.first().unwrap().loss);
}
