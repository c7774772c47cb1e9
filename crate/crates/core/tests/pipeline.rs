use std::fs;
use std::path::Path;
use std::time::Instant;

use topoprobe::mlp::Activation;
use topoprobe::pipeline::{run_experiment, ExperimentConfig, RunManifest, RunStatus};
use topoprobe::Error;

fn smoke(dir: &Path, activation: Activation) -> ExperimentConfig {
    let mut c = ExperimentConfig::default();
    c.torus.n_points = 100;
    c.noise.n_points = 100;
    c.train.epochs = 1;
    c.network.activation = activation;
    c.seed = 7;
    c.output_dir = dir.to_path_buf();
    c
}

fn read_manifest(dir: &Path) -> RunManifest {
    serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

#[test]
fn smoke_run_writes_everything_it_lists() {
    let tmp = tempfile::tempdir().unwrap();
    let start = Instant::now();
    let m = run_experiment(&smoke(tmp.path(), Activation::Relu)).unwrap();
    assert!(start.elapsed().as_secs_f64() < 10.0);
    assert_eq!(m.status, RunStatus::Ok);
    assert_eq!(read_manifest(tmp.path()), m);

    for f in &m.files {
        assert!(tmp.path().join(f).is_file(), "{f} missing");
    }
    let mut referenced = vec![m.data_projection.clone().unwrap()];
    let t = m.training.as_ref().unwrap();
    referenced.extend([t.history.clone(), t.model.clone()]);
    let d = m.data_diagram.as_ref().unwrap();
    referenced.extend([d.csv.clone(), d.svg.clone()]);
    for layer in &m.layers {
        referenced.extend([
            layer.representation.clone(),
            layer.assignment.clone(),
            layer.cluster_plot.clone(),
            layer.projection.clone(),
            layer.projection_plot.clone(),
        ]);
        for c in &layer.clusters {
            referenced.push(c.points.clone());
            if let Some(d) = &c.diagram {
                referenced.extend([d.csv.clone(), d.svg.clone()]);
                assert!(d.conserves_simplices);
            }
        }
        assert_eq!(
            layer.cluster_sizes.iter().sum::<usize>() + layer.noise_count,
            100
        );
        assert_eq!(
            layer.no_cluster_analyzed,
            layer.clusters.iter().all(|c| c.diagram.is_none())
        );
    }
    for f in referenced {
        assert!(m.files.contains(&f), "{f} not listed");
    }

    // three hidden layers analyzed, the output layer only extracted
    assert_eq!(m.layers.len(), 3);
    assert!(tmp.path().join("layers/4/representation.csv").is_file());
    assert!(!tmp.path().join("layers/4/clusters.csv").exists());
    for dir in ["data", "model", "layers", "diagrams", "projections"] {
        assert!(tmp.path().join(dir).is_dir(), "{dir}");
    }
    assert!(d.conserves_simplices);
    assert_eq!(d.essential_h0, 1);
    let stages: Vec<&str> = m.timings.iter().map(|t| t.stage.as_str()).collect();
    assert_eq!(
        stages,
        [
            "generate",
            "train",
            "extract",
            "analyze",
            "data_persistence"
        ]
    );
}

#[test]
fn repeated_runs_are_byte_identical() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_experiment(&smoke(a.path(), Activation::Tanh)).unwrap();
    let mut cb = smoke(b.path(), Activation::Tanh);
    cb.output_dir = b.path().to_path_buf();
    let mb = run_experiment(&cb).unwrap();
    assert_eq!(ma.files, mb.files);
    assert_eq!(ma.output_digest, mb.output_digest);
    for f in &ma.files {
        assert_eq!(
            fs::read(a.path().join(f)).unwrap(),
            fs::read(b.path().join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn seed_changes_the_outputs() {
    let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
    let ma = run_experiment(&smoke(a.path(), Activation::Relu)).unwrap();
    let mut cb = smoke(b.path(), Activation::Relu);
    cb.seed += 1;
    let mb = run_experiment(&cb).unwrap();
    assert_ne!(ma.output_digest, mb.output_digest);
    assert_ne!(ma.stage_seeds, mb.stage_seeds);
}

#[test]
fn failing_stage_is_named_in_error_and_manifest() {
    let tmp = tempfile::tempdir().unwrap();
    // a plain file where the model directory should go
    fs::write(tmp.path().join("model"), "").unwrap();
    let err = run_experiment(&smoke(tmp.path(), Activation::Relu)).unwrap_err();
    match err {
        Error::Stage { stage, .. } => assert_eq!(stage, "train"),
        other => panic!("unexpected error {other}"),
    }
    let m = read_manifest(tmp.path());
    assert_eq!(m.status, RunStatus::Failed);
    assert_eq!(m.failed_stage.as_deref(), Some("train"));
    assert!(m.error.is_some());
    // the generated data is kept
    assert!(m.files.contains(&"data/dataset.csv".to_string()));
    for f in &m.files {
        assert!(tmp.path().join(f).is_file());
    }
}

#[test]
fn invalid_config_is_rejected_before_running() {
    let tmp = tempfile::tempdir().unwrap();
    let mut c = smoke(tmp.path(), Activation::Relu);
    c.pca.components = 0;
    assert!(matches!(run_experiment(&c), Err(Error::ParameterDomain(_))));
    assert!(!tmp.path().join("manifest.json").exists());
}

#[test]
fn config_file_encodings_agree() {
    let tmp = tempfile::tempdir().unwrap();
    let c = smoke(tmp.path(), Activation::Tanh);
    let kv = tmp.path().join("run.conf");
    let json = tmp.path().join("run.json");
    fs::write(&kv, c.to_kv_string().unwrap()).unwrap();
    fs::write(&json, c.to_json_string().unwrap()).unwrap();
    assert_eq!(ExperimentConfig::load(&kv).unwrap(), c);
    assert_eq!(ExperimentConfig::load(&json).unwrap(), c);
}
