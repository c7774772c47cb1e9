//! Acceptance checks, one function per criterion.
//!
//! Each check runs the real pipeline pieces at full size and returns a
//! [`Verdict`] instead of panicking, so a runner can report every criterion
//! even when some fail.

use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::time::Instant;

use rand::Rng;

use topoprobe::filtration::{build_distance_matrix, rips_filtration, RipsOptions};
use topoprobe::geometry::{sample_twisted_torus, LabeledDataset};
use topoprobe::mlp::{
    architecture, binary_cross_entropy, forward, gradients, Activation, NetworkParams,
};
use topoprobe::persistence::{compute_persistence, oracle_betti, Algorithm};
use topoprobe::pipeline::{
    cloud_diagram, generate, run_experiment, train_network, validate_shapes, ExperimentConfig,
    RunManifest, RunStatus, StageSeeds,
};
use topoprobe::rng::seeded;
use topoprobe::{Error, PointCloud, Result};

#[derive(Debug, Clone)]
pub struct Verdict {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
}

impl Verdict {
    fn new(id: u32, name: &'static str, passed: bool, detail: String) -> Self {
        Verdict {
            id,
            name,
            passed,
            detail,
        }
    }

    pub fn line(&self) -> String {
        format!(
            "{} criterion {} ({}): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.detail
        )
    }
}

/// Diagrams gathered along the way, for the conservation criterion.
#[derive(Debug, Default)]
pub struct Ledger {
    /// (where, conserves)
    pub diagrams: Vec<(String, bool)>,
}

impl Ledger {
    fn record(&mut self, label: impl Into<String>, conserves: bool) {
        self.diagrams.push((label.into(), conserves));
    }

    fn record_manifest(&mut self, tag: &str, m: &RunManifest) {
        if let Some(d) = &m.data_diagram {
            self.record(format!("{tag}:{}", d.csv), d.conserves_simplices);
        }
        for layer in &m.layers {
            for c in &layer.clusters {
                if let Some(d) = &c.diagram {
                    self.record(format!("{tag}:{}", d.csv), d.conserves_simplices);
                }
            }
        }
    }
}

/// Raw twisted-torus data: one essential H0 class and two H1 bars that
/// stand out from the rest by a factor of three.
pub fn raw_data_topology(seed: u64, ledger: &mut Ledger) -> Result<Verdict> {
    let config = ExperimentConfig {
        seed,
        ..Default::default()
    };
    let seeds = StageSeeds::derive(seed);
    let start = Instant::now();
    let cloud = sample_twisted_torus(&config.torus_params(seeds.manifold))?;
    let cp = cloud_diagram(&cloud, &config.filtration, seeds.landmarks)?;
    let secs = start.elapsed().as_secs_f64();
    ledger.record("twisted torus", cp.result.conserves_simplices());

    let d = &cp.result.diagram;
    let infinite_h0 = d.essential_count(0);
    let mut h1: Vec<f64> = d
        .in_dim(1)
        .filter(|p| !p.is_essential())
        .map(|p| p.persistence())
        .collect();
    h1.sort_by(|a, b| b.total_cmp(a));
    let ratio = match (h1.get(1), h1.get(2)) {
        (Some(&second), Some(&third)) if third > 0.0 => second / third,
        (Some(_), _) => f64::INFINITY,
        _ => 0.0,
    };
    let passed = infinite_h0 == 1 && ratio >= 3.0 && secs <= 60.0;
    let top: Vec<String> = h1.iter().take(4).map(|x| format!("{x:.3}")).collect();
    Ok(Verdict::new(
        1,
        "raw-data topology",
        passed,
        format!(
            "{} landmarks of {} points, {} simplices; infinite H0 bars {infinite_h0}; \
             longest finite H1 [{}]; 2nd/3rd ratio {ratio:.2} (need >= 3); {secs:.1} s (limit 60)",
            cp.vertices.len(),
            cloud.len(),
            cp.result.n_simplices,
            top.join(", ")
        ),
    ))
}

/// Circle, sphere and torus read off at mid-scale.
pub fn validation_shapes(seed: u64) -> Result<Verdict> {
    let checks = validate_shapes(seed, Algorithm::default())?;
    let parts: Vec<String> = checks
        .iter()
        .map(|c| {
            format!(
                "{:?} expected {:?} got {:?}",
                c.shape, c.expected, c.observed
            )
        })
        .collect();
    Ok(Verdict::new(
        2,
        "validation shapes",
        checks.iter().all(|c| c.passed),
        parts.join("; "),
    ))
}

fn random_small_cloud(rng: &mut impl Rng) -> Result<PointCloud> {
    let n = rng.gen_range(2..=8);
    let dim = rng.gen_range(1..=3);
    let grid = rng.gen_bool(0.5);
    let flat = (0..n * dim)
        .map(|_| {
            if grid {
                f64::from(rng.gen_range(-2i32..=2))
            } else {
                rng.gen_range(-1.0..1.0)
            }
        })
        .collect();
    PointCloud::from_flat(dim, flat)
}

/// Reduction engine against the rank-nullity oracle on small clouds.
pub fn oracle_equivalence(n_clouds: usize, seed: u64, ledger: &mut Ledger) -> Result<Verdict> {
    let mut rng = seeded(seed);
    let mut comparisons = 0usize;
    let mut mismatches = Vec::new();
    let mut conserved = true;
    for case in 0..n_clouds {
        let cloud = random_small_cloud(&mut rng)?;
        let filt = rips_filtration(
            &build_distance_matrix(&cloud),
            &RipsOptions {
                max_dim: 2,
                threshold: f64::INFINITY,
                ..Default::default()
            },
        )?;
        let mut scales: Vec<f64> = filt.simplices.iter().map(|s| s.diameter()).collect();
        scales.dedup();
        for alg in [Algorithm::Standard, Algorithm::Cohomology] {
            let r = compute_persistence(&filt, alg)?;
            conserved &= r.conserves_simplices();
            for &t in &scales {
                comparisons += 1;
                let engine = r.diagram.betti_at(t)?.betti;
                let oracle = oracle_betti(&filt, t)?.betti;
                if engine != oracle {
                    mismatches.push(format!(
                        "cloud {case} {alg:?} t={t}: {engine:?} vs {oracle:?}"
                    ));
                }
            }
        }
    }
    ledger.record(format!("{n_clouds} oracle clouds"), conserved);
    let mut detail = format!(
        "{n_clouds} clouds, {comparisons} scale comparisons, {} mismatches",
        mismatches.len()
    );
    if let Some(first) = mismatches.first() {
        detail.push_str(&format!(" (first: {first})"));
    }
    Ok(Verdict::new(
        3,
        "oracle equivalence",
        n_clouds >= 100 && mismatches.is_empty(),
        detail,
    ))
}

/// The default ReLU network on the default dataset, over several seeds.
pub fn training_accuracy(seeds: &[u64]) -> Result<Verdict> {
    let start = Instant::now();
    let mut accuracies = Vec::new();
    for &seed in seeds {
        let config = ExperimentConfig {
            seed,
            ..Default::default()
        };
        let data = generate(&config)?;
        let outcome = train_network(&config, &data.dataset)?;
        accuracies.push((
            seed,
            data.dataset.len(),
            outcome.history.len(),
            outcome.final_accuracy().unwrap_or(0.0),
        ));
    }
    let secs = start.elapsed().as_secs_f64();
    let good = accuracies.iter().filter(|a| a.3 >= 0.95).count();
    let per_seed: Vec<String> = accuracies
        .iter()
        .map(|(s, n, e, a)| format!("seed {s}: {a:.4} ({n} points, {e} epochs)"))
        .collect();
    Ok(Verdict::new(
        4,
        "training accuracy",
        good >= 3 && secs <= 600.0,
        format!(
            "{good}/{} seeds >= 0.95 (need 3); {}; {secs:.1} s (limit 600)",
            seeds.len(),
            per_seed.join(", ")
        ),
    ))
}

fn loss(params: &NetworkParams, batch: &LabeledDataset) -> Result<f64> {
    Ok(binary_cross_entropy(
        &forward(params, &batch.cloud)?.output,
        &batch.labels,
    ))
}

/// Backpropagation against central differences on random small networks.
pub fn gradient_check(n_networks: usize, seed: u64) -> Result<Verdict> {
    const H: f64 = 1e-5;
    let mut rng = seeded(seed);
    let mut worst: f64 = 0.0;
    for k in 0..n_networks {
        let input = rng.gen_range(1..=4);
        let hidden: Vec<usize> = (0..rng.gen_range(1..=3))
            .map(|_| rng.gen_range(1..=6))
            .collect();
        let act = [Activation::Relu, Activation::Tanh, Activation::Sigmoid][k % 3];
        let mut params = NetworkParams::init(&architecture(input, &hidden, act), rng.gen())?;
        // Random biases too: with the zero-bias init a dead upstream ReLU
        // puts the next pre-activation exactly on the kink.
        let flat: Vec<f64> = (0..params.param_count())
            .map(|_| rng.gen_range(-1.0..1.0))
            .collect();
        params.assign_from(&flat)?;
        let n = rng.gen_range(4..=24);
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..input).map(|_| rng.gen_range(-2.0..2.0)).collect())
            .collect();
        let labels = (0..n).map(|_| rng.gen_range(0..=1u8)).collect();
        let batch = LabeledDataset::new(PointCloud::from_rows(&rows)?, labels)?;

        let analytic = gradients(&params, &batch)?.to_vec();
        let base = params.to_vec();
        for (i, &a) in analytic.iter().enumerate() {
            let mut shifted = params.clone();
            let mut flat = base.clone();
            flat[i] = base[i] + H;
            shifted.assign_from(&flat)?;
            let plus = loss(&shifted, &batch)?;
            flat[i] = base[i] - H;
            shifted.assign_from(&flat)?;
            let minus = loss(&shifted, &batch)?;
            let numeric = (plus - minus) / (2.0 * H);
            // relative to the gradient scale, floored so that exact zeros
            // (dead ReLU units) compare absolutely
            let rel = (a - numeric).abs() / a.abs().max(numeric.abs()).max(1e-3);
            worst = worst.max(rel);
        }
    }
    Ok(Verdict::new(
        5,
        "gradient check",
        worst < 1e-5,
        format!("{n_networks} networks, worst relative error {worst:.2e} (need < 1e-5)"),
    ))
}

fn run_in(dir: &Path, activation: Activation, seed: u64) -> Result<RunManifest> {
    let mut config = ExperimentConfig {
        seed,
        output_dir: dir.to_path_buf(),
        ..Default::default()
    };
    config.network.activation = activation;
    run_experiment(&config)
}

fn diagram_csvs(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    fs::read_dir(dir.join("diagrams"))
        .map(|entries| {
            entries
                .flatten()
                .filter(|e| e.path().extension().is_some_and(|x| x == "csv"))
                .map(|e| {
                    (
                        e.file_name().to_string_lossy().into_owned(),
                        fs::read(e.path()).unwrap_or_default(),
                    )
                })
                .collect()
        })
        .unwrap_or_default()
}

/// Full runs of both activation variants, then a repeat of the first.
pub fn pipeline_runs(seed: u64, ledger: &mut Ledger) -> Result<(Verdict, Verdict)> {
    let relu_dir = tempfile::tempdir()?;
    let tanh_dir = tempfile::tempdir()?;
    let repeat_dir = tempfile::tempdir()?;

    let mut parts = Vec::new();
    let mut emitted = true;
    let mut layer3_recorded = false;
    let mut relu = None;
    for (act, dir) in [
        (Activation::Relu, relu_dir.path()),
        (Activation::Tanh, tanh_dir.path()),
    ] {
        let start = Instant::now();
        let m = run_in(dir, act, seed)?;
        ledger.record_manifest(act.name(), &m);
        let on_disk: RunManifest = reload_manifest(dir)?;
        let mut per_layer = Vec::new();
        for layer in m.layers.iter().filter(|l| l.index <= 2) {
            let diagrams: Vec<_> = layer
                .clusters
                .iter()
                .filter_map(|c| c.diagram.as_ref())
                .collect();
            let exist = diagrams
                .iter()
                .all(|d| dir.join(&d.csv).is_file() && dir.join(&d.svg).is_file());
            emitted &= !diagrams.is_empty() && exist;
            per_layer.push(format!("layer {} {} diagrams", layer.index, diagrams.len()));
        }
        emitted &= m.status == RunStatus::Ok && per_layer.len() == 2;
        if act == Activation::Relu {
            if let Some(l3) = on_disk.layers.iter().find(|l| l.index == 3) {
                layer3_recorded = true;
                per_layer.push(format!(
                    "layer 3 no cluster analyzed: {} (clusters {:?}, {} skipped)",
                    l3.no_cluster_analyzed,
                    l3.cluster_sizes,
                    l3.skipped_clusters.len()
                ));
            }
            relu = Some(m);
        }
        parts.push(format!(
            "{}: {} [{:.0} s]",
            act.name(),
            per_layer.join(", "),
            start.elapsed().as_secs_f64()
        ));
    }
    let six = Verdict::new(
        6,
        "per-layer diagrams",
        emitted && layer3_recorded,
        parts.join("; "),
    );

    let first = relu.expect("relu run recorded");
    let again = run_in(repeat_dir.path(), Activation::Relu, seed)?;
    ledger.record_manifest("relu repeat", &again);
    let a = diagram_csvs(relu_dir.path());
    let b = diagram_csvs(repeat_dir.path());
    let differing = a
        .iter()
        .filter(|(name, bytes)| b.get(*name) != Some(bytes))
        .count()
        + b.keys().filter(|k| !a.contains_key(*k)).count();
    let seven = Verdict::new(
        7,
        "determinism",
        !a.is_empty() && differing == 0 && first.output_digest == again.output_digest,
        format!(
            "{} diagram CSVs, {differing} differ; output digests {}",
            a.len(),
            if first.output_digest == again.output_digest {
                "equal"
            } else {
                "differ"
            }
        ),
    );
    Ok((six, seven))
}

/// The manifest as written to disk.
fn reload_manifest(dir: &Path) -> Result<RunManifest> {
    let text = fs::read_to_string(dir.join("manifest.json"))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse(e.to_string()))
}

pub fn conservation(ledger: &Ledger) -> Verdict {
    let broken: Vec<&str> = ledger
        .diagrams
        .iter()
        .filter(|d| !d.1)
        .map(|d| d.0.as_str())
        .collect();
    let mut detail = format!(
        "{} diagrams checked, {} violate 2*pairs + essential = simplices",
        ledger.diagrams.len(),
        broken.len()
    );
    if !broken.is_empty() {
        detail.push_str(&format!(" ({})", broken.join(", ")));
    }
    Verdict::new(
        8,
        "simplex conservation",
        !ledger.diagrams.is_empty() && broken.is_empty(),
        detail,
    )
}
