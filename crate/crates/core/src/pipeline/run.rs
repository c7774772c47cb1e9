use std::collections::BTreeSet;
use std::fs;
use std::io::BufWriter;
use std::path::{Path, PathBuf};
use std::sync::Mutex;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::config::ExperimentConfig;
use super::stages::{
    cloud_diagram, cluster_representation, generate, train_network, CloudPersistence, StageSeeds,
};
use crate::analysis::{
    pca_fit, pca_project, project_clusters_to_data, write_assignment_csv, ClusterAssignment,
};
use crate::cloud::{write_points_csv, PointCloud};
use crate::error::{Error, Result};
use crate::mlp::{
    extract_representations, homeomorphism_diagnostic, write_history_csv, Activation,
    HomeomorphismReport, LayerRepresentation,
};
use crate::persistence::{dominant_features, PersistenceDiagram};
use crate::plot::{diagram_svg, scatter_svg};

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

/// A bar as stored in the manifest; `death` is `None` for essential classes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bar {
    pub birth: f64,
    pub death: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagramSummary {
    pub csv: String,
    pub svg: String,
    pub n_points: usize,
    pub n_vertices: usize,
    pub threshold: f64,
    pub n_simplices: usize,
    pub conserves_simplices: bool,
    pub essential_h0: usize,
    /// Longest H1 bars, longest first.
    pub longest_h1: Vec<Bar>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub label: usize,
    pub size: usize,
    pub points: String,
    /// `None` when the cluster is below the size threshold.
    pub diagram: Option<DiagramSummary>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerSummary {
    pub index: usize,
    pub activation: Activation,
    pub width: usize,
    pub representation: String,
    pub homeomorphism: HomeomorphismReport,
    pub eps: f64,
    pub min_pts: usize,
    pub n_clusters: usize,
    pub noise_count: usize,
    pub cluster_sizes: Vec<usize>,
    pub assignment: String,
    pub cluster_plot: String,
    pub clusters: Vec<ClusterSummary>,
    /// Labels of clusters too small for a diagram.
    pub skipped_clusters: Vec<usize>,
    /// True when no cluster of this layer reached the size threshold.
    pub no_cluster_analyzed: bool,
    pub projection: String,
    pub projection_plot: String,
    pub explained_variance: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainingSummary {
    pub epochs: usize,
    pub final_loss: Option<f64>,
    pub final_accuracy: Option<f64>,
    pub validation_accuracy: Option<f64>,
    pub history: String,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTiming {
    pub stage: String,
    pub seconds: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub version: String,
    pub status: RunStatus,
    pub failed_stage: Option<String>,
    pub error: Option<String>,
    pub seed: u64,
    pub stage_seeds: StageSeeds,
    pub config: ExperimentConfig,
    pub timings: Vec<StageTiming>,
    pub training: Option<TrainingSummary>,
    pub layers: Vec<LayerSummary>,
    pub data_diagram: Option<DiagramSummary>,
    pub data_projection: Option<String>,
    /// Every file written by the run, relative to the output directory.
    pub files: Vec<String>,
    /// SHA-256 over the sorted file list and file contents. Timings live only
    /// in the manifest, so this is stable across repeated runs.
    pub output_digest: String,
}

/// Creates files under the output directory and remembers their paths.
struct Outputs {
    root: PathBuf,
    written: Mutex<BTreeSet<String>>,
}

impl Outputs {
    fn new(root: &Path) -> Result<Self> {
        fs::create_dir_all(root)?;
        Ok(Outputs {
            root: root.to_path_buf(),
            written: Mutex::new(BTreeSet::new()),
        })
    }

    fn write(
        &self,
        rel: &str,
        body: impl FnOnce(BufWriter<fs::File>) -> Result<()>,
    ) -> Result<String> {
        let path = self.root.join(rel);
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        body(BufWriter::new(fs::File::create(&path)?))?;
        self.written.lock().unwrap().insert(rel.to_string());
        Ok(rel.to_string())
    }

    fn write_str(&self, rel: &str, text: &str) -> Result<String> {
        self.write(rel, |mut w| {
            std::io::Write::write_all(&mut w, text.as_bytes())?;
            std::io::Write::flush(&mut w)?;
            Ok(())
        })
    }

    fn files(&self) -> Vec<String> {
        self.written.lock().unwrap().iter().cloned().collect()
    }

    fn digest(&self) -> Result<String> {
        let mut h = Sha256::new();
        for rel in self.files() {
            let bytes = fs::read(self.root.join(&rel))?;
            h.update(rel.as_bytes());
            h.update([0]);
            h.update((bytes.len() as u64).to_le_bytes());
            h.update(&bytes);
        }
        Ok(h.finalize().iter().map(|b| format!("{b:02x}")).collect())
    }
}

fn thread_pool() -> Result<rayon::ThreadPool> {
    let n = match std::env::var("TOPOPROBE_THREADS") {
        Ok(v) => v.trim().parse::<usize>().map_err(|_| {
            Error::domain(format!("TOPOPROBE_THREADS must be an integer, got {v:?}"))
        })?,
        Err(_) => 0,
    };
    rayon::ThreadPoolBuilder::new()
        .num_threads(n)
        .build()
        .map_err(|e| Error::domain(format!("cannot start worker pool: {e}")))
}

fn write_cloud(out: &Outputs, rel: &str, cloud: &PointCloud) -> Result<String> {
    out.write(rel, |w| cloud.write_csv(w))
}

fn write_diagram(
    out: &Outputs,
    csv: &str,
    svg: &str,
    title: &str,
    n_points: usize,
    cp: &CloudPersistence,
) -> Result<DiagramSummary> {
    let diagram: &PersistenceDiagram = &cp.result.diagram;
    let csv = out.write(csv, |w| diagram.write_csv(w, false))?;
    let svg = out.write_str(svg, &diagram_svg(diagram, title))?;
    Ok(DiagramSummary {
        csv,
        svg,
        n_points,
        n_vertices: cp.vertices.len(),
        threshold: cp.threshold,
        n_simplices: cp.result.n_simplices,
        conserves_simplices: cp.result.conserves_simplices(),
        essential_h0: diagram.essential_count(0),
        longest_h1: dominant_features(diagram, 1, 5)
            .into_iter()
            .map(|p| Bar {
                birth: p.birth,
                death: (!p.is_essential()).then_some(p.death),
            })
            .collect(),
    })
}

/// Cluster labels renumbered by size, largest first, so that plots give the
/// two largest clusters the first two colors.
fn labels_by_size(a: &ClusterAssignment) -> Vec<i64> {
    let sizes = a.sizes();
    let mut order: Vec<usize> = (0..a.k).collect();
    order.sort_by(|&x, &y| sizes[y].cmp(&sizes[x]).then(x.cmp(&y)));
    let mut rank = vec![0i64; a.k];
    for (r, &c) in order.iter().enumerate() {
        rank[c] = r as i64;
    }
    a.labels
        .iter()
        .map(|&l| if l < 0 { -1 } else { rank[l as usize] })
        .collect()
}

struct Context<'a> {
    config: &'a ExperimentConfig,
    seeds: StageSeeds,
    out: &'a Outputs,
    manifold_rows: &'a PointCloud,
    data_projection: &'a PointCloud,
}

fn analyze_layer(
    ctx: &Context,
    rep: &LayerRepresentation,
    homeomorphism: HomeomorphismReport,
) -> Result<LayerSummary> {
    let (cfg, out) = (ctx.config, ctx.out);
    let i = rep.layer_index;
    let representation = format!("layers/{i}/representation.csv");
    let (params, assignment) = cluster_representation(&rep.values, &cfg.clustering)?;
    let assignment_path = out.write(&format!("layers/{i}/clusters.csv"), |w| {
        write_assignment_csv(&assignment, w)
    })?;
    let cluster_plot = out.write_str(
        &format!("layers/{i}/clusters.svg"),
        &scatter_svg(
            ctx.data_projection,
            Some(&labels_by_size(&assignment)),
            &format!("layer {i} clusters on the data"),
        ),
    )?;

    let clusters = project_clusters_to_data(&assignment, ctx.manifold_rows)?;
    let summaries = clusters
        .par_iter()
        .map(|c| {
            let dir = format!("layers/{i}/clusters/{}", c.label);
            let points = write_cloud(out, &format!("{dir}/points.csv"), &c.cloud)?;
            let diagram = if c.indices.len() >= cfg.clustering.min_cluster_size {
                let cp = cloud_diagram(&c.cloud, &cfg.filtration, ctx.seeds.landmarks)?;
                Some(write_diagram(
                    out,
                    &format!("diagrams/layer{i}_cluster{}.csv", c.label),
                    &format!("{dir}/diagram.svg"),
                    &format!("layer {i} cluster {}", c.label),
                    c.indices.len(),
                    &cp,
                )?)
            } else {
                None
            };
            Ok(ClusterSummary {
                label: c.label,
                size: c.indices.len(),
                points,
                diagram,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let skipped_clusters: Vec<usize> = summaries
        .iter()
        .filter(|s| s.diagram.is_none())
        .map(|s| s.label)
        .collect();

    let q = cfg.pca.components.min(rep.values.dim());
    let model = pca_fit(&rep.values, q)?;
    let projected = pca_project(&model, &rep.values)?;
    let projection = write_cloud(out, &format!("projections/layer{i}.csv"), &projected)?;
    let projection_plot = out.write_str(
        &format!("projections/layer{i}.svg"),
        &scatter_svg(&projected, None, &format!("layer {i} PCA projection")),
    )?;

    Ok(LayerSummary {
        index: i,
        activation: rep.activation,
        width: rep.values.dim(),
        representation,
        homeomorphism,
        eps: params.eps,
        min_pts: params.min_pts,
        n_clusters: assignment.k,
        noise_count: assignment.noise_count(),
        cluster_sizes: assignment.sizes(),
        assignment: assignment_path,
        cluster_plot,
        no_cluster_analyzed: skipped_clusters.len() == summaries.len(),
        clusters: summaries,
        skipped_clusters,
        projection,
        projection_plot,
        explained_variance: model.explained_variance,
    })
}

/// Runs the whole experiment into `config.output_dir`.
///
/// On failure the manifest is still written, marked failed with the stage
/// name, and the error is returned wrapped in [`Error::Stage`].
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunManifest> {
    config.validate()?;
    let out = Outputs::new(&config.output_dir)?;
    let seeds = StageSeeds::derive(config.seed);
    let mut manifest = RunManifest {
        version: VERSION.to_string(),
        status: RunStatus::Ok,
        failed_stage: None,
        error: None,
        seed: config.seed,
        stage_seeds: seeds,
        config: config.clone(),
        timings: Vec::new(),
        training: None,
        layers: Vec::new(),
        data_diagram: None,
        data_projection: None,
        files: Vec::new(),
        output_digest: String::new(),
    };
    let pool = thread_pool()?;
    let outcome = pool.install(|| execute(config, seeds, &out, &mut manifest));
    if let Err((stage, e)) = &outcome {
        manifest.status = RunStatus::Failed;
        manifest.failed_stage = Some(stage.to_string());
        manifest.error = Some(e.to_string());
    }
    manifest.files = out.files();
    manifest.output_digest = out.digest()?;
    let text = serde_json::to_string_pretty(&manifest)?;
    fs::write(config.output_dir.join("manifest.json"), text + "\n")?;
    match outcome {
        Ok(()) => Ok(manifest),
        Err((stage, e)) => Err(e.in_stage(stage)),
    }
}

fn timed<T>(
    manifest: &mut RunManifest,
    stage: &'static str,
    f: impl FnOnce() -> Result<T>,
) -> std::result::Result<T, (&'static str, Error)> {
    let start = Instant::now();
    let r = f().map_err(|e| (stage, e));
    manifest.timings.push(StageTiming {
        stage: stage.to_string(),
        seconds: start.elapsed().as_secs_f64(),
    });
    r
}

fn execute(
    config: &ExperimentConfig,
    seeds: StageSeeds,
    out: &Outputs,
    manifest: &mut RunManifest,
) -> std::result::Result<(), (&'static str, Error)> {
    let data = timed(manifest, "generate", || {
        let data = generate(config)?;
        out.write("data/torus.csv", |w| {
            write_points_csv(&data.manifold, None, w)
        })?;
        out.write("data/noise.csv", |w| write_points_csv(&data.noise, None, w))?;
        out.write("data/dataset.csv", |w| {
            write_points_csv(&data.dataset.cloud, Some(&data.dataset.labels), w)
        })?;
        Ok(data)
    })?;

    let trained = timed(manifest, "train", || {
        let trained = train_network(config, &data.dataset)?;
        let model = out.write("model/network.json", |w| trained.params.write_json(w))?;
        let history = out.write("model/history.csv", |w| {
            write_history_csv(&trained.history, w)
        })?;
        Ok((trained, model, history))
    })?;
    let (trained, model, history) = trained;
    manifest.training = Some(TrainingSummary {
        epochs: trained.history.len(),
        final_loss: trained.history.last().map(|r| r.loss),
        final_accuracy: trained.final_accuracy(),
        validation_accuracy: trained.validation_accuracy,
        history,
        model,
    });

    let (manifold_rows, _) = data.manifold_rows();
    let reps = timed(manifest, "extract", || {
        out.write("data/manifold_rows.csv", |w| manifold_rows.write_csv(w))?;
        let reps = extract_representations(&trained.params, &manifold_rows)?;
        for rep in &reps {
            write_cloud(
                out,
                &format!("layers/{}/representation.csv", rep.layer_index),
                &rep.values,
            )?;
        }
        Ok(reps)
    })?;

    let layers = timed(manifest, "analyze", || {
        let q = config.pca.components.min(manifold_rows.dim());
        let data_model = pca_fit(&manifold_rows, q)?;
        let data_projection = pca_project(&data_model, &manifold_rows)?;
        let ctx = Context {
            config,
            seeds,
            out,
            manifold_rows: &manifold_rows,
            data_projection: &data_projection,
        };
        let path = write_cloud(out, "projections/data.csv", &data_projection)?;
        out.write_str(
            "projections/data.svg",
            &scatter_svg(&data_projection, None, "data PCA projection"),
        )?;
        // The output layer is extracted above but only hidden layers are analyzed.
        let hidden = &reps[..reps.len() - 1];
        let layers = hidden
            .par_iter()
            .zip(trained.params.layers.par_iter())
            .map(|(rep, layer)| analyze_layer(&ctx, rep, homeomorphism_diagnostic(layer)))
            .collect::<Result<Vec<_>>>()?;
        Ok((layers, path))
    })?;
    manifest.layers = layers.0;
    manifest.data_projection = Some(layers.1);

    let data_diagram = timed(manifest, "data_persistence", || {
        let cp = cloud_diagram(&data.manifold, &config.filtration, seeds.landmarks)?;
        write_diagram(
            out,
            "diagrams/data.csv",
            "diagrams/data.svg",
            "twisted torus",
            data.manifold.len(),
            &cp,
        )
    })?;
    manifest.data_diagram = Some(data_diagram);
    Ok(())
}
