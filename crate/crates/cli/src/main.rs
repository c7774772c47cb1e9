use std::fs::{self, File};
use std::io::{BufReader, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use topoprobe::analysis::{pca_fit, pca_project, write_assignment_csv, EpsPolicy};
use topoprobe::cloud::{read_points_csv, write_points_csv};
use topoprobe::geometry::{
    sample_twisted_torus, sample_validation_shape, LabeledDataset, ValidationShape,
};
use topoprobe::mlp::{extract_representations, write_history_csv, Activation, NetworkParams};
use topoprobe::persistence::Algorithm;
use topoprobe::pipeline::{
    cloud_diagram, cluster_representation, generate, run_experiment, train_network,
    validate_shapes, ExperimentConfig, StageSeeds, ThresholdPolicy,
};
use topoprobe::plot::{diagram_svg, scatter_svg};
use topoprobe::{PointCloud, Result};

#[derive(Parser)]
#[command(
    name = "topoprobe",
    version,
    about = "Topology of neural-network layer representations"
)]
struct Cli {
    /// Experiment configuration (dotted key = value lines, or JSON).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides the master seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum Shape {
    /// The labeled training set: twisted torus plus uniform noise.
    Dataset,
    TwistedTorus,
    Circle,
    Sphere,
    Torus,
}

#[derive(Clone, Copy, ValueEnum)]
enum AlgorithmArg {
    Standard,
    Cohomology,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a point cloud.
    Generate {
        #[arg(long, value_enum, default_value = "dataset")]
        shape: Shape,
        /// Number of points (for `dataset`, manifold and noise each).
        #[arg(long)]
        n: Option<usize>,
        #[arg(long, default_value_t = 0.0)]
        noise_sd: f64,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Train the classifier on a labeled point CSV.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        activation: Option<Activation>,
        #[arg(long)]
        epochs: Option<usize>,
        /// Receives network.json and history.csv.
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Write every layer's representation of a point cloud.
    Probe {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        input: PathBuf,
        /// Only the rows with this label, when the input is labeled.
        #[arg(long)]
        label: Option<u8>,
        #[arg(long)]
        output_dir: PathBuf,
    },
    /// Density clustering; writes `index,label` rows.
    Cluster {
        #[arg(long)]
        input: PathBuf,
        /// Fixed neighborhood radius; by default chosen from the data.
        #[arg(long)]
        eps: Option<f64>,
        #[arg(long)]
        min_pts: Option<usize>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Rips persistence diagram (CSV, plus an SVG next to it).
    Persistence {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        max_dim: Option<usize>,
        /// A number, or `enclosing`.
        #[arg(long)]
        threshold: Option<String>,
        #[arg(long)]
        landmarks: Option<usize>,
        #[arg(long, value_enum)]
        algorithm: Option<AlgorithmArg>,
        /// Also write birth = death pairs.
        #[arg(long)]
        zero_persistence: bool,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// Project onto the leading principal components (CSV, plus an SVG).
    Pca {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        components: Option<usize>,
        #[arg(long, short)]
        output: PathBuf,
    },
    /// The full experiment.
    RunAll {
        #[arg(long)]
        activation: Option<Activation>,
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Check the engine against shapes with known Betti numbers.
    Validate,
}

fn load_config(cli: &Cli) -> Result<ExperimentConfig> {
    let mut config = match &cli.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    Ok(config)
}

fn read_cloud(path: &Path) -> Result<(PointCloud, Option<Vec<u8>>)> {
    read_points_csv(BufReader::new(File::open(path)?))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    let mut w = create(path)?;
    w.write_all(text.as_bytes())?;
    w.flush()?;
    Ok(())
}

fn title_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default()
}

fn run(cli: Cli) -> Result<()> {
    let mut config = load_config(&cli)?;
    let seeds = StageSeeds::derive(config.seed);
    match cli.command {
        Command::Generate {
            shape,
            n,
            noise_sd,
            output,
        } => {
            let (cloud, labels) = match shape {
                Shape::Dataset => {
                    if let Some(n) = n {
                        config.torus.n_points = n;
                        config.noise.n_points = n;
                    }
                    config.validate()?;
                    let data = generate(&config)?;
                    (data.dataset.cloud, Some(data.dataset.labels))
                }
                Shape::TwistedTorus => {
                    if let Some(n) = n {
                        config.torus.n_points = n;
                    }
                    (
                        sample_twisted_torus(&config.torus_params(seeds.manifold))?,
                        None,
                    )
                }
                Shape::Circle | Shape::Sphere | Shape::Torus => {
                    let s = match shape {
                        Shape::Circle => ValidationShape::Circle,
                        Shape::Sphere => ValidationShape::Sphere,
                        _ => ValidationShape::Torus,
                    };
                    let n = n.unwrap_or(500);
                    (
                        sample_validation_shape(s, n, noise_sd, seeds.manifold)?,
                        None,
                    )
                }
            };
            write_points_csv(&cloud, labels.as_deref(), create(&output)?)?;
        }
        Command::Train {
            data,
            activation,
            epochs,
            output_dir,
        } => {
            if let Some(a) = activation {
                config.network.activation = a;
            }
            if let Some(e) = epochs {
                config.train.epochs = e;
            }
            config.validate()?;
            let (cloud, labels) = read_cloud(&data)?;
            let labels = labels.ok_or_else(|| {
                topoprobe::Error::Parse(format!("{} has no label column", data.display()))
            })?;
            let outcome = train_network(&config, &LabeledDataset::new(cloud, labels)?)?;
            outcome
                .params
                .write_json(create(&output_dir.join("network.json"))?)?;
            write_history_csv(&outcome.history, create(&output_dir.join("history.csv"))?)?;
            if let Some(acc) = outcome.final_accuracy() {
                println!("train accuracy {acc:.4}");
            }
        }
        Command::Probe {
            model,
            input,
            label,
            output_dir,
        } => {
            let params = NetworkParams::read_json(BufReader::new(File::open(&model)?))?;
            let (mut cloud, labels) = read_cloud(&input)?;
            if let (Some(want), Some(labels)) = (label, labels) {
                let rows: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == want).collect();
                cloud = cloud.select(&rows);
            }
            for rep in extract_representations(&params, &cloud)? {
                let path = output_dir.join(format!("layer{}.csv", rep.layer_index));
                rep.values.write_csv(create(&path)?)?;
            }
        }
        Command::Cluster {
            input,
            eps,
            min_pts,
            output,
        } => {
            let mut clustering = config.clustering.clone();
            if let Some(eps) = eps {
                clustering.eps = EpsPolicy::Fixed { eps };
            }
            if let Some(m) = min_pts {
                clustering.min_pts = m;
            }
            let (cloud, _) = read_cloud(&input)?;
            let (params, assignment) = cluster_representation(&cloud, &clustering)?;
            write_assignment_csv(&assignment, create(&output)?)?;
            println!(
                "eps {:.6} min_pts {}: {} clusters, {} noise points",
                params.eps,
                params.min_pts,
                assignment.k,
                assignment.noise_count()
            );
        }
        Command::Persistence {
            input,
            max_dim,
            threshold,
            landmarks,
            algorithm,
            zero_persistence,
            output,
        } => {
            let mut f = config.filtration.clone();
            if let Some(d) = max_dim {
                f.max_dim = d;
            }
            if let Some(t) = threshold {
                f.threshold = if t == "enclosing" {
                    ThresholdPolicy::Enclosing
                } else {
                    ThresholdPolicy::Fixed(t.parse().map_err(|_| {
                        topoprobe::Error::Parse(format!("threshold `{t}` is not a number"))
                    })?)
                };
            }
            if let Some(l) = landmarks {
                f.landmarks = l;
            }
            match algorithm {
                Some(AlgorithmArg::Standard) => f.algorithm = Algorithm::Standard,
                Some(AlgorithmArg::Cohomology) => f.algorithm = Algorithm::Cohomology,
                None => {}
            }
            config.filtration = f;
            config.validate()?;
            let (cloud, _) = read_cloud(&input)?;
            let cp = cloud_diagram(&cloud, &config.filtration, seeds.landmarks)?;
            cp.result
                .diagram
                .write_csv(create(&output)?, zero_persistence)?;
            write_text(
                &output.with_extension("svg"),
                &diagram_svg(&cp.result.diagram, &title_of(&input)),
            )?;
        }
        Command::Pca {
            input,
            components,
            output,
        } => {
            let (cloud, _) = read_cloud(&input)?;
            let q = components.unwrap_or(config.pca.components);
            let model = pca_fit(&cloud, q)?;
            let projected = pca_project(&model, &cloud)?;
            projected.write_csv(create(&output)?)?;
            write_text(
                &output.with_extension("svg"),
                &scatter_svg(&projected, None, &title_of(&input)),
            )?;
        }
        Command::RunAll {
            activation,
            output_dir,
        } => {
            if let Some(a) = activation {
                config.network.activation = a;
            }
            if let Some(d) = output_dir {
                config.output_dir = d;
            }
            let m = run_experiment(&config)?;
            println!(
                "wrote {} files to {} (digest {})",
                m.files.len(),
                config.output_dir.display(),
                m.output_digest
            );
        }
        Command::Validate => {
            let checks = validate_shapes(config.seed, config.filtration.algorithm)?;
            let mut ok = true;
            for c in &checks {
                println!(
                    "{:<7} betti at {:.2}: expected {:?}, got {:?}: {}",
                    format!("{:?}", c.shape).to_lowercase(),
                    c.scale,
                    c.expected,
                    c.observed,
                    if c.passed { "pass" } else { "FAIL" }
                );
                ok &= c.passed;
            }
            if !ok {
                return Err(topoprobe::Error::CorruptFiltration(
                    "reference shapes did not match".into(),
                ));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
