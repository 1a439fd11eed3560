//! Command implementations. Each command that writes a run directory also
//! writes exactly one `manifest.json` into it.

use std::path::{Path, PathBuf};
use std::time::Instant;

use ndarray::Array1;
use serde::Serialize;

use mforge_core::data::{load_csv, load_json, save_matrix_csv, save_vector_csv};
use mforge_core::geometry::pairwise_distances;
use mforge_core::metrics::metric_report;
use mforge_core::persistence::{vr_pairing, Diagram};
use mforge_core::sweep::{run_sweep, stepped_range, SweepAxis, SweepSpec, LAMBDA_GRID};
use mforge_core::training::{ablation_suite, train, AblationEntry, ComparisonGroups};
use mforge_core::{DatasetKind, DatasetSpec, Error, PointCloud, Preset, Result, TrainConfig};

use crate::manifest::RunManifest;
use crate::plot::render_svg;
use crate::{
    AblateArgs, AxisName, Command, DatasetName, EvaluateArgs, GenerateArgs, PlotArgs, SweepArgs,
    TrainCmdArgs, TrainOverrides,
};

pub const POINTS_FILE: &str = "points.csv";
pub const CLEAN_FILE: &str = "clean.csv";
pub const LABELS_FILE: &str = "labels.csv";
pub const DATASET_FILE: &str = "dataset.json";

pub const DEFAULT_SWISS_N: usize = 2000;
pub const DEFAULT_SPHERE_N: usize = 500;
/// Points per sphere on the dim sweep axis.
pub const DEFAULT_DIM_SWEEP_N: usize = 100;

pub fn dispatch(command: Command, args: &[String]) -> Result<()> {
    match command {
        Command::Generate(a) => generate(&a, args),
        Command::Train(a) => train_cmd(&a, args),
        Command::Evaluate(a) => evaluate(&a),
        Command::Ablate(a) => ablate(&a, args),
        Command::Sweep(a) => sweep(&a, args),
        Command::Plot(a) => plot(&a),
    }
}

fn create_dir(dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| Error::Numerical(format!("{}: {e}", path.display())))?;
    text.push('\n');
    write_text(path, &text)
}

fn to_value<T: Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).expect("configuration serializes")
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Parse {
        path: path.to_path_buf(),
        row: e.line(),
        message: e.to_string(),
    })
}

fn first_column(path: &Path) -> Result<Array1<f64>> {
    Ok(load_csv(path, None)?.points().column(0).to_owned())
}

/// Loads a dataset directory written by `generate`, or a single point file.
/// Returns the generating spec when the directory records one.
pub fn load_dataset(
    path: &Path,
    label_column: Option<usize>,
) -> Result<(PointCloud, Option<DatasetSpec>)> {
    if path.is_dir() {
        let mut cloud = load_csv(path.join(POINTS_FILE), None)?;
        let labels = path.join(LABELS_FILE);
        if labels.is_file() {
            cloud = cloud.with_labels(first_column(&labels)?)?;
        }
        let clean = path.join(CLEAN_FILE);
        if clean.is_file() {
            cloud = cloud.with_clean(load_csv(&clean, None)?.points().clone())?;
        }
        let spec_path = path.join(DATASET_FILE);
        let spec = if spec_path.is_file() {
            Some(read_json(&spec_path)?)
        } else {
            None
        };
        return Ok((cloud, spec));
    }
    let is_json = path
        .extension()
        .is_some_and(|e| e.eq_ignore_ascii_case("json"));
    let cloud = if is_json {
        load_json(path)?
    } else {
        load_csv(path, label_column)?
    };
    Ok((cloud, None))
}

fn generate(a: &GenerateArgs, args: &[String]) -> Result<()> {
    let start = Instant::now();
    let (kind, n) = match a.kind {
        DatasetName::SwissRoll => (DatasetKind::SwissRollHole, a.n.unwrap_or(DEFAULT_SWISS_N)),
        DatasetName::Spheres => (
            DatasetKind::Spheres {
                ambient_dim: a.dim,
                n_small: a.n_small,
                big_radius: a.radius,
            },
            a.n.unwrap_or(DEFAULT_SPHERE_N),
        ),
    };
    let spec = DatasetSpec {
        kind,
        n_samples: n,
        noise_sigma: a.sigma,
        seed: a.seed,
        normalize: !a.no_normalize,
    };
    let cloud = spec.build()?;
    create_dir(&a.out)?;
    let mut manifest = RunManifest::new("generate", args, to_value(&spec));
    save_matrix_csv(a.out.join(POINTS_FILE), cloud.points())?;
    manifest.artifacts.push(POINTS_FILE.into());
    if let Some(c) = cloud.clean() {
        save_matrix_csv(a.out.join(CLEAN_FILE), c)?;
        manifest.artifacts.push(CLEAN_FILE.into());
    }
    if let Some(l) = cloud.labels() {
        save_vector_csv(a.out.join(LABELS_FILE), l)?;
        manifest.artifacts.push(LABELS_FILE.into());
    }
    write_json(&a.out.join(DATASET_FILE), &spec)?;
    manifest.artifacts.push(DATASET_FILE.into());
    manifest.timing.total_seconds = start.elapsed().as_secs_f64();
    manifest.write(&a.out)?;
    log::info!(
        "wrote {} points of dimension {} to {}",
        cloud.len(),
        cloud.dim(),
        a.out.display()
    );
    Ok(())
}

fn parse_preset(name: &str) -> Result<Preset> {
    Preset::from_name(name).ok_or_else(|| {
        let known: Vec<&str> = Preset::ALL.iter().map(|p| p.name()).collect();
        Error::Parameter(format!(
            "unknown preset {name:?}; expected one of {known:?}"
        ))
    })
}

/// Preset or config file, adapted to the data dimension, then flag overrides.
pub fn build_config(o: &TrainOverrides, dim: usize, fallback: Preset) -> Result<TrainConfig> {
    let mut c = match (&o.config, &o.preset) {
        (Some(path), _) => read_json::<TrainConfig>(path)?,
        (None, Some(name)) => TrainConfig::preset(parse_preset(name)?),
        (None, None) => TrainConfig::preset(fallback),
    };
    if c.encoder_dims.first() != Some(&dim) || c.decoder_dims.last() != Some(&dim) {
        log::info!("adapting architecture to input dimension {dim}");
        c = c.with_input_dim(dim);
    }
    if let Some(v) = o.seed {
        c.seed = v;
    }
    if let Some(v) = o.epochs {
        c.epochs = v;
    }
    if let Some(v) = o.batch_size {
        c.batch_size = v;
    }
    if let Some(v) = o.lr {
        c.lr = v;
    }
    if let Some(v) = o.lambda_ae {
        c.lambda_ae = v;
    }
    if let Some(v) = o.lambda_topo {
        c.lambda_topo = v;
    }
    if let Some(v) = o.lambda_geom {
        c.lambda_geom = v;
    }
    if let Some(v) = o.r0 {
        c.mrl.r0 = v;
    }
    if let Some(v) = o.r1 {
        c.mrl.r1 = v;
    }
    if let Some(v) = o.r2 {
        c.mrl.r2 = v;
    }
    if let Some(v) = o.k {
        c.mrl.k = v;
    }
    if o.fixed_radii {
        c.train_radii = false;
    }
    if o.no_mrl {
        c.mrl_enabled = false;
    }
    if o.no_topo {
        c.topo_enabled = false;
    }
    if o.no_geom {
        c.geom_enabled = false;
    }
    if o.h1 {
        c.h1_enabled = true;
    }
    c.mrl.validate()?;
    Ok(c)
}

fn fallback_preset(spec: Option<&DatasetSpec>) -> Preset {
    match spec.map(|s| &s.kind) {
        Some(DatasetKind::Spheres { .. }) => Preset::Spheres,
        _ => Preset::SwissRoll,
    }
}

/// Persistence diagram of a cloud. Falls back to dimension 0 alone when the
/// 1-dimensional computation exceeds its capacity.
fn diagram_of(cloud: &PointCloud, h1: bool, cap: usize) -> Result<Diagram> {
    let dist = pairwise_distances(cloud);
    match vr_pairing(&dist, h1, cap) {
        Ok((_, d)) => Ok(d),
        Err(Error::Capacity(msg)) => {
            log::warn!("diagram limited to dimension 0: {msg}");
            Ok(vr_pairing(&dist, false, cap)?.1)
        }
        Err(e) => Err(e),
    }
}

fn train_cmd(a: &TrainCmdArgs, args: &[String]) -> Result<()> {
    let start = Instant::now();
    let (data, spec) = load_dataset(&a.dataset, a.label_column)?;
    let config = build_config(&a.overrides, data.dim(), fallback_preset(spec.as_ref()))?;
    create_dir(&a.out)?;
    let out = &a.out;
    let mut manifest = RunManifest::new("train", args, to_value(&config));
    let mut record = |name: &str| manifest.artifacts.push(name.to_string());

    write_json(&out.join("config.json"), &config)?;
    record("config.json");
    let mut outcome = train(&data, &config)?;
    outcome.model.save(out.join("model.json"))?;
    record("model.json");
    outcome.report.checkpoint = Some("model.json".into());
    write_json(&out.join("report.json"), &outcome.report)?;
    record("report.json");

    let emb = outcome.embed(&data)?;
    save_matrix_csv(out.join("embedding.csv"), emb.embedding.points())?;
    record("embedding.csv");
    save_matrix_csv(out.join("manifold.csv"), emb.manifold.points())?;
    record("manifold.csv");
    save_matrix_csv(out.join("reconstruction.csv"), &emb.reconstruction)?;
    record("reconstruction.csv");
    if let Some(l) = data.labels() {
        save_vector_csv(out.join(LABELS_FILE), l)?;
        record(LABELS_FILE);
    }
    let diagram = diagram_of(&emb.embedding, config.h1_enabled, config.h1_cap)?;
    write_text(&out.join("diagram.json"), &(diagram.to_json()? + "\n"))?;
    record("diagram.json");
    write_json(
        &out.join("evaluation.json"),
        &ComparisonGroups::evaluate(&data, &emb)?,
    )?;
    record("evaluation.json");

    manifest.timing.epoch_seconds = outcome.report.epoch_seconds.clone();
    manifest.timing.total_seconds = start.elapsed().as_secs_f64();
    manifest.write(out)?;
    log::info!("run written to {}", out.display());
    Ok(())
}

fn emit(out: Option<&PathBuf>, text: &str) -> Result<()> {
    match out {
        Some(p) => write_text(p, text),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

fn evaluate(a: &EvaluateArgs) -> Result<()> {
    let (x, _) = load_dataset(&a.a, None)?;
    let (y, _) = load_dataset(&a.b, None)?;
    let report = metric_report(&x, &y)?;
    let mut text =
        serde_json::to_string_pretty(&report).map_err(|e| Error::Numerical(e.to_string()))?;
    text.push('\n');
    emit(a.out.as_ref(), &text)
}

#[derive(Serialize)]
struct AblationOutput<'a> {
    dataset: String,
    entries: &'a [AblationEntry],
}

fn ablate(a: &AblateArgs, args: &[String]) -> Result<()> {
    let start = Instant::now();
    let (data, spec) = load_dataset(&a.dataset, a.label_column)?;
    let base = build_config(&a.overrides, data.dim(), fallback_preset(spec.as_ref()))?;
    create_dir(&a.out)?;
    let entries = ablation_suite(&data, &base)?;
    let out = AblationOutput {
        dataset: a.dataset.display().to_string(),
        entries: &entries,
    };
    write_json(&a.out.join("ablation.json"), &out)?;
    let mut manifest = RunManifest::new("ablate", args, to_value(&base));
    manifest.artifacts.push("ablation.json".into());
    manifest.timing.total_seconds = start.elapsed().as_secs_f64();
    manifest.write(&a.out)
}

fn axis_of(a: AxisName) -> SweepAxis {
    match a {
        AxisName::Noise => SweepAxis::Noise,
        AxisName::Size => SweepAxis::Size,
        AxisName::Dim => SweepAxis::Dim,
        AxisName::LambdaGrid => SweepAxis::LambdaGrid,
    }
}

/// Grid values from `--values`, `--start/--stop/--step`, or the axis default.
pub fn sweep_values(a: &SweepArgs) -> Result<Vec<f64>> {
    if let Some(v) = &a.values {
        if v.is_empty() {
            return Err(Error::Parameter("--values is empty".into()));
        }
        return Ok(v.clone());
    }
    if let (Some(start), Some(stop), Some(step)) = (a.start, a.stop, a.step) {
        return stepped_range(start, stop, step);
    }
    Ok(match a.axis {
        AxisName::Noise => stepped_range(0.0, 0.05, 0.005)?,
        AxisName::Size => vec![500.0, 1000.0, 2000.0],
        AxisName::Dim => vec![3.0, 11.0, 51.0, 101.0],
        AxisName::LambdaGrid => LAMBDA_GRID.to_vec(),
    })
}

#[derive(Serialize)]
struct SweepOutput<'a> {
    axis: SweepAxis,
    records: &'a [mforge_core::sweep::SweepRecord],
}

fn sweep(a: &SweepArgs, args: &[String]) -> Result<()> {
    let start = Instant::now();
    let axis = axis_of(a.axis);
    let values = sweep_values(a)?;
    let dataset = match axis {
        SweepAxis::Dim => DatasetSpec::spheres(3, a.n.unwrap_or(DEFAULT_DIM_SWEEP_N), a.data_seed),
        _ => DatasetSpec::swiss_roll(a.n.unwrap_or(DEFAULT_SWISS_N), a.sigma, a.data_seed),
    };
    let fallback = if axis == SweepAxis::Dim {
        Preset::Spheres
    } else {
        Preset::SwissRoll
    };
    let config = build_config(&a.overrides, 3, fallback)?;
    let (values, lambda_values) = match axis {
        SweepAxis::LambdaGrid => (Vec::new(), values),
        _ => (values, LAMBDA_GRID.to_vec()),
    };
    let spec = SweepSpec {
        axis,
        values,
        lambda_values,
        dataset,
        config,
    };
    create_dir(&a.out)?;
    let records = run_sweep(&spec)?;
    write_json(
        &a.out.join("sweep.json"),
        &SweepOutput {
            axis,
            records: &records,
        },
    )?;
    let mut manifest = RunManifest::new("sweep", args, to_value(&spec));
    manifest.artifacts.push("sweep.json".into());
    manifest.timing.total_seconds = start.elapsed().as_secs_f64();
    manifest.write(&a.out)
}

fn plot(a: &PlotArgs) -> Result<()> {
    let emb = load_csv(&a.embedding, None)?;
    let labels = a.labels.as_deref().map(first_column).transpose()?;
    let svg = render_svg(emb.points(), labels.as_ref())?;
    emit(a.out.as_ref(), &svg)
}
