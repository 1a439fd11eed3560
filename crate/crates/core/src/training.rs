//! Training loop: manifold reconstruction, encoder, decoder and the weighted
//! sum of reconstruction, topological and geometric losses.

use std::time::Instant;

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::metrics::{metric_report, MetricReport};
use crate::mrl::{mrl_forward, mrl_forward_tracked, MrlParams, TrackedContraction};
use crate::nn::{Adam, Autoencoder, Mlp, Tape};
use crate::persistence::DEFAULT_H1_CAP;
use crate::regularizers::{geom_loss_tape, topo_loss_tape, TopoOptions};
use crate::rng::SeededRng;

/// Dataset presets with the loss weights and architectures used for them.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Preset {
    SwissRoll,
    Mammoth,
    Partnet,
    Spheres,
}

impl Preset {
    pub const ALL: [Preset; 4] = [
        Preset::SwissRoll,
        Preset::Mammoth,
        Preset::Partnet,
        Preset::Spheres,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Preset::SwissRoll => "swiss-roll",
            Preset::Mammoth => "mammoth",
            Preset::Partnet => "partnet",
            Preset::Spheres => "spheres",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        Self::ALL
            .into_iter()
            .find(|p| p.name() == name || format!("{p:?}").eq_ignore_ascii_case(name))
    }

    /// `(lambda_ae, lambda_topo, lambda_geom)`.
    pub fn lambdas(self) -> (f64, f64, f64) {
        match self {
            Preset::SwissRoll => (1.0, 1.0, 5.0),
            Preset::Mammoth => (1.0, 0.5, 0.5),
            Preset::Partnet => (1.0, 0.01, 0.01),
            Preset::Spheres => (1.0, 1.0, 1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainConfig {
    pub lambda_ae: f64,
    pub lambda_topo: f64,
    pub lambda_geom: f64,
    pub lr: f64,
    pub epochs: usize,
    pub batch_size: usize,
    pub seed: u64,
    pub encoder_dims: Vec<usize>,
    pub decoder_dims: Vec<usize>,
    pub mrl: MrlParams,
    pub mrl_enabled: bool,
    /// Whether the radii receive gradient updates.
    #[serde(default = "default_true")]
    pub train_radii: bool,
    pub topo_enabled: bool,
    pub geom_enabled: bool,
    #[serde(default)]
    pub h1_enabled: bool,
    #[serde(default = "default_h1_cap")]
    pub h1_cap: usize,
    /// Global gradient norm ceiling.
    #[serde(default = "default_clip")]
    pub grad_clip: f64,
}

fn default_true() -> bool {
    true
}

fn default_h1_cap() -> usize {
    DEFAULT_H1_CAP
}

fn default_clip() -> f64 {
    10.0
}

impl TrainConfig {
    /// Full model for a preset: 100 epochs, batch 128, learning rate 1e-3.
    pub fn preset(preset: Preset) -> Self {
        let (lambda_ae, lambda_topo, lambda_geom) = preset.lambdas();
        let (encoder_dims, decoder_dims) = match preset {
            Preset::Spheres => (
                vec![101, 64, 32, 16, 8, 4, 2],
                vec![2, 4, 8, 16, 32, 64, 101],
            ),
            _ => (vec![3, 2, 2], vec![2, 2, 3]),
        };
        Self {
            lambda_ae,
            lambda_topo,
            lambda_geom,
            lr: 1e-3,
            epochs: 100,
            batch_size: 128,
            seed: 0,
            encoder_dims,
            decoder_dims,
            mrl: MrlParams::PRESET,
            mrl_enabled: true,
            train_radii: true,
            topo_enabled: true,
            geom_enabled: true,
            h1_enabled: false,
            h1_cap: DEFAULT_H1_CAP,
            grad_clip: default_clip(),
        }
    }

    /// Swaps the architecture's outer widths for a `dim`-dimensional input.
    pub fn with_input_dim(mut self, dim: usize) -> Self {
        if let Some(first) = self.encoder_dims.first_mut() {
            *first = dim;
        }
        if let Some(last) = self.decoder_dims.last_mut() {
            *last = dim;
        }
        self
    }

    fn topo_active(&self) -> bool {
        self.topo_enabled && self.lambda_topo > 0.0
    }

    fn geom_active(&self) -> bool {
        self.geom_enabled && self.lambda_geom > 0.0
    }

    fn topo_options(&self) -> TopoOptions {
        TopoOptions {
            h1: self.h1_enabled,
            h1_cap: self.h1_cap,
        }
    }

    pub fn validate(&self, n_points: usize, dim: usize) -> Result<()> {
        for (name, v) in [
            ("lambda_ae", self.lambda_ae),
            ("lambda_topo", self.lambda_topo),
            ("lambda_geom", self.lambda_geom),
        ] {
            if !(v >= 0.0 && v.is_finite()) {
                return Err(Error::param(format!(
                    "{name} must be finite and nonnegative, got {v}"
                )));
            }
        }
        if !(self.lr > 0.0 && self.lr.is_finite()) {
            return Err(Error::param(format!(
                "learning rate must be positive, got {}",
                self.lr
            )));
        }
        if self.epochs == 0 {
            return Err(Error::param("epochs must be positive"));
        }
        if self.batch_size == 0 || self.batch_size > n_points {
            return Err(Error::param(format!(
                "batch size must be in 1..={n_points}, got {}",
                self.batch_size
            )));
        }
        if self.lambda_ae <= 0.0 && !self.topo_active() && !self.geom_active() {
            return Err(Error::param(
                "lambda_ae must be positive when no regularizer is enabled",
            ));
        }
        if self.encoder_dims.first() != Some(&dim) || self.decoder_dims.last() != Some(&dim) {
            return Err(Error::param(format!(
                "architecture {:?} / {:?} does not match data dimension {dim}",
                self.encoder_dims, self.decoder_dims
            )));
        }
        if !(self.grad_clip > 0.0) {
            return Err(Error::param("grad_clip must be positive"));
        }
        if self.mrl_enabled {
            self.mrl.validate()?;
        }
        Ok(())
    }
}

/// The ablated pipelines compared against the full model.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Ablation {
    Final,
    TopoAe,
    GeomAe,
    TopoGeomAe,
    MrAe,
    VanillaAe,
}

impl Ablation {
    pub const ALL: [Ablation; 6] = [
        Ablation::Final,
        Ablation::TopoAe,
        Ablation::GeomAe,
        Ablation::TopoGeomAe,
        Ablation::MrAe,
        Ablation::VanillaAe,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Ablation::Final => "Final model",
            Ablation::TopoAe => "Topo AE",
            Ablation::GeomAe => "Geom AE",
            Ablation::TopoGeomAe => "Topo-geom AE",
            Ablation::MrAe => "MR AE",
            Ablation::VanillaAe => "Vanilla AE",
        }
    }

    /// `(mrl, topo, geom)` toggles.
    pub fn components(self) -> (bool, bool, bool) {
        match self {
            Ablation::Final => (true, true, true),
            Ablation::TopoAe => (false, true, false),
            Ablation::GeomAe => (false, false, true),
            Ablation::TopoGeomAe => (false, true, true),
            Ablation::MrAe => (true, false, false),
            Ablation::VanillaAe => (false, false, false),
        }
    }

    pub fn apply(self, base: &TrainConfig) -> TrainConfig {
        let (mrl, topo, geom) = self.components();
        TrainConfig {
            mrl_enabled: mrl,
            topo_enabled: topo,
            geom_enabled: geom,
            ..base.clone()
        }
    }
}

/// Unweighted loss components and their weighted sum.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct LossComponents {
    pub ae: f64,
    pub topo: f64,
    pub geom: f64,
    pub total: f64,
}

impl LossComponents {
    fn weighted(ae: f64, topo: f64, geom: f64, config: &TrainConfig) -> Self {
        Self {
            ae,
            topo,
            geom,
            total: config.lambda_ae * ae + config.lambda_topo * topo + config.lambda_geom * geom,
        }
    }
}

/// Loss and gradients for one batch.
#[derive(Debug, Clone)]
pub struct StepGradients {
    pub components: LossComponents,
    /// Encoder parameters then decoder parameters, each in
    /// [`Mlp::params_flat`] order.
    pub params: Vec<f64>,
    /// `dL/d(r0, r1, r2)`; zero when the reconstruction layer is off.
    pub radii: [f64; 3],
    pub degenerate: usize,
}

/// Runs the pipeline on `x_batch` with `pool` as the reconstruction pool and
/// differentiates the total loss.
pub fn loss_and_gradients(
    model: &Autoencoder,
    mrl: &MrlParams,
    pool: &PointCloud,
    x_batch: &PointCloud,
    config: &TrainConfig,
) -> Result<StepGradients> {
    let tracked: Option<TrackedContraction> = if config.mrl_enabled {
        Some(mrl_forward_tracked(x_batch, pool, mrl)?)
    } else {
        None
    };
    let y_values = match &tracked {
        Some(t) => t.output.clone(),
        None => x_batch.points().clone(),
    };
    let dim = x_batch.dim();

    let mut tape = Tape::new();
    let enc = model.encoder.record_params(&mut tape);
    let dec = model.decoder.record_params(&mut tape);
    let y = tape.leaf(y_values);
    let (z, tangents) = model
        .encoder
        .forward_tape(&mut tape, y, &enc, config.geom_active())?;
    let (x_hat, _) = model.decoder.forward_tape(&mut tape, z, &dec, false)?;

    let x = tape.leaf(x_batch.points().clone());
    let diff = tape.sub(x_hat, x);
    let sq = tape.square(diff);
    let ae = tape.mean(sq);
    let mut total = tape.scale(ae, config.lambda_ae);

    let mut topo_value = 0.0;
    if config.topo_active() {
        let (t, parts) = topo_loss_tape(&mut tape, y, z, config.topo_options())?;
        topo_value = parts.total();
        let w = tape.scale(t, config.lambda_topo);
        total = tape.add(total, w);
    }
    let mut geom_value = 0.0;
    if let Some(tangents) = tangents {
        let (g, parts) = geom_loss_tape(&mut tape, tangents, dim)?;
        geom_value = parts.value;
        let w = tape.scale(g, config.lambda_geom);
        total = tape.add(total, w);
    }

    let components = LossComponents::weighted(tape.scalar(ae), topo_value, geom_value, config);
    for (name, v) in [
        ("reconstruction", components.ae),
        ("topological", components.topo),
        ("geometric", components.geom),
    ] {
        if !v.is_finite() {
            return Err(Error::numerical(format!("{name} loss is {v}")));
        }
    }

    let grads = tape.backward(total);
    let mut params = Mlp::gather_gradients(&grads, &enc);
    params.extend(Mlp::gather_gradients(&grads, &dec));
    let (radii, degenerate) = match &tracked {
        Some(t) => (t.radii_gradient(&grads.wrt(y))?, t.degenerate_count()),
        None => ([0.0; 3], 0),
    };
    Ok(StepGradients {
        components,
        params,
        radii,
        degenerate,
    })
}

/// Loss components of the whole pipeline on `x`, without gradients.
pub fn total_loss(
    model: &Autoencoder,
    mrl: &MrlParams,
    pool: &PointCloud,
    x: &PointCloud,
    config: &TrainConfig,
) -> Result<LossComponents> {
    Ok(loss_and_gradients(model, mrl, pool, x, config)?.components)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    pub epoch: usize,
    /// Batch-size weighted means over the epoch.
    pub losses: LossComponents,
    /// Radii after the epoch's last update.
    pub radii: [f64; 3],
    /// Points passed through unchanged by the reconstruction layer.
    pub degenerate: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub config: TrainConfig,
    pub epochs: Vec<EpochRecord>,
    pub final_radii: [f64; 3],
    /// Path of the saved checkpoint, when one was written.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub checkpoint: Option<String>,
    /// Wall-clock seconds per epoch. Not serialized so that reports are
    /// reproducible byte for byte.
    #[serde(skip)]
    pub epoch_seconds: Vec<f64>,
}

impl TrainReport {
    pub fn total_seconds(&self) -> f64 {
        self.epoch_seconds.iter().sum()
    }
}

#[derive(Debug, Clone)]
pub struct TrainOutcome {
    pub model: Autoencoder,
    pub mrl: MrlParams,
    pub report: TrainReport,
}

/// Reconstructed manifold, embedding and reconstruction for a dataset.
#[derive(Debug, Clone)]
pub struct Embedding {
    pub manifold: PointCloud,
    pub embedding: PointCloud,
    pub reconstruction: Array2<f64>,
}

impl TrainOutcome {
    pub fn embed(&self, dataset: &PointCloud) -> Result<Embedding> {
        let manifold = if self.report.config.mrl_enabled {
            mrl_forward(dataset, dataset, &self.mrl)?
        } else {
            dataset.clone()
        };
        let (z, x_hat) = self.model.forward(manifold.points())?;
        let mut embedding = PointCloud::new(z)?;
        if let Some(l) = dataset.labels() {
            embedding = embedding.with_labels(l.clone())?;
        }
        Ok(Embedding {
            manifold,
            embedding,
            reconstruction: x_hat,
        })
    }
}

fn clip_norm(grads: &mut [f64], max_norm: f64) {
    let norm = grads.iter().map(|g| g * g).sum::<f64>().sqrt();
    if norm > max_norm {
        let s = max_norm / norm;
        grads.iter_mut().for_each(|g| *g *= s);
    }
}

const SHUFFLE_STREAM: u64 = 0x5851_F42D_4C95_7F2D;

/// Trains on `dataset` (expected in the unit cube). Deterministic for a
/// fixed configuration.
pub fn train(dataset: &PointCloud, config: &TrainConfig) -> Result<TrainOutcome> {
    let n = dataset.len();
    config.validate(n, dataset.dim())?;
    let mut model = Autoencoder::new(&config.encoder_dims, &config.decoder_dims, config.seed)?;
    let mut mrl = config.mrl;
    let learn_radii = config.mrl_enabled && config.train_radii;

    let n_net = model.param_count();
    let mut flat = model.params_flat();
    if learn_radii {
        flat.extend(mrl.radii().map(f64::ln));
    }
    let mut opt = Adam::new(flat.len(), config.lr);
    let mut rng = SeededRng::new(config.seed ^ SHUFFLE_STREAM);
    let mut order: Vec<usize> = (0..n).collect();

    let mut epochs = Vec::with_capacity(config.epochs);
    let mut epoch_seconds = Vec::with_capacity(config.epochs);
    for epoch in 0..config.epochs {
        let start = Instant::now();
        rng.shuffle(&mut order);
        let mut sums = LossComponents::default();
        let mut degenerate = 0;
        for (b, chunk) in order.chunks(config.batch_size).enumerate() {
            let batch = dataset.select(chunk);
            let step = loss_and_gradients(&model, &mrl, dataset, &batch, config)
                .map_err(|e| annotate(e, epoch, b))?;
            let w = chunk.len() as f64;
            sums.ae += w * step.components.ae;
            sums.topo += w * step.components.topo;
            sums.geom += w * step.components.geom;
            sums.total += w * step.components.total;
            degenerate += step.degenerate;

            let mut grads = step.params;
            if learn_radii {
                // Chain rule through r = exp(log r).
                grads.extend((0..3).map(|r| step.radii[r] * mrl.radii()[r]));
            }
            if grads.iter().any(|g| !g.is_finite()) {
                return Err(annotate(Error::numerical("non-finite gradient"), epoch, b));
            }
            clip_norm(&mut grads, config.grad_clip);
            opt.step(&mut flat, &grads)?;
            model.set_params_flat(&flat[..n_net])?;
            if learn_radii {
                mrl = mrl.with_radii([
                    flat[n_net].exp(),
                    flat[n_net + 1].exp(),
                    flat[n_net + 2].exp(),
                ]);
            }
        }
        let nf = n as f64;
        let losses = LossComponents {
            ae: sums.ae / nf,
            topo: sums.topo / nf,
            geom: sums.geom / nf,
            total: sums.total / nf,
        };
        log::info!(
            "epoch {:>4}  total {:.6e}  ae {:.6e}  topo {:.6e}  geom {:.6e}",
            epoch + 1,
            losses.total,
            losses.ae,
            losses.topo,
            losses.geom
        );
        epochs.push(EpochRecord {
            epoch: epoch + 1,
            losses,
            radii: mrl.radii(),
            degenerate,
        });
        epoch_seconds.push(start.elapsed().as_secs_f64());
    }
    Ok(TrainOutcome {
        model,
        mrl,
        report: TrainReport {
            config: config.clone(),
            epochs,
            final_radii: mrl.radii(),
            checkpoint: None,
            epoch_seconds,
        },
    })
}

fn annotate(e: Error, epoch: usize, batch: usize) -> Error {
    match e {
        Error::Numerical(m) => {
            Error::Numerical(format!("epoch {}, batch {}: {m}", epoch + 1, batch + 1))
        }
        other => other,
    }
}

/// The three comparison groups: noisy input against embedding, reconstructed
/// manifold against embedding, noisy input against reconstructed manifold.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ComparisonGroups {
    pub point_cloud_vs_embedding: MetricReport,
    pub manifold_vs_embedding: MetricReport,
    pub point_cloud_vs_manifold: MetricReport,
}

impl ComparisonGroups {
    pub fn evaluate(dataset: &PointCloud, embedding: &Embedding) -> Result<Self> {
        Ok(Self {
            point_cloud_vs_embedding: metric_report(dataset, &embedding.embedding)?,
            manifold_vs_embedding: metric_report(&embedding.manifold, &embedding.embedding)?,
            point_cloud_vs_manifold: metric_report(dataset, &embedding.manifold)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AblationEntry {
    pub name: String,
    pub report: TrainReport,
    pub groups: ComparisonGroups,
}

/// Trains every [`Ablation`] variant of `base` with the same seed.
pub fn ablation_suite(dataset: &PointCloud, base: &TrainConfig) -> Result<Vec<AblationEntry>> {
    Ablation::ALL
        .par_iter()
        .map(|&a| {
            let config = a.apply(base);
            let outcome = train(dataset, &config)?;
            let embedding = outcome.embed(dataset)?;
            Ok(AblationEntry {
                name: a.name().to_string(),
                groups: ComparisonGroups::evaluate(dataset, &embedding)?,
                report: outcome.report,
            })
        })
        .collect()
}
