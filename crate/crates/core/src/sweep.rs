//! Robustness sweeps over noise level, sample size, ambient dimension and
//! the regularizer weight grid.

use std::time::Instant;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::data::DatasetSpec;
use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::metrics::kl_sigma;
use crate::training::{train, TrainConfig};

/// Values on each axis of the weight grid.
pub const LAMBDA_GRID: [f64; 10] = [0.0, 0.01, 0.05, 0.1, 0.5, 1.0, 5.0, 10.0, 50.0, 100.0];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum SweepAxis {
    Noise,
    Size,
    Dim,
    LambdaGrid,
}

impl SweepAxis {
    pub fn from_name(name: &str) -> Option<Self> {
        match name {
            "noise" => Some(Self::Noise),
            "size" => Some(Self::Size),
            "dim" => Some(Self::Dim),
            "lambda-grid" | "lambda_grid" => Some(Self::LambdaGrid),
            _ => None,
        }
    }
}

/// `start, start + step, ...` up to `stop` inclusive, tolerant of rounding.
pub fn stepped_range(start: f64, stop: f64, step: f64) -> Result<Vec<f64>> {
    if !(step > 0.0) || !(stop >= start) || !start.is_finite() || !stop.is_finite() {
        return Err(Error::param(format!(
            "invalid range {start}..{stop} step {step}"
        )));
    }
    let count = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..count).map(|i| start + i as f64 * step).collect())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepSpec {
    pub axis: SweepAxis,
    /// Grid values for the noise, size and dim axes; ignored for the weight
    /// grid, which uses `lambda_values` on both axes.
    pub values: Vec<f64>,
    pub lambda_values: Vec<f64>,
    /// Dataset used at every grid point unless the axis overrides it.
    pub dataset: DatasetSpec,
    pub config: TrainConfig,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub index: usize,
    pub n_points: usize,
    pub dim: usize,
    pub noise_sigma: f64,
    pub lambda_topo: f64,
    pub lambda_geom: f64,
    /// RMS displacement between the reconstructed manifold and the input.
    pub manifold_loss: f64,
    /// RMS displacement between the reconstructed manifold and the clean
    /// ground truth.
    pub manifold_error: Option<f64>,
    pub kl01_loss: f64,
    pub kl01_error: Option<f64>,
    pub kl100_loss: f64,
    pub kl100_error: Option<f64>,
    pub train_seconds: f64,
    pub seconds_per_point: f64,
}

fn rms_displacement(a: &Array2<f64>, b: &Array2<f64>) -> f64 {
    let n = a.nrows() as f64;
    ((a - b).mapv(|v| v * v).sum() / n).sqrt()
}

/// Dataset and configuration for every grid point, in output order.
pub fn grid(spec: &SweepSpec) -> Result<Vec<(DatasetSpec, TrainConfig)>> {
    let mut out = Vec::new();
    match spec.axis {
        SweepAxis::Noise => {
            for &s in &spec.values {
                out.push((
                    DatasetSpec {
                        noise_sigma: s,
                        ..spec.dataset.clone()
                    },
                    spec.config.clone(),
                ));
            }
        }
        SweepAxis::Size => {
            for &n in &spec.values {
                if !(n >= 1.0) || n.fract() != 0.0 {
                    return Err(Error::param(format!(
                        "sample size must be a positive integer, got {n}"
                    )));
                }
                let d = DatasetSpec {
                    n_samples: n as usize,
                    ..spec.dataset.clone()
                };
                out.push((d, spec.config.clone()));
            }
        }
        SweepAxis::Dim => {
            for &dim in &spec.values {
                if !(dim >= 2.0) || dim.fract() != 0.0 {
                    return Err(Error::param(format!(
                        "ambient dimension must be an integer >= 2, got {dim}"
                    )));
                }
                let dim = dim as usize;
                let d = DatasetSpec::spheres(dim, spec.dataset.n_samples, spec.dataset.seed);
                out.push((d, spec.config.clone().with_input_dim(dim)));
            }
        }
        SweepAxis::LambdaGrid => {
            for &lt in &spec.lambda_values {
                for &lg in &spec.lambda_values {
                    let c = TrainConfig {
                        lambda_topo: lt,
                        lambda_geom: lg,
                        ..spec.config.clone()
                    };
                    out.push((spec.dataset.clone(), c));
                }
            }
        }
    }
    Ok(out)
}

fn run_point(
    index: usize,
    data: &PointCloud,
    config: &TrainConfig,
    sigma: f64,
) -> Result<SweepRecord> {
    let config = TrainConfig {
        batch_size: config.batch_size.min(data.len()),
        ..config.clone()
    };
    let start = Instant::now();
    let outcome = train(data, &config)?;
    let train_seconds = start.elapsed().as_secs_f64();
    let emb = outcome.embed(data)?;
    let clean = match data.clean() {
        Some(c) => Some(PointCloud::new(c.clone())?),
        None => None,
    };
    let kl_err = |s: f64| -> Result<Option<f64>> {
        clean
            .as_ref()
            .map(|c| kl_sigma(c, &emb.embedding, s))
            .transpose()
    };
    Ok(SweepRecord {
        index,
        n_points: data.len(),
        dim: data.dim(),
        noise_sigma: sigma,
        lambda_topo: config.lambda_topo,
        lambda_geom: config.lambda_geom,
        manifold_loss: rms_displacement(emb.manifold.points(), data.points()),
        manifold_error: clean
            .as_ref()
            .map(|c| rms_displacement(emb.manifold.points(), c.points())),
        kl01_loss: kl_sigma(data, &emb.embedding, 0.1)?,
        kl01_error: kl_err(0.1)?,
        kl100_loss: kl_sigma(data, &emb.embedding, 100.0)?,
        kl100_error: kl_err(100.0)?,
        train_seconds,
        seconds_per_point: train_seconds / data.len() as f64,
    })
}

/// Runs the grid points one after another so that the timings are not
/// distorted by concurrent runs; training itself still uses the worker pool.
pub fn run_sweep(spec: &SweepSpec) -> Result<Vec<SweepRecord>> {
    grid(spec)?
        .into_iter()
        .enumerate()
        .map(|(i, (d, c))| {
            let data = d.build()?;
            run_point(i, &data, &c, d.noise_sigma)
        })
        .collect()
}
