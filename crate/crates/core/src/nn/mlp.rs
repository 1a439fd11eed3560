use std::path::Path;

use ndarray::{Array1, Array2, ArrayView1};
use serde::{Deserialize, Serialize};

use super::activation::{gelu, gelu_prime, sigmoid};
use super::tape::{Gradients, Tape, Var};
use crate::error::{Error, Result};
use crate::rng::SeededRng;

/// Activation applied after the last affine layer. Hidden layers always use
/// GELU.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputActivation {
    Linear,
    Sigmoid,
}

/// Affine map `x -> W x + b` with `W` stored `out x in`.
#[derive(Debug, Clone, PartialEq)]
pub struct Dense {
    pub weight: Array2<f64>,
    pub bias: Array1<f64>,
}

impl Dense {
    /// Glorot-uniform weights, zero bias.
    fn glorot(fan_in: usize, fan_out: usize, rng: &mut SeededRng) -> Self {
        let bound = (6.0 / (fan_in + fan_out) as f64).sqrt();
        Self {
            weight: Array2::from_shape_fn((fan_out, fan_in), |_| rng.uniform_in(-bound, bound)),
            bias: Array1::zeros(fan_out),
        }
    }

    fn fan_in(&self) -> usize {
        self.weight.ncols()
    }

    fn fan_out(&self) -> usize {
        self.weight.nrows()
    }
}

/// Tape handles for one layer's parameters.
#[derive(Debug, Clone, Copy)]
pub struct LayerVars {
    pub weight: Var,
    pub bias: Var,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Mlp {
    layers: Vec<Dense>,
    output: OutputActivation,
}

impl Mlp {
    pub fn new(dims: &[usize], output: OutputActivation, rng: &mut SeededRng) -> Result<Self> {
        if dims.len() < 2 || dims.contains(&0) {
            return Err(Error::param(format!(
                "layer dims {dims:?} need at least two positive entries"
            )));
        }
        let layers = dims
            .windows(2)
            .map(|w| Dense::glorot(w[0], w[1], rng))
            .collect();
        Ok(Self { layers, output })
    }

    pub fn from_layers(layers: Vec<Dense>, output: OutputActivation) -> Result<Self> {
        if layers.is_empty() {
            return Err(Error::param("network needs at least one layer"));
        }
        for (i, l) in layers.iter().enumerate() {
            if l.bias.len() != l.fan_out() {
                return Err(Error::param(format!(
                    "layer {i}: bias length does not match output width"
                )));
            }
            if i > 0 && layers[i - 1].fan_out() != l.fan_in() {
                return Err(Error::param(format!(
                    "layer {i}: input width does not match previous output"
                )));
            }
            if l.weight.iter().chain(l.bias.iter()).any(|v| !v.is_finite()) {
                return Err(Error::param(format!("layer {i}: non-finite parameter")));
            }
        }
        Ok(Self { layers, output })
    }

    pub fn layers(&self) -> &[Dense] {
        &self.layers
    }

    pub fn layers_mut(&mut self) -> &mut [Dense] {
        &mut self.layers
    }

    pub fn output_activation(&self) -> OutputActivation {
        self.output
    }

    pub fn dims(&self) -> Vec<usize> {
        std::iter::once(self.layers[0].fan_in())
            .chain(self.layers.iter().map(Dense::fan_out))
            .collect()
    }

    pub fn input_dim(&self) -> usize {
        self.layers[0].fan_in()
    }

    pub fn output_dim(&self) -> usize {
        self.layers.last().expect("non-empty").fan_out()
    }

    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weight.len() + l.bias.len())
            .sum()
    }

    /// Parameters in layer order, each layer's weight (row-major) then bias.
    pub fn params_flat(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weight.iter());
            out.extend(l.bias.iter());
        }
        out
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::param(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let mut pos = 0;
        for l in &mut self.layers {
            for w in l.weight.iter_mut().chain(l.bias.iter_mut()) {
                *w = flat[pos];
                pos += 1;
            }
        }
        Ok(())
    }

    fn check_input(&self, width: usize) -> Result<()> {
        if width != self.input_dim() {
            return Err(Error::param(format!(
                "input width {width} does not match network input {}",
                self.input_dim()
            )));
        }
        Ok(())
    }

    /// Row-wise forward pass.
    pub fn forward(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        self.check_input(x.ncols())?;
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        for (i, l) in self.layers.iter().enumerate() {
            let pre = h.dot(&l.weight.t()) + &l.bias;
            h = if i < last {
                pre.mapv(gelu)
            } else {
                match self.output {
                    OutputActivation::Linear => pre,
                    OutputActivation::Sigmoid => pre.mapv(sigmoid),
                }
            };
        }
        Ok(h)
    }

    /// Exact `out x in` Jacobian at one input, by forward-mode tangents.
    pub fn jacobian(&self, x: ArrayView1<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x.len())?;
        let last = self.layers.len() - 1;
        let mut h = x.to_owned();
        let mut jac = Array2::eye(x.len());
        for (i, l) in self.layers.iter().enumerate() {
            let pre = l.weight.dot(&h) + &l.bias;
            let lin = l.weight.dot(&jac);
            let (slope, next) = if i < last {
                (pre.mapv(gelu_prime), pre.mapv(gelu))
            } else {
                match self.output {
                    OutputActivation::Linear => (Array1::ones(pre.len()), pre),
                    OutputActivation::Sigmoid => {
                        let s = pre.mapv(sigmoid);
                        (s.mapv(|v| v * (1.0 - v)), s)
                    }
                }
            };
            jac = lin;
            for (mut row, &d) in jac.rows_mut().into_iter().zip(slope.iter()) {
                row *= d;
            }
            h = next;
        }
        Ok(jac)
    }

    /// Records the parameters as tape leaves.
    pub fn record_params(&self, tape: &mut Tape) -> Vec<LayerVars> {
        self.layers
            .iter()
            .map(|l| LayerVars {
                weight: tape.leaf(l.weight.clone()),
                bias: tape.leaf(l.bias.clone().insert_axis(ndarray::Axis(0))),
            })
            .collect()
    }

    /// Gradients for the recorded parameters in [`Mlp::params_flat`] order.
    pub fn gather_gradients(grads: &Gradients, params: &[LayerVars]) -> Vec<f64> {
        let mut out = Vec::new();
        for p in params {
            out.extend(grads.wrt(p.weight).iter());
            out.extend(grads.wrt(p.bias).iter());
        }
        out
    }

    /// Taped forward pass. With `tangents`, also returns a `(B*D) x out`
    /// node whose rows `b*D .. b*D + D` hold the transposed Jacobian at
    /// input row `b`; the tangents are built from taped ops, so functionals
    /// of the Jacobian are differentiable.
    pub fn forward_tape(
        &self,
        tape: &mut Tape,
        x: Var,
        params: &[LayerVars],
        tangents: bool,
    ) -> Result<(Var, Option<Var>)> {
        let (batch, width) = tape.value(x).dim();
        self.check_input(width)?;
        if tangents && self.output != OutputActivation::Linear {
            return Err(Error::param(
                "Jacobian tangents are only recorded for linear-output networks",
            ));
        }
        let mut tan = tangents.then(|| {
            let mut seed = Array2::zeros((batch * width, width));
            for b in 0..batch {
                for k in 0..width {
                    seed[[b * width + k, k]] = 1.0;
                }
            }
            tape.leaf(seed)
        });
        let last = self.layers.len() - 1;
        let mut h = x;
        for (i, p) in params.iter().enumerate() {
            let lin = tape.matmul_t(h, p.weight);
            let pre = tape.add_row_bias(lin, p.bias);
            let t_lin = tan.map(|t| tape.matmul_t(t, p.weight));
            if i < last {
                h = tape.gelu(pre);
                tan = match t_lin {
                    Some(t) => {
                        let slope = tape.gelu_prime(pre);
                        let slope = tape.repeat_rows(slope, width);
                        Some(tape.mul(t, slope))
                    }
                    None => None,
                };
            } else {
                h = match self.output {
                    OutputActivation::Linear => pre,
                    OutputActivation::Sigmoid => tape.sigmoid(pre),
                };
                tan = t_lin;
            }
        }
        Ok((h, tan))
    }
}

pub const CHECKPOINT_FORMAT: &str = "mforge-autoencoder/1";

/// Encoder and decoder pair.
#[derive(Debug, Clone, PartialEq)]
pub struct Autoencoder {
    pub encoder: Mlp,
    pub decoder: Mlp,
}

impl Autoencoder {
    /// GELU hidden layers, linear encoder output, sigmoid decoder output.
    pub fn new(encoder_dims: &[usize], decoder_dims: &[usize], seed: u64) -> Result<Self> {
        if encoder_dims.last() != decoder_dims.first() {
            return Err(Error::param(format!(
                "encoder output {:?} does not match decoder input {:?}",
                encoder_dims.last(),
                decoder_dims.first()
            )));
        }
        let mut rng = SeededRng::new(seed);
        Ok(Self {
            encoder: Mlp::new(encoder_dims, OutputActivation::Linear, &mut rng)?,
            decoder: Mlp::new(decoder_dims, OutputActivation::Sigmoid, &mut rng)?,
        })
    }

    pub fn encode(&self, y: &Array2<f64>) -> Result<Array2<f64>> {
        self.encoder.forward(y)
    }

    pub fn decode(&self, z: &Array2<f64>) -> Result<Array2<f64>> {
        self.decoder.forward(z)
    }

    /// `(Z, X_hat)` for a batch of reconstructed points.
    pub fn forward(&self, y: &Array2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        let z = self.encode(y)?;
        let x_hat = self.decode(&z)?;
        Ok((z, x_hat))
    }

    /// `d x D` Jacobian of the encoder at `y`.
    pub fn encoder_jacobian(&self, y: ArrayView1<'_, f64>) -> Result<Array2<f64>> {
        self.encoder.jacobian(y)
    }

    pub fn param_count(&self) -> usize {
        self.encoder.param_count() + self.decoder.param_count()
    }

    pub fn params_flat(&self) -> Vec<f64> {
        let mut p = self.encoder.params_flat();
        p.extend(self.decoder.params_flat());
        p
    }

    pub fn set_params_flat(&mut self, flat: &[f64]) -> Result<()> {
        if flat.len() != self.param_count() {
            return Err(Error::param(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                flat.len()
            )));
        }
        let split = self.encoder.param_count();
        self.encoder.set_params_flat(&flat[..split])?;
        self.decoder.set_params_flat(&flat[split..])
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            format: CHECKPOINT_FORMAT.to_string(),
            encoder: NetworkRecord::from(&self.encoder),
            decoder: NetworkRecord::from(&self.decoder),
        }
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        if c.format != CHECKPOINT_FORMAT {
            return Err(Error::param(format!(
                "unsupported checkpoint format {:?}",
                c.format
            )));
        }
        let model = Self {
            encoder: c.encoder.to_mlp()?,
            decoder: c.decoder.to_mlp()?,
        };
        if model.encoder.output_dim() != model.decoder.input_dim() {
            return Err(Error::param(
                "checkpoint encoder and decoder widths disagree",
            ));
        }
        Ok(model)
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        let text = serde_json::to_string_pretty(&self.to_checkpoint())
            .expect("finite parameters serialize");
        std::fs::write(path, text).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let c: Checkpoint = serde_json::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            row: e.line(),
            message: e.to_string(),
        })?;
        Self::from_checkpoint(&c)
    }
}

/// On-disk model: layer dims plus row-major parameter arrays.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub format: String,
    pub encoder: NetworkRecord,
    pub decoder: NetworkRecord,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetworkRecord {
    pub dims: Vec<usize>,
    pub output: OutputActivation,
    pub layers: Vec<LayerRecord>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerRecord {
    pub weight: Vec<f64>,
    pub bias: Vec<f64>,
}

impl From<&Mlp> for NetworkRecord {
    fn from(m: &Mlp) -> Self {
        Self {
            dims: m.dims(),
            output: m.output,
            layers: m
                .layers
                .iter()
                .map(|l| LayerRecord {
                    weight: l.weight.iter().copied().collect(),
                    bias: l.bias.to_vec(),
                })
                .collect(),
        }
    }
}

impl NetworkRecord {
    fn to_mlp(&self) -> Result<Mlp> {
        if self.dims.len() != self.layers.len() + 1 {
            return Err(Error::param("checkpoint dims do not match layer count"));
        }
        let layers = self
            .dims
            .windows(2)
            .zip(&self.layers)
            .map(|(w, rec)| {
                let weight =
                    Array2::from_shape_vec((w[1], w[0]), rec.weight.clone()).map_err(|_| {
                        Error::param(format!(
                            "weight of a {}->{} layer has wrong length",
                            w[0], w[1]
                        ))
                    })?;
                Ok(Dense {
                    weight,
                    bias: Array1::from(rec.bias.clone()),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Mlp::from_layers(layers, self.output)
    }
}
