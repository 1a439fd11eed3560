//! Topological signature loss and relaxed distortion measure.
//!
//! Both losses are recorded on a [`Tape`] so that training can differentiate
//! them together with the reconstruction term. The plain functions here wrap
//! the taped versions for evaluation and testing.

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{pairwise_distances, PointCloud};
use crate::nn::{LayerVars, Mlp, Tape, Var};
use crate::persistence::{vr_pairing, PersistencePairing, DEFAULT_H1_CAP};

/// Mean pullback trace below which the encoder counts as collapsed.
pub const MIN_MEAN_TRACE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopoLossParts {
    pub loss_y_to_z: f64,
    pub loss_z_to_y: f64,
    pub pairing_y: PersistencePairing,
    pub pairing_z: PersistencePairing,
}

impl TopoLossParts {
    pub fn total(&self) -> f64 {
        self.loss_y_to_z + self.loss_z_to_y
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GeomLossParts {
    pub mean_trace: f64,
    pub mean_trace_sq: f64,
    pub value: f64,
}

/// Options for the persistence computation inside the topological loss.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopoOptions {
    pub h1: bool,
    pub h1_cap: usize,
}

impl Default for TopoOptions {
    fn default() -> Self {
        Self {
            h1: false,
            h1_cap: DEFAULT_H1_CAP,
        }
    }
}

fn pairing_of(points: &Array2<f64>, opts: TopoOptions) -> Result<PersistencePairing> {
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::numerical(
            "non-finite coordinates in topological loss input",
        ));
    }
    let cloud = PointCloud::new(points.clone())?;
    Ok(vr_pairing(&pairwise_distances(&cloud), opts.h1, opts.h1_cap)?.0)
}

/// `0.5 * |A[pi] - B[pi]|^2` on the tape.
fn signature_term(tape: &mut Tape, own: Var, other: Var, edges: Vec<(usize, usize)>) -> Var {
    if edges.is_empty() {
        return tape.constant_scalar(0.0);
    }
    let a = tape.pair_distances(own, edges.clone());
    let b = tape.pair_distances(other, edges);
    let diff = tape.sub(a, b);
    let sq = tape.square(diff);
    let s = tape.sum(sq);
    tape.scale(s, 0.5)
}

/// Records the topological loss between `y` and `z` (rows correspond).
/// Pairings are computed from the current values and held fixed.
pub fn topo_loss_tape(
    tape: &mut Tape,
    y: Var,
    z: Var,
    opts: TopoOptions,
) -> Result<(Var, TopoLossParts)> {
    let (ny, nz) = (tape.value(y).nrows(), tape.value(z).nrows());
    if ny != nz {
        return Err(Error::param(format!(
            "topological loss needs equal sizes, got {ny} and {nz}"
        )));
    }
    let pairing_y = pairing_of(tape.value(y), opts)?;
    let pairing_z = pairing_of(tape.value(z), opts)?;
    let yz = signature_term(tape, y, z, pairing_y.edges());
    let zy = signature_term(tape, z, y, pairing_z.edges());
    let total = tape.add(yz, zy);
    let parts = TopoLossParts {
        loss_y_to_z: tape.scalar(yz),
        loss_z_to_y: tape.scalar(zy),
        pairing_y,
        pairing_z,
    };
    Ok((total, parts))
}

pub fn topo_signature_loss(y: &PointCloud, z: &PointCloud) -> Result<TopoLossParts> {
    let mut tape = Tape::new();
    let yv = tape.leaf(y.points().clone());
    let zv = tape.leaf(z.points().clone());
    Ok(topo_loss_tape(&mut tape, yv, zv, TopoOptions::default())?.1)
}

/// Loss with gradients with respect to the coordinates of `y` and `z`.
pub fn topo_loss_gradient(
    y: &PointCloud,
    z: &PointCloud,
    opts: TopoOptions,
) -> Result<(TopoLossParts, Array2<f64>, Array2<f64>)> {
    let mut tape = Tape::new();
    let yv = tape.leaf(y.points().clone());
    let zv = tape.leaf(z.points().clone());
    let (total, parts) = topo_loss_tape(&mut tape, yv, zv, opts)?;
    let g = tape.backward(total);
    Ok((parts, g.wrt(yv), g.wrt(zv)))
}

/// Records the relaxed distortion measure from encoder Jacobian tangents.
///
/// `tangents` is the `(B*D) x d` node from [`Mlp::forward_tape`], so block
/// `b` is `J(y_b)^T`. With the identity metric on the embedding,
/// `Tr H = |J|_F^2` and `Tr H^2 = |J J^T|_F^2`.
pub fn geom_loss_tape(
    tape: &mut Tape,
    tangents: Var,
    input_dim: usize,
) -> Result<(Var, GeomLossParts)> {
    let rows = tape.value(tangents).nrows();
    if input_dim == 0 || rows == 0 || rows % input_dim != 0 {
        return Err(Error::param(
            "tangent rows must be a positive multiple of the input width",
        ));
    }
    let batch = (rows / input_dim) as f64;
    let dim = input_dim as f64;

    let sq = tape.square(tangents);
    let tr = tape.sum(sq);
    let mean_trace = tape.scale(tr, 1.0 / batch);
    let gram = tape.block_gram(tangents, input_dim);
    let gram_sq = tape.square(gram);
    let tr2 = tape.sum(gram_sq);
    let mean_trace_sq = tape.scale(tr2, 1.0 / batch);

    let mt = tape.scalar(mean_trace);
    let mts = tape.scalar(mean_trace_sq);
    if !mt.is_finite() || !mts.is_finite() {
        return Err(Error::numerical("non-finite encoder Jacobian"));
    }
    if mt <= MIN_MEAN_TRACE {
        return Err(Error::numerical(format!(
            "mean pullback trace {mt:e} vanished; the encoder has collapsed"
        )));
    }
    let denom = tape.square(mean_trace);
    let ratio = tape.div(mean_trace_sq, denom);
    let scaled = tape.scale(ratio, dim * dim);
    let value = tape.add_scalar(scaled, -dim);
    let parts = GeomLossParts {
        mean_trace: mt,
        mean_trace_sq: mts,
        value: tape.scalar(value),
    };
    Ok((value, parts))
}

fn geom_record(
    tape: &mut Tape,
    model: &Mlp,
    y: &PointCloud,
) -> Result<(Var, GeomLossParts, Vec<LayerVars>)> {
    let params = model.record_params(tape);
    let yv = tape.leaf(y.points().clone());
    let (_, tangents) = model.forward_tape(tape, yv, &params, true)?;
    let tangents = tangents.expect("tangents requested");
    let (v, parts) = geom_loss_tape(tape, tangents, y.dim())?;
    Ok((v, parts, params))
}

pub fn geometric_loss(model: &Mlp, y: &PointCloud) -> Result<GeomLossParts> {
    let mut tape = Tape::new();
    Ok(geom_record(&mut tape, model, y)?.1)
}

/// Loss with its gradient in [`Mlp::params_flat`] order.
pub fn geom_loss_gradient(model: &Mlp, y: &PointCloud) -> Result<(GeomLossParts, Vec<f64>)> {
    let mut tape = Tape::new();
    let (v, parts, params) = geom_record(&mut tape, model, y)?;
    let g = tape.backward(v);
    Ok((parts, Mlp::gather_gradients(&g, &params)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{Dense, OutputActivation};
    use crate::rng::SeededRng;
    use ndarray::{array, Array1};
    use proptest::prelude::*;

    fn cloud(rows: &[Vec<f64>]) -> PointCloud {
        PointCloud::from_rows(rows).unwrap()
    }

    fn random_cloud(rng: &mut SeededRng, n: usize, d: usize) -> PointCloud {
        PointCloud::new(Array2::from_shape_fn((n, d), |_| rng.uniform())).unwrap()
    }

    fn linear(w: Array2<f64>) -> Mlp {
        let bias = Array1::zeros(w.nrows());
        Mlp::from_layers(vec![Dense { weight: w, bias }], OutputActivation::Linear).unwrap()
    }

    fn rotation3(a: f64, b: f64) -> Array2<f64> {
        let rz = array![
            [a.cos(), -a.sin(), 0.0],
            [a.sin(), a.cos(), 0.0],
            [0.0, 0.0, 1.0]
        ];
        let rx = array![
            [1.0, 0.0, 0.0],
            [0.0, b.cos(), -b.sin()],
            [0.0, b.sin(), b.cos()]
        ];
        rz.dot(&rx)
    }

    fn close(a: f64, b: f64, rel: f64) -> bool {
        (a - b).abs() <= rel * a.abs().max(b.abs()).max(1e-6)
    }

    /// Per-point Jacobians from forward mode, then the formula directly.
    fn geom_oracle(model: &Mlp, y: &PointCloud) -> f64 {
        let dim = y.dim() as f64;
        let (mut t1, mut t2) = (0.0, 0.0);
        for i in 0..y.len() {
            let j = model.jacobian(y.point(i)).unwrap();
            let h = j.t().dot(&j);
            t1 += h.diag().sum();
            t2 += h.dot(&h).diag().sum();
        }
        let n = y.len() as f64;
        dim * dim * (t2 / n) / (t1 / n).powi(2) - dim
    }

    #[test]
    fn identical_clouds_have_zero_loss() {
        let mut rng = SeededRng::new(3);
        let y = random_cloud(&mut rng, 10, 3);
        let (parts, gy, gz) = topo_loss_gradient(&y, &y, TopoOptions::default()).unwrap();
        assert_eq!(parts.total(), 0.0);
        assert!(gy.iter().chain(gz.iter()).all(|&g| g == 0.0));
    }

    #[test]
    fn line_example() {
        let y = cloud(&[vec![0.0], vec![1.0], vec![3.0]]);
        let z = cloud(&[vec![0.0], vec![1.0], vec![2.0]]);
        let parts = topo_signature_loss(&y, &z).unwrap();
        assert!((parts.loss_y_to_z - 0.5).abs() < 1e-12);
        assert!((parts.loss_z_to_y - 0.5).abs() < 1e-12);
        assert!((parts.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn scaled_copy() {
        let mut rng = SeededRng::new(21);
        let y = random_cloud(&mut rng, 9, 2);
        let c = 1.7;
        let z = y.with_points(y.points() * c).unwrap();
        let parts = topo_signature_loss(&y, &z).unwrap();
        let sum_sq: f64 = parts
            .pairing_y
            .dim0_edges
            .iter()
            .map(|e| e.length * e.length)
            .sum();
        let expect = (c - 1.0) * (c - 1.0) * sum_sq;
        assert!((parts.total() - expect).abs() < 1e-12 * expect.max(1.0));
    }

    #[test]
    fn size_mismatch_rejected() {
        let y = cloud(&[vec![0.0], vec![1.0]]);
        let z = cloud(&[vec![0.0], vec![1.0], vec![2.0]]);
        assert!(matches!(
            topo_signature_loss(&y, &z),
            Err(Error::Parameter(_))
        ));
    }

    #[test]
    fn topo_gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(17);
        for opts in [
            TopoOptions::default(),
            TopoOptions {
                h1: true,
                ..Default::default()
            },
        ] {
            let y = random_cloud(&mut rng, 8, 3);
            let z = random_cloud(&mut rng, 8, 2);
            let (_, gy, gz) = topo_loss_gradient(&y, &z, opts).unwrap();
            let h = 1e-6;
            let loss = |yy: &Array2<f64>, zz: &Array2<f64>| {
                let mut tape = Tape::new();
                let a = tape.leaf(yy.clone());
                let b = tape.leaf(zz.clone());
                topo_loss_tape(&mut tape, a, b, opts).unwrap().1.total()
            };
            for idx in 0..z.points().len() {
                let (r, c) = (idx / 2, idx % 2);
                let (mut zp, mut zm) = (z.points().clone(), z.points().clone());
                zp[[r, c]] += h;
                zm[[r, c]] -= h;
                let fd = (loss(y.points(), &zp) - loss(y.points(), &zm)) / (2.0 * h);
                assert!(
                    close(gz[[r, c]], fd, 1e-4),
                    "z {r},{c}: {} vs {fd}",
                    gz[[r, c]]
                );
            }
            for idx in 0..y.points().len() {
                let (r, c) = (idx / 3, idx % 3);
                let (mut yp, mut ym) = (y.points().clone(), y.points().clone());
                yp[[r, c]] += h;
                ym[[r, c]] -= h;
                let fd = (loss(&yp, z.points()) - loss(&ym, z.points())) / (2.0 * h);
                assert!(
                    close(gy[[r, c]], fd, 1e-4),
                    "y {r},{c}: {} vs {fd}",
                    gy[[r, c]]
                );
            }
        }
    }

    #[test]
    fn orthogonal_encoder_is_isometric() {
        let mut rng = SeededRng::new(1);
        let y = random_cloud(&mut rng, 6, 3);
        let q = rotation3(0.4, -1.1);
        assert!(geometric_loss(&linear(q.clone()), &y).unwrap().value.abs() < 1e-9);
        assert!(geometric_loss(&linear(q * 3.5), &y).unwrap().value.abs() < 1e-9);
    }

    #[test]
    fn orthonormal_rows_hit_rank_floor() {
        let mut rng = SeededRng::new(2);
        let y = random_cloud(&mut rng, 5, 3);
        let q = rotation3(0.9, 0.3);
        let w = q.slice(ndarray::s![0..2, ..]).to_owned();
        let v = geometric_loss(&linear(w), &y).unwrap().value;
        assert!((v - 1.5).abs() < 1e-9, "{v}");
    }

    #[test]
    fn collapsed_encoder_is_numerical_error() {
        let y = cloud(&[vec![0.1, 0.2], vec![0.3, 0.4]]);
        let err = geometric_loss(&linear(Array2::zeros((2, 2))), &y).unwrap_err();
        assert!(matches!(err, Error::Numerical(_)));
    }

    #[test]
    fn geom_matches_forward_mode_oracle() {
        let mut rng = SeededRng::new(9);
        let model = Mlp::new(&[4, 6, 5, 2], OutputActivation::Linear, &mut rng).unwrap();
        let y = random_cloud(&mut rng, 7, 4);
        let ours = geometric_loss(&model, &y).unwrap().value;
        assert!((ours - geom_oracle(&model, &y)).abs() < 1e-10);
    }

    #[test]
    fn geom_gradient_matches_finite_differences() {
        let mut rng = SeededRng::new(31);
        let model = Mlp::new(&[3, 4, 2], OutputActivation::Linear, &mut rng).unwrap();
        let y = random_cloud(&mut rng, 6, 3);
        let (_, grad) = geom_loss_gradient(&model, &y).unwrap();
        let base = model.params_flat();
        let h = 1e-5;
        for i in 0..base.len() {
            let eval = |delta: f64| {
                let mut m = model.clone();
                let mut p = base.clone();
                p[i] += delta;
                m.set_params_flat(&p).unwrap();
                geometric_loss(&m, &y).unwrap().value
            };
            let fd = (eval(h) - eval(-h)) / (2.0 * h);
            assert!(close(grad[i], fd, 1e-3), "param {i}: {} vs {fd}", grad[i]);
        }
    }

    proptest! {
        #[test]
        fn topo_is_symmetric_and_nonnegative(seed in 0u64..500) {
            let mut rng = SeededRng::new(seed);
            let y = random_cloud(&mut rng, 7, 3);
            let z = random_cloud(&mut rng, 7, 2);
            let a = topo_signature_loss(&y, &z).unwrap();
            let b = topo_signature_loss(&z, &y).unwrap();
            prop_assert!(a.loss_y_to_z >= 0.0 && a.loss_z_to_y >= 0.0);
            prop_assert!((a.total() - b.total()).abs() < 1e-12);
        }

        #[test]
        fn geom_respects_rank_bound_and_invariances(seed in 0u64..500, c in 0.1f64..10.0, angle in 0.0f64..6.0) {
            let mut rng = SeededRng::new(seed);
            let model = Mlp::new(&[3, 5, 2], OutputActivation::Linear, &mut rng).unwrap();
            let y = random_cloud(&mut rng, 6, 3);
            let v = geometric_loss(&model, &y).unwrap().value;
            prop_assert!(v >= 9.0 / 2.0 - 3.0 - 1e-9);

            let mut scaled = model.clone();
            let last = scaled.layers_mut().last_mut().unwrap();
            last.weight *= c;
            last.bias *= c;
            prop_assert!((geometric_loss(&scaled, &y).unwrap().value - v).abs() < 1e-9);

            let rot = array![[angle.cos(), -angle.sin()], [angle.sin(), angle.cos()]];
            let mut rotated = model.clone();
            let last = rotated.layers_mut().last_mut().unwrap();
            last.weight = rot.dot(&last.weight);
            last.bias = rot.dot(&last.bias);
            prop_assert!((geometric_loss(&rotated, &y).unwrap().value - v).abs() < 1e-9);
        }
    }
}
