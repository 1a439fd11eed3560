//! Manifold reconstruction layer: contracts each noisy point toward the
//! latent manifold.
//!
//! For a point `x` the layer first estimates a contraction direction from a
//! smooth weighted mean `F(x)` of the pool points inside the ball of radius
//! `r0`. It then averages the pool points inside a cylinder around `x`
//! whose axis follows that direction: axial half-length `r2`, cross-section
//! radius `r1`. Both averages use compactly supported polynomial weights of
//! order `k`, so the output is a smooth function of the radii and the radii
//! can be trained by gradient descent.
//!
//! Gradients treat membership in the ball and the cylinder as fixed; the
//! weights vanish to order `k` at those boundaries.

use ndarray::{Array1, Array2, ArrayView1};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;

/// Radii and smoothness of the contraction.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MrlParams {
    /// Radius of the ball used to find the contraction direction.
    pub r0: f64,
    /// Cross-section radius of the cylinder.
    pub r1: f64,
    /// Axial radius of the cylinder.
    pub r2: f64,
    /// Smoothness exponent of the weights.
    pub k: u32,
    /// Below this the direction `F(x) - x` (or the cylinder mass) is treated
    /// as zero and the point passes through unchanged.
    #[serde(default = "default_eps_dir")]
    pub eps_dir: f64,
}

fn default_eps_dir() -> f64 {
    1e-9
}

impl Default for MrlParams {
    fn default() -> Self {
        Self::PRESET
    }
}

impl MrlParams {
    /// Radii used for every dataset preset: `(1.0, 0.01, 1.0, 3)`.
    pub const PRESET: MrlParams = MrlParams {
        r0: 1.0,
        r1: 0.01,
        r2: 1.0,
        k: 3,
        eps_dir: 1e-9,
    };

    pub fn new(r0: f64, r1: f64, r2: f64, k: u32) -> Result<Self> {
        let p = Self {
            r0,
            r1,
            r2,
            k,
            eps_dir: default_eps_dir(),
        };
        p.validate()?;
        Ok(p)
    }

    /// Radii proportional to the noise level: `r0 = c0 σ`, `r1 = c1 σ`,
    /// `r2 = c2 σ sqrt(ln(1/σ))`.
    pub fn from_noise_level(sigma: f64, c0: f64, c1: f64, c2: f64, k: u32) -> Result<Self> {
        if !(sigma > 0.0 && sigma < 1.0) {
            return Err(Error::param(format!(
                "noise-scaled radii need 0 < sigma < 1, got {sigma}"
            )));
        }
        Self::new(
            c0 * sigma,
            c1 * sigma,
            c2 * sigma * (1.0 / sigma).ln().sqrt(),
            k,
        )
    }

    pub fn validate(&self) -> Result<()> {
        for (name, r) in [("r0", self.r0), ("r1", self.r1), ("r2", self.r2)] {
            if !(r > 0.0) || !r.is_finite() {
                return Err(Error::param(format!(
                    "{name} must be positive and finite, got {r}"
                )));
            }
        }
        if self.k < 3 {
            return Err(Error::param(format!(
                "smoothness k must be >= 3, got {}",
                self.k
            )));
        }
        if !(self.eps_dir > 0.0) {
            return Err(Error::param("eps_dir must be positive"));
        }
        Ok(())
    }

    pub fn radii(&self) -> [f64; 3] {
        [self.r0, self.r1, self.r2]
    }

    pub fn with_radii(&self, radii: [f64; 3]) -> Self {
        Self {
            r0: radii[0],
            r1: radii[1],
            r2: radii[2],
            ..*self
        }
    }
}

/// Normalized weights over a subset of pool indices.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct NeighborWeights {
    pub indices: Vec<usize>,
    pub weights: Vec<f64>,
}

impl NeighborWeights {
    fn normalize(indices: Vec<usize>, raw: Vec<f64>) -> Option<Self> {
        let total: f64 = raw.iter().sum();
        (total > 0.0).then(|| Self {
            indices,
            weights: raw.into_iter().map(|w| w / total).collect(),
        })
    }
}

/// Intermediate quantities of one contraction.
#[derive(Debug, Clone, PartialEq)]
pub struct ContractionState {
    /// Weighted mean of the pool inside the `r0` ball.
    pub f_x: Array1<f64>,
    /// Unit vector from `x` toward `f_x`; `None` when degenerate.
    pub direction: Option<Array1<f64>>,
    pub alpha: NeighborWeights,
    pub beta: NeighborWeights,
    pub degenerate: bool,
}

impl ContractionState {
    /// Rank-one projector onto the contraction direction.
    pub fn projector(&self) -> Option<Array2<f64>> {
        self.direction.as_ref().map(|e| {
            let d = e.len();
            Array2::from_shape_fn((d, d), |(a, b)| e[a] * e[b])
        })
    }
}

#[inline]
fn poly_weight(ratio_sq: f64, k: u32) -> f64 {
    (1.0 - ratio_sq).powi(k as i32)
}

/// Unnormalized ball weight `(1 - s / r0^2)^k` for squared distance `s`;
/// zero outside the ball.
pub fn ball_weight(sq_dist: f64, r0: f64, k: u32) -> f64 {
    if sq_dist <= r0 * r0 {
        poly_weight(sq_dist / (r0 * r0), k)
    } else {
        0.0
    }
}

/// Axial cylinder weight: 1 on `|u| <= r2/2`, polynomial falloff to 0 at
/// `r2`.
pub fn axial_weight(u_norm: f64, r2: f64, k: u32) -> f64 {
    if u_norm <= 0.5 * r2 {
        1.0
    } else if u_norm < r2 {
        let m = (2.0 * u_norm - r2) / r2;
        poly_weight(m * m, k)
    } else {
        0.0
    }
}

/// Cross-section cylinder weight `(1 - |v|^2 / r1^2)^k`.
pub fn radial_weight(v_norm: f64, r1: f64, k: u32) -> f64 {
    if v_norm <= r1 {
        poly_weight(v_norm * v_norm / (r1 * r1), k)
    } else {
        0.0
    }
}

/// Ball weights around `x`. `None` when no pool point lies within `r0`.
pub fn alpha_weights(
    x: ArrayView1<'_, f64>,
    pool: &PointCloud,
    params: &MrlParams,
) -> Option<NeighborWeights> {
    let r0sq = params.r0 * params.r0;
    let mut indices = Vec::new();
    let mut raw = Vec::new();
    for (i, p) in pool.points().rows().into_iter().enumerate() {
        let s = crate::geometry::sq_dist(x, p);
        if s <= r0sq {
            indices.push(i);
            raw.push(poly_weight(s / r0sq, params.k));
        }
    }
    NeighborWeights::normalize(indices, raw)
}

/// First step of the contraction: weighted mean and direction.
pub fn contraction_direction(
    x: ArrayView1<'_, f64>,
    pool: &PointCloud,
    params: &MrlParams,
) -> ContractionState {
    match alpha_weights(x, pool, params) {
        None => ContractionState {
            f_x: x.to_owned(),
            direction: None,
            alpha: NeighborWeights::default(),
            beta: NeighborWeights::default(),
            degenerate: true,
        },
        Some(alpha) => {
            let mut shift = Array1::<f64>::zeros(x.len());
            for (&i, &w) in alpha.indices.iter().zip(&alpha.weights) {
                shift.scaled_add(w, &(&pool.point(i) - &x));
            }
            let f_x = &x + &shift;
            let norm = shift.dot(&shift).sqrt();
            let degenerate = norm < params.eps_dir;
            ContractionState {
                f_x,
                direction: (!degenerate).then(|| shift / norm),
                alpha,
                beta: NeighborWeights::default(),
                degenerate,
            }
        }
    }
}

/// Full contraction of one point; identity when degenerate.
pub fn contract_point(
    x: ArrayView1<'_, f64>,
    pool: &PointCloud,
    params: &MrlParams,
) -> Array1<f64> {
    contract_state(x, pool, params).0
}

/// Contracted point together with both weight sets.
pub fn contract_state(
    x: ArrayView1<'_, f64>,
    pool: &PointCloud,
    params: &MrlParams,
) -> (Array1<f64>, ContractionState) {
    let mut state = contraction_direction(x, pool, params);
    let Some(e) = state.direction.clone() else {
        return (x.to_owned(), state);
    };
    let (r1, r2, k) = (params.r1, params.r2, params.k);
    let mut indices = Vec::new();
    let mut raw = Vec::new();
    let mut shift = Array1::<f64>::zeros(x.len());
    for (j, p) in pool.points().rows().into_iter().enumerate() {
        let d = &p - &x;
        let t = e.dot(&d);
        if t.abs() >= r2 {
            continue;
        }
        let v_sq = (d.dot(&d) - t * t).max(0.0);
        if v_sq > r1 * r1 {
            continue;
        }
        let w = axial_weight(t.abs(), r2, k) * radial_weight(v_sq.sqrt(), r1, k);
        if w > 0.0 {
            indices.push(j);
            raw.push(w);
            shift.scaled_add(w, &d);
        }
    }
    let total: f64 = raw.iter().sum();
    if total < params.eps_dir {
        state.degenerate = true;
        return (x.to_owned(), state);
    }
    state.beta = NeighborWeights::normalize(indices, raw).expect("positive mass");
    (&x + &(shift / total), state)
}

/// Contracted point and its derivatives with respect to `(r0, r1, r2)`.
struct PointContraction {
    y: Vec<f64>,
    dy: Option<[Vec<f64>; 3]>,
}

fn contract_with_grad(x: &[f64], pool: &Array2<f64>, params: &MrlParams) -> PointContraction {
    let dim = x.len();
    let kf = params.k as f64;
    let ki = params.k as i32;
    let identity = || PointContraction {
        y: x.to_vec(),
        dy: None,
    };

    // Ball average and its r0 derivative.
    let (r0, r1, r2) = (params.r0, params.r1, params.r2);
    let r0sq = r0 * r0;
    let mut a_sum = 0.0;
    let mut da_sum = 0.0;
    let mut g = vec![0.0; dim];
    let mut dg = vec![0.0; dim];
    let mut diff = vec![0.0; dim];
    for p in pool.rows() {
        let p = p.as_slice().expect("standard layout");
        let mut s = 0.0;
        for a in 0..dim {
            diff[a] = p[a] - x[a];
            s += diff[a] * diff[a];
        }
        if s > r0sq {
            continue;
        }
        let base = 1.0 - s / r0sq;
        let w = base.powi(ki);
        let dw = kf * base.powi(ki - 1) * 2.0 * s / (r0sq * r0);
        a_sum += w;
        da_sum += dw;
        for a in 0..dim {
            g[a] += w * diff[a];
            dg[a] += dw * diff[a];
        }
    }
    if a_sum <= 0.0 {
        return identity();
    }
    // g = F(x) - x, dg its r0 derivative.
    for a in 0..dim {
        g[a] /= a_sum;
        dg[a] = (dg[a] - g[a] * da_sum) / a_sum;
    }
    let norm = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm < params.eps_dir {
        return identity();
    }
    let e: Vec<f64> = g.iter().map(|v| v / norm).collect();
    let e_dot_dg: f64 = e.iter().zip(&dg).map(|(a, b)| a * b).sum();
    let de: Vec<f64> = (0..dim).map(|a| (dg[a] - e[a] * e_dot_dg) / norm).collect();

    // Cylinder average and derivatives for all three radii.
    let r1sq = r1 * r1;
    let mut b_sum = 0.0;
    let mut db_sum = [0.0; 3];
    let mut shift = vec![0.0; dim];
    let mut dshift = [vec![0.0; dim], vec![0.0; dim], vec![0.0; dim]];
    for p in pool.rows() {
        let p = p.as_slice().expect("standard layout");
        let mut t = 0.0;
        let mut s = 0.0;
        let mut dt = 0.0;
        for a in 0..dim {
            diff[a] = p[a] - x[a];
            t += e[a] * diff[a];
            dt += de[a] * diff[a];
            s += diff[a] * diff[a];
        }
        let abs_t = t.abs();
        if abs_t >= r2 {
            continue;
        }
        let q = (s - t * t).max(0.0);
        if q > r1sq {
            continue;
        }
        let (wu, dwu_dabs, dwu_dr2) = if abs_t <= 0.5 * r2 {
            (1.0, 0.0, 0.0)
        } else {
            let m = 2.0 * abs_t / r2 - 1.0;
            let base = 1.0 - m * m;
            let common = kf * base.powi(ki - 1) * (-2.0 * m);
            (
                base.powi(ki),
                common * 2.0 / r2,
                common * (-2.0 * abs_t / (r2 * r2)),
            )
        };
        let vbase = 1.0 - q / r1sq;
        let wv = vbase.powi(ki);
        let dwv_common = kf * vbase.powi(ki - 1);
        let dwv_dr1 = dwv_common * 2.0 * q / (r1sq * r1);
        let dwv_dq = -dwv_common / r1sq;

        let b = wu * wv;
        if b <= 0.0 {
            continue;
        }
        let sign_t = if t > 0.0 {
            1.0
        } else if t < 0.0 {
            -1.0
        } else {
            0.0
        };
        let db = [
            wv * dwu_dabs * sign_t * dt + wu * dwv_dq * (-2.0 * t * dt),
            wu * dwv_dr1,
            dwu_dr2 * wv,
        ];
        b_sum += b;
        for r in 0..3 {
            db_sum[r] += db[r];
        }
        for a in 0..dim {
            shift[a] += b * diff[a];
            for r in 0..3 {
                dshift[r][a] += db[r] * diff[a];
            }
        }
    }
    if b_sum < params.eps_dir {
        return identity();
    }
    let mean: Vec<f64> = shift.iter().map(|v| v / b_sum).collect();
    let y = (0..dim).map(|a| x[a] + mean[a]).collect();
    let dy = [0, 1, 2].map(|r| {
        (0..dim)
            .map(|a| (dshift[r][a] - mean[a] * db_sum[r]) / b_sum)
            .collect::<Vec<f64>>()
    });
    PointContraction { y, dy: Some(dy) }
}

/// Contracted batch with cached radius derivatives.
#[derive(Debug, Clone)]
pub struct TrackedContraction {
    pub output: Array2<f64>,
    /// Per point, `dy/dr0`, `dy/dr1`, `dy/dr2`; `None` for points that
    /// passed through unchanged.
    derivatives: Vec<Option<[Vec<f64>; 3]>>,
}

impl TrackedContraction {
    /// Chains `dL/dY` into `(dL/dr0, dL/dr1, dL/dr2)`.
    pub fn radii_gradient(&self, upstream: &Array2<f64>) -> Result<[f64; 3]> {
        if upstream.dim() != self.output.dim() {
            return Err(Error::param(format!(
                "upstream gradient shape {:?} does not match output {:?}",
                upstream.dim(),
                self.output.dim()
            )));
        }
        let mut total = [0.0; 3];
        for (i, d) in self.derivatives.iter().enumerate() {
            if let Some(d) = d {
                let up = upstream.row(i);
                for r in 0..3 {
                    total[r] += d[r].iter().zip(up.iter()).map(|(a, b)| a * b).sum::<f64>();
                }
            }
        }
        Ok(total)
    }

    /// Number of points left unchanged by the fallback.
    pub fn degenerate_count(&self) -> usize {
        self.derivatives.iter().filter(|d| d.is_none()).count()
    }
}

fn check_dims(batch: &PointCloud, pool: &PointCloud) -> Result<()> {
    if batch.dim() != pool.dim() {
        return Err(Error::param(format!(
            "batch dimension {} does not match pool dimension {}",
            batch.dim(),
            pool.dim()
        )));
    }
    Ok(())
}

/// Contracts every batch point against `pool` and keeps the radius
/// derivatives for the backward pass.
pub fn mrl_forward_tracked(
    batch: &PointCloud,
    pool: &PointCloud,
    params: &MrlParams,
) -> Result<TrackedContraction> {
    check_dims(batch, pool)?;
    params.validate()?;
    let pool_pts = pool.points().as_standard_layout().into_owned();
    let batch_pts = batch.points().as_standard_layout().into_owned();
    let results: Vec<PointContraction> = (0..batch.len())
        .into_par_iter()
        .map(|i| {
            contract_with_grad(
                batch_pts.row(i).as_slice().expect("standard layout"),
                &pool_pts,
                params,
            )
        })
        .collect();
    let mut output = Array2::zeros(batch.points().dim());
    let mut derivatives = Vec::with_capacity(results.len());
    for (i, r) in results.into_iter().enumerate() {
        output.row_mut(i).assign(&Array1::from(r.y));
        derivatives.push(r.dy);
    }
    Ok(TrackedContraction {
        output,
        derivatives,
    })
}

/// Contracts every batch point; the result keeps the batch labels.
pub fn mrl_forward(
    batch: &PointCloud,
    pool: &PointCloud,
    params: &MrlParams,
) -> Result<PointCloud> {
    let tracked = mrl_forward_tracked(batch, pool, params)?;
    batch.with_points(tracked.output)
}

/// `(dL/dr0, dL/dr1, dL/dr2)` given `dL/dY` for the contracted batch.
pub fn mrl_radii_gradient(
    batch: &PointCloud,
    pool: &PointCloud,
    params: &MrlParams,
    upstream: &Array2<f64>,
) -> Result<[f64; 3]> {
    mrl_forward_tracked(batch, pool, params)?.radii_gradient(upstream)
}
