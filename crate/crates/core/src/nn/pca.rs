use ndarray::{Array1, Array2, Axis};

use crate::error::{Error, Result};
use crate::geometry::PointCloud;
use crate::rng::SeededRng;

const MAX_ITER: usize = 100_000;
const TOL: f64 = 1e-10;

/// Principal directions from power iteration with deflation.
#[derive(Debug, Clone, PartialEq)]
pub struct Pca {
    pub mean: Array1<f64>,
    /// `d x D`, one unit direction per row, by decreasing variance.
    pub components: Array2<f64>,
    pub explained_variance: Array1<f64>,
    pub total_variance: f64,
}

impl Pca {
    pub fn explained_ratio(&self) -> Array1<f64> {
        if self.total_variance > 0.0 {
            &self.explained_variance / self.total_variance
        } else {
            Array1::zeros(self.explained_variance.len())
        }
    }

    pub fn transform(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        if x.ncols() != self.mean.len() {
            return Err(Error::param(
                "input width does not match the fitted dimension",
            ));
        }
        Ok((x - &self.mean).dot(&self.components.t()))
    }

    pub fn inverse_transform(&self, z: &Array2<f64>) -> Array2<f64> {
        z.dot(&self.components) + &self.mean
    }
}

pub fn pca_fit(cloud: &PointCloud, d: usize) -> Result<Pca> {
    let (n, dim) = (cloud.len(), cloud.dim());
    if d == 0 || d > dim || n <= d {
        return Err(Error::param(format!(
            "cannot fit {d} components to {n} points in {dim} dimensions"
        )));
    }
    let x = cloud.points();
    let mean = x.mean_axis(Axis(0)).expect("non-empty");
    let centered = x - &mean;
    let mut cov = centered.t().dot(&centered) / n as f64;
    let total_variance = cov.diag().sum();

    let mut rng = SeededRng::new(0x5eed);
    let mut components = Array2::zeros((d, dim));
    let mut variances = Array1::zeros(d);
    for c in 0..d {
        let mut v: Array1<f64> = Array1::from_shape_fn(dim, |_| rng.normal());
        v /= v.dot(&v).sqrt();
        let mut lambda = 0.0;
        let mut converged = false;
        for _ in 0..MAX_ITER {
            let w = cov.dot(&v);
            lambda = v.dot(&w);
            let residual = &w - &(&v * lambda);
            let scale = lambda.abs().max(total_variance).max(f64::MIN_POSITIVE);
            if residual.dot(&residual).sqrt() <= TOL * scale {
                converged = true;
                break;
            }
            let norm = w.dot(&w).sqrt();
            if norm == 0.0 {
                // v lies in the null space; any unit vector there is exact.
                converged = true;
                break;
            }
            v = w / norm;
        }
        if !converged {
            return Err(Error::numerical(format!(
                "power iteration for component {c} did not converge"
            )));
        }
        // Deflate: remove the found direction.
        let outer = v
            .view()
            .insert_axis(Axis(1))
            .dot(&v.view().insert_axis(Axis(0)));
        cov = cov - outer * lambda;
        components.row_mut(c).assign(&v);
        variances[c] = lambda.max(0.0);
    }
    Ok(Pca {
        mean,
        components,
        explained_variance: variances,
        total_variance,
    })
}
