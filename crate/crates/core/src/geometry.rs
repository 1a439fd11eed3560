//! Dense point-set primitives: point clouds, distance matrices, neighbor
//! queries and rank statistics.
//!
//! Ties are always broken by ascending point index so that every derived
//! quantity is deterministic.

use ndarray::{Array1, Array2, ArrayView1, Axis};
use rayon::prelude::*;

use crate::error::{Error, Result};

/// `N` points in `D`-dimensional Euclidean space.
///
/// `labels` carries a per-point scalar used for coloring, `clean` the
/// noise-free ground truth when the cloud was produced by adding noise.
#[derive(Debug, Clone, PartialEq)]
pub struct PointCloud {
    points: Array2<f64>,
    labels: Option<Array1<f64>>,
    clean: Option<Array2<f64>>,
}

impl PointCloud {
    pub fn new(points: Array2<f64>) -> Result<Self> {
        let (n, d) = points.dim();
        if n == 0 || d == 0 {
            return Err(Error::param(format!(
                "point cloud must be non-empty, got {n}x{d}"
            )));
        }
        if let Some(pos) = points.iter().position(|v| !v.is_finite()) {
            return Err(Error::param(format!(
                "non-finite coordinate at point {} axis {}",
                pos / d,
                pos % d
            )));
        }
        Ok(Self {
            points,
            labels: None,
            clean: None,
        })
    }

    /// Builds a cloud from row vectors; all rows must share one width.
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let d = rows.first().map_or(0, Vec::len);
        if let Some(i) = rows.iter().position(|r| r.len() != d) {
            return Err(Error::param(format!(
                "row {i} has width {}, expected {d}",
                rows[i].len()
            )));
        }
        let flat: Vec<f64> = rows.iter().flatten().copied().collect();
        let points =
            Array2::from_shape_vec((n, d), flat).map_err(|e| Error::param(e.to_string()))?;
        Self::new(points)
    }

    pub fn with_labels(mut self, labels: Array1<f64>) -> Result<Self> {
        if labels.len() != self.len() {
            return Err(Error::param(format!(
                "label count {} does not match point count {}",
                labels.len(),
                self.len()
            )));
        }
        self.labels = Some(labels);
        Ok(self)
    }

    pub fn with_clean(mut self, clean: Array2<f64>) -> Result<Self> {
        if clean.dim() != self.points.dim() {
            return Err(Error::param(format!(
                "clean shape {:?} does not match points shape {:?}",
                clean.dim(),
                self.points.dim()
            )));
        }
        if clean.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("non-finite coordinate in clean points"));
        }
        self.clean = Some(clean);
        Ok(self)
    }

    pub fn without_clean(mut self) -> Self {
        self.clean = None;
        self
    }

    pub fn len(&self) -> usize {
        self.points.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.points.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.points.ncols()
    }

    pub fn points(&self) -> &Array2<f64> {
        &self.points
    }

    pub fn point(&self, i: usize) -> ArrayView1<'_, f64> {
        self.points.row(i)
    }

    pub fn labels(&self) -> Option<&Array1<f64>> {
        self.labels.as_ref()
    }

    pub fn clean(&self) -> Option<&Array2<f64>> {
        self.clean.as_ref()
    }

    /// Rows `indices` of this cloud, carrying labels and clean points along.
    pub fn select(&self, indices: &[usize]) -> PointCloud {
        let points = self.points.select(Axis(0), indices);
        PointCloud {
            points,
            labels: self.labels.as_ref().map(|l| l.select(Axis(0), indices)),
            clean: self.clean.as_ref().map(|c| c.select(Axis(0), indices)),
        }
    }

    /// Replaces the coordinates, keeping labels. Clean points are dropped
    /// because they no longer describe the new coordinates.
    pub fn with_points(&self, points: Array2<f64>) -> Result<PointCloud> {
        let mut out = PointCloud::new(points)?;
        if let Some(l) = &self.labels {
            out = out.with_labels(l.clone())?;
        }
        Ok(out)
    }

    pub fn into_parts(self) -> (Array2<f64>, Option<Array1<f64>>, Option<Array2<f64>>) {
        (self.points, self.labels, self.clean)
    }
}

/// Symmetric `N x N` matrix of Euclidean distances with zero diagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix(Array2<f64>);

impl DistanceMatrix {
    /// Wraps a precomputed matrix after checking shape, symmetry, sign and
    /// the zero diagonal.
    pub fn from_matrix(m: Array2<f64>) -> Result<Self> {
        let (r, c) = m.dim();
        if r != c || r == 0 {
            return Err(Error::param(format!(
                "distance matrix must be square and non-empty, got {r}x{c}"
            )));
        }
        for i in 0..r {
            if m[[i, i]] != 0.0 {
                return Err(Error::param(format!("non-zero diagonal at {i}")));
            }
            for j in 0..i {
                let v = m[[i, j]];
                if !v.is_finite() || v < 0.0 || v != m[[j, i]] {
                    return Err(Error::param(format!(
                        "invalid or asymmetric entry at ({i}, {j})"
                    )));
                }
            }
        }
        Ok(Self(m))
    }

    pub fn len(&self) -> usize {
        self.0.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.0.nrows() == 0
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.0[[i, j]]
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    /// Largest entry; zero for a single point.
    pub fn max(&self) -> f64 {
        self.0.iter().copied().fold(0.0, f64::max)
    }

    /// Entries strictly above the diagonal in row-major order.
    pub fn upper_triangle(&self) -> Vec<f64> {
        let n = self.len();
        let mut out = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in (i + 1)..n {
                out.push(self.0[[i, j]]);
            }
        }
        out
    }

    /// Indices of row `i` sorted by (distance, index), self excluded.
    pub fn sorted_neighbors(&self, i: usize) -> Vec<usize> {
        let row = self.0.row(i);
        let mut idx: Vec<usize> = (0..self.len()).filter(|&j| j != i).collect();
        idx.sort_by(|&a, &b| row[a].total_cmp(&row[b]).then(a.cmp(&b)));
        idx
    }
}

#[inline]
pub(crate) fn sq_dist(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Euclidean distances between all pairs of points.
pub fn pairwise_distances(cloud: &PointCloud) -> DistanceMatrix {
    pairwise_distances_raw(cloud.points())
}

pub(crate) fn pairwise_distances_raw(points: &Array2<f64>) -> DistanceMatrix {
    let n = points.nrows();
    // Upper triangle per row, mirrored afterwards so symmetry is exact.
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let pi = points.row(i);
            ((i + 1)..n)
                .map(|j| sq_dist(pi, points.row(j)).sqrt())
                .collect()
        })
        .collect();
    let mut m = Array2::zeros((n, n));
    for (i, row) in rows.into_iter().enumerate() {
        for (off, v) in row.into_iter().enumerate() {
            let j = i + 1 + off;
            m[[i, j]] = v;
            m[[j, i]] = v;
        }
    }
    DistanceMatrix(m)
}

/// For every point, the indices of its `k` nearest other points, nearest
/// first.
pub fn knn_indices(dist: &DistanceMatrix, k: usize) -> Result<Array2<usize>> {
    let n = dist.len();
    if k == 0 || k >= n {
        return Err(Error::param(format!(
            "k = {k} out of range 1..={}",
            n.saturating_sub(1)
        )));
    }
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = dist.0.row(i);
            let mut idx: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let cmp = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
            if k < idx.len() {
                idx.select_nth_unstable_by(k - 1, cmp);
                idx.truncate(k);
            }
            idx.sort_by(cmp);
            idx
        })
        .collect();
    let flat: Vec<usize> = rows.into_iter().flatten().collect();
    Ok(Array2::from_shape_vec((n, k), flat).expect("k entries per row"))
}

/// `ranks[[i, j]]` is the position of `j` in `i`'s neighbor ordering, with
/// the nearest neighbor at rank 1 and `i` itself at rank 0.
pub fn rank_matrix(dist: &DistanceMatrix) -> Array2<usize> {
    let n = dist.len();
    let rows: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut ranks = vec![0usize; n];
            for (r, j) in dist.sorted_neighbors(i).into_iter().enumerate() {
                ranks[j] = r + 1;
            }
            ranks
        })
        .collect();
    let flat: Vec<usize> = rows.into_iter().flatten().collect();
    Array2::from_shape_vec((n, n), flat).expect("n entries per row")
}
