//! Embedding quality measures between two clouds with corresponding rows.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{knn_indices, pairwise_distances, rank_matrix, DistanceMatrix, PointCloud};

/// Neighborhood sizes averaged by [`metric_report`].
pub const K_RANGE: [usize; 10] = [10, 20, 30, 40, 50, 60, 70, 80, 90, 100];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricReport {
    pub kl_01: f64,
    pub kl_100: f64,
    pub knn: f64,
    pub trust: f64,
    pub rmse: f64,
    pub spear: f64,
    pub k_range: Vec<usize>,
}

fn check_pair(a: &PointCloud, b: &PointCloud) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::param(format!(
            "clouds differ in size: {} vs {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Per-point Gaussian kernel densities on diameter-normalized distances,
/// normalized to sum to one.
pub fn kernel_density(dist: &DistanceMatrix, sigma: f64) -> Result<Vec<f64>> {
    if !(sigma > 0.0) {
        return Err(Error::param(format!("sigma must be positive, got {sigma}")));
    }
    let diameter = dist.max();
    if !(diameter > 0.0) {
        return Err(Error::numerical(
            "all points coincide; density is undefined",
        ));
    }
    let m = dist.as_array();
    let scale = 1.0 / (diameter * diameter * sigma * sigma);
    let raw: Vec<f64> = (0..dist.len())
        .into_par_iter()
        .map(|i| m.row(i).iter().map(|&d| (-d * d * scale).exp()).sum())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|v| v / total).collect())
}

fn kl_from_distances(da: &DistanceMatrix, db: &DistanceMatrix, sigma: f64) -> Result<f64> {
    let p = kernel_density(da, sigma)?;
    let q = kernel_density(db, sigma)?;
    Ok(p.iter()
        .zip(&q)
        .map(|(&pi, &qi)| pi * (pi / qi).ln())
        .sum::<f64>()
        .max(0.0))
}

pub fn kl_sigma(a: &PointCloud, b: &PointCloud, sigma: f64) -> Result<f64> {
    check_pair(a, b)?;
    if a.len() < 2 {
        return Err(Error::param("KL needs at least two points"));
    }
    kl_from_distances(&pairwise_distances(a), &pairwise_distances(b), sigma)
}

pub fn knn_preservation(a: &PointCloud, b: &PointCloud, k: usize) -> Result<f64> {
    check_pair(a, b)?;
    let na = knn_indices(&pairwise_distances(a), k)?;
    let nb = knn_indices(&pairwise_distances(b), k)?;
    let n = a.len();
    let hits: usize = (0..n)
        .map(|i| {
            let row_a = na.row(i);
            nb.row(i)
                .iter()
                .filter(|j| row_a.iter().any(|x| x == *j))
                .count()
        })
        .sum();
    Ok(hits as f64 / (n * k) as f64)
}

fn check_trust_k(n: usize, k: usize) -> Result<()> {
    if k == 0 || 2 * k >= n {
        return Err(Error::param(format!(
            "trustworthiness needs 1 <= k < N/2, got k = {k}, N = {n}"
        )));
    }
    Ok(())
}

fn trust_from_ranks(ranks_a: &ndarray::Array2<usize>, neighbors_b: &[Vec<usize>], k: usize) -> f64 {
    let n = ranks_a.nrows();
    let penalty: usize = (0..n)
        .map(|i| {
            neighbors_b[i][..k]
                .iter()
                .map(|&j| ranks_a[[i, j]])
                .filter(|&r| r > k)
                .map(|r| r - k)
                .sum::<usize>()
        })
        .sum();
    let (nf, kf) = (n as f64, k as f64);
    1.0 - 2.0 / (nf * kf * (2.0 * nf - 3.0 * kf - 1.0)) * penalty as f64
}

/// Penalizes points that are near in `b` but not among the `k` nearest in
/// `a`, weighted by their rank in `a`.
pub fn trustworthiness(a: &PointCloud, b: &PointCloud, k: usize) -> Result<f64> {
    check_pair(a, b)?;
    check_trust_k(a.len(), k)?;
    let ranks = rank_matrix(&pairwise_distances(a));
    let db = pairwise_distances(b);
    let nb: Vec<Vec<usize>> = (0..b.len()).map(|i| db.sorted_neighbors(i)).collect();
    Ok(trust_from_ranks(&ranks, &nb, k))
}

pub fn rmse_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_pair(a, b)?;
    Ok(rmse_from(&pairwise_distances(a), &pairwise_distances(b)))
}

fn rmse_from(da: &DistanceMatrix, db: &DistanceMatrix) -> f64 {
    let (ua, ub) = (da.upper_triangle(), db.upper_triangle());
    if ua.is_empty() {
        return 0.0;
    }
    let s: f64 = ua.iter().zip(&ub).map(|(x, y)| (x - y) * (x - y)).sum();
    (s / ua.len() as f64).sqrt()
}

/// Ranks starting at 1, tied values sharing their mean rank.
pub fn midranks(values: &[f64]) -> Vec<f64> {
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[a].total_cmp(&values[b]).then(a.cmp(&b)));
    let mut ranks = vec![0.0; values.len()];
    let mut start = 0;
    while start < idx.len() {
        let mut end = start + 1;
        while end < idx.len() && values[idx[end]] == values[idx[start]] {
            end += 1;
        }
        let mid = (start + end + 1) as f64 / 2.0;
        for &i in &idx[start..end] {
            ranks[i] = mid;
        }
        start = end;
    }
    ranks
}

fn pearson(x: &[f64], y: &[f64]) -> Result<f64> {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let (mut sxy, mut sxx, mut syy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        let (da, db) = (a - mx, b - my);
        sxy += da * db;
        sxx += da * da;
        syy += db * db;
    }
    if !(sxx > 0.0 && syy > 0.0) {
        return Err(Error::numerical("zero variance in rank correlation"));
    }
    Ok((sxy / (sxx * syy).sqrt()).clamp(-1.0, 1.0))
}

fn spearman_from(da: &DistanceMatrix, db: &DistanceMatrix) -> Result<f64> {
    pearson(
        &midranks(&da.upper_triangle()),
        &midranks(&db.upper_triangle()),
    )
}

pub fn spearman_distance(a: &PointCloud, b: &PointCloud) -> Result<f64> {
    check_pair(a, b)?;
    spearman_from(&pairwise_distances(a), &pairwise_distances(b))
}

/// Valid neighborhood sizes from [`K_RANGE`] for `n` points; falls back to
/// the largest admissible single `k` when none fits.
pub fn k_range_for(n: usize) -> Vec<usize> {
    let ks: Vec<usize> = K_RANGE.iter().copied().filter(|&k| 2 * k < n).collect();
    if !ks.is_empty() || n < 3 {
        return ks;
    }
    vec![(n - 1) / 2]
}

/// All six measures; kNN and trustworthiness averaged over the k range.
pub fn metric_report(a: &PointCloud, b: &PointCloud) -> Result<MetricReport> {
    check_pair(a, b)?;
    let n = a.len();
    let k_range = k_range_for(n);
    if k_range.is_empty() {
        return Err(Error::param(format!(
            "metric report needs at least 3 points, got {n}"
        )));
    }
    if k_range.len() < K_RANGE.len() {
        log::warn!("{n} points: neighborhood sizes truncated to {k_range:?}");
    }
    let (da, db) = (pairwise_distances(a), pairwise_distances(b));
    let ranks_a = rank_matrix(&da);
    let neigh_b: Vec<Vec<usize>> = (0..n)
        .into_par_iter()
        .map(|i| db.sorted_neighbors(i))
        .collect();

    let mut knn = 0.0;
    let mut trust = 0.0;
    for &k in &k_range {
        let hits: usize = (0..n)
            .map(|i| {
                neigh_b[i][..k]
                    .iter()
                    .filter(|&&j| ranks_a[[i, j]] <= k)
                    .count()
            })
            .sum();
        knn += hits as f64 / (n * k) as f64;
        trust += trust_from_ranks(&ranks_a, &neigh_b, k);
    }
    let m = k_range.len() as f64;
    Ok(MetricReport {
        kl_01: kl_from_distances(&da, &db, 0.1)?,
        kl_100: kl_from_distances(&da, &db, 100.0)?,
        knn: knn / m,
        trust: trust / m,
        rmse: rmse_from(&da, &db),
        spear: spearman_from(&da, &db)?,
        k_range,
    })
}
