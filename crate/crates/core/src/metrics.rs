//! Pairwise distance matrices — the sole input the topology layer needs.

use std::io::Write;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use crate::error::{Error, Result};
use crate::preprocess::PointCloud;
use crate::symbolic::PaaVector;

const SYMMETRY_TOL: f64 = 1e-12;

/// Symmetric pairwise-dissimilarity container with labelled rows.
/// `is_true_metric` is false only for DTW, which can violate the
/// triangle inequality.
#[derive(Debug, Clone, PartialEq)]
pub struct DistanceMatrix {
    labels: Vec<String>,
    data: Vec<f64>,
    n: usize,
    metric_name: String,
    is_true_metric: bool,
}

impl DistanceMatrix {
    /// Build from a dense row-major `n*n` buffer, enforcing symmetry
    /// (within 1e-12), a zero diagonal and finite non-negative entries.
    pub fn new(
        labels: Vec<String>,
        data: Vec<f64>,
        metric_name: impl Into<String>,
        is_true_metric: bool,
    ) -> Result<Self> {
        let n = labels.len();
        let metric_name = metric_name.into();
        if data.len() != n * n {
            return Err(Error::Internal(format!(
                "distance buffer has {} entries for {n} labels",
                data.len()
            )));
        }
        if !is_true_metric && metric_name != "dtw" {
            return Err(Error::Internal(format!(
                "only dtw may relax the metric flag, not {metric_name:?}"
            )));
        }
        let mut data = data;
        for i in 0..n {
            if data[i * n + i] != 0.0 {
                return Err(Error::Internal(format!("nonzero diagonal at {i}")));
            }
            for j in 0..i {
                let a = data[i * n + j];
                let b = data[j * n + i];
                if !a.is_finite() || !b.is_finite() || a < 0.0 || b < 0.0 {
                    return Err(Error::Internal(format!(
                        "invalid entry at ({i}, {j}): {a} / {b}"
                    )));
                }
                if (a - b).abs() > SYMMETRY_TOL {
                    return Err(Error::Internal(format!(
                        "asymmetry at ({i}, {j}): {a} vs {b}"
                    )));
                }
                // Re-symmetrize exactly so downstream order never matters.
                let v = a.min(b);
                data[i * n + j] = v;
                data[j * n + i] = v;
            }
        }
        Ok(DistanceMatrix {
            labels,
            data,
            n,
            metric_name,
            is_true_metric,
        })
    }

    fn index_labels(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Result<Self> {
        if labels.len() != self.n {
            return Err(Error::Validation(format!(
                "{} labels for a {}x{} matrix",
                labels.len(),
                self.n,
                self.n
            )));
        }
        self.labels = labels;
        Ok(self)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[i * self.n + j]
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn metric_name(&self) -> &str {
        &self.metric_name
    }

    pub fn is_true_metric(&self) -> bool {
        self.is_true_metric
    }

    /// Largest entry; the `auto` filtration bound.
    pub fn max_entry(&self) -> f64 {
        self.data.iter().cloned().fold(0.0, f64::max)
    }

    /// CSV with a label header row and one labelled row per point.
    pub fn write_csv(&self, out: &mut impl Write) -> Result<()> {
        write!(out, "label")?;
        for l in &self.labels {
            write!(out, ",{l}")?;
        }
        writeln!(out)?;
        for i in 0..self.n {
            write!(out, "{}", self.labels[i])?;
            for j in 0..self.n {
                write!(out, ",{}", self.get(i, j))?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// JSON object `{labels, rows, metric_name}` for the manifest.
    pub fn to_json(&self) -> serde_json::Value {
        let rows: Vec<Vec<f64>> = (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect();
        json!({
            "labels": self.labels,
            "rows": rows,
            "metric_name": self.metric_name,
        })
    }
}

fn build_symmetric(
    n: usize,
    metric_name: &str,
    is_true_metric: bool,
    mut entry: impl FnMut(usize, usize) -> f64,
) -> Result<DistanceMatrix> {
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let v = entry(i, j);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    DistanceMatrix::new(
        DistanceMatrix::index_labels(n),
        data,
        metric_name,
        is_true_metric,
    )
}

pub fn euclidean(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt()
}

/// Pairwise L2 distances of a point cloud.
pub fn euclidean_matrix(cloud: &PointCloud) -> Result<DistanceMatrix> {
    if cloud.is_empty() {
        return Err(Error::Validation("empty point cloud".into()));
    }
    build_symmetric(cloud.len(), "euclidean", true, |i, j| {
        euclidean(&cloud.points[i], &cloud.points[j])
    })
}

fn pearson(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let mut cov = 0.0;
    let mut vx = 0.0;
    let mut vy = 0.0;
    for (a, b) in x.iter().zip(y) {
        cov += (a - mx) * (b - my);
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
    }
    cov / (vx.sqrt() * vy.sqrt())
}

/// Correlation distance `sqrt(2 (1 - rho))` with Pearson `rho` clamped
/// to `[-1, 1]` before the square root. Entries lie in `[0, 2]`.
pub fn correlation_matrix(series: &[Vec<f64>]) -> Result<DistanceMatrix> {
    let n = series.len();
    if n == 0 {
        return Err(Error::Validation("no series given".into()));
    }
    let len = series[0].len();
    if len < 2 {
        return Err(Error::Validation("correlation needs length >= 2".into()));
    }
    for (i, s) in series.iter().enumerate() {
        if s.len() != len {
            return Err(Error::Validation(format!(
                "series {i} has length {}, expected {len}",
                s.len()
            )));
        }
        if crate::preprocess::population_std(s) <= crate::preprocess::DEGENERACY_THRESHOLD {
            return Err(Error::DegenerateInput(format!(
                "series {i} is constant; correlation distance undefined"
            )));
        }
    }
    build_symmetric(n, "correlation", true, |i, j| {
        let rho = pearson(&series[i], &series[j]).clamp(-1.0, 1.0);
        (2.0 * (1.0 - rho)).sqrt()
    })
}

/// Cosine distance `1 - cos(x, y)`, in `[0, 2]`.
pub fn cosine_matrix(cloud: &PointCloud) -> Result<DistanceMatrix> {
    if cloud.is_empty() {
        return Err(Error::Validation("empty point cloud".into()));
    }
    let norms: Vec<f64> = cloud
        .points
        .iter()
        .map(|p| p.iter().map(|x| x * x).sum::<f64>().sqrt())
        .collect();
    if let Some(i) = norms.iter().position(|n| *n <= 0.0) {
        return Err(Error::DegenerateInput(format!(
            "point {i} is the zero vector; cosine distance undefined"
        )));
    }
    build_symmetric(cloud.len(), "cosine", true, |i, j| {
        let dot: f64 = cloud.points[i]
            .iter()
            .zip(&cloud.points[j])
            .map(|(a, b)| a * b)
            .sum();
        let cos = (dot / (norms[i] * norms[j])).clamp(-1.0, 1.0);
        // Guard against -0.0 for parallel vectors.
        (1.0 - cos).max(0.0)
    })
}

/// DTW cost of two scalar series with |x - y| local cost and an optional
/// Sakoe-Chiba band. The band widens to |n - m| when needed so a warping
/// path always exists.
pub fn dtw(a: &[f64], b: &[f64], band: Option<usize>) -> f64 {
    let (n, m) = (a.len(), b.len());
    let w = band.map(|w| w.max(n.abs_diff(m))).unwrap_or(usize::MAX);
    let mut cost = vec![f64::INFINITY; (n + 1) * (m + 1)];
    let idx = |i: usize, j: usize| i * (m + 1) + j;
    cost[idx(0, 0)] = 0.0;
    for i in 1..=n {
        let lo = if w == usize::MAX { 1 } else { i.saturating_sub(w).max(1) };
        let hi = if w == usize::MAX { m } else { (i + w).min(m) };
        for j in lo..=hi {
            let local = (a[i - 1] - b[j - 1]).abs();
            let best = cost[idx(i - 1, j)]
                .min(cost[idx(i, j - 1)])
                .min(cost[idx(i - 1, j - 1)]);
            cost[idx(i, j)] = local + best;
        }
    }
    cost[idx(n, m)]
}

/// Pairwise DTW matrix; flagged as a pseudo-metric. Pairs are computed
/// in parallel and assembled in index order, so output is deterministic.
pub fn dtw_matrix(series: &[Vec<f64>], band: Option<usize>) -> Result<DistanceMatrix> {
    if series.is_empty() {
        return Err(Error::Validation("no series given".into()));
    }
    if let Some(0) = band {
        return Err(Error::Validation("dtw band must be at least 1".into()));
    }
    if let Some(i) = series.iter().position(|s| s.is_empty()) {
        return Err(Error::Validation(format!("series {i} is empty")));
    }
    let n = series.len();
    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|i| (0..i).map(move |j| (i, j))).collect();
    let values: Vec<((usize, usize), f64)> = pairs
        .par_iter()
        .map(|&(i, j)| ((i, j), dtw(&series[i], &series[j], band)))
        .collect();
    let mut data = vec![0.0; n * n];
    for ((i, j), v) in values {
        data[i * n + j] = v;
        data[j * n + i] = v;
    }
    DistanceMatrix::new(DistanceMatrix::index_labels(n), data, "dtw", false)
}

/// Pairwise Euclidean distances between PAA feature vectors.
pub fn matrix_from_paa(paas: &[PaaVector]) -> Result<DistanceMatrix> {
    if paas.is_empty() {
        return Err(Error::Validation("no feature vectors given".into()));
    }
    let len = paas[0].len();
    for (i, p) in paas.iter().enumerate() {
        if p.len() != len {
            return Err(Error::Validation(format!(
                "feature vector {i} has length {}, expected {len}",
                p.len()
            )));
        }
    }
    build_symmetric(paas.len(), "sax-paa", true, |i, j| {
        euclidean(&paas[i].values, &paas[j].values)
    })
}

/// Shift every off-diagonal entry by seeded uniform noise in
/// `[-delta, delta]`, clamped at zero and re-symmetrized. The sup-norm
/// change is at most `delta`; a repeated seed reproduces the output.
pub fn perturb(dm: &DistanceMatrix, delta: f64, seed: u64) -> DistanceMatrix {
    let n = dm.n();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut data = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..i {
            let noise = if delta > 0.0 {
                rng.gen_range(-delta..=delta)
            } else {
                0.0
            };
            let v = (dm.get(i, j) + noise).max(0.0);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    DistanceMatrix::new(
        dm.labels.clone(),
        data,
        dm.metric_name.clone(),
        dm.is_true_metric,
    )
    .expect("perturbation preserves matrix invariants")
}
